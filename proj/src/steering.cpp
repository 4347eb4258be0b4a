#include <spdlog/spdlog.h>

#include <algorithm>
#include <set>

#include "llmprof/error.hpp"
#include "llmprof/steering.hpp"

namespace llmprof {

SurveyContext make_survey_context(Codebook codebook, SurveyMatrix matrix,
                                  const PartitionConfig& config) {
  SurveyContext ctx{std::move(codebook), std::move(matrix), {}, {}};
  ctx.partition = partition_questions(ctx.codebook, config);
  for (const auto& id : ctx.partition.demographic_ids) ctx.codebook.set_role(id, ColumnRole::kDemographic);
  for (const auto& id : ctx.partition.auxiliary_ids) ctx.codebook.set_role(id, ColumnRole::kAuxiliary);

  const auto kept = drop_blank_columns(ctx.matrix, ctx.partition.survey_ids);
  const std::set<std::string> kept_set(kept.begin(), kept.end());
  for (const auto& id : ctx.partition.survey_ids) {
    if (kept_set.contains(id)) ctx.retained.push_back(id);
  }
  return ctx;
}

ResponseRanking rank_response(const SurveyContext& survey, const ModelResponse& response,
                              int workers) {
  const std::set<std::string> retained(survey.retained.begin(), survey.retained.end());
  std::vector<std::string> ids;
  for (const auto& [id, code] : response.answers) {
    if (!retained.contains(id)) {
      throw Error(ErrorCode::kSchemeMismatch,
                  "answered question " + id + " is not a retained survey column of this dataset");
    }
    ids.push_back(id);
  }
  ResponseRanking out;
  out.scheme = build_encoding(survey.codebook, ids);
  const auto model = encode(response.answer_map(), out.scheme, response.model_id);
  out.ranking = rank_respondents(model, survey.matrix, out.scheme, workers);
  return out;
}

std::string SteeringRun::series_name() const {
  return target ? "steer:" + target_label : std::string("none");
}

std::vector<SteeringRun> run_steering_experiment(const SurveyContext& survey,
                                                 const SteeringConfig& steering,
                                                 const RunConfig& config, ModelClient& client,
                                                 Paraphraser& paraphraser, int workers) {
  const QuestionSpec& var = survey.codebook.at(steering.group_variable);
  if (std::find(survey.partition.demographic_ids.begin(), survey.partition.demographic_ids.end(),
                var.id) == survey.partition.demographic_ids.end()) {
    throw Error(ErrorCode::kInvalidConfig, "steering variable " + var.id + " is not demographic");
  }
  std::vector<int> targets = steering.values;
  if (targets.empty()) {
    for (const auto& opt : var.options) targets.push_back(opt.code);
  }

  std::vector<SteeringRun> runs;
  auto finish = [&](SteeringRun run) {
    const auto ranked = rank_response(survey, run.response, workers);
    if (!runs.empty() && ranked.scheme.fingerprint() != runs.front().scheme) {
      throw Error(ErrorCode::kSchemeMismatch,
                  "run " + run.series_name() + " answered a different question set than the unsteered run");
    }
    run.scheme = ranked.scheme.fingerprint();
    run.table = group_average_distance(ranked.ranking, var.id, survey.matrix, survey.codebook);
    runs.push_back(std::move(run));
  };

  {
    SteeringRun run{client.endpoint().model, var.id, std::nullopt, "none", {}, {}, 0};
    run.response = build_model_response(survey.codebook, survey.retained, {}, config, client, paraphraser);
    finish(std::move(run));
  }
  for (int value : targets) {
    const auto specs = build_steering_prompts(var.id, value, survey.codebook, steering.templates);
    SteeringRun run{client.endpoint().model, var.id, value, var.find_option(value)->label, {}, {}, 0};
    spdlog::info("steering toward {}={} ({})", var.id, value, run.target_label);
    run.response = build_model_response(survey.codebook, survey.retained, specs, config, client, paraphraser);
    finish(std::move(run));
  }
  return runs;
}

RadarDataset build_radar(const std::vector<SteeringRun>& runs, const Codebook& codebook) {
  RadarDataset radar;
  if (runs.empty()) return radar;
  radar.group_variable = runs.front().group_variable;
  for (const auto& r : runs) {
    if (r.group_variable != radar.group_variable || r.table.group_variable != radar.group_variable) {
      throw Error(ErrorCode::kMixedGroupVariables,
                  r.group_variable + " vs " + radar.group_variable);
    }
  }
  std::set<int> present;
  for (const auto& r : runs) {
    for (const auto& g : r.table.groups) present.insert(g.code);
  }
  for (const auto& opt : codebook.at(radar.group_variable).options) {
    if (present.contains(opt.code)) radar.axes.emplace_back(opt.code, opt.label);
  }
  for (const auto& r : runs) {
    RadarDataset::Series s{r.series_name(), {}};
    for (const auto& [code, label] : radar.axes) {
      const auto it = std::find_if(r.table.groups.begin(), r.table.groups.end(),
                                   [&](const GroupStat& g) { return g.code == code; });
      if (it == r.table.groups.end()) {
        throw Error(ErrorCode::kMixedGroupVariables,
                    "run " + s.name + " has no members for axis " + label);
      }
      s.values.push_back(it->mean_distance());
    }
    radar.series.push_back(std::move(s));
  }
  return radar;
}

nlohmann::json steering_delta_report(const std::vector<SteeringRun>& runs, std::size_t min_group_size) {
  const auto base_it = std::find_if(runs.begin(), runs.end(), [](const SteeringRun& r) { return !r.target; });
  if (base_it == runs.end()) throw Error(ErrorCode::kInvalidConfig, "no unsteered run to compare against");
  const SteeringRun& base = *base_it;
  const auto base_answers = base.response.answer_map();

  nlohmann::json small = nlohmann::json::array();
  for (const auto& g : base.table.groups) {
    if (g.count < min_group_size) small.push_back({{"code", g.code}, {"label", g.label}, {"count", g.count}});
  }

  nlohmann::json targets = nlohmann::json::array();
  for (const auto& run : runs) {
    if (!run.target) continue;
    nlohmann::json deltas = nlohmann::json::array();
    for (const auto& g : run.table.groups) {
      const auto b = std::find_if(base.table.groups.begin(), base.table.groups.end(),
                                  [&](const GroupStat& x) { return x.code == g.code; });
      if (b == base.table.groups.end()) continue;
      const Rational delta = g.mean_distance() - b->mean_distance();
      deltas.push_back({{"axis_code", g.code},
                        {"axis_label", g.label},
                        {"steered_mean", g.mean_distance().str()},
                        {"unsteered_mean", b->mean_distance().str()},
                        {"delta", delta.str()},
                        {"delta_value", delta.to_double()},
                        {"small_group", g.count < min_group_size}});
    }
    std::size_t changed = 0;
    nlohmann::json changed_ids = nlohmann::json::array();
    for (const auto& [id, code] : run.response.answers) {
      const auto it = base_answers.find(id);
      if (it != base_answers.end() && it->second != code) {
        ++changed;
        changed_ids.push_back(id);
      }
    }
    const std::size_t total = run.response.answers.size();
    const Rational fraction = total == 0 ? Rational(0)
                                         : Rational(static_cast<std::int64_t>(changed),
                                                    static_cast<std::int64_t>(total));
    targets.push_back({{"target_code", *run.target},
                       {"target_label", run.target_label},
                       {"deltas", deltas},
                       {"changed_questions", changed_ids},
                       {"changed_fraction", fraction.str()},
                       {"changed_fraction_value", fraction.to_double()}});
  }
  return {{"group_variable", base.group_variable},
          {"model_id", base.model_id},
          {"min_group_size", min_group_size},
          {"small_groups", small},
          {"targets", targets}};
}

}  // namespace llmprof
