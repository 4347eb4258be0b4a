#include <doctest.h>

#include <algorithm>
#include <set>

#include "llmprof/error.hpp"
#include "llmprof/steering.hpp"
#include "support.hpp"
#include "synth.hpp"

using namespace llmprof;
using namespace testsupport;

namespace {

EndpointConfig mock_endpoint() {
  EndpointConfig e;
  e.model = "mock-model";
  e.max_retries = 0;
  return e;
}

std::shared_ptr<StaticParaphraser> two_variants(const Codebook& cb) {
  std::map<std::string, std::vector<std::string>> table;
  for (const auto& q : cb.questions()) table[q.id] = {"Put differently: " + q.text, "In other words, " + q.text};
  return std::make_shared<StaticParaphraser>(table);
}

/// Index parsed from "Survey item NNN" in the stem, or -1.
int item_index(const std::string& prompt) {
  const auto stem = prompt_stem(prompt);
  const auto pos = stem.find("Survey item ");
  if (pos == std::string::npos) return -1;
  return std::stoi(stem.substr(pos + 12, 3));
}

std::vector<std::pair<std::string, double>> pick(int n, int index) {
  std::vector<std::pair<std::string, double>> top;
  for (int i = 0; i < n; ++i) top.emplace_back(" " + letter(i), i == index ? -0.2 : -2.5 - 0.1 * i);
  return top;
}

SurveyContext small_context(std::uint64_t seed, int per_cluster = 40, int questions = 12) {
  Rng rng(seed);
  PlantedSpec spec;
  spec.per_cluster = per_cluster;
  spec.questions = questions;
  auto sv = planted_survey(rng, spec);
  return make_survey_context(sv.codebook, sv.matrix, sv.partition);
}

Rational naive_group_mean(const SurveyContext& ctx, const ModelResponse& r, const std::string& var, int code) {
  const auto answers = r.answer_map();
  const auto gcol = *ctx.matrix.column_index(var);
  std::size_t width = 0;
  for (const auto& [id, v] : answers) width += ctx.codebook.at(id).options.size();
  std::int64_t bits = 0;
  std::int64_t members = 0;
  for (std::size_t row = 0; row < ctx.matrix.rows(); ++row) {
    if (ctx.matrix.raw(row, gcol) != code) continue;
    ++members;
    for (const auto& [id, v] : answers) {
      for (const auto& opt : ctx.codebook.at(id).options) {
        const bool model_bit = opt.code == v;
        const bool resp_bit = ctx.matrix.raw(row, *ctx.matrix.column_index(id)) == opt.code;
        bits += model_bit != resp_bit;
      }
    }
  }
  return Rational(bits, members * static_cast<std::int64_t>(width));
}

}  // namespace

TEST_CASE("steering: 7 religion values give 8 runs; a prefix-blind model gives zero deltas") {
  const auto ctx = small_context(3);
  ModelClient client(mock_endpoint(), std::make_shared<ScriptedBackend>(prefix_invariant_script()));
  auto para = two_variants(ctx.codebook);
  SteeringConfig sc;
  sc.group_variable = "RELIGION";
  const auto runs = run_steering_experiment(ctx, sc, RunConfig{}, client, *para, 2);
  REQUIRE(runs.size() == 8);
  CHECK_FALSE(runs[0].target.has_value());
  CHECK(runs[0].series_name() == "none");
  for (int v = 1; v <= 7; ++v) CHECK(runs[v].target == v);
  CHECK(runs[1].series_name() == "steer:Hindu");

  for (std::size_t i = 1; i < runs.size(); ++i) {
    CHECK(runs[i].response.answers == runs[0].response.answers);
    CHECK(runs[i].table == runs[0].table);
  }
  const auto report = steering_delta_report(runs);
  REQUIRE(report["targets"].size() == 7);
  for (const auto& t : report["targets"]) {
    CHECK(t["changed_fraction"] == "0/1");
    for (const auto& d : t["deltas"]) CHECK(d["delta"] == "0/1");
  }
}

TEST_CASE("steering: PORTRAY/BIO-induced flips match an enumeration of candidate counts") {
  const auto ctx = small_context(8, 30, 20);
  const int target = 4;
  const auto specs = build_steering_prompts("RELIGION", target, ctx.codebook);
  const std::set<int> portray_flips{1, 2, 3, 5, 8, 13};
  const std::set<int> bio_flips{2, 3, 4, 8, 9, 19};

  auto style_of = [&](const std::string& prompt) -> std::optional<SteeringStyle> {
    for (const auto& s : specs)
      if (prompt.rfind(s.rendered_prefix, 0) == 0) return s.style;
    return std::nullopt;
  };
  auto backend = std::make_shared<ScriptedBackend>([&](const std::string& prompt, int) {
    const int n = prompt_option_count(prompt);
    const int item = item_index(prompt);
    const auto style = style_of(prompt);
    int choice = 0;
    if (style == SteeringStyle::kPortray && portray_flips.contains(item)) choice = 1;
    if (style == SteeringStyle::kBio && bio_flips.contains(item)) choice = 1;
    return pick(n, choice);
  });
  ModelClient client(mock_endpoint(), backend);
  auto para = two_variants(ctx.codebook);
  SteeringConfig sc;
  sc.group_variable = "RELIGION";
  sc.values = {target};
  const RunConfig config;
  const auto runs = run_steering_experiment(ctx, sc, config, client, *para);
  REQUIRE(runs.size() == 2);

  // 3 wordings x 5 seeds per style; A=code 1, B=code 2.
  const int per_style = 3 * static_cast<int>(config.seeds.size());
  std::set<std::string> expected_changed;
  for (int i = 0; i < 20; ++i) {
    int b = 0;
    if (portray_flips.contains(i)) b += per_style;
    if (bio_flips.contains(i)) b += per_style;
    const int a = 3 * per_style - b;
    const int mode = b > a ? 2 : 1;
    CHECK(runs[1].response.answer_map().at(fmt::format("S{:03}", i)) == mode);
    CHECK(runs[0].response.answer_map().at(fmt::format("S{:03}", i)) == 1);
    if (mode != 1) expected_changed.insert(fmt::format("S{:03}", i));
  }
  CHECK(expected_changed == std::set<std::string>{"S002", "S003", "S008"});
  const auto report = steering_delta_report(runs);
  const auto& t = report["targets"][0];
  CHECK(t["changed_fraction"] == "3/20");
  CHECK(t["changed_fraction_value"].get<double>() == doctest::Approx(0.15));
  std::set<std::string> reported;
  for (const auto& id : t["changed_questions"]) reported.insert(id.get<std::string>());
  CHECK(reported == expected_changed);
}

TEST_CASE("radar: 8 series x 7 axes and CSV round-trip") {
  const auto ctx = small_context(21, 60);
  ModelClient client(mock_endpoint(), std::make_shared<ScriptedBackend>(prefix_invariant_script()));
  IdentityParaphraser identity;
  SteeringConfig sc;
  sc.group_variable = "RELIGION";
  const auto runs = run_steering_experiment(ctx, sc, RunConfig{}, client, identity);
  const auto radar = build_radar(runs, ctx.codebook);
  CHECK(radar.series.size() == 8);
  CHECK(radar.axes.size() == 7);
  for (const auto& s : radar.series) CHECK(s.values.size() == 7);

  const auto rows = parse_radar_csv(radar_csv(radar));
  REQUIRE(rows.size() == 56);
  std::size_t i = 0;
  for (const auto& s : radar.series) {
    for (std::size_t a = 0; a < radar.axes.size(); ++a, ++i) {
      CHECK(rows[i].axis == radar.axes[a].second);
      CHECK(rows[i].series == s.name);
      CHECK(rows[i].value == s.values[a].to_double());
    }
  }
  const auto svg = render_radar_svg(radar, "RELIGION");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("steer:None") != std::string::npos);
}

TEST_CASE("delta report: identical runs give zeros; one changed question of 20 gives 1/20") {
  SteeringRun base;
  base.group_variable = "G";
  base.target_label = "none";
  for (int i = 0; i < 20; ++i) base.response.answers.emplace_back("Q" + std::to_string(i), 1);
  base.table.group_variable = "G";
  base.table.groups = {{1, "a", 40, 100, 10}, {2, "b", 10, 30, 10}};

  SteeringRun same = base;
  same.target = 1;
  same.target_label = "a";
  auto report = steering_delta_report({base, same});
  CHECK(report["targets"][0]["changed_fraction"] == "0/1");
  for (const auto& d : report["targets"][0]["deltas"]) CHECK(d["delta"] == "0/1");
  CHECK(report["small_groups"].size() == 1);
  CHECK(report["small_groups"][0]["label"] == "b");

  SteeringRun one = same;
  one.response.answers[7].second = 2;
  one.table.groups[0].mismatch_sum = 80;
  report = steering_delta_report({base, one});
  CHECK(report["targets"][0]["changed_fraction"] == "1/20");
  CHECK(report["targets"][0]["changed_fraction_value"].get<double>() == 0.05);
  // (2*80 - 2*100) / (40*10) = -1/10
  CHECK(report["targets"][0]["deltas"][0]["delta"] == "-1/10");
  CHECK(report["targets"][0]["deltas"][0]["small_group"] == false);
  CHECK(report["targets"][0]["deltas"][1]["small_group"] == true);

  CHECK_THROWS_AS(steering_delta_report({one}), Error);
}

TEST_CASE("persona steering moves the target group closer; brute-force group means agree") {
  Rng rng(2024);
  PlantedSpec spec;
  spec.per_cluster = 150;
  spec.questions = 16;
  spec.answer_fidelity = 0.75;
  spec.demographic_fidelity = 0.9;
  PlantedTruth truth;
  const auto sv = planted_survey(rng, spec, &truth);
  const auto ctx = make_survey_context(sv.codebook, sv.matrix, sv.partition);
  const int target = truth.demographic_modes[0].at("RELIGION");

  // Unsteered: a fixed answer unrelated to any cluster. Steered toward the
  // planted value: cluster 0's modal answers.
  auto backend = std::make_shared<ScriptedBackend>([&](const std::string& prompt, int) {
    const int n = prompt_option_count(prompt);
    const int item = item_index(prompt);
    const bool steered = prompt_body(prompt) != prompt;
    if (steered && prompt.find("Answer: " + letter(target - 1) + ". ") != std::string::npos) {
      return pick(n, truth.answer_modes[0][item] - 1);
    }
    if (steered && prompt.find("belonged to this group: " + default_demographics()[0].labels[target - 1]) !=
                       std::string::npos) {
      return pick(n, truth.answer_modes[0][item] - 1);
    }
    if (steered && prompt.find("I answer " + default_demographics()[0].labels[target - 1]) != std::string::npos) {
      return pick(n, truth.answer_modes[0][item] - 1);
    }
    return pick(n, (item * 7 + 3) % n);
  });
  ModelClient client(mock_endpoint(), backend);
  IdentityParaphraser identity;
  SteeringConfig sc;
  sc.group_variable = "RELIGION";
  sc.values = {target};
  const auto runs = run_steering_experiment(ctx, sc, RunConfig{}, client, identity, 4);
  REQUIRE(runs.size() == 2);

  for (const auto& run : runs) {
    for (const auto& g : run.table.groups) {
      CHECK(g.mean_distance() == naive_group_mean(ctx, run.response, "RELIGION", g.code));
    }
  }
  const auto report = steering_delta_report(runs, 1);
  bool seen = false;
  for (const auto& d : report["targets"][0]["deltas"]) {
    if (d["axis_code"] != target) continue;
    seen = true;
    CHECK(d["delta_value"].get<double>() <= 0.0);
  }
  CHECK(seen);
}

TEST_CASE("radar rejects mixed group variables") {
  Codebook cb({categorical("G", "g", 2), categorical("H", "h", 2)});
  SteeringRun a;
  a.group_variable = "G";
  a.table.group_variable = "G";
  a.table.groups = {{1, "Option 1", 1, 1, 2}};
  SteeringRun b = a;
  b.group_variable = "H";
  b.table.group_variable = "H";
  try {
    build_radar({a, b}, cb);
    FAIL("expected MixedGroupVariables");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMixedGroupVariables);
  }
}

TEST_CASE("steered run answering a different question set is a scheme mismatch") {
  const auto ctx = small_context(5);
  auto backend = std::make_shared<ScriptedBackend>([](const std::string& prompt, int) {
    const int n = prompt_option_count(prompt);
    if (prompt_body(prompt) != prompt && item_index(prompt) == 0) {
      return std::vector<std::pair<std::string, double>>{{"The", -0.1}};
    }
    return pick(n, 0);
  });
  ModelClient client(mock_endpoint(), backend);
  IdentityParaphraser identity;
  SteeringConfig sc;
  sc.group_variable = "GENDER";
  try {
    run_steering_experiment(ctx, sc, RunConfig{}, client, identity);
    FAIL("expected SchemeMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kSchemeMismatch);
  }
}

TEST_CASE("steering variable must be demographic") {
  const auto ctx = small_context(6);
  ModelClient client(mock_endpoint(), std::make_shared<ScriptedBackend>(prefix_invariant_script()));
  IdentityParaphraser identity;
  SteeringConfig sc;
  sc.group_variable = "S001";
  CHECK_THROWS_AS(run_steering_experiment(ctx, sc, RunConfig{}, client, identity), Error);
}
