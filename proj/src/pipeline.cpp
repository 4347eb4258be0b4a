#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>

#include "llmprof/error.hpp"
#include "llmprof/io.hpp"
#include "llmprof/pipeline.hpp"
#include "llmprof/report.hpp"

namespace llmprof {

namespace {

namespace fs = std::filesystem;

std::string slug(std::string_view s) {
  std::string out;
  for (char c : s) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) out.push_back(static_cast<char>(std::tolower(u)));
    else if (!out.empty() && out.back() != '-') out.push_back('-');
  }
  while (!out.empty() && out.back() == '-') out.pop_back();
  return out.empty() ? "x" : out;
}

nlohmann::json read_json(const fs::path& p) {
  try {
    return nlohmann::json::parse(read_file(p));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kMalformedDocument, p.string() + ": " + e.what());
  }
}

void write_json(const fs::path& p, const nlohmann::json& doc) { write_file_atomic(p, doc.dump(2) + "\n"); }

nlohmann::json candidates_json(const std::vector<AnswerRecord>& records) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : records) {
    nlohmann::json cands = nlohmann::json::array();
    for (const auto& c : r.candidates) {
      cands.push_back({{"variant", c.variant_index},
                       {"seed", c.seed},
                       {"style", c.steering_style ? nlohmann::json(to_string(*c.steering_style)) : nlohmann::json()},
                       {"chosen", c.chosen_code ? nlohmann::json(*c.chosen_code) : nlohmann::json()}});
    }
    out.push_back({{"question", r.question_id},
                   {"answerable", r.answerable},
                   {"modal_code", r.modal_code},
                   {"modal_count", r.modal_count},
                   {"tie", r.tie},
                   {"candidates", cands}});
  }
  return out;
}

RunSettings settings_from_run(const fs::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) throw Error(ErrorCode::kIoError, "no manifest in " + dir.string());
  return RunSettings::from_json(read_json(manifest_path), dir);
}

}  // namespace

std::string format_count(std::size_t n) {
  std::string digits = std::to_string(n);
  std::string out;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i && (digits.size() - i) % 3 == 0) out.push_back(',');
    out.push_back(digits[i]);
  }
  return out;
}

std::string ValidationReport::text() const {
  std::string out = fmt::format("{} respondents, {} columns\n", format_count(respondents), format_count(columns));
  out += fmt::format("categorical columns: {}\n", categorical_columns);
  out += fmt::format("columns with blanks: {} ({} blank cells)\n", columns_with_blanks, blank_cells);
  if (partition) {
    out += fmt::format("survey questions: {} ({} retained without blanks)\n", partition->survey_ids.size(),
                       retained_survey_columns);
    out += fmt::format("demographic variables: {}\n", partition->demographic_ids.size());
    out += fmt::format("auxiliary columns: {}\n", partition->auxiliary_ids.size());
  }
  return out;
}

ValidationReport validate_inputs(const fs::path& codebook_path, const fs::path& responses_path,
                                 const std::optional<PartitionConfig>& partition) {
  const Codebook codebook = parse_codebook(read_file(codebook_path));
  const ParseOptions options = partition ? partition->parse_options() : ParseOptions{};
  const SurveyMatrix matrix = parse_responses(read_file(responses_path), codebook, options);

  ValidationReport report;
  report.respondents = matrix.rows();
  report.columns = codebook.column_count();
  report.categorical_columns = matrix.cols();
  for (std::size_t c = 0; c < matrix.cols(); ++c) {
    std::size_t blanks = 0;
    for (std::size_t r = 0; r < matrix.rows(); ++r) blanks += matrix.blank(r, c);
    report.blank_cells += blanks;
    report.columns_with_blanks += blanks > 0;
  }
  if (partition) {
    report.partition = partition_questions(codebook, *partition);
    report.retained_survey_columns = drop_blank_columns(matrix, report.partition->survey_ids).size();
  }
  return report;
}

SurveyContext load_survey(const RunSettings& settings) {
  Codebook codebook = parse_codebook(read_file(settings.codebook));
  SurveyMatrix matrix =
      parse_responses(read_file(settings.responses), codebook, settings.partition.parse_options());
  if (settings.territory) {
    const auto col = matrix.require_column(settings.territory->column);
    const int value = settings.territory->value;
    matrix = matrix.filter_rows([&](std::size_t r) { return matrix.raw(r, col) == value; });
    if (matrix.rows() == 0) {
      throw Error(ErrorCode::kInvalidConfig, "territory filter " + settings.territory->column + "=" +
                                                 std::to_string(value) + " selects no respondents");
    }
  }
  return make_survey_context(std::move(codebook), std::move(matrix), settings.partition);
}

std::shared_ptr<CompletionBackend> make_backend(const RunSettings& settings) {
  return std::make_shared<HttpCompletionBackend>(settings.endpoint);
}

std::shared_ptr<Paraphraser> make_paraphraser(const RunSettings& settings) {
  std::shared_ptr<Paraphraser> inner;
  if (settings.paraphrase.backend == "static") {
    inner = std::make_shared<StaticParaphraser>(StaticParaphraser::load(settings.paraphrase.path));
  } else if (settings.paraphrase.backend == "http") {
    HttpParaphraseConfig cfg;
    cfg.url = settings.paraphrase.url;
    cfg.timeout = std::chrono::milliseconds(settings.paraphrase.timeout_ms);
    cfg.retries = settings.paraphrase.retries;
    cfg.required = settings.paraphrase.required;
    inner = std::make_shared<HttpParaphraser>(std::move(cfg));
  } else {
    return std::make_shared<IdentityParaphraser>();
  }
  return std::make_shared<CachingParaphraser>(std::move(inner), settings.cache_dir / "paraphrase");
}

nlohmann::json answer_manifest(const RunSettings& settings) {
  auto m = settings.manifest();
  m.erase("profile");
  m.erase("steering");
  m["command"] = "answer";
  return m;
}

nlohmann::json steer_manifest(const RunSettings& settings) {
  auto m = settings.manifest();
  m.erase("profile");
  m["command"] = "steer";
  return m;
}

AnswerResult cmd_answer(const RunSettings& settings, std::shared_ptr<CompletionBackend> backend,
                        bool resume) {
  const auto manifest = answer_manifest(settings);
  AnswerResult result;
  result.run_id = run_id_for(manifest);
  result.dir = settings.runs_dir / result.run_id;
  if (resume && fs::exists(result.dir / "answers.json")) {
    result.response = ModelResponse::from_json(read_json(result.dir / "answers.json"));
    return result;
  }

  const SurveyContext survey = load_survey(settings);
  ModelClient client(settings.endpoint, backend ? backend : make_backend(settings),
                     settings.cache_dir / "scores");
  auto paraphraser = make_paraphraser(settings);
  std::vector<AnswerRecord> records;
  result.response = build_model_response(survey.codebook, survey.retained, {}, settings.run_config(),
                                         client, *paraphraser, &records);
  result.response.run_manifest["templates_sha256"] = settings.templates().hash();
  result.response.run_manifest["run_id"] = result.run_id;
  result.endpoint_calls = client.endpoint_calls();

  write_json(result.dir / "manifest.json", manifest);
  write_json(result.dir / "candidates.json", candidates_json(records));
  write_json(result.dir / "answers.json", result.response.to_json());
  return result;
}

ProfileResult cmd_profile(const fs::path& runs_dir, const std::string& run_id,
                          std::optional<std::size_t> k, int workers) {
  ProfileResult result;
  result.dir = runs_dir / run_id;
  const RunSettings settings = settings_from_run(result.dir);
  const auto answers_path = result.dir / "answers.json";
  if (!fs::exists(answers_path)) throw Error(ErrorCode::kIoError, "no answers.json in " + result.dir.string());
  const auto response = ModelResponse::from_json(read_json(answers_path));

  const SurveyContext survey = load_survey(settings);
  auto ranked = rank_response(survey, response, workers);
  const std::size_t top = k.value_or(settings.k);
  result.profile = extract_profile(ranked.ranking, top, survey.partition.demographic_ids, survey.matrix,
                                   survey.codebook);
  result.ranking = std::move(ranked.ranking);

  auto doc = result.profile.to_json();
  doc["run_id"] = run_id;
  doc["model_id"] = response.model_id;
  doc["territory"] = settings.territory ? settings.territory->label : std::string{};
  doc["manifest_sha256"] = sha256_hex(read_file(result.dir / "manifest.json"));
  doc["respondents"] = survey.matrix.rows();
  doc["retained_columns"] = ranked.scheme.column_count();
  doc["width"] = ranked.scheme.width();
  write_file_atomic(result.dir / "ranking.csv", ranking_csv(result.ranking));
  write_json(result.dir / "profile.json", doc);
  return result;
}

SteerResult cmd_steer(const RunSettings& settings, std::shared_ptr<CompletionBackend> backend) {
  if (settings.group_variable.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "steering needs a group variable (--group-var)");
  }
  const auto manifest = steer_manifest(settings);
  SteerResult result;
  result.run_id = run_id_for(manifest);
  result.dir = settings.runs_dir / result.run_id;

  const SurveyContext survey = load_survey(settings);
  ModelClient client(settings.endpoint, backend ? backend : make_backend(settings),
                     settings.cache_dir / "scores");
  auto paraphraser = make_paraphraser(settings);
  SteeringConfig steering{settings.group_variable, settings.steer_values, settings.templates(),
                          settings.min_group_size};
  result.runs = run_steering_experiment(survey, steering, settings.run_config(), client, *paraphraser,
                                        settings.workers);
  result.radar = build_radar(result.runs, survey.codebook);

  write_json(result.dir / "manifest.json", manifest);
  nlohmann::json tables = nlohmann::json::array();
  for (std::size_t i = 0; i < result.runs.size(); ++i) {
    const auto& run = result.runs[i];
    const auto sub = result.dir / "steering" / fmt::format("{:02}-{}", i, slug(run.series_name()));
    write_json(sub / "answers.json", run.response.to_json());
    tables.push_back({{"series", run.series_name()},
                      {"target", run.target ? nlohmann::json(*run.target) : nlohmann::json()},
                      {"table", run.table.to_json()}});
  }
  write_json(result.dir / "group_tables.json", tables);
  write_file_atomic(result.dir / "radar.csv", radar_csv(result.radar));
  write_file_atomic(result.dir / "radar.svg",
                    render_radar_svg(result.radar, fmt::format("{}: mean distance by {}", settings.endpoint.model,
                                                               settings.group_variable)));
  write_json(result.dir / "steering_report.json", steering_delta_report(result.runs, settings.min_group_size));
  return result;
}

std::string cmd_report(const fs::path& runs_dir, const std::vector<std::string>& run_ids) {
  std::string all;
  std::vector<ProfileCell> cells;
  std::vector<Codebook> codebooks;
  codebooks.reserve(run_ids.size());
  for (const auto& id : run_ids) {
    const auto dir = runs_dir / id;
    const RunSettings settings = settings_from_run(dir);
    codebooks.push_back(parse_codebook(read_file(settings.codebook)));
    const Codebook& codebook = codebooks.back();

    std::string md = fmt::format("# Run {}\n\nModel: {}\n", id, settings.endpoint.model);
    if (settings.territory) md += fmt::format("Territory: {}\n", settings.territory->label);
    md += "\n";
    if (fs::exists(dir / "profile.json")) {
      const auto doc = read_json(dir / "profile.json");
      const auto profile = ModelProfile::from_json(doc);
      md += "## Profile\n\n" + render_profile_table(profile, codebook) + "\n";
      cells.push_back({doc.value("model_id", settings.endpoint.model),
                       settings.territory ? settings.territory->label
                                          : (settings.name.empty() ? std::string("all") : settings.name),
                       profile, &codebook});
    }
    if (fs::exists(dir / "steering_report.json")) {
      const auto rep = read_json(dir / "steering_report.json");
      md += fmt::format("## Steering by {}\n\n![radar](radar.svg)\n\n", rep.value("group_variable", ""));
      md += "| Target | Changed answers | Largest abs. delta |\n|---|---|---|\n";
      for (const auto& t : rep.at("targets")) {
        double worst = 0.0;
        for (const auto& d : t.at("deltas")) worst = std::max(worst, std::abs(d.at("delta_value").get<double>()));
        const auto frac = t.at("changed_fraction").get<std::string>();
        const auto slash = frac.find('/');
        const Rational r(std::stoll(frac.substr(0, slash)), std::stoll(frac.substr(slash + 1)));
        md += fmt::format("| {} | {} | {} |\n", t.at("target_label").get<std::string>(), format_percent(r),
                          format_shortest(worst));
      }
      md += "\n";
    }
    write_file_atomic(dir / "report.md", md);
    all += md;
  }
  if (cells.size() > 1) {
    const auto summary = render_summary_matrix(cells);
    std::string joined;
    for (const auto& id : run_ids) joined += id + ",";
    write_file_atomic(runs_dir / fmt::format("summary-{}.md", sha256_hex(joined).substr(0, 12)),
                      summary.markdown);
    all += "# Summary\n\n" + summary.markdown;
  }
  return all;
}

}  // namespace llmprof
