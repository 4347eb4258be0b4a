#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <iostream>

#include "llmprof/error.hpp"
#include "llmprof/io.hpp"
#include "llmprof/pipeline.hpp"

namespace fs = std::filesystem;
using namespace llmprof;

namespace {

struct Common {
  std::string config;
  std::string cache_dir;
  std::string runs_dir;
  int workers = 0;
};

RunSettings load_settings(const Common& c) {
  if (c.config.empty()) throw Error(ErrorCode::kInvalidConfig, "--config is required");
  RunSettings s = RunSettings::load(c.config);
  if (!c.cache_dir.empty()) s.cache_dir = fs::absolute(c.cache_dir);
  if (!c.runs_dir.empty()) s.runs_dir = fs::absolute(c.runs_dir);
  if (c.workers > 0) s.workers = c.workers;
  return s;
}

fs::path runs_dir_of(const Common& c) {
  if (!c.runs_dir.empty()) return fs::absolute(c.runs_dir);
  if (!c.config.empty()) return RunSettings::load(c.config).runs_dir;
  return fs::absolute("runs");
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Run configuration (JSON)");
  cmd->add_option("--cache-dir", c.cache_dir, "Score and paraphrase cache directory");
  cmd->add_option("--runs-dir", c.runs_dir, "Directory holding runs/<id>");
  cmd->add_option("--workers", c.workers, "Maximum concurrent requests / ranking threads");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Profile language-model opinions against survey respondents"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  Common common;

  auto* validate = app.add_subcommand("validate", "Parse a codebook and responses file and print statistics");
  std::string v_codebook, v_responses, v_partition;
  validate->add_option("--codebook", v_codebook, "Codebook (XML or JSON)");
  validate->add_option("--responses", v_responses, "Responses CSV");
  validate->add_option("--partition", v_partition, "Partition config (JSON)");
  validate->add_option("--config", common.config, "Run configuration; supplies the paths above");

  auto* answer = app.add_subcommand("answer", "Collect the model's answers to every retained question");
  add_common(answer, common);
  bool resume = false;
  answer->add_flag("--resume", resume, "Reuse a finished run instead of recomputing");

  auto* profile = app.add_subcommand("profile", "Rank respondents against a model response and profile the top K");
  add_common(profile, common);
  std::string run_id;
  std::size_t k = 0;
  profile->add_option("--run-id", run_id, "Answer run to profile (default: the run the config describes)");
  profile->add_option("--k", k, "Number of closest respondents");

  auto* steer = app.add_subcommand("steer", "Run the steering experiment over one demographic variable");
  add_common(steer, common);
  std::string group_var;
  steer->add_option("--group-var", group_var, "Demographic variable to steer toward");
  steer->add_flag("--resume", resume, "Accepted for symmetry; cached scores are always reused");

  auto* report = app.add_subcommand("report", "Render report.md for one or more runs");
  add_common(report, common);
  std::vector<std::string> run_ids;
  report->add_option("--run-id", run_ids, "Run ids (repeatable)")->required();

  auto* probe = app.add_subcommand("probe", "Check that the endpoint is deterministic and honours seeds");
  add_common(probe, common);

  CLI11_PARSE(app, argc, argv);
  spdlog::set_default_logger(spdlog::stderr_color_mt("llmprof"));
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (validate->parsed()) {
      std::optional<PartitionConfig> partition;
      if (!common.config.empty()) {
        const auto s = RunSettings::load(common.config);
        v_codebook = s.codebook.string();
        v_responses = s.responses.string();
        partition = s.partition;
      }
      if (!v_partition.empty()) {
        partition = PartitionConfig::from_json(nlohmann::json::parse(strip_bom(read_file(v_partition))));
      }
      if (v_codebook.empty() || v_responses.empty()) {
        throw Error(ErrorCode::kInvalidConfig, "validate needs --codebook and --responses, or --config");
      }
      std::cout << validate_inputs(v_codebook, v_responses, partition).text();
    } else if (answer->parsed()) {
      const auto s = load_settings(common);
      const auto r = cmd_answer(s, nullptr, resume);
      std::cout << r.run_id << "\n";
      spdlog::info("{} answered, {} excluded, {} endpoint calls -> {}", r.response.answers.size(),
                   r.response.excluded.size(), r.endpoint_calls, r.dir.string());
    } else if (profile->parsed()) {
      fs::path runs = runs_dir_of(common);
      std::optional<std::size_t> top;
      if (!common.config.empty()) {
        const auto s = load_settings(common);
        if (run_id.empty()) {
          run_id = run_id_for(answer_manifest(s));
          runs = s.runs_dir;
        }
        top = s.k;
      } else if (run_id.empty()) {
        throw Error(ErrorCode::kInvalidConfig, "profile needs --run-id or --config");
      }
      if (k) top = k;
      const auto r = cmd_profile(runs, run_id, top,
                                 common.workers > 0 ? common.workers : 4);
      std::cout << (r.dir / "profile.json").string() << "\n";
    } else if (steer->parsed()) {
      auto s = load_settings(common);
      if (!group_var.empty()) s.group_variable = group_var;
      const auto r = cmd_steer(s);
      std::cout << r.run_id << "\n";
    } else if (report->parsed()) {
      std::cout << cmd_report(runs_dir_of(common), run_ids);
    } else if (probe->parsed()) {
      const auto s = load_settings(common);
      ModelClient client(s.endpoint, make_backend(s));
      std::cout << probe_endpoint(client).to_json().dump(2) << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
