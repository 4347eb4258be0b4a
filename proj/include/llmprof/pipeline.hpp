#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "llmprof/model_client.hpp"
#include "llmprof/profiler.hpp"
#include "llmprof/run_config.hpp"
#include "llmprof/steering.hpp"

namespace llmprof {

/// "29999" -> "29,999"
std::string format_count(std::size_t n);

struct ValidationReport {
  std::size_t respondents = 0;
  std::size_t columns = 0;
  std::size_t categorical_columns = 0;
  std::size_t columns_with_blanks = 0;
  std::size_t blank_cells = 0;
  std::optional<QuestionPartition> partition;
  std::size_t retained_survey_columns = 0;

  std::string text() const;
};

ValidationReport validate_inputs(const std::filesystem::path& codebook,
                                 const std::filesystem::path& responses,
                                 const std::optional<PartitionConfig>& partition = std::nullopt);

/// Parses the configured survey, applies the territory filter, partitions
/// columns and drops blank survey columns.
SurveyContext load_survey(const RunSettings& settings);

std::shared_ptr<CompletionBackend> make_backend(const RunSettings& settings);
std::shared_ptr<Paraphraser> make_paraphraser(const RunSettings& settings);

nlohmann::json answer_manifest(const RunSettings& settings);
nlohmann::json steer_manifest(const RunSettings& settings);

struct AnswerResult {
  std::string run_id;
  std::filesystem::path dir;
  ModelResponse response;
  std::size_t endpoint_calls = 0;
};

/// Writes runs/<id>/{manifest.json, answers.json, candidates.json}.
/// `backend` overrides the HTTP endpoint (tests, offline replay).
AnswerResult cmd_answer(const RunSettings& settings,
                        std::shared_ptr<CompletionBackend> backend = nullptr, bool resume = false);

struct ProfileResult {
  std::filesystem::path dir;
  ModelProfile profile;
  std::vector<DistanceEntry> ranking;
};

/// Reads runs/<id>/answers.json, re-creates the survey from the run manifest,
/// and writes ranking.csv and profile.json next to it.
ProfileResult cmd_profile(const std::filesystem::path& runs_dir, const std::string& run_id,
                          std::optional<std::size_t> k = std::nullopt, int workers = 1);

struct SteerResult {
  std::string run_id;
  std::filesystem::path dir;
  std::vector<SteeringRun> runs;
  RadarDataset radar;
};

/// Writes runs/<id>/{manifest.json, steering/<series>/answers.json,
/// group_tables.json, radar.csv, radar.svg, steering_report.json}.
SteerResult cmd_steer(const RunSettings& settings, std::shared_ptr<CompletionBackend> backend = nullptr);

/// Renders report.md in every listed run directory; with more than one
/// profiled run also writes a cross-model summary. Returns the rendered text.
std::string cmd_report(const std::filesystem::path& runs_dir, const std::vector<std::string>& run_ids);

}  // namespace llmprof
