#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "llmprof/model_client.hpp"
#include "llmprof/profiler.hpp"
#include "llmprof/prompt.hpp"
#include "llmprof/survey.hpp"

namespace llmprof {

/// Parsed and partitioned survey, with the blank-free survey columns that
/// enter the distance.
struct SurveyContext {
  Codebook codebook;
  SurveyMatrix matrix;
  QuestionPartition partition;
  std::vector<std::string> retained;
};

SurveyContext make_survey_context(Codebook codebook, SurveyMatrix matrix, const PartitionConfig& config);

struct ResponseRanking {
  EncodingScheme scheme;
  std::vector<DistanceEntry> ranking;
};

/// Encodes the answered questions of `response` and ranks every respondent.
ResponseRanking rank_response(const SurveyContext& survey, const ModelResponse& response,
                              int workers = 1);

struct SteeringRun {
  std::string model_id;
  std::string group_variable;
  std::optional<int> target;  // nullopt = unsteered
  std::string target_label;   // "none" when unsteered
  ModelResponse response;
  GroupDistanceTable table;
  std::uint64_t scheme = 0;

  std::string series_name() const;
};

struct SteeringConfig {
  std::string group_variable;
  /// Target values; empty means every option of the group variable.
  std::vector<int> values;
  SteeringTemplates templates = SteeringTemplates::defaults();
  std::size_t min_group_size = 30;
};

/// One unsteered run followed by one steered run per target value (codebook
/// order). Steered runs pool every wording x seed x style candidate into a
/// single mode per question.
std::vector<SteeringRun> run_steering_experiment(const SurveyContext& survey,
                                                 const SteeringConfig& steering,
                                                 const RunConfig& config, ModelClient& client,
                                                 Paraphraser& paraphraser, int workers = 1);

struct RadarDataset {
  std::string group_variable;
  std::vector<std::pair<int, std::string>> axes;  // (code, label), codebook order
  struct Series {
    std::string name;
    std::vector<Rational> values;  // one per axis
  };
  std::vector<Series> series;
};

RadarDataset build_radar(const std::vector<SteeringRun>& runs, const Codebook& codebook);

/// axis,series,value rows; values are shortest round-trip decimals.
std::string radar_csv(const RadarDataset& radar);

struct RadarCsvRow {
  std::string axis;
  std::string series;
  double value = 0.0;
};
std::vector<RadarCsvRow> parse_radar_csv(std::string_view text);

std::string render_radar_svg(const RadarDataset& radar, std::string_view title = {});

/// Per steered run and axis group: steered mean minus unsteered mean, plus
/// the fraction of questions whose modal answer changed.
nlohmann::json steering_delta_report(const std::vector<SteeringRun>& runs,
                                     std::size_t min_group_size = 30);

}  // namespace llmprof
