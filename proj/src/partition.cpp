#include <unordered_map>

#include "llmprof/error.hpp"
#include "llmprof/survey.hpp"

namespace llmprof {

PartitionConfig PartitionConfig::from_json(const nlohmann::json& doc) {
  PartitionConfig cfg;
  if (doc.is_null()) return cfg;
  if (!doc.is_object()) throw Error(ErrorCode::kInvalidConfig, "partition config must be an object");
  try {
    cfg.demographic = doc.value("demographic", std::vector<std::string>{});
    cfg.auxiliary = doc.value("auxiliary", std::vector<std::string>{});
    cfg.qrid_column = doc.value("qrid_column", std::string("QRID"));
    cfg.blank_sentinels = doc.value("blank_sentinels", std::vector<std::string>{});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, e.what());
  }
  return cfg;
}

nlohmann::json PartitionConfig::to_json() const {
  return {{"demographic", demographic},
          {"auxiliary", auxiliary},
          {"qrid_column", qrid_column},
          {"blank_sentinels", blank_sentinels}};
}

QuestionPartition partition_questions(const Codebook& codebook, const PartitionConfig& config) {
  std::unordered_map<std::string, ColumnRole> listed;
  auto mark = [&](const std::vector<std::string>& ids, ColumnRole role) {
    for (const auto& id : ids) {
      const QuestionSpec* q = codebook.find(id);
      if (!q) throw Error(ErrorCode::kUnknownColumnInConfig, "column " + id + " not in codebook");
      if (!listed.emplace(id, role).second) {
        throw Error(ErrorCode::kColumnListedTwice, "column " + id + " listed more than once");
      }
      if (role == ColumnRole::kDemographic && q->free_form) {
        throw Error(ErrorCode::kNonCategoricalColumn,
                    "demographic column " + id + " is free-form");
      }
    }
  };
  mark(config.demographic, ColumnRole::kDemographic);
  mark(config.auxiliary, ColumnRole::kAuxiliary);

  QuestionPartition out;
  for (const auto& q : codebook.questions()) {
    ColumnRole role = ColumnRole::kSurvey;
    if (const auto it = listed.find(q.id); it != listed.end()) {
      role = it->second;
    } else if (q.id == config.qrid_column || q.free_form) {
      role = ColumnRole::kAuxiliary;
    }
    switch (role) {
      case ColumnRole::kSurvey: out.survey_ids.push_back(q.id); break;
      case ColumnRole::kDemographic: out.demographic_ids.push_back(q.id); break;
      case ColumnRole::kAuxiliary: out.auxiliary_ids.push_back(q.id); break;
    }
  }
  return out;
}

std::vector<std::string> drop_blank_columns(const SurveyMatrix& matrix,
                                            const std::vector<std::string>& candidate_ids) {
  std::vector<bool> candidate(matrix.cols(), false);
  for (const auto& id : candidate_ids) candidate[matrix.require_column(id)] = true;

  std::vector<bool> has_blank(matrix.cols(), false);
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    for (std::size_t c = 0; c < matrix.cols(); ++c) {
      if (candidate[c] && matrix.blank(r, c)) has_blank[c] = true;
    }
  }
  std::vector<std::string> retained;
  for (std::size_t c = 0; c < matrix.cols(); ++c) {
    if (candidate[c] && !has_blank[c]) retained.push_back(matrix.columns()[c]);
  }
  return retained;
}

}  // namespace llmprof
