#include <algorithm>

#include "llmprof/csv.hpp"
#include "llmprof/error.hpp"
#include "llmprof/io.hpp"
#include "llmprof/parallel.hpp"
#include "llmprof/profiler.hpp"

namespace llmprof {

std::vector<DistanceEntry> rank_respondents(const EncodedVector& model, const EncodedMatrix& encoded,
                                            int workers) {
  if (model.scheme != encoded.scheme || model.width != encoded.width) {
    throw Error(ErrorCode::kSchemeMismatch, "model vector and respondent matrix use different schemes");
  }
  const std::size_t n = encoded.qrids.size();
  std::vector<DistanceEntry> entries(n);
  constexpr std::size_t kChunk = 2048;
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  parallel_for(chunks, workers, [&](std::size_t chunk) {
    const std::size_t end = std::min(n, (chunk + 1) * kChunk);
    for (std::size_t r = chunk * kChunk; r < end; ++r) {
      entries[r] = {encoded.qrids[r], xor_popcount(model.bits, encoded.row(r)) / 2, encoded.width};
    }
  });
  std::sort(entries.begin(), entries.end(), [](const DistanceEntry& a, const DistanceEntry& b) {
    return a.mismatches != b.mismatches ? a.mismatches < b.mismatches : a.qrid < b.qrid;
  });
  return entries;
}

std::vector<DistanceEntry> rank_respondents(const EncodedVector& model, const SurveyMatrix& matrix,
                                            const EncodingScheme& scheme, int workers) {
  if (model.scheme != scheme.fingerprint()) {
    throw Error(ErrorCode::kSchemeMismatch, "model vector was encoded with another scheme");
  }
  return rank_respondents(model, encode_matrix(matrix, scheme, workers), workers);
}

GroupDistanceTable group_average_distance(std::span<const DistanceEntry> entries,
                                          std::string_view group_variable,
                                          const SurveyMatrix& matrix, const Codebook& codebook) {
  const QuestionSpec* var = codebook.find(group_variable);
  const auto col = matrix.column_index(group_variable);
  if (!var || !col) {
    throw Error(ErrorCode::kUnknownVariable, "group variable " + std::string(group_variable));
  }
  std::unordered_map<std::int64_t, std::size_t> row_of;
  row_of.reserve(matrix.rows());
  for (std::size_t r = 0; r < matrix.rows(); ++r) row_of.emplace(matrix.qrids()[r], r);

  std::map<int, GroupStat> stats;
  GroupDistanceTable table;
  table.group_variable = var->id;
  for (const auto& e : entries) {
    const auto it = row_of.find(e.qrid);
    if (it == row_of.end()) {
      throw Error(ErrorCode::kUnknownVariable, "QRID " + std::to_string(e.qrid) + " not in matrix");
    }
    const auto code = matrix.cell(it->second, *col);
    if (!code) {
      ++table.blank_count;
      continue;
    }
    auto& s = stats[*code];
    s.code = *code;
    ++s.count;
    s.mismatch_sum += static_cast<std::int64_t>(e.mismatches);
    s.width = e.width;
  }
  for (const auto& opt : var->options) {
    const auto it = stats.find(opt.code);
    if (it == stats.end()) continue;
    it->second.label = opt.label;
    table.groups.push_back(it->second);
  }
  return table;
}

nlohmann::json GroupDistanceTable::to_json() const {
  nlohmann::json groups_json = nlohmann::json::array();
  for (const auto& g : groups) {
    const auto mean = g.mean_distance();
    groups_json.push_back({{"code", g.code},
                           {"label", g.label},
                           {"count", g.count},
                           {"mismatch_sum", g.mismatch_sum},
                           {"width", g.width},
                           {"mean_distance", mean.str()},
                           {"mean_distance_value", mean.to_double()}});
  }
  return {{"group_variable", group_variable}, {"blank_count", blank_count}, {"groups", groups_json}};
}

std::string ranking_csv(std::span<const DistanceEntry> ranking) {
  std::string out = "qrid,mismatches,width,distance\r\n";
  for (const auto& e : ranking) {
    csv::append_row(out, {std::to_string(e.qrid), std::to_string(e.mismatches),
                          std::to_string(e.width), format_shortest(e.distance().to_double())});
  }
  return out;
}

}  // namespace llmprof
