#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

namespace llmprof {

enum class ColumnRole { kSurvey, kDemographic, kAuxiliary };

std::string_view to_string(ColumnRole role) noexcept;

struct OptionLabel {
  int code = 0;
  std::string label;

  friend bool operator==(const OptionLabel&, const OptionLabel&) = default;
};

/// One codebook variable. Options keep document order; `free_form` columns
/// (verbatim text, numeric identifiers) carry no option set and never enter
/// the distance.
struct QuestionSpec {
  std::string id;
  std::string text;
  std::vector<OptionLabel> options;
  ColumnRole role = ColumnRole::kSurvey;
  bool free_form = false;

  const OptionLabel* find_option(int code) const noexcept;
  bool has_option(int code) const noexcept { return find_option(code) != nullptr; }
};

class Codebook {
 public:
  Codebook() = default;
  explicit Codebook(std::vector<QuestionSpec> questions);

  const std::vector<QuestionSpec>& questions() const noexcept { return questions_; }
  std::size_t column_count() const noexcept { return questions_.size(); }

  const QuestionSpec* find(std::string_view id) const noexcept;
  const QuestionSpec& at(std::string_view id) const;
  std::optional<std::size_t> index_of(std::string_view id) const noexcept;

  /// Assigns roles in place; used after partition_questions.
  void set_role(std::string_view id, ColumnRole role);

 private:
  std::vector<QuestionSpec> questions_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Accepts either the XML variable/value-label dialect or the JSON codebook
/// document (see docs/formats.md); the format is sniffed from the first
/// non-blank byte after an optional BOM.
Codebook parse_codebook(std::string_view bytes);

nlohmann::json codebook_to_json(const Codebook& codebook);

struct ParseOptions {
  std::string qrid_column = "QRID";
  std::vector<std::string> blank_sentinels;
};

/// Respondent x categorical-column matrix. Free-form columns named in the
/// header are accepted but not stored.
class SurveyMatrix {
 public:
  static constexpr std::int32_t kBlank = std::numeric_limits<std::int32_t>::min();

  SurveyMatrix() = default;
  SurveyMatrix(std::vector<std::int64_t> qrids, std::vector<std::string> columns,
               std::vector<std::int32_t> cells);

  std::size_t rows() const noexcept { return qrids_.size(); }
  std::size_t cols() const noexcept { return columns_.size(); }
  const std::vector<std::int64_t>& qrids() const noexcept { return qrids_; }
  const std::vector<std::string>& columns() const noexcept { return columns_; }

  std::optional<std::size_t> column_index(std::string_view id) const noexcept;
  std::size_t require_column(std::string_view id) const;

  std::int32_t raw(std::size_t row, std::size_t col) const noexcept {
    return cells_[row * columns_.size() + col];
  }
  std::optional<int> cell(std::size_t row, std::size_t col) const noexcept {
    const auto v = raw(row, col);
    return v == kBlank ? std::nullopt : std::optional<int>(v);
  }
  bool blank(std::size_t row, std::size_t col) const noexcept { return raw(row, col) == kBlank; }

  /// Rows for which `keep(row)` holds, order preserved.
  template <typename Pred>
  SurveyMatrix filter_rows(Pred keep) const {
    std::vector<std::int64_t> q;
    std::vector<std::int32_t> c;
    for (std::size_t r = 0; r < rows(); ++r) {
      if (!keep(r)) continue;
      q.push_back(qrids_[r]);
      c.insert(c.end(), cells_.begin() + static_cast<std::ptrdiff_t>(r * cols()),
               cells_.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols()));
    }
    return SurveyMatrix(std::move(q), columns_, std::move(c));
  }

  friend bool operator==(const SurveyMatrix& a, const SurveyMatrix& b) {
    return a.qrids_ == b.qrids_ && a.columns_ == b.columns_ && a.cells_ == b.cells_;
  }

 private:
  std::vector<std::int64_t> qrids_;
  std::vector<std::string> columns_;
  std::vector<std::int32_t> cells_;
  std::unordered_map<std::string, std::size_t> index_;
};

SurveyMatrix parse_responses(std::string_view csv_bytes, const Codebook& codebook,
                             const ParseOptions& options = {});

/// Inverse of parse_responses for the stored (categorical) columns.
std::string write_responses(const SurveyMatrix& matrix, std::string_view qrid_column = "QRID");

struct PartitionConfig {
  std::vector<std::string> demographic;
  std::vector<std::string> auxiliary;
  std::string qrid_column = "QRID";
  std::vector<std::string> blank_sentinels;

  static PartitionConfig from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
  ParseOptions parse_options() const { return {qrid_column, blank_sentinels}; }
};

/// Column roles, each list in codebook order. The three lists are disjoint
/// and together cover every codebook column.
struct QuestionPartition {
  std::vector<std::string> survey_ids;
  std::vector<std::string> demographic_ids;
  std::vector<std::string> auxiliary_ids;
};

/// Columns not named in the config become survey questions, except the QRID
/// column and free-form columns, which are auxiliary.
QuestionPartition partition_questions(const Codebook& codebook, const PartitionConfig& config);

/// Candidates whose column has no blank cell, in matrix column order.
std::vector<std::string> drop_blank_columns(const SurveyMatrix& matrix,
                                            const std::vector<std::string>& candidate_ids);

}  // namespace llmprof
