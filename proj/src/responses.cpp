#include <algorithm>
#include <charconv>
#include <unordered_set>

#include "llmprof/csv.hpp"
#include "llmprof/error.hpp"
#include "llmprof/io.hpp"
#include "llmprof/survey.hpp"

namespace llmprof {

namespace {

std::string_view trim_view(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

template <typename Int>
bool parse_int(std::string_view s, Int& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return !s.empty() && ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

SurveyMatrix::SurveyMatrix(std::vector<std::int64_t> qrids, std::vector<std::string> columns,
                           std::vector<std::int32_t> cells)
    : qrids_(std::move(qrids)), columns_(std::move(columns)), cells_(std::move(cells)) {
  for (std::size_t i = 0; i < columns_.size(); ++i) index_.emplace(columns_[i], i);
}

std::optional<std::size_t> SurveyMatrix::column_index(std::string_view id) const noexcept {
  const auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t SurveyMatrix::require_column(std::string_view id) const {
  if (const auto idx = column_index(id)) return *idx;
  throw Error(ErrorCode::kUnknownColumn, "column " + std::string(id) + " not in response matrix");
}

SurveyMatrix parse_responses(std::string_view csv_bytes, const Codebook& codebook,
                             const ParseOptions& options) {
  const std::string_view text = strip_bom(csv_bytes);
  if (trim_view(text).empty()) throw Error(ErrorCode::kEmptyInput, "responses file is empty");

  csv::Reader reader(text);
  std::vector<std::string> header;
  reader.next(header);
  for (auto& h : header) h = std::string(trim_view(h));

  // Header must name exactly the codebook columns, plus the QRID column.
  std::optional<std::size_t> qrid_pos;
  std::unordered_set<std::string> seen;
  std::vector<std::size_t> stored_fields;
  std::vector<const QuestionSpec*> stored_specs;
  std::vector<std::string> columns;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (!seen.insert(header[i]).second) {
      throw Error(ErrorCode::kHeaderMismatch, "column " + header[i] + " appears twice in header");
    }
    if (header[i] == options.qrid_column) {
      qrid_pos = i;
      continue;
    }
    const QuestionSpec* q = codebook.find(header[i]);
    if (!q) {
      throw Error(ErrorCode::kHeaderMismatch, "header column " + header[i] + " not in codebook");
    }
    if (q->free_form) continue;
    stored_fields.push_back(i);
    stored_specs.push_back(q);
    columns.push_back(header[i]);
  }
  if (!qrid_pos) {
    throw Error(ErrorCode::kHeaderMismatch, "no " + options.qrid_column + " column in header");
  }
  for (const auto& q : codebook.questions()) {
    if (q.id != options.qrid_column && !seen.contains(q.id)) {
      throw Error(ErrorCode::kHeaderMismatch, "codebook column " + q.id + " missing from header");
    }
  }

  std::vector<std::int64_t> qrids;
  std::vector<std::int32_t> cells;
  std::unordered_set<std::int64_t> seen_qrids;
  std::vector<std::string> fields;
  std::size_t row = 0;
  while (reader.next(fields)) {
    if (fields.size() == 1 && trim_view(fields[0]).empty()) continue;
    ++row;
    const auto where = "row " + std::to_string(row) + " (line " + std::to_string(reader.line()) + ")";
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::kMalformedCsv, where + ": " + std::to_string(fields.size()) +
                                                " fields, header has " +
                                                std::to_string(header.size()));
    }
    std::int64_t qrid = 0;
    if (!parse_int(trim_view(fields[*qrid_pos]), qrid)) {
      throw Error(ErrorCode::kInvalidQrid, where + ": QRID '" + fields[*qrid_pos] + "'");
    }
    if (!seen_qrids.insert(qrid).second) {
      throw Error(ErrorCode::kDuplicateQrid, where + ": QRID " + std::to_string(qrid) + " repeated");
    }
    qrids.push_back(qrid);
    for (std::size_t c = 0; c < stored_fields.size(); ++c) {
      const std::string_view raw = trim_view(fields[stored_fields[c]]);
      const bool sentinel = std::find(options.blank_sentinels.begin(),
                                      options.blank_sentinels.end(),
                                      raw) != options.blank_sentinels.end();
      if (raw.empty() || sentinel) {
        cells.push_back(SurveyMatrix::kBlank);
        continue;
      }
      std::int32_t code = 0;
      if (!parse_int(raw, code) || code == SurveyMatrix::kBlank || !stored_specs[c]->has_option(code)) {
        throw Error(ErrorCode::kUnknownOptionCode, where + ", column " + columns[c] + ": code '" +
                                                       std::string(raw) + "' not in codebook");
      }
      cells.push_back(code);
    }
  }
  return SurveyMatrix(std::move(qrids), std::move(columns), std::move(cells));
}

std::string write_responses(const SurveyMatrix& matrix, std::string_view qrid_column) {
  std::string out;
  std::vector<std::string> fields;
  fields.emplace_back(qrid_column);
  fields.insert(fields.end(), matrix.columns().begin(), matrix.columns().end());
  csv::append_row(out, fields);
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    fields.clear();
    fields.push_back(std::to_string(matrix.qrids()[r]));
    for (std::size_t c = 0; c < matrix.cols(); ++c) {
      const auto v = matrix.cell(r, c);
      fields.push_back(v ? std::to_string(*v) : std::string{});
    }
    csv::append_row(out, fields);
  }
  return out;
}

}  // namespace llmprof
