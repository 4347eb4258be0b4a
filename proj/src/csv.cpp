#include "llmprof/csv.hpp"

#include "llmprof/error.hpp"

namespace llmprof::csv {

bool Reader::next(std::vector<std::string>& fields) {
  fields.clear();
  if (pos_ >= text_.size()) return false;
  record_line_ = line_;
  std::string field;
  bool quoted = false;
  bool field_was_quoted = false;
  while (pos_ < text_.size()) {
    const char c = text_[pos_];
    if (quoted) {
      if (c == '"') {
        if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '"') {
          field.push_back('"');
          pos_ += 2;
          continue;
        }
        quoted = false;
        ++pos_;
        continue;
      }
      if (c == '\n') ++line_;
      field.push_back(c);
      ++pos_;
      continue;
    }
    if (c == '"') {
      if (!field.empty() || field_was_quoted) {
        throw Error(ErrorCode::kMalformedCsv,
                    "unexpected quote at line " + std::to_string(line_));
      }
      quoted = true;
      field_was_quoted = true;
      ++pos_;
      continue;
    }
    if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      field_was_quoted = false;
      ++pos_;
      continue;
    }
    if (c == '\r' || c == '\n') {
      if (c == '\r' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '\n') ++pos_;
      ++pos_;
      ++line_;
      fields.push_back(std::move(field));
      return true;
    }
    if (field_was_quoted) {
      throw Error(ErrorCode::kMalformedCsv,
                  "text after closing quote at line " + std::to_string(line_));
    }
    field.push_back(c);
    ++pos_;
  }
  if (quoted) {
    throw Error(ErrorCode::kMalformedCsv,
                "unterminated quoted field starting at line " + std::to_string(record_line_));
  }
  fields.push_back(std::move(field));
  return true;
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void append_row(std::string& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(',');
    out += escape(fields[i]);
  }
  out += "\r\n";
}

}  // namespace llmprof::csv
