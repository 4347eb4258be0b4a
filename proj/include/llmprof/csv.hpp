#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace llmprof::csv {

/// RFC-4180 record reader over an in-memory buffer. Quoted fields may span
/// lines and use "" for a literal quote; CRLF and LF line endings are both
/// accepted.
class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  /// Reads the next record into `fields`. Returns false at end of input.
  /// Throws Error(kMalformedCsv) on an unterminated quote or stray quote.
  bool next(std::vector<std::string>& fields);

  /// 1-based physical line where the most recently returned record started.
  std::size_t line() const noexcept { return record_line_; }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t record_line_ = 0;
};

std::string escape(std::string_view field);

void append_row(std::string& out, const std::vector<std::string>& fields);

}  // namespace llmprof::csv
