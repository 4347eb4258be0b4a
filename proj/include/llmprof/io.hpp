#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace llmprof {

std::string read_file(const std::filesystem::path& path);

/// Writes via a sibling temporary and rename, so readers never observe a
/// partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

/// Strips a leading UTF-8 byte-order mark if present.
std::string_view strip_bom(std::string_view text) noexcept;

/// Shortest decimal that parses back to exactly `value`.
std::string format_shortest(double value);

}  // namespace llmprof
