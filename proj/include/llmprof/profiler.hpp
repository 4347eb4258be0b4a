#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "llmprof/rational.hpp"
#include "llmprof/survey.hpp"

namespace llmprof {

/// One-hot layout over the retained columns: columns in codebook order,
/// option codes ascending within each block, blocks contiguous.
class EncodingScheme {
 public:
  struct Block {
    std::string column;
    std::vector<int> codes;  // ascending
    std::size_t offset = 0;

    std::size_t width() const noexcept { return codes.size(); }
    /// Bit index of `code` inside the block, or nullopt.
    std::optional<std::size_t> slot(int code) const noexcept;
  };

  EncodingScheme() = default;
  explicit EncodingScheme(std::vector<Block> blocks);

  const std::vector<Block>& blocks() const noexcept { return blocks_; }
  std::size_t column_count() const noexcept { return blocks_.size(); }
  std::size_t width() const noexcept { return width_; }
  std::size_t words() const noexcept { return (width_ + 63) / 64; }
  std::uint64_t fingerprint() const noexcept { return fingerprint_; }
  std::vector<std::string> columns() const;

  friend bool operator==(const EncodingScheme& a, const EncodingScheme& b) {
    return a.fingerprint_ == b.fingerprint_ && a.width_ == b.width_;
  }

 private:
  std::vector<Block> blocks_;
  std::size_t width_ = 0;
  std::uint64_t fingerprint_ = 0;
};

EncodingScheme build_encoding(const Codebook& codebook, const std::vector<std::string>& retained_ids);

/// Dense bitset of scheme width, packed little-endian into 64-bit words.
struct EncodedVector {
  std::string owner;
  std::uint64_t scheme = 0;
  std::size_t width = 0;
  std::vector<std::uint64_t> bits;

  bool test(std::size_t i) const noexcept { return (bits[i / 64] >> (i % 64)) & 1u; }
};

EncodedVector encode(const std::map<std::string, int>& values, const EncodingScheme& scheme,
                     std::string owner = {});

/// Inverse of encode; throws kInvalidCode unless each block has exactly one set bit.
std::map<std::string, int> decode(const EncodedVector& v, const EncodingScheme& scheme);

struct HammingResult {
  std::size_t mismatches = 0;     // differing categorical columns
  std::size_t bit_differences = 0;
  std::size_t width = 0;

  /// (1/W) * sum of per-bit indicators = 2m/W for one-hot vectors.
  Rational distance() const { return Rational(static_cast<std::int64_t>(bit_differences),
                                              static_cast<std::int64_t>(width)); }
};

/// Popcount of XOR over the packed words; m = bits / 2.
std::size_t xor_popcount(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) noexcept;

HammingResult hamming(const EncodedVector& a, const EncodedVector& b);

struct DistanceEntry {
  std::int64_t qrid = 0;
  std::size_t mismatches = 0;
  std::size_t width = 0;

  Rational distance() const {
    return Rational(2 * static_cast<std::int64_t>(mismatches), static_cast<std::int64_t>(width));
  }
  friend bool operator==(const DistanceEntry&, const DistanceEntry&) = default;
};

/// Respondents packed row-major for the distance kernel.
struct EncodedMatrix {
  std::vector<std::int64_t> qrids;
  std::size_t words_per_row = 0;
  std::uint64_t scheme = 0;
  std::size_t width = 0;
  std::vector<std::uint64_t> words;

  std::span<const std::uint64_t> row(std::size_t r) const noexcept {
    return {words.data() + r * words_per_row, words_per_row};
  }
};

EncodedMatrix encode_matrix(const SurveyMatrix& matrix, const EncodingScheme& scheme, int workers = 1);

/// Ascending by mismatch count, ties by ascending QRID. Integer keys only.
std::vector<DistanceEntry> rank_respondents(const EncodedVector& model, const EncodedMatrix& encoded,
                                            int workers = 1);
std::vector<DistanceEntry> rank_respondents(const EncodedVector& model, const SurveyMatrix& matrix,
                                            const EncodingScheme& scheme, int workers = 1);

struct VariableProfile {
  std::string variable;
  std::map<int, std::size_t> frequencies;  // over non-blank top-K members
  std::size_t blank_count = 0;
  std::size_t non_blank = 0;
  std::optional<int> modal_code;           // lowest of the tied modes
  std::string modal_label;
  std::vector<int> tied_codes;             // all modes, ascending
  bool tie = false;

  Rational share() const {
    return non_blank == 0 ? Rational(0)
                          : Rational(static_cast<std::int64_t>(frequencies.at(*modal_code)),
                                     static_cast<std::int64_t>(non_blank));
  }
};

struct ModelProfile {
  std::size_t k = 0;
  std::vector<VariableProfile> variables;

  nlohmann::json to_json() const;
  static ModelProfile from_json(const nlohmann::json& doc);
};

ModelProfile extract_profile(std::span<const DistanceEntry> ranking, std::size_t k,
                             const std::vector<std::string>& demographic_ids,
                             const SurveyMatrix& matrix, const Codebook& codebook);

struct GroupStat {
  int code = 0;
  std::string label;
  std::size_t count = 0;
  std::int64_t mismatch_sum = 0;
  std::size_t width = 0;

  /// mean of 2m/W over members = 2*sum / (count*W).
  Rational mean_distance() const {
    return Rational(2 * mismatch_sum, static_cast<std::int64_t>(count * width));
  }
  friend bool operator==(const GroupStat&, const GroupStat&) = default;
};

struct GroupDistanceTable {
  std::string group_variable;
  std::vector<GroupStat> groups;  // codebook option order, members > 0 only
  std::size_t blank_count = 0;

  friend bool operator==(const GroupDistanceTable&, const GroupDistanceTable&) = default;
  nlohmann::json to_json() const;
};

GroupDistanceTable group_average_distance(std::span<const DistanceEntry> entries,
                                          std::string_view group_variable,
                                          const SurveyMatrix& matrix, const Codebook& codebook);

/// qrid,mismatches,width,distance; distance is the shortest round-trip decimal
/// of 2*mismatches/width.
std::string ranking_csv(std::span<const DistanceEntry> ranking);

}  // namespace llmprof
