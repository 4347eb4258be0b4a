#include <algorithm>
#include <bit>

#include "llmprof/error.hpp"
#include "llmprof/parallel.hpp"
#include "llmprof/profiler.hpp"

namespace llmprof {

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

void fnv_mix(std::uint64_t& h, std::string_view bytes) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
}

}  // namespace

std::optional<std::size_t> EncodingScheme::Block::slot(int code) const noexcept {
  const auto it = std::lower_bound(codes.begin(), codes.end(), code);
  if (it == codes.end() || *it != code) return std::nullopt;
  return static_cast<std::size_t>(it - codes.begin());
}

EncodingScheme::EncodingScheme(std::vector<Block> blocks) : blocks_(std::move(blocks)) {
  fingerprint_ = kFnvOffset;
  for (auto& b : blocks_) {
    b.offset = width_;
    width_ += b.width();
    fnv_mix(fingerprint_, b.column);
    fnv_mix(fingerprint_, "\x1f");
    for (int c : b.codes) {
      fnv_mix(fingerprint_, std::to_string(c));
      fnv_mix(fingerprint_, ",");
    }
    fnv_mix(fingerprint_, "\x1e");
  }
}

std::vector<std::string> EncodingScheme::columns() const {
  std::vector<std::string> out;
  out.reserve(blocks_.size());
  for (const auto& b : blocks_) out.push_back(b.column);
  return out;
}

EncodingScheme build_encoding(const Codebook& codebook, const std::vector<std::string>& retained_ids) {
  if (retained_ids.empty()) throw Error(ErrorCode::kInvalidConfig, "no retained columns to encode");
  std::vector<std::pair<std::size_t, const QuestionSpec*>> picked;
  for (const auto& id : retained_ids) {
    const auto idx = codebook.index_of(id);
    if (!idx) throw Error(ErrorCode::kUnknownColumn, "column " + id + " not in codebook");
    const QuestionSpec& q = codebook.questions()[*idx];
    if (q.free_form || q.options.empty()) {
      throw Error(ErrorCode::kNonCategoricalColumn, "column " + id + " is not categorical");
    }
    picked.emplace_back(*idx, &q);
  }
  std::sort(picked.begin(), picked.end());
  picked.erase(std::unique(picked.begin(), picked.end()), picked.end());

  std::vector<EncodingScheme::Block> blocks;
  blocks.reserve(picked.size());
  for (const auto& [idx, q] : picked) {
    EncodingScheme::Block b;
    b.column = q->id;
    for (const auto& opt : q->options) b.codes.push_back(opt.code);
    std::sort(b.codes.begin(), b.codes.end());
    blocks.push_back(std::move(b));
  }
  return EncodingScheme(std::move(blocks));
}

EncodedVector encode(const std::map<std::string, int>& values, const EncodingScheme& scheme,
                     std::string owner) {
  EncodedVector v{std::move(owner), scheme.fingerprint(), scheme.width(),
                  std::vector<std::uint64_t>(scheme.words(), 0)};
  for (const auto& b : scheme.blocks()) {
    const auto it = values.find(b.column);
    if (it == values.end()) {
      throw Error(ErrorCode::kMissingColumn, v.owner + ": no value for column " + b.column);
    }
    const auto slot = b.slot(it->second);
    if (!slot) {
      throw Error(ErrorCode::kInvalidCode, v.owner + ": code " + std::to_string(it->second) +
                                               " not an option of " + b.column);
    }
    const std::size_t bit = b.offset + *slot;
    v.bits[bit / 64] |= std::uint64_t{1} << (bit % 64);
  }
  return v;
}

std::map<std::string, int> decode(const EncodedVector& v, const EncodingScheme& scheme) {
  if (v.scheme != scheme.fingerprint()) throw Error(ErrorCode::kSchemeMismatch, v.owner);
  std::map<std::string, int> out;
  for (const auto& b : scheme.blocks()) {
    std::optional<int> found;
    for (std::size_t i = 0; i < b.width(); ++i) {
      if (!v.test(b.offset + i)) continue;
      if (found) throw Error(ErrorCode::kInvalidCode, "block " + b.column + " has several set bits");
      found = b.codes[i];
    }
    if (!found) throw Error(ErrorCode::kInvalidCode, "block " + b.column + " has no set bit");
    out.emplace(b.column, *found);
  }
  return out;
}

std::size_t xor_popcount(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) noexcept {
  std::size_t sum = 0;
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) sum += static_cast<std::size_t>(std::popcount(a[i] ^ b[i]));
  return sum;
}

HammingResult hamming(const EncodedVector& a, const EncodedVector& b) {
  if (a.scheme != b.scheme || a.width != b.width) {
    throw Error(ErrorCode::kSchemeMismatch, a.owner + " vs " + b.owner);
  }
  HammingResult r;
  r.width = a.width;
  r.bit_differences = xor_popcount(a.bits, b.bits);
  if (r.bit_differences % 2 != 0) {
    throw Error(ErrorCode::kInvalidCode, "vectors are not one-hot per block");
  }
  r.mismatches = r.bit_differences / 2;
  return r;
}

EncodedMatrix encode_matrix(const SurveyMatrix& matrix, const EncodingScheme& scheme, int workers) {
  EncodedMatrix out;
  out.qrids = matrix.qrids();
  out.words_per_row = scheme.words();
  out.scheme = scheme.fingerprint();
  out.width = scheme.width();
  out.words.assign(matrix.rows() * out.words_per_row, 0);

  std::vector<std::size_t> cols;
  cols.reserve(scheme.column_count());
  for (const auto& b : scheme.blocks()) cols.push_back(matrix.require_column(b.column));

  constexpr std::size_t kChunk = 1024;
  const std::size_t chunks = (matrix.rows() + kChunk - 1) / kChunk;
  parallel_for(chunks, workers, [&](std::size_t chunk) {
    const std::size_t end = std::min(matrix.rows(), (chunk + 1) * kChunk);
    for (std::size_t r = chunk * kChunk; r < end; ++r) {
      std::uint64_t* row = out.words.data() + r * out.words_per_row;
      for (std::size_t c = 0; c < cols.size(); ++c) {
        const auto& b = scheme.blocks()[c];
        const auto value = matrix.raw(r, cols[c]);
        const auto slot = value == SurveyMatrix::kBlank ? std::nullopt : b.slot(value);
        if (!slot) {
          throw Error(value == SurveyMatrix::kBlank ? ErrorCode::kMissingColumn : ErrorCode::kInvalidCode,
                      "QRID " + std::to_string(matrix.qrids()[r]) + ", column " + b.column +
                          (value == SurveyMatrix::kBlank ? ": blank" : ": code " + std::to_string(value)));
        }
        const std::size_t bit = b.offset + *slot;
        row[bit / 64] |= std::uint64_t{1} << (bit % 64);
      }
    }
  });
  return out;
}

}  // namespace llmprof
