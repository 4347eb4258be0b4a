#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "llmprof/prompt.hpp"
#include "llmprof/survey.hpp"

namespace llmprof {

inline constexpr double kAbsentLogprob = -std::numeric_limits<double>::infinity();

struct OptionScore {
  int option_code = 0;
  std::string presentation_token;
  /// kAbsentLogprob when the token was not among the returned top tokens.
  double logprob = kAbsentLogprob;

  bool absent() const noexcept { return logprob == kAbsentLogprob; }
};

/// Highest logprob wins; equal logprobs resolve to the lowest option code.
/// Returns nullopt when every option is absent.
std::optional<int> argmax_option(std::span<const OptionScore> scores);

struct EndpointConfig {
  std::string base_url = "http://127.0.0.1:8000/v1";
  std::string model;
  std::string api_key;  // never serialized
  int top_k = 100;
  bool forward_seed = true;
  std::chrono::milliseconds timeout{60'000};
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
};

/// Transport for one completion request. Implementations throw
/// Error(kEndpointError) on failure; ModelClient owns retries.
class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  virtual nlohmann::json complete(const nlohmann::json& request) = 0;
};

/// OpenAI-compatible POST {base_url}/completions.
class HttpCompletionBackend final : public CompletionBackend {
 public:
  explicit HttpCompletionBackend(EndpointConfig config);
  nlohmann::json complete(const nlohmann::json& request) override;

 private:
  EndpointConfig config_;
};

/// First-position top tokens from either the legacy completions shape
/// (`logprobs.top_logprobs[0]` as an object) or the list shape
/// (`logprobs.content[0].top_logprobs` as [{token, logprob}]).
std::vector<std::pair<std::string, double>> extract_top_logprobs(const nlohmann::json& response);

/// Case-sensitive match of each presentation token, tolerating one leading
/// space (or sentencepiece/BPE space marker) on the returned token.
std::vector<OptionScore> match_option_scores(const PromptInstance& prompt,
                                             const std::vector<std::pair<std::string, double>>& top);

nlohmann::json completion_request(const EndpointConfig& endpoint, std::string_view prompt, int seed);

/// Content-addressed store of raw transcripts, one JSON file per key.
/// Insertion is atomic (temp file + rename); concurrent readers are safe.
class ScoreCache {
 public:
  explicit ScoreCache(std::filesystem::path dir);

  static std::string key(std::string_view model_id, std::string_view prompt_text, int seed, int top_k);

  std::optional<nlohmann::json> get(const std::string& key) const;
  void put(const std::string& key, const nlohmann::json& entry) const;
  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::filesystem::path path_for(const std::string& key) const;
  std::filesystem::path dir_;
};

class ModelClient {
 public:
  ModelClient(EndpointConfig endpoint, std::shared_ptr<CompletionBackend> backend,
              std::optional<std::filesystem::path> cache_dir = std::nullopt);

  /// One OptionScore per option in prompt order. Cached transcripts are
  /// replayed; misses go to the endpoint with exponential-backoff retries.
  /// Throws kAllOptionsAbsent when no option token appears.
  std::vector<OptionScore> score_options(const PromptInstance& prompt, int seed);

  /// Raw endpoint call, bypassing the cache.
  nlohmann::json call_endpoint(std::string_view prompt_text, int seed);

  const EndpointConfig& endpoint() const noexcept { return endpoint_; }
  std::size_t endpoint_calls() const noexcept { return endpoint_calls_.load(); }
  const ScoreCache* cache() const noexcept { return cache_ ? &*cache_ : nullptr; }

 private:
  EndpointConfig endpoint_;
  std::shared_ptr<CompletionBackend> backend_;
  std::optional<ScoreCache> cache_;
  std::atomic<std::size_t> endpoint_calls_{0};
};

struct CandidateAnswer {
  std::string question_id;
  int variant_index = 0;
  int seed = 0;
  std::optional<SteeringStyle> steering_style;
  /// nullopt when every option token was absent (unanswerable).
  std::optional<int> chosen_code;
  std::vector<OptionScore> scores;
};

struct ModeResult {
  int code = 0;
  int count = 0;
  bool tie = false;
  std::vector<int> tied_codes;  // ascending, includes `code`
};

/// Mode of a non-empty multiset; lowest code wins ties.
ModeResult compute_mode(std::span<const int> codes);

struct AnswerRecord {
  std::string question_id;
  std::vector<CandidateAnswer> candidates;
  bool answerable = false;
  int modal_code = 0;
  int modal_count = 0;
  bool tie = false;
};

struct RunConfig {
  std::vector<int> seeds = {0, 1, 2, 3, 4};
  int paraphrase_count = 2;
  int max_in_flight = 4;
  PromptTemplate prompt_template;
};

AnswerRecord answer_question(const QuestionSpec& question, std::span<const SteeringSpec> steering,
                             const RunConfig& config, ModelClient& client, Paraphraser& paraphraser);

struct ModelResponse {
  std::string model_id;
  /// Question ids in codebook order.
  std::vector<std::pair<std::string, int>> answers;
  /// Questions where every candidate was unanswerable.
  std::vector<std::string> excluded;
  std::vector<std::string> tied;
  nlohmann::json run_manifest;

  std::map<std::string, int> answer_map() const;
  nlohmann::json to_json() const;
  static ModelResponse from_json(const nlohmann::json& doc);
};

/// Answers every id in `question_ids` (the retained survey questions).
/// `steering` is empty for an unsteered run or the three specs of one target
/// group. Scoring runs with at most `config.max_in_flight` concurrent requests.
ModelResponse build_model_response(const Codebook& codebook,
                                   const std::vector<std::string>& question_ids,
                                   std::span<const SteeringSpec> steering, const RunConfig& config,
                                   ModelClient& client, Paraphraser& paraphraser,
                                   std::vector<AnswerRecord>* records = nullptr);

struct ProbeReport {
  bool repeat_identical = false;  // same prompt, same seed, twice
  bool seed_changes_output = false;  // seed 0 vs seed 1
  double max_abs_diff = 0.0;
  nlohmann::json to_json() const;
};

/// Sends one synthetic question directly to the endpoint (no cache) to surface
/// nondeterminism and whether seeds have any effect.
ProbeReport probe_endpoint(ModelClient& client);

}  // namespace llmprof
