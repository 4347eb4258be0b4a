#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "llmprof/survey.hpp"

namespace llmprof {

/// Default interviewer-directive patterns (ECMAScript regex). Matches are
/// removed and the remaining whitespace collapsed.
const std::vector<std::string>& default_directive_patterns();

std::string strip_interviewer_instructions(std::string_view text);
std::string strip_interviewer_instructions(std::string_view text,
                                           const std::vector<std::string>& patterns);

enum class SteeringStyle { kQa, kBio, kPortray };

inline constexpr std::array<SteeringStyle, 3> kSteeringStyles = {
    SteeringStyle::kQa, SteeringStyle::kBio, SteeringStyle::kPortray};

std::string_view to_string(SteeringStyle style) noexcept;

struct SteeringSpec {
  SteeringStyle style = SteeringStyle::kQa;
  std::string group_variable;
  int group_value = 0;
  std::string rendered_prefix;
};

/// Plain-text templates with {group_label}, {group_question} and
/// {group_answer} placeholders. Each rendered prefix is prepended verbatim.
struct SteeringTemplates {
  std::string qa;
  std::string bio;
  std::string portray;

  static SteeringTemplates defaults();
  /// Loads qa.txt, bio.txt and portray.txt from a directory.
  static SteeringTemplates load(const std::filesystem::path& dir);

  const std::string& get(SteeringStyle style) const noexcept;
  /// SHA-256 over the three templates; recorded in run manifests.
  std::string hash() const;
};

std::array<SteeringSpec, 3> build_steering_prompts(std::string_view group_variable, int group_value,
                                                   const Codebook& codebook,
                                                   const SteeringTemplates& templates =
                                                       SteeringTemplates::defaults());

struct PromptTemplate {
  std::string option_separator = ". ";
  std::string answer_cue = "Answer: ";
  /// Replaces the default directive patterns when set.
  std::optional<std::vector<std::string>> directive_patterns;
};

struct PromptInstance {
  std::string question_id;
  int variant_index = 0;
  std::optional<SteeringSpec> steering;
  std::string text;
  /// (presentation token, option code), codebook order.
  std::vector<std::pair<std::string, int>> option_labels;
};

inline constexpr std::size_t kMaxPresentationTokens = 26;

std::string presentation_token(std::size_t index);

/// Renders `prefix + stem + one option per line + answer cue`. `wording`
/// replaces the codebook question text (paraphrase variants); options are
/// always taken from the codebook.
PromptInstance render_prompt(const QuestionSpec& question, const SteeringSpec* steering,
                             const PromptTemplate& tmpl = {}, int variant_index = 0,
                             std::optional<std::string_view> wording = std::nullopt);

struct ParaphraseResult {
  std::vector<std::string> variants;
  bool degraded = false;
};

/// Question-stem paraphrase source. Implementations return at most `n`
/// variants that differ case-insensitively from the source and each other.
class Paraphraser {
 public:
  virtual ~Paraphraser() = default;
  virtual ParaphraseResult paraphrase(std::string_view question_text, int n,
                                      std::string_view question_id = {}) = 0;
  /// Stable description recorded in the run manifest.
  virtual std::string describe() const = 0;
};

/// Case-insensitive dedup that also drops any variant equal to `source`.
std::vector<std::string> dedup_variants(std::string_view source, std::vector<std::string> variants,
                                        std::size_t limit);

class IdentityParaphraser final : public Paraphraser {
 public:
  ParaphraseResult paraphrase(std::string_view, int, std::string_view) override {
    return {{}, true};
  }
  std::string describe() const override { return "identity"; }
};

/// JSON object mapping a question id or the exact source text to an array of
/// variant strings (the sidecar's --record output is accepted as-is).
class StaticParaphraser final : public Paraphraser {
 public:
  explicit StaticParaphraser(std::map<std::string, std::vector<std::string>> table,
                             std::string origin = "inline");
  static StaticParaphraser load(const std::filesystem::path& path);

  ParaphraseResult paraphrase(std::string_view question_text, int n,
                              std::string_view question_id) override;
  std::string describe() const override;

 private:
  std::map<std::string, std::vector<std::string>> table_;
  std::string origin_;
  std::string digest_;
};

struct HttpParaphraseConfig {
  std::string url;  // e.g. http://127.0.0.1:8090
  std::string path = "/paraphrase";
  std::chrono::milliseconds timeout{10'000};
  int retries = 2;
  bool required = false;
};

/// Client for the paraphrase contract: POST {text, n} -> {variants: [...]}.
/// When the service cannot be reached and `required` is false, falls back to
/// the identity behaviour and reports degraded mode.
class HttpParaphraser final : public Paraphraser {
 public:
  explicit HttpParaphraser(HttpParaphraseConfig config);

  ParaphraseResult paraphrase(std::string_view question_text, int n,
                              std::string_view question_id) override;
  std::string describe() const override { return "http:" + config_.url + config_.path; }

 private:
  HttpParaphraseConfig config_;
};

/// Persists each (backend, text, n) result under `dir` so every run that
/// shares the cache (e.g. unsteered and steered runs) sees the same wordings.
/// Degraded results are not persisted.
class CachingParaphraser final : public Paraphraser {
 public:
  CachingParaphraser(std::shared_ptr<Paraphraser> inner, std::filesystem::path dir);

  ParaphraseResult paraphrase(std::string_view question_text, int n,
                              std::string_view question_id) override;
  std::string describe() const override { return inner_->describe(); }

 private:
  std::shared_ptr<Paraphraser> inner_;
  std::filesystem::path dir_;
};

}  // namespace llmprof
