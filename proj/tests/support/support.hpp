#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "llmprof/error.hpp"
#include "llmprof/model_client.hpp"
#include "llmprof/survey.hpp"

namespace testsupport {

namespace fs = std::filesystem;

inline fs::path data_dir() { return LLMPROF_TEST_DATA; }

class TempDir {
 public:
  explicit TempDir(std::string_view tag = "t") {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            ("llmprof-" + std::string(tag) + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const noexcept { return path_; }
  fs::path operator/(std::string_view p) const { return path_ / p; }

 private:
  fs::path path_;
};

struct Rng {
  std::mt19937_64 engine;
  explicit Rng(std::uint64_t seed) : engine(seed) {}

  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine); }
  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine); }
  bool chance(double p) { return std::bernoulli_distribution(p)(engine); }
  double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine); }
};

inline llmprof::QuestionSpec categorical(std::string id, std::string text, int n_options,
                                         int first_code = 1) {
  llmprof::QuestionSpec q;
  q.id = std::move(id);
  q.text = std::move(text);
  for (int i = 0; i < n_options; ++i) {
    q.options.push_back({first_code + i, "Option " + std::to_string(first_code + i)});
  }
  return q;
}

inline llmprof::QuestionSpec qrid_column() {
  llmprof::QuestionSpec q;
  q.id = "QRID";
  q.text = "Respondent id";
  q.free_form = true;
  return q;
}

/// Prompt text after the last blank line: the question body with any
/// steering prefix removed.
inline std::string prompt_body(const std::string& prompt) {
  const auto pos = prompt.rfind("\n\n");
  return pos == std::string::npos ? prompt : prompt.substr(pos + 2);
}

/// The question stem of a rendered body: its first line.
inline std::string prompt_stem(const std::string& prompt) {
  const auto body = prompt_body(prompt);
  return body.substr(0, body.find('\n'));
}

/// Number of "X. label" option lines in the body.
inline int prompt_option_count(const std::string& prompt) {
  const auto body = prompt_body(prompt);
  int n = 0;
  std::size_t pos = body.find('\n');
  while (pos != std::string::npos && pos + 3 < body.size()) {
    if (body[pos + 1] >= 'A' && body[pos + 1] <= 'Z' && body[pos + 2] == '.') ++n;
    pos = body.find('\n', pos + 1);
  }
  return n;
}

inline std::string letter(int index) { return std::string(1, static_cast<char>('A' + index)); }

/// Legacy completions response with one generated position.
inline nlohmann::json completion_response(const std::vector<std::pair<std::string, double>>& top) {
  nlohmann::json tops = nlohmann::json::object();
  for (const auto& [tok, lp] : top) tops[tok] = lp;
  const std::string text = top.empty() ? std::string() : top.front().first;
  return {{"object", "text_completion"},
          {"choices", nlohmann::json::array({{{"index", 0},
                                              {"text", text},
                                              {"logprobs", {{"tokens", {text}},
                                                            {"token_logprobs", {top.empty() ? 0.0 : top.front().second}},
                                                            {"top_logprobs", nlohmann::json::array({tops})}}},
                                              {"finish_reason", "length"}}})}};
}

/// In-process completion backend driven by a function of (prompt, seed).
class ScriptedBackend final : public llmprof::CompletionBackend {
 public:
  using Script = std::function<std::vector<std::pair<std::string, double>>(const std::string&, int)>;

  explicit ScriptedBackend(Script script) : script_(std::move(script)) {}

  nlohmann::json complete(const nlohmann::json& request) override {
    const auto n = calls_.fetch_add(1) + 1;
    if (n > fail_after_.load()) {
      throw llmprof::Error(llmprof::ErrorCode::kEndpointError, "scripted outage");
    }
    {
      std::lock_guard lock(mu_);
      prompts_.push_back(request.at("prompt").get<std::string>());
    }
    return completion_response(script_(request.at("prompt").get<std::string>(), request.value("seed", 0)));
  }

  std::size_t calls() const noexcept { return calls_.load(); }
  void fail_after(std::size_t n) { fail_after_ = n; }
  void heal() { fail_after_ = std::numeric_limits<std::size_t>::max(); }
  std::vector<std::string> prompts() const {
    std::lock_guard lock(mu_);
    return prompts_;
  }

 private:
  Script script_;
  std::atomic<std::size_t> calls_{0};
  std::atomic<std::size_t> fail_after_{std::numeric_limits<std::size_t>::max()};
  mutable std::mutex mu_;
  std::vector<std::string> prompts_;
};

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

/// Pseudo-random but deterministic option logprobs from the body and seed
/// only, so any steering prefix is ignored.
inline ScriptedBackend::Script prefix_invariant_script() {
  return [](const std::string& prompt, int seed) {
    const std::string body = prompt_body(prompt);
    const int n = prompt_option_count(prompt);
    std::vector<std::pair<std::string, double>> top;
    for (int i = 0; i < n; ++i) {
      const auto h = fnv1a(body + "#" + std::to_string(seed) + "#" + std::to_string(i));
      top.emplace_back(" " + letter(i), -static_cast<double>(h % 1000) / 100.0);
    }
    return top;
  };
}

/// Always picks option index `answers[stem]`; unknown stems pick "A".
inline ScriptedBackend::Script answer_key_script(std::map<std::string, int> answers) {
  return [answers = std::move(answers)](const std::string& prompt, int) {
    const int n = prompt_option_count(prompt);
    const auto it = answers.find(prompt_stem(prompt));
    const int pick = it == answers.end() ? 0 : it->second;
    std::vector<std::pair<std::string, double>> top;
    for (int i = 0; i < n; ++i) top.emplace_back(letter(i), i == pick ? -0.1 : -3.0 - i);
    return top;
  };
}

}  // namespace testsupport
