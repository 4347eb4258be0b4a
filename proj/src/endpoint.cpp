#include <httplib.h>

#include "llmprof/error.hpp"
#include "llmprof/model_client.hpp"

namespace llmprof {

namespace {

// "http://host:8000/v1" -> {"http://host:8000", "/v1"}
std::pair<std::string, std::string> split_base_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  const auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  const auto path_start = url.find('/', host_start);
  if (path_start == std::string::npos) return {url, ""};
  std::string path = url.substr(path_start);
  while (!path.empty() && path.back() == '/') path.pop_back();
  return {url.substr(0, path_start), path};
}

std::string_view strip_space_marker(std::string_view token) {
  if (token.starts_with(' ')) return token.substr(1);
  if (token.starts_with("\xE2\x96\x81")) return token.substr(3);  // U+2581 (sentencepiece)
  if (token.starts_with("\xC4\xA0")) return token.substr(2);      // U+0120 (byte-level BPE)
  return token;
}

}  // namespace

std::optional<int> argmax_option(std::span<const OptionScore> scores) {
  const OptionScore* best = nullptr;
  for (const auto& s : scores) {
    if (s.absent()) continue;
    if (!best || s.logprob > best->logprob ||
        (s.logprob == best->logprob && s.option_code < best->option_code)) {
      best = &s;
    }
  }
  if (!best) return std::nullopt;
  return best->option_code;
}

HttpCompletionBackend::HttpCompletionBackend(EndpointConfig config) : config_(std::move(config)) {}

nlohmann::json HttpCompletionBackend::complete(const nlohmann::json& request) {
  const auto [host, prefix] = split_base_url(config_.base_url);
  httplib::Client client(host);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  if (!config_.api_key.empty()) client.set_bearer_token_auth(config_.api_key);

  auto res = client.Post(prefix + "/completions", request.dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::kEndpointError, config_.base_url + ": " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::kEndpointError,
                config_.base_url + ": HTTP " + std::to_string(res->status) + " " + res->body.substr(0, 200));
  }
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kEndpointError, std::string("unparseable response: ") + e.what());
  }
}

std::vector<std::pair<std::string, double>> extract_top_logprobs(const nlohmann::json& response) {
  std::vector<std::pair<std::string, double>> out;
  const auto choices = response.find("choices");
  if (choices == response.end() || !choices->is_array() || choices->empty()) {
    throw Error(ErrorCode::kEndpointError, "response has no choices");
  }
  const auto& logprobs = (*choices)[0].value("logprobs", nlohmann::json());
  if (!logprobs.is_object()) throw Error(ErrorCode::kEndpointError, "response has no logprobs");

  auto read_value = [](const nlohmann::json& v) {
    return v.is_null() ? kAbsentLogprob : v.get<double>();
  };
  try {
    if (const auto top = logprobs.find("top_logprobs");
        top != logprobs.end() && top->is_array() && !top->empty()) {
      const auto& first = (*top)[0];
      if (first.is_object()) {
        for (const auto& [token, lp] : first.items()) out.emplace_back(token, read_value(lp));
        return out;
      }
    }
    if (const auto content = logprobs.find("content");
        content != logprobs.end() && content->is_array() && !content->empty()) {
      for (const auto& entry : (*content)[0].at("top_logprobs")) {
        out.emplace_back(entry.at("token").get<std::string>(), read_value(entry.at("logprob")));
      }
      return out;
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kEndpointError, std::string("malformed logprobs: ") + e.what());
  }
  throw Error(ErrorCode::kEndpointError, "response carries no first-position top logprobs");
}

std::vector<OptionScore> match_option_scores(const PromptInstance& prompt,
                                             const std::vector<std::pair<std::string, double>>& top) {
  std::vector<OptionScore> scores;
  scores.reserve(prompt.option_labels.size());
  for (const auto& [token, code] : prompt.option_labels) {
    OptionScore s{code, token, kAbsentLogprob};
    for (const auto& [returned, lp] : top) {
      if ((returned == token || strip_space_marker(returned) == token) && lp > s.logprob) {
        s.logprob = lp;
      }
    }
    scores.push_back(std::move(s));
  }
  return scores;
}

nlohmann::json completion_request(const EndpointConfig& endpoint, std::string_view prompt, int seed) {
  nlohmann::json req = {{"model", endpoint.model},
                        {"prompt", prompt},
                        {"max_tokens", 1},
                        {"logprobs", endpoint.top_k},
                        {"temperature", 0}};
  if (endpoint.forward_seed) req["seed"] = seed;
  return req;
}

}  // namespace llmprof
