#include <httplib.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <thread>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "llmprof/error.hpp"
#include "llmprof/io.hpp"
#include "llmprof/prompt.hpp"

namespace llmprof {

namespace {

std::string fold_case(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  // Whitespace differences alone do not make a new wording.
  out.erase(0, out.find_first_not_of(" \t\r\n"));
  out.erase(out.find_last_not_of(" \t\r\n") + 1);
  return out;
}

}  // namespace

std::vector<std::string> dedup_variants(std::string_view source, std::vector<std::string> variants,
                                        std::size_t limit) {
  std::unordered_set<std::string> seen{fold_case(source)};
  std::vector<std::string> out;
  for (auto& v : variants) {
    if (out.size() >= limit) break;
    if (fold_case(v).empty()) continue;
    if (!seen.insert(fold_case(v)).second) continue;
    out.push_back(std::move(v));
  }
  return out;
}

StaticParaphraser::StaticParaphraser(std::map<std::string, std::vector<std::string>> table,
                                     std::string origin)
    : table_(std::move(table)), origin_(std::move(origin)) {
  digest_ = sha256_hex(nlohmann::json(table_).dump()).substr(0, 16);
}

StaticParaphraser StaticParaphraser::load(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(strip_bom(read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedDocument, path.string() + ": " + e.what());
  }
  if (!doc.is_object()) {
    throw Error(ErrorCode::kMalformedDocument, path.string() + ": expected an object");
  }
  std::map<std::string, std::vector<std::string>> table;
  for (const auto& [key, value] : doc.items()) {
    try {
      table[key] = value.get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception&) {
      throw Error(ErrorCode::kMalformedDocument,
                  path.string() + ": entry '" + key + "' is not an array of strings");
    }
  }
  return StaticParaphraser(std::move(table), path.filename().string());
}

ParaphraseResult StaticParaphraser::paraphrase(std::string_view question_text, int n,
                                               std::string_view question_id) {
  if (n <= 0) return {};
  auto it = question_id.empty() ? table_.end() : table_.find(std::string(question_id));
  if (it == table_.end()) it = table_.find(std::string(question_text));
  if (it == table_.end()) return {};
  return {dedup_variants(question_text, it->second, static_cast<std::size_t>(n)), false};
}

std::string StaticParaphraser::describe() const { return "static:" + origin_ + "@" + digest_; }

HttpParaphraser::HttpParaphraser(HttpParaphraseConfig config) : config_(std::move(config)) {}

ParaphraseResult HttpParaphraser::paraphrase(std::string_view question_text, int n,
                                             std::string_view) {
  if (n <= 0) return {};
  httplib::Client client(config_.url);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  const std::string body = nlohmann::json{{"text", question_text}, {"n", n}}.dump();

  std::string last_error;
  for (int attempt = 0; attempt <= config_.retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(100 << (attempt - 1)));
    auto res = client.Post(config_.path, body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "HTTP " + std::to_string(res->status);
      if (res->status < 500) break;
      continue;
    }
    try {
      const auto doc = nlohmann::json::parse(res->body);
      auto variants = doc.at("variants").get<std::vector<std::string>>();
      return {dedup_variants(question_text, std::move(variants), static_cast<std::size_t>(n)), false};
    } catch (const nlohmann::json::exception& e) {
      last_error = std::string("bad response body: ") + e.what();
      break;
    }
  }
  if (config_.required) {
    throw Error(ErrorCode::kParaphraseBackendUnavailable, describe() + ": " + last_error);
  }
  spdlog::warn("paraphrase backend {} unavailable ({}); using original wording only", describe(),
               last_error);
  return {{}, true};
}

CachingParaphraser::CachingParaphraser(std::shared_ptr<Paraphraser> inner,
                                       std::filesystem::path dir)
    : inner_(std::move(inner)), dir_(std::move(dir)) {}

ParaphraseResult CachingParaphraser::paraphrase(std::string_view question_text, int n,
                                                std::string_view question_id) {
  if (n <= 0) return {};
  const nlohmann::json material = {
      {"backend", inner_->describe()}, {"id", question_id}, {"text", question_text}, {"n", n}};
  const auto path = dir_ / (sha256_hex(material.dump()) + ".json");
  if (std::filesystem::exists(path)) {
    try {
      const auto doc = nlohmann::json::parse(read_file(path));
      return {doc.at("variants").get<std::vector<std::string>>(), false};
    } catch (const nlohmann::json::exception&) {
    }
  }
  auto result = inner_->paraphrase(question_text, n, question_id);
  if (!result.degraded) {
    write_file_atomic(path, nlohmann::json{{"source", question_text}, {"variants", result.variants}}.dump(2));
  }
  return result;
}

}  // namespace llmprof
