#include "llmprof/error.hpp"
#include "llmprof/io.hpp"
#include "llmprof/model_client.hpp"

namespace llmprof {

ScoreCache::ScoreCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::string ScoreCache::key(std::string_view model_id, std::string_view prompt_text, int seed,
                            int top_k) {
  const nlohmann::json material = {
      {"model", model_id}, {"prompt", prompt_text}, {"seed", seed}, {"top_k", top_k}};
  return sha256_hex(material.dump());
}

std::filesystem::path ScoreCache::path_for(const std::string& key) const {
  return dir_ / key.substr(0, 2) / (key + ".json");
}

std::optional<nlohmann::json> ScoreCache::get(const std::string& key) const {
  const auto path = path_for(key);
  if (!std::filesystem::exists(path)) return std::nullopt;
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception&) {
    // A torn or hand-edited entry is treated as a miss and rewritten.
    return std::nullopt;
  }
}

void ScoreCache::put(const std::string& key, const nlohmann::json& entry) const {
  write_file_atomic(path_for(key), entry.dump(2) + "\n");
}

}  // namespace llmprof
