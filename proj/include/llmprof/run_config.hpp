#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "llmprof/model_client.hpp"
#include "llmprof/prompt.hpp"
#include "llmprof/steering.hpp"
#include "llmprof/survey.hpp"

namespace llmprof {

struct TerritoryFilter {
  std::string column;
  int value = 0;
  std::string label;
};

struct ParaphraseSettings {
  std::string backend = "identity";  // identity | static | http
  std::filesystem::path path;        // static
  std::string url;                   // http
  int count = 2;
  bool required = false;
  int timeout_ms = 10'000;
  int retries = 2;
};

/// One experiment, as read from a run-config JSON file. Relative paths are
/// resolved against the config file's directory.
struct RunSettings {
  std::string name;
  std::filesystem::path codebook;
  std::filesystem::path responses;
  std::filesystem::path partition_path;  // empty when inline
  PartitionConfig partition;
  std::optional<TerritoryFilter> territory;

  EndpointConfig endpoint;
  std::string api_key_env = "OPENAI_API_KEY";
  std::vector<int> seeds = {0, 1, 2, 3, 4};
  ParaphraseSettings paraphrase;
  std::filesystem::path templates_dir;  // empty = built-in templates
  std::size_t k = 1000;
  std::string group_variable;
  std::vector<int> steer_values;
  std::size_t min_group_size = 30;

  // Runtime knobs; never part of the manifest.
  std::filesystem::path runs_dir = "runs";
  std::filesystem::path cache_dir = "cache";
  int workers = 4;

  static RunSettings from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
  static RunSettings load(const std::filesystem::path& path);

  /// Config closure: everything needed to re-run the experiment (absolute
  /// paths, input digests, model and prompt settings), without runtime knobs
  /// or credentials. Loading a manifest with from_json reproduces the run.
  nlohmann::json manifest() const;

  RunConfig run_config() const;
  SteeringTemplates templates() const;
};

/// Hex prefix of SHA-256 over the manifest's serialization.
std::string run_id_for(const nlohmann::json& manifest);

}  // namespace llmprof
