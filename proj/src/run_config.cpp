#include <cstdlib>

#include "llmprof/error.hpp"
#include "llmprof/io.hpp"
#include "llmprof/run_config.hpp"

namespace llmprof {

namespace {

namespace fs = std::filesystem;

fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  fs::path path(p);
  if (path.is_relative()) path = base / path;
  return fs::weakly_canonical(path);
}

std::string digest_of(const fs::path& p) {
  return fs::exists(p) ? sha256_hex(read_file(p)) : std::string("missing");
}

}  // namespace

RunSettings RunSettings::from_json(const nlohmann::json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw Error(ErrorCode::kInvalidConfig, "run config must be a JSON object");
  RunSettings s;
  try {
    s.name = doc.value("name", std::string{});
    const auto& survey = doc.at("survey");
    s.codebook = resolve(base_dir, survey.at("codebook").get<std::string>());
    s.responses = resolve(base_dir, survey.at("responses").get<std::string>());
    if (survey.contains("partition")) {
      const auto& part = survey["partition"];
      if (part.is_string()) {
        s.partition_path = resolve(base_dir, part.get<std::string>());
        try {
          s.partition = PartitionConfig::from_json(nlohmann::json::parse(strip_bom(read_file(s.partition_path))));
        } catch (const nlohmann::json::parse_error& e) {
          throw Error(ErrorCode::kInvalidConfig, s.partition_path.string() + ": " + e.what());
        }
      } else {
        s.partition = PartitionConfig::from_json(part);
      }
    }
    if (survey.contains("territory") && !survey["territory"].is_null()) {
      const auto& t = survey["territory"];
      s.territory = TerritoryFilter{t.at("column").get<std::string>(), t.at("value").get<int>(),
                                    t.value("label", std::string{})};
    }

    const auto& model = doc.at("model");
    s.endpoint.model = model.at("id").get<std::string>();
    s.endpoint.base_url = model.value("base_url", s.endpoint.base_url);
    s.endpoint.top_k = model.value("top_k", 100);
    s.endpoint.forward_seed = model.value("forward_seed", true);
    s.endpoint.timeout = std::chrono::milliseconds(model.value("timeout_ms", 60'000));
    s.endpoint.max_retries = model.value("max_retries", 3);
    s.endpoint.initial_backoff = std::chrono::milliseconds(model.value("initial_backoff_ms", 500));
    s.api_key_env = model.value("api_key_env", std::string("OPENAI_API_KEY"));
    if (const char* key = std::getenv(s.api_key_env.c_str())) s.endpoint.api_key = key;

    s.seeds = doc.value("seeds", s.seeds);
    if (doc.contains("paraphrase")) {
      const auto& p = doc["paraphrase"];
      s.paraphrase.backend = p.value("backend", std::string("identity"));
      s.paraphrase.path = resolve(base_dir, p.value("path", std::string{}));
      s.paraphrase.url = p.value("url", std::string{});
      s.paraphrase.count = p.value("count", 2);
      s.paraphrase.required = p.value("required", false);
      s.paraphrase.timeout_ms = p.value("timeout_ms", 10'000);
      s.paraphrase.retries = p.value("retries", 2);
    }
    if (doc.contains("templates_dir")) {
      s.templates_dir = resolve(base_dir, doc["templates_dir"].get<std::string>());
    }
    if (doc.contains("profile")) s.k = doc["profile"].value("k", s.k);
    if (doc.contains("steering")) {
      const auto& st = doc["steering"];
      s.group_variable = st.value("group_variable", std::string{});
      s.steer_values = st.value("values", std::vector<int>{});
      s.min_group_size = st.value("min_group_size", s.min_group_size);
    }
    s.runs_dir = resolve(base_dir, doc.value("runs_dir", std::string("runs")));
    s.cache_dir = resolve(base_dir, doc.value("cache_dir", std::string("cache")));
    s.workers = doc.value("workers", 4);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, e.what());
  }
  if (s.seeds.empty()) throw Error(ErrorCode::kInvalidConfig, "seed list is empty");
  if (s.paraphrase.backend != "identity" && s.paraphrase.backend != "static" &&
      s.paraphrase.backend != "http") {
    throw Error(ErrorCode::kInvalidConfig, "unknown paraphrase backend " + s.paraphrase.backend);
  }
  return s;
}

RunSettings RunSettings::load(const fs::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(strip_bom(read_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kInvalidConfig, path.string() + ": " + e.what());
  }
  return from_json(doc, fs::absolute(path).parent_path());
}

nlohmann::json RunSettings::manifest() const {
  nlohmann::json survey = {{"codebook", codebook.string()},
                           {"responses", responses.string()},
                           {"partition", partition.to_json()}};
  if (territory) {
    survey["territory"] = {{"column", territory->column}, {"value", territory->value}, {"label", territory->label}};
  }
  nlohmann::json paraphrase_doc = {{"backend", paraphrase.backend},
                                   {"count", paraphrase.count},
                                   {"required", paraphrase.required}};
  if (paraphrase.backend == "static") paraphrase_doc["path"] = paraphrase.path.string();
  if (paraphrase.backend == "http") paraphrase_doc["url"] = paraphrase.url;

  nlohmann::json inputs = {{"codebook_sha256", digest_of(codebook)},
                           {"responses_sha256", digest_of(responses)},
                           {"templates_sha256", templates().hash()}};
  if (paraphrase.backend == "static") inputs["paraphrase_sha256"] = digest_of(paraphrase.path);

  nlohmann::json doc = {
      {"name", name},
      {"survey", survey},
      {"model",
       {{"id", endpoint.model},
        {"base_url", endpoint.base_url},
        {"api_key_env", api_key_env},
        {"top_k", endpoint.top_k},
        {"forward_seed", endpoint.forward_seed},
        {"timeout_ms", endpoint.timeout.count()},
        {"max_retries", endpoint.max_retries}}},
      {"seeds", seeds},
      {"paraphrase", paraphrase_doc},
      {"profile", {{"k", k}}},
      {"steering",
       {{"group_variable", group_variable}, {"values", steer_values}, {"min_group_size", min_group_size}}},
      {"inputs", inputs},
  };
  if (!templates_dir.empty()) doc["templates_dir"] = templates_dir.string();
  return doc;
}

RunConfig RunSettings::run_config() const {
  RunConfig rc;
  rc.seeds = seeds;
  rc.paraphrase_count = paraphrase.count;
  rc.max_in_flight = workers;
  return rc;
}

SteeringTemplates RunSettings::templates() const {
  return templates_dir.empty() ? SteeringTemplates::defaults() : SteeringTemplates::load(templates_dir);
}

std::string run_id_for(const nlohmann::json& manifest) {
  return sha256_hex(manifest.dump()).substr(0, 16);
}

}  // namespace llmprof
