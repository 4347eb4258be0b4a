#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <thread>

#include "llmprof/error.hpp"
#include "llmprof/io.hpp"
#include "llmprof/model_client.hpp"
#include "llmprof/parallel.hpp"

namespace llmprof {

namespace {

nlohmann::json scores_to_json(const std::vector<OptionScore>& scores) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& s : scores) {
    out.push_back({{"code", s.option_code},
                   {"token", s.presentation_token},
                   {"logprob", s.absent() ? nlohmann::json() : nlohmann::json(s.logprob)}});
  }
  return out;
}

struct Wording {
  int variant_index = 0;
  std::optional<std::string> text;  // nullopt = codebook wording
};

std::vector<Wording> wordings_for(const QuestionSpec& q, const RunConfig& config,
                                  Paraphraser& paraphraser, bool& degraded) {
  std::vector<Wording> out{{0, std::nullopt}};
  if (config.paraphrase_count <= 0) return out;
  const std::string stem = strip_interviewer_instructions(q.text);
  const auto result = paraphraser.paraphrase(stem, config.paraphrase_count, q.id);
  degraded = degraded || result.degraded;
  int index = 1;
  for (const auto& v : result.variants) out.push_back({index++, v});
  return out;
}

struct Task {
  std::size_t question = 0;
  PromptInstance prompt;
  int seed = 0;
};

// Candidates per question enumerate (variant, seed, style) in that nesting,
// which is the aggregation order.
std::vector<Task> expand_tasks(std::size_t question_index, const QuestionSpec& q,
                               std::span<const SteeringSpec> steering, const RunConfig& config,
                               Paraphraser& paraphraser, bool& degraded) {
  std::vector<Task> tasks;
  for (const auto& w : wordings_for(q, config, paraphraser, degraded)) {
    for (int seed : config.seeds) {
      if (steering.empty()) {
        tasks.push_back({question_index,
                         render_prompt(q, nullptr, config.prompt_template, w.variant_index, w.text),
                         seed});
        continue;
      }
      for (const auto& spec : steering) {
        tasks.push_back({question_index,
                         render_prompt(q, &spec, config.prompt_template, w.variant_index, w.text),
                         seed});
      }
    }
  }
  return tasks;
}

void fold_record(AnswerRecord& record) {
  std::vector<int> codes;
  for (const auto& c : record.candidates) {
    if (c.chosen_code) codes.push_back(*c.chosen_code);
  }
  record.answerable = !codes.empty();
  if (!record.answerable) return;
  const auto mode = compute_mode(codes);
  record.modal_code = mode.code;
  record.modal_count = mode.count;
  record.tie = mode.tie;
}

std::vector<AnswerRecord> run_tasks(const std::vector<const QuestionSpec*>& questions,
                                    std::vector<Task> tasks, const RunConfig& config,
                                    ModelClient& client) {
  std::vector<CandidateAnswer> results(tasks.size());
  parallel_for(tasks.size(), config.max_in_flight, [&](std::size_t i) {
    const Task& t = tasks[i];
    CandidateAnswer c;
    c.question_id = t.prompt.question_id;
    c.variant_index = t.prompt.variant_index;
    c.seed = t.seed;
    if (t.prompt.steering) c.steering_style = t.prompt.steering->style;
    try {
      c.scores = client.score_options(t.prompt, t.seed);
      c.chosen_code = argmax_option(c.scores);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kAllOptionsAbsent) throw;
      c.chosen_code = std::nullopt;
    }
    results[i] = std::move(c);
  });

  std::vector<AnswerRecord> records(questions.size());
  for (std::size_t q = 0; q < questions.size(); ++q) records[q].question_id = questions[q]->id;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    records[tasks[i].question].candidates.push_back(std::move(results[i]));
  }
  for (auto& r : records) fold_record(r);
  return records;
}

nlohmann::json steering_json(std::span<const SteeringSpec> steering) {
  if (steering.empty()) return nullptr;
  nlohmann::json styles = nlohmann::json::array();
  for (const auto& s : steering) styles.push_back(to_string(s.style));
  return {{"group_variable", steering.front().group_variable},
          {"group_value", steering.front().group_value},
          {"styles", styles}};
}

}  // namespace

ModelClient::ModelClient(EndpointConfig endpoint, std::shared_ptr<CompletionBackend> backend,
                         std::optional<std::filesystem::path> cache_dir)
    : endpoint_(std::move(endpoint)), backend_(std::move(backend)) {
  if (cache_dir) cache_.emplace(*cache_dir);
}

nlohmann::json ModelClient::call_endpoint(std::string_view prompt_text, int seed) {
  const auto request = completion_request(endpoint_, prompt_text, seed);
  auto backoff = endpoint_.initial_backoff;
  for (int attempt = 0;; ++attempt) {
    try {
      ++endpoint_calls_;
      return backend_->complete(request);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kEndpointError || attempt >= endpoint_.max_retries) throw;
      spdlog::warn("endpoint attempt {} failed: {}; retrying in {} ms", attempt + 1, e.what(),
                   backoff.count());
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
}

std::vector<OptionScore> ModelClient::score_options(const PromptInstance& prompt, int seed) {
  const std::string key = ScoreCache::key(endpoint_.model, prompt.text, seed, endpoint_.top_k);
  std::optional<nlohmann::json> entry = cache_ ? cache_->get(key) : std::nullopt;
  std::vector<OptionScore> scores;
  if (entry && entry->contains("response")) {
    scores = match_option_scores(prompt, extract_top_logprobs((*entry)["response"]));
  } else {
    auto response = call_endpoint(prompt.text, seed);
    scores = match_option_scores(prompt, extract_top_logprobs(response));
    if (cache_) {
      const auto chosen = argmax_option(scores);
      nlohmann::json record = {
          {"key", key},
          {"request", completion_request(endpoint_, prompt.text, seed)},
          {"response", std::move(response)},
          {"extraction",
           {{"question_id", prompt.question_id},
            {"variant_index", prompt.variant_index},
            {"scores", scores_to_json(scores)},
            {"chosen_code", chosen ? nlohmann::json(*chosen) : nlohmann::json()}}}};
      cache_->put(key, record);
    }
  }
  if (!argmax_option(scores)) {
    throw Error(ErrorCode::kAllOptionsAbsent,
                "question " + prompt.question_id + ": no option token among returned top tokens");
  }
  return scores;
}

ModeResult compute_mode(std::span<const int> codes) {
  if (codes.empty()) throw std::invalid_argument("compute_mode of empty multiset");
  std::map<int, int> counts;
  for (int c : codes) ++counts[c];
  ModeResult out;
  for (const auto& [code, n] : counts) out.count = std::max(out.count, n);
  for (const auto& [code, n] : counts) {
    if (n == out.count) out.tied_codes.push_back(code);
  }
  out.code = out.tied_codes.front();
  out.tie = out.tied_codes.size() > 1;
  return out;
}

AnswerRecord answer_question(const QuestionSpec& question, std::span<const SteeringSpec> steering,
                             const RunConfig& config, ModelClient& client, Paraphraser& paraphraser) {
  bool degraded = false;
  auto tasks = expand_tasks(0, question, steering, config, paraphraser, degraded);
  auto records = run_tasks({&question}, std::move(tasks), config, client);
  if (!records.front().answerable) {
    spdlog::warn("question {}: every candidate was unanswerable", question.id);
  }
  return std::move(records.front());
}

std::map<std::string, int> ModelResponse::answer_map() const {
  return {answers.begin(), answers.end()};
}

nlohmann::json ModelResponse::to_json() const {
  nlohmann::json ans = nlohmann::json::array();
  for (const auto& [id, code] : answers) ans.push_back({{"question", id}, {"code", code}});
  return {{"model_id", model_id},
          {"answers", ans},
          {"excluded", excluded},
          {"tied", tied},
          {"manifest", run_manifest}};
}

ModelResponse ModelResponse::from_json(const nlohmann::json& doc) {
  ModelResponse r;
  try {
    r.model_id = doc.at("model_id").get<std::string>();
    for (const auto& a : doc.at("answers")) {
      r.answers.emplace_back(a.at("question").get<std::string>(), a.at("code").get<int>());
    }
    r.excluded = doc.value("excluded", std::vector<std::string>{});
    r.tied = doc.value("tied", std::vector<std::string>{});
    r.run_manifest = doc.value("manifest", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedDocument, std::string("model response: ") + e.what());
  }
  return r;
}

ModelResponse build_model_response(const Codebook& codebook,
                                   const std::vector<std::string>& question_ids,
                                   std::span<const SteeringSpec> steering, const RunConfig& config,
                                   ModelClient& client, Paraphraser& paraphraser,
                                   std::vector<AnswerRecord>* records) {
  if (!steering.empty() && steering.size() != kSteeringStyles.size()) {
    throw Error(ErrorCode::kInvalidConfig, "a steered run needs exactly one spec per style");
  }
  std::vector<const QuestionSpec*> questions;
  for (const auto& q : codebook.questions()) {
    if (std::find(question_ids.begin(), question_ids.end(), q.id) != question_ids.end()) {
      questions.push_back(&q);
    }
  }
  if (questions.size() != question_ids.size()) {
    for (const auto& id : question_ids) codebook.at(id);
    throw Error(ErrorCode::kInvalidConfig, "question id listed twice");
  }

  std::vector<Task> tasks;
  bool degraded = false;
  for (std::size_t i = 0; i < questions.size(); ++i) {
    auto t = expand_tasks(i, *questions[i], steering, config, paraphraser, degraded);
    std::move(t.begin(), t.end(), std::back_inserter(tasks));
  }
  auto recs = run_tasks(questions, std::move(tasks), config, client);

  ModelResponse response;
  response.model_id = client.endpoint().model;
  for (const auto& r : recs) {
    if (!r.answerable) {
      spdlog::warn("question {} excluded: every candidate was unanswerable", r.question_id);
      response.excluded.push_back(r.question_id);
      continue;
    }
    response.answers.emplace_back(r.question_id, r.modal_code);
    if (r.tie) response.tied.push_back(r.question_id);
  }
  response.run_manifest = {
      {"model", client.endpoint().model},
      {"endpoint", client.endpoint().base_url},
      {"top_k", client.endpoint().top_k},
      {"forward_seed", client.endpoint().forward_seed},
      {"seeds", config.seeds},
      {"paraphrase_count", config.paraphrase_count},
      {"paraphraser", paraphraser.describe()},
      {"paraphrase_degraded", degraded},
      {"answer_cue", config.prompt_template.answer_cue},
      {"steering", steering_json(steering)},
  };
  if (records) *records = std::move(recs);
  return response;
}

nlohmann::json ProbeReport::to_json() const {
  return {{"repeat_identical", repeat_identical},
          {"seed_changes_output", seed_changes_output},
          {"max_abs_diff", max_abs_diff}};
}

ProbeReport probe_endpoint(ModelClient& client) {
  QuestionSpec q{"__probe__",
                 "Which of the following colours do you like the most?",
                 {{1, "Red"}, {2, "Green"}, {3, "Blue"}, {4, "Yellow"}},
                 ColumnRole::kSurvey,
                 false};
  const auto prompt = render_prompt(q, nullptr);
  auto top_map = [&](int seed) {
    std::map<std::string, double> m;
    for (const auto& [t, lp] : extract_top_logprobs(client.call_endpoint(prompt.text, seed))) {
      m[t] = lp;
    }
    return m;
  };
  const auto a = top_map(0);
  const auto b = top_map(0);
  const auto c = top_map(1);
  ProbeReport report;
  auto diff = [&](const std::map<std::string, double>& x, const std::map<std::string, double>& y) {
    bool same = x.size() == y.size();
    for (const auto& [t, lp] : x) {
      const auto it = y.find(t);
      if (it == y.end()) {
        same = false;
        continue;
      }
      const double d = std::abs(lp - it->second);
      report.max_abs_diff = std::max(report.max_abs_diff, d);
      if (d != 0.0) same = false;
    }
    return same;
  };
  report.repeat_identical = diff(a, b);
  report.seed_changes_output = !diff(a, c);
  return report;
}

}  // namespace llmprof
