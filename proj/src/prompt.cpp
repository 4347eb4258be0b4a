#include <regex>

#include "llmprof/error.hpp"
#include "llmprof/io.hpp"
#include "llmprof/prompt.hpp"

namespace llmprof {

namespace {

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

const std::vector<std::regex>& compiled_defaults() {
  static const std::vector<std::regex> compiled = [] {
    std::vector<std::regex> out;
    for (const auto& p : default_directive_patterns()) out.emplace_back(p, std::regex::ECMAScript);
    return out;
  }();
  return compiled;
}

std::string apply_patterns(std::string_view text, const std::vector<std::regex>& patterns) {
  std::string s(text);
  for (const auto& re : patterns) s = std::regex_replace(s, re, " ");
  return collapse_whitespace(s);
}

// Defaults mirror the three steering styles: a multiple-choice question with
// the answer filled in, a first-person description, and an explicit
// instruction to answer as a group member.
constexpr std::string_view kDefaultQa =
    "Question: {group_question}\n{group_options}Answer: {group_answer_token}. {group_answer}\n\n";
constexpr std::string_view kDefaultBio =
    "Below you will be asked to provide a short description of yourself and then answer some "
    "questions.\nDescription: When asked \"{group_question}\", I answer {group_label}.\n\n";
constexpr std::string_view kDefaultPortray =
    "Answer the following question as though you belonged to this group: {group_label}.\n\n";

}  // namespace

const std::vector<std::string>& default_directive_patterns() {
  static const std::vector<std::string> patterns = {
      // Bracketed interviewer notes: (DO NOT READ), [READ LIST], (VOL.), (INT: PROBE) ...
      R"(\s*[\(\[][^\(\)\[\]]*?\b(?:DO NOT READ|READ LIST|READ OUT|READ IN ORDER|READ|INTERVIEWER|INT|VOL|PROBE|SHOW CARD|SHOWCARD|RANDOMIZE|RANDOMISE|ROTATE|RECORD|ASK ALL|ASK IF|IF NECESSARY|ENTER|SINGLE CODE|MULTI CODE|CODE|ACCEPT)\b[^\(\)\[\]]*[\)\]])",
      // Unbracketed "INTERVIEWER: ..." up to the end of its sentence.
      R"(\bINTERVIEWER(?: NOTE| INSTRUCTION)?S?\s*:[^.?!\n]*[.?!]?)",
      // Bare uppercase directives.
      R"(\b(?:DO NOT READ|READ LIST|READ OUT|READ IN ORDER|RANDOMIZE|RANDOMISE|ROTATE|SHOW CARD)\b[.:]?)",
  };
  return patterns;
}

std::string strip_interviewer_instructions(std::string_view text) {
  return apply_patterns(text, compiled_defaults());
}

std::string strip_interviewer_instructions(std::string_view text,
                                           const std::vector<std::string>& patterns) {
  std::vector<std::regex> compiled;
  compiled.reserve(patterns.size());
  for (const auto& p : patterns) compiled.emplace_back(p, std::regex::ECMAScript);
  return apply_patterns(text, compiled);
}

std::string_view to_string(SteeringStyle style) noexcept {
  switch (style) {
    case SteeringStyle::kQa: return "QA";
    case SteeringStyle::kBio: return "BIO";
    case SteeringStyle::kPortray: return "PORTRAY";
  }
  return "QA";
}

SteeringTemplates SteeringTemplates::defaults() {
  return {std::string(kDefaultQa), std::string(kDefaultBio), std::string(kDefaultPortray)};
}

SteeringTemplates SteeringTemplates::load(const std::filesystem::path& dir) {
  return {read_file(dir / "qa.txt"), read_file(dir / "bio.txt"), read_file(dir / "portray.txt")};
}

const std::string& SteeringTemplates::get(SteeringStyle style) const noexcept {
  switch (style) {
    case SteeringStyle::kQa: return qa;
    case SteeringStyle::kBio: return bio;
    case SteeringStyle::kPortray: return portray;
  }
  return qa;
}

std::string SteeringTemplates::hash() const {
  std::string joined;
  for (const auto* t : {&qa, &bio, &portray}) {
    joined += std::to_string(t->size());
    joined.push_back(':');
    joined += *t;
  }
  return sha256_hex(joined);
}

std::array<SteeringSpec, 3> build_steering_prompts(std::string_view group_variable, int group_value,
                                                   const Codebook& codebook,
                                                   const SteeringTemplates& templates) {
  const QuestionSpec& var = codebook.at(group_variable);
  const OptionLabel* answer = var.find_option(group_value);
  if (!answer) {
    throw Error(ErrorCode::kUnknownGroupValue, std::string(group_variable) + " has no option " +
                                                   std::to_string(group_value));
  }
  if (var.options.size() > kMaxPresentationTokens) {
    throw Error(ErrorCode::kTooManyOptions, "group variable " + var.id + " has too many options");
  }
  std::string options_block;
  std::string answer_token;
  for (std::size_t i = 0; i < var.options.size(); ++i) {
    const auto token = presentation_token(i);
    options_block += token + ". " + strip_interviewer_instructions(var.options[i].label) + "\n";
    if (var.options[i].code == group_value) answer_token = token;
  }
  const std::string label = strip_interviewer_instructions(answer->label);
  const std::string question = strip_interviewer_instructions(var.text);

  std::array<SteeringSpec, 3> out;
  for (std::size_t i = 0; i < kSteeringStyles.size(); ++i) {
    std::string prefix = templates.get(kSteeringStyles[i]);
    replace_all(prefix, "{group_options}", options_block);
    replace_all(prefix, "{group_answer_token}", answer_token);
    replace_all(prefix, "{group_question}", question);
    replace_all(prefix, "{group_answer}", label);
    replace_all(prefix, "{group_label}", label);
    out[i] = SteeringSpec{kSteeringStyles[i], var.id, group_value, std::move(prefix)};
  }
  return out;
}

std::string presentation_token(std::size_t index) {
  if (index >= kMaxPresentationTokens) {
    throw Error(ErrorCode::kTooManyOptions, "no presentation token for option " + std::to_string(index));
  }
  return std::string(1, static_cast<char>('A' + index));
}

PromptInstance render_prompt(const QuestionSpec& question, const SteeringSpec* steering,
                             const PromptTemplate& tmpl, int variant_index,
                             std::optional<std::string_view> wording) {
  if (question.free_form || question.options.size() < 2) {
    throw Error(ErrorCode::kTooFewOptions,
                "question " + question.id + " has fewer than 2 options");
  }
  if (question.options.size() > kMaxPresentationTokens) {
    throw Error(ErrorCode::kTooManyOptions, "question " + question.id + " has " +
                                                std::to_string(question.options.size()) +
                                                " options");
  }
  PromptInstance p;
  p.question_id = question.id;
  p.variant_index = variant_index;
  if (steering) {
    p.steering = *steering;
    p.text = steering->rendered_prefix;
  }
  const auto strip = [&](std::string_view s) {
    return tmpl.directive_patterns ? strip_interviewer_instructions(s, *tmpl.directive_patterns)
                                   : strip_interviewer_instructions(s);
  };
  p.text += strip(wording.value_or(question.text));
  p.text.push_back('\n');
  for (std::size_t i = 0; i < question.options.size(); ++i) {
    const auto token = presentation_token(i);
    p.text += token + tmpl.option_separator +
              strip(question.options[i].label) +
              "\n";
    p.option_labels.emplace_back(token, question.options[i].code);
  }
  p.text += tmpl.answer_cue;
  return p;
}

}  // namespace llmprof
