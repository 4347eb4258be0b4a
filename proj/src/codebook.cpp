#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <charconv>
#include <set>
#include <sstream>

#include "llmprof/error.hpp"
#include "llmprof/io.hpp"
#include "llmprof/survey.hpp"

namespace llmprof {

namespace {

namespace pt = boost::property_tree;

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

bool is_free_form_type(std::string_view type) {
  return type == "text" || type == "numeric" || type == "free" || type == "freeform" ||
         type == "free-form";
}

int parse_code(std::string_view raw, std::string_view variable) {
  const std::string s = trim(raw);
  int code = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, code);
  if (s.empty() || ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::kMalformedDocument,
                "variable " + std::string(variable) + ": non-integer option code '" + s + "'");
  }
  return code;
}

void validate_question(const QuestionSpec& q) {
  if (q.id.empty()) throw Error(ErrorCode::kMalformedDocument, "variable with empty id");
  std::set<int> seen;
  for (const auto& opt : q.options) {
    if (!seen.insert(opt.code).second) {
      throw Error(ErrorCode::kDuplicateOptionCode,
                  "variable " + q.id + ": option code " + std::to_string(opt.code) + " repeated");
    }
  }
  if (!q.free_form && q.options.size() < 2) {
    throw Error(ErrorCode::kEmptyOptionSet,
                "variable " + q.id + " has " + std::to_string(q.options.size()) +
                    " option(s) and is not marked free-form");
  }
}

void collect_variables(const pt::ptree& node, std::vector<QuestionSpec>& out) {
  for (const auto& [name, child] : node) {
    if (name == "<xmlattr>" || name == "<xmlcomment>") continue;
    if (name != "variable") {
      collect_variables(child, out);
      continue;
    }
    QuestionSpec q;
    q.id = trim(child.get<std::string>("<xmlattr>.id", ""));
    if (q.id.empty()) q.id = trim(child.get<std::string>("<xmlattr>.name", ""));
    q.free_form = is_free_form_type(child.get<std::string>("<xmlattr>.type", "categorical"));
    q.text = trim(child.get<std::string>("label", ""));
    for (const auto& [vname, vnode] : child) {
      if (vname != "value") continue;
      OptionLabel opt;
      opt.code = parse_code(vnode.get<std::string>("<xmlattr>.code", ""), q.id);
      opt.label = trim(vnode.data());
      q.options.push_back(std::move(opt));
    }
    out.push_back(std::move(q));
  }
}

Codebook parse_xml_codebook(std::string_view text) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(text)};
    pt::read_xml(in, tree, pt::xml_parser::trim_whitespace);
  } catch (const pt::xml_parser_error& e) {
    throw Error(ErrorCode::kMalformedXml, e.what());
  }
  std::vector<QuestionSpec> questions;
  collect_variables(tree, questions);
  return Codebook(std::move(questions));
}

Codebook parse_json_codebook(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kMalformedDocument, e.what());
  }
  if (!doc.is_object() || !doc.contains("variables") || !doc["variables"].is_array()) {
    throw Error(ErrorCode::kMalformedDocument, "codebook document needs a 'variables' array");
  }
  std::vector<QuestionSpec> questions;
  try {
    for (const auto& v : doc["variables"]) {
      QuestionSpec q;
      q.id = trim(v.at("id").get<std::string>());
      q.text = trim(v.value("label", std::string{}));
      q.free_form = is_free_form_type(v.value("type", std::string("categorical")));
      if (v.contains("values")) {
        for (const auto& val : v["values"]) {
          q.options.push_back({val.at("code").get<int>(), trim(val.at("label").get<std::string>())});
        }
      }
      questions.push_back(std::move(q));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedDocument, e.what());
  }
  return Codebook(std::move(questions));
}

}  // namespace

std::string_view to_string(ColumnRole role) noexcept {
  switch (role) {
    case ColumnRole::kSurvey: return "survey";
    case ColumnRole::kDemographic: return "demographic";
    case ColumnRole::kAuxiliary: return "auxiliary";
  }
  return "survey";
}

const OptionLabel* QuestionSpec::find_option(int code) const noexcept {
  for (const auto& opt : options) {
    if (opt.code == code) return &opt;
  }
  return nullptr;
}

Codebook::Codebook(std::vector<QuestionSpec> questions) : questions_(std::move(questions)) {
  index_.reserve(questions_.size());
  for (std::size_t i = 0; i < questions_.size(); ++i) {
    validate_question(questions_[i]);
    if (!index_.emplace(questions_[i].id, i).second) {
      throw Error(ErrorCode::kDuplicateQuestionId, "variable " + questions_[i].id + " repeated");
    }
  }
}

const QuestionSpec* Codebook::find(std::string_view id) const noexcept {
  const auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &questions_[it->second];
}

const QuestionSpec& Codebook::at(std::string_view id) const {
  if (const auto* q = find(id)) return *q;
  throw Error(ErrorCode::kUnknownColumn, "column " + std::string(id) + " not in codebook");
}

std::optional<std::size_t> Codebook::index_of(std::string_view id) const noexcept {
  const auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void Codebook::set_role(std::string_view id, ColumnRole role) {
  const auto idx = index_of(id);
  if (!idx) throw Error(ErrorCode::kUnknownColumn, "column " + std::string(id) + " not in codebook");
  questions_[*idx].role = role;
}

Codebook parse_codebook(std::string_view bytes) {
  const std::string_view text = strip_bom(bytes);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) throw Error(ErrorCode::kEmptyInput, "codebook is empty");
  if (text[first] == '{') return parse_json_codebook(text);
  if (text[first] == '<') return parse_xml_codebook(text);
  throw Error(ErrorCode::kMalformedXml, "codebook is neither XML nor a JSON document");
}

nlohmann::json codebook_to_json(const Codebook& codebook) {
  nlohmann::json vars = nlohmann::json::array();
  for (const auto& q : codebook.questions()) {
    nlohmann::json v = {{"id", q.id}, {"label", q.text}};
    if (q.free_form) v["type"] = "text";
    nlohmann::json values = nlohmann::json::array();
    for (const auto& opt : q.options) values.push_back({{"code", opt.code}, {"label", opt.label}});
    v["values"] = std::move(values);
    vars.push_back(std::move(v));
  }
  return {{"variables", std::move(vars)}};
}

}  // namespace llmprof
