#include <unordered_map>

#include "llmprof/error.hpp"
#include "llmprof/profiler.hpp"

namespace llmprof {

ModelProfile extract_profile(std::span<const DistanceEntry> ranking, std::size_t k,
                             const std::vector<std::string>& demographic_ids,
                             const SurveyMatrix& matrix, const Codebook& codebook) {
  if (k > ranking.size()) {
    throw Error(ErrorCode::kKTooLarge, "K=" + std::to_string(k) + " exceeds " +
                                           std::to_string(ranking.size()) + " ranked respondents");
  }
  if (k == 0) throw Error(ErrorCode::kInvalidConfig, "K must be positive");

  std::unordered_map<std::int64_t, std::size_t> row_of;
  row_of.reserve(matrix.rows());
  for (std::size_t r = 0; r < matrix.rows(); ++r) row_of.emplace(matrix.qrids()[r], r);

  ModelProfile profile;
  profile.k = k;
  for (const auto& id : demographic_ids) {
    const auto col = matrix.column_index(id);
    const QuestionSpec* spec = codebook.find(id);
    if (!col || !spec) throw Error(ErrorCode::kUnknownVariable, "demographic variable " + id);

    VariableProfile vp;
    vp.variable = id;
    for (std::size_t i = 0; i < k; ++i) {
      const auto it = row_of.find(ranking[i].qrid);
      if (it == row_of.end()) {
        throw Error(ErrorCode::kUnknownVariable, "QRID " + std::to_string(ranking[i].qrid) +
                                                     " not in matrix");
      }
      const auto code = matrix.cell(it->second, *col);
      if (!code) {
        ++vp.blank_count;
        continue;
      }
      ++vp.frequencies[*code];
      ++vp.non_blank;
    }
    std::size_t best = 0;
    for (const auto& [code, n] : vp.frequencies) best = std::max(best, n);
    for (const auto& [code, n] : vp.frequencies) {
      if (n == best) vp.tied_codes.push_back(code);
    }
    if (!vp.tied_codes.empty()) {
      vp.modal_code = vp.tied_codes.front();
      vp.tie = vp.tied_codes.size() > 1;
      if (const auto* opt = spec->find_option(*vp.modal_code)) vp.modal_label = opt->label;
    }
    profile.variables.push_back(std::move(vp));
  }
  return profile;
}

nlohmann::json ModelProfile::to_json() const {
  nlohmann::json vars = nlohmann::json::array();
  for (const auto& v : variables) {
    nlohmann::json freq = nlohmann::json::array();
    for (const auto& [code, n] : v.frequencies) freq.push_back({{"code", code}, {"count", n}});
    const auto share = v.share();
    vars.push_back({{"variable", v.variable},
                    {"modal_code", v.modal_code ? nlohmann::json(*v.modal_code) : nlohmann::json()},
                    {"modal_label", v.modal_label},
                    {"tied_codes", v.tied_codes},
                    {"tie", v.tie},
                    {"share", share.str()},
                    {"share_value", share.to_double()},
                    {"non_blank", v.non_blank},
                    {"blank_count", v.blank_count},
                    {"frequencies", freq}});
  }
  return {{"k", k}, {"variables", vars}};
}

ModelProfile ModelProfile::from_json(const nlohmann::json& doc) {
  ModelProfile p;
  try {
    p.k = doc.at("k").get<std::size_t>();
    for (const auto& v : doc.at("variables")) {
      VariableProfile vp;
      vp.variable = v.at("variable").get<std::string>();
      if (!v.at("modal_code").is_null()) vp.modal_code = v["modal_code"].get<int>();
      vp.modal_label = v.value("modal_label", std::string{});
      vp.tied_codes = v.value("tied_codes", std::vector<int>{});
      vp.tie = v.value("tie", false);
      vp.non_blank = v.value("non_blank", std::size_t{0});
      vp.blank_count = v.value("blank_count", std::size_t{0});
      for (const auto& f : v.at("frequencies")) {
        vp.frequencies[f.at("code").get<int>()] = f.at("count").get<std::size_t>();
      }
      p.variables.push_back(std::move(vp));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedDocument, std::string("profile: ") + e.what());
  }
  return p;
}

}  // namespace llmprof
