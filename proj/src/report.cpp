#include <fmt/format.h>

#include <algorithm>
#include <map>
#include <set>

#include "llmprof/report.hpp"

namespace llmprof {

namespace {

std::string md_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += "\\|";
    else if (c == '\n') out.push_back(' ');
    else out.push_back(c);
  }
  return out;
}

std::string label_for(const Codebook* codebook, const std::string& variable, int code,
                      const std::string& fallback) {
  if (codebook) {
    if (const auto* q = codebook->find(variable)) {
      if (const auto* opt = q->find_option(code)) return opt->label;
    }
  }
  return fallback.empty() ? std::to_string(code) : fallback;
}

}  // namespace

std::string format_percent(const Rational& share) {
  // tenths of a percent, rounded half up
  const __int128 num = share.num();
  const __int128 den = share.den();
  const auto tenths = static_cast<long long>((2 * num * 1000 + den) / (2 * den));
  return fmt::format("{}.{}%", tenths / 10, tenths % 10);
}

std::string render_profile_table(const ModelProfile& profile, const Codebook& codebook) {
  std::string out = fmt::format("Closest respondents considered: {}\n\n", profile.k);
  out += "| Variable | Modal value | Share | Tie | Blank (excluded) |\n";
  out += "|---|---|---|---|---|\n";
  for (const auto& v : profile.variables) {
    std::string modal = "n/a";
    if (v.modal_code) {
      if (v.tie) {
        modal.clear();
        for (std::size_t i = 0; i < v.tied_codes.size(); ++i) {
          if (i) modal += ", ";
          modal += label_for(&codebook, v.variable, v.tied_codes[i], {});
          if (v.tied_codes[i] == *v.modal_code) modal += "*";
        }
      } else {
        modal = label_for(&codebook, v.variable, *v.modal_code, v.modal_label);
      }
    }
    out += fmt::format("| {} | {} | {} | {} | {} |\n", md_escape(v.variable), md_escape(modal),
                       v.modal_code ? format_percent(v.share()) : "n/a", v.tie ? "yes" : "no",
                       v.blank_count);
  }
  return out;
}

SummaryMatrix render_summary_matrix(const std::vector<ProfileCell>& cells) {
  std::vector<std::string> models;
  std::vector<std::string> territories;
  auto remember = [](std::vector<std::string>& list, const std::string& v) {
    if (std::find(list.begin(), list.end(), v) == list.end()) list.push_back(v);
  };
  std::map<std::pair<std::string, std::string>, const ProfileCell*> grid;
  for (const auto& c : cells) {
    remember(models, c.model);
    remember(territories, c.territory);
    grid[{c.model, c.territory}] = &c;
  }

  SummaryMatrix result;
  std::string& out = result.markdown;
  out += "| Territory | Variable |";
  for (const auto& m : models) out += " " + md_escape(m) + " |";
  out += " Homogeneous |\n|---|---|";
  for (std::size_t i = 0; i < models.size(); ++i) out += "---|";
  out += "---|\n";

  for (const auto& t : territories) {
    std::vector<std::string> variables;
    for (const auto& m : models) {
      const auto it = grid.find({m, t});
      if (it == grid.end()) {
        result.missing.push_back(m + "/" + t);
        continue;
      }
      for (const auto& v : it->second->profile.variables) remember(variables, v.variable);
    }
    for (const auto& var : variables) {
      std::vector<std::optional<int>> values;
      std::map<int, int> counts;
      for (const auto& m : models) {
        std::optional<int> code;
        if (const auto it = grid.find({m, t}); it != grid.end()) {
          for (const auto& v : it->second->profile.variables) {
            if (v.variable == var) code = v.modal_code;
          }
        }
        if (code) ++counts[*code];
        values.push_back(code);
      }
      std::optional<int> consensus;
      int best = 0;
      for (const auto& [code, n] : counts) {
        if (n > best) {
          best = n;
          consensus = code;
        }
      }
      const bool homogeneous =
          consensus && std::all_of(values.begin(), values.end(),
                                   [&](const std::optional<int>& v) { return v == consensus; });
      out += "| " + md_escape(t) + " | " + md_escape(var) + " |";
      for (std::size_t i = 0; i < models.size(); ++i) {
        if (!values[i]) {
          out += " n/a |";
          continue;
        }
        const auto it = grid.find({models[i], t});
        std::string fallback;
        for (const auto& v : it->second->profile.variables) {
          if (v.variable == var) fallback = v.modal_label;
        }
        const auto label = md_escape(label_for(it->second->codebook, var, *values[i], fallback));
        out += values[i] == consensus ? " **" + label + "** |" : " " + label + " |";
      }
      out += homogeneous ? " yes |\n" : " no |\n";
    }
  }
  if (!result.missing.empty()) {
    out += "\nMissing cells:";
    for (const auto& m : result.missing) out += " " + m;
    out += "\n";
  }
  return result;
}

}  // namespace llmprof
