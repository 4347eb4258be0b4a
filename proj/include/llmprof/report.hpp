#pragma once

#include <string>
#include <vector>

#include "llmprof/profiler.hpp"
#include "llmprof/rational.hpp"
#include "llmprof/survey.hpp"

namespace llmprof {

/// Percentage at one decimal, rounded half up on the exact fraction ("57.5%").
std::string format_percent(const Rational& share);

/// Markdown table, one row per demographic variable.
std::string render_profile_table(const ModelProfile& profile, const Codebook& codebook);

struct ProfileCell {
  std::string model;
  std::string territory;
  ModelProfile profile;
  const Codebook* codebook = nullptr;  // for labels; may be null
};

struct SummaryMatrix {
  std::string markdown;
  /// "model/territory" pairs absent from the input grid.
  std::vector<std::string> missing;
};

/// Model x territory grid of modal values per variable. A cell is marked
/// (bold) when it matches the row consensus, i.e. the most common value
/// across models with the lowest code winning ties; rows where every model
/// agrees are flagged homogeneous.
SummaryMatrix render_summary_matrix(const std::vector<ProfileCell>& cells);

}  // namespace llmprof
