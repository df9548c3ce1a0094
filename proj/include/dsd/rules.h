#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dsd/labels.h"

namespace dsd {

struct EvalReport;

// Single-antecedent association rule between labels. Support and confidence
// are absent for rules loaded from a list that does not publish them.
struct LabelRule {
  LabelId antecedent = 0;
  LabelId consequent = 0;
  std::optional<double> support;
  std::optional<double> confidence;
};

// Every (s in strong, w in weak) pair that co-occurs at least once, with
// support = both / N and confidence = both / count(s), sorted by
// (antecedent, consequent). Throws Error(kEmptyDataset) for no posts and
// Error(kInvalidArgument) when the two sets overlap.
std::vector<LabelRule> MineRules(std::span<const LabelSet> dataset,
                                 const LabelSet& weak, const LabelSet& strong);

// pred plus the consequent of every rule whose antecedent is in pred. With
// `closure` the step is repeated until nothing changes.
LabelSet ApplyRules(const LabelSet& pred, std::span<const LabelRule> rules,
                    bool closure = false);

struct StrengthSplit {
  LabelSet weak;
  LabelSet strong;
};

// A label is weak when its F1 is zero or its recall is below recall_floor,
// strong otherwise.
StrengthSplit SplitByStrength(const EvalReport& report, double recall_floor);

// CSV with header "antecedent,consequent,support,confidence"; empty support
// and confidence cells are allowed.
std::vector<LabelRule> ParseRulesCsv(std::string_view csv);
std::string FormatRulesCsv(std::span<const LabelRule> rules);
std::vector<LabelRule> LoadRules(const std::filesystem::path& path);
void SaveRules(const std::filesystem::path& path, std::span<const LabelRule> rules);

}  // namespace dsd
