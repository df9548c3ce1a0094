#pragma once

#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dsd/labels.h"
#include "dsd/store.h"

namespace dsd {

struct LabelMetrics {
  LabelId label = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int support = 0;  // gold occurrences
};

struct AveragedMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct EvalReport {
  std::vector<LabelMetrics> rows;
  AveragedMetrics macro;     // unweighted mean over rows
  AveragedMetrics weighted;  // support-weighted mean; 0 when no support
  int total_support = 0;
};

// Per-label precision, recall and F1 from set membership. Zero denominators
// give 0.0. Throws Error(kLengthMismatch) when gold and pred differ in size.
EvalReport ClassificationReport(std::span<const LabelSet> gold,
                                std::span<const LabelSet> pred,
                                std::span<const LabelId> labels);

// Aligned text table with two decimals.
std::string ReportText(const EvalReport& report);
std::string ReportCsv(const EvalReport& report);

struct LabelCount {
  LabelId label = 0;
  int count = 0;
  double ratio = 0.0;  // count / number of posts
};

// One row per label 1..13. Multi-label posts count once for each label.
std::vector<LabelCount> LabelDistribution(std::span<const LabelSet> dataset);
std::string DistributionCsv(const std::vector<LabelCount>& distribution);

// Total-variation distance between the two count vectors after each is
// normalized to sum 1. Zero when both are empty.
double TotalVariationDistance(const std::vector<LabelCount>& a,
                              const std::vector<LabelCount>& b);

using BigramCount = std::pair<std::string, int>;

// Among posts carrying `label`: drop stopwords and punctuation tokens, pair
// adjacent survivors, count corpus-wide, return the top k by count with ties
// broken lexicographically.
std::vector<BigramCount> TopBigrams(std::span<const Post> dataset, LabelId label,
                                    int k, const std::set<std::string>& stopwords);

// One word per line; '#' comments and blank lines skipped.
std::set<std::string> LoadStopwords(const std::filesystem::path& path);

}  // namespace dsd
