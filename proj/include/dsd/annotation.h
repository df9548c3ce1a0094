#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dsd/labels.h"

namespace dsd {

struct AnnotationRecord {
  std::string annotator_id;
  std::string post_id;
  LabelSet labels;
  int round = 1;  // 1 = first assignment, >1 = test-retest duplicate
  bool is_clinician = false;
  int clinician_rank = 0;  // 0 = highest-priority clinician
  std::string timestamp;
};

// One JSON object per line: {annotator_id, post_id, labels:[int], round,
// is_clinician, clinician_rank, timestamp}. Lines carrying an "event" field
// other than "annotation" (service journal entries) are skipped.
std::vector<AnnotationRecord> ReadAnnotations(const std::filesystem::path& path);
void WriteAnnotations(const std::filesystem::path& path,
                      std::span<const AnnotationRecord> records);

// Majority Voting with Clinician Preference for one post.
//
// Only round-1 records take part. A label is kept when strictly more than
// n_annotators / 2 distinct annotators chose it. Without any majority label
// the label set of the highest-priority clinician present (lowest rank, then
// lowest annotator id) is returned; without a clinician the post stays
// unlabelled (nullopt). Throws Error(kNoAnnotations) on an empty input.
std::optional<LabelSet> MvcpAggregate(std::span<const AnnotationRecord> records,
                                      int n_annotators);

// Groups records by post and aggregates each. Post ids map to nullopt when
// the post is unlabelled.
std::map<std::string, std::optional<LabelSet>> MvcpAggregateAll(
    std::span<const AnnotationRecord> records, int n_annotators);

// Number of distinct annotator ids among the records.
int CountAnnotators(std::span<const AnnotationRecord> records);

using PresenceVector = std::vector<std::uint8_t>;

// Cohen's kappa for two binary presence vectors. When expected agreement is
// 1 the result is 1.0 for identical vectors and 0.0 otherwise.
double CohenKappaBinary(std::span<const std::uint8_t> a,
                        std::span<const std::uint8_t> b);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  std::size_t n = 0;
};

struct KappaRow {
  LabelId label = 0;
  std::optional<MeanStd> annotator_pairs;
  std::optional<MeanStd> annotator_vs_mvcp;
  std::optional<MeanStd> all;
};

struct KappaReport {
  std::vector<KappaRow> rows;  // one per label 1..13
};

// Per-label kappa table. Each annotator pair is compared on the round-1 posts
// both annotated; each annotator is compared with MVCP on the posts they
// annotated that have an MVCP label. The "all" cell pools both collections.
// Cells without any comparison, and every cell of a label nobody used, are
// nullopt.
KappaReport ComputeKappaReport(
    std::span<const AnnotationRecord> records,
    const std::map<std::string, std::optional<LabelSet>>& mvcp_labels);

std::string KappaReportCsv(const KappaReport& report);

// Fraction of retest records (round > 1) whose labels equal the same
// annotator's round-1 labels for that post. Retest records without a round-1
// counterpart are ignored. Throws Error(kNoRetestData) when nothing is
// comparable.
double TestRetestReliability(std::span<const AnnotationRecord> records);

}  // namespace dsd
