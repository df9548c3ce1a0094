#pragma once

#include <vector>

#include "dsd/embeddings.h"
#include "dsd/labels.h"

namespace dsd {

struct ScoredLabel {
  LabelId label = 0;
  double distance = 0.0;  // 1 - cosine similarity, in [0, 2]

  friend bool operator==(const ScoredLabel&, const ScoredLabel&) = default;
};

struct ZslOptions {
  double threshold = 1.0;  // keep labels with distance strictly below
  int k = 3;
};

// Per label, distance = min over its descriptors of 1 - cos(v, d); zero
// descriptors are skipped. Labels under the threshold are sorted by
// (distance, label) and truncated to k. Throws Error(kUnembeddable) for a
// zero input vector and Error(kDimensionMismatch) on width disagreement.
std::vector<ScoredLabel> ZslLabel(std::span<const double> v,
                                  const DescriptorEmbeddings& descriptors,
                                  const ZslOptions& options = {});

LabelSet LabelsOf(const std::vector<ScoredLabel>& scored);

}  // namespace dsd
