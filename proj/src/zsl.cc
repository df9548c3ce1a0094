#include "dsd/zsl.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dsd/error.h"

namespace dsd {

std::vector<ScoredLabel> ZslLabel(std::span<const double> v,
                                  const DescriptorEmbeddings& descriptors,
                                  const ZslOptions& options) {
  if (options.k < 1) throw Error(Errc::kConfig, "zsl k must be >= 1");
  const double v_norm = L2Norm(v);
  if (v_norm == 0.0) {
    throw Error(Errc::kUnembeddable, "post embeds to the zero vector");
  }
  std::vector<ScoredLabel> out;
  for (const auto& [id, vectors] : descriptors) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& d : vectors) {
      if (d.size() != v.size()) {
        throw Error(Errc::kDimensionMismatch,
                    "descriptor width " + std::to_string(d.size()) +
                        " != post width " + std::to_string(v.size()));
      }
      const double d_norm = L2Norm(d);
      if (d_norm == 0.0) continue;
      double cos = Dot(v, d) / (v_norm * d_norm);
      best = std::min(best, std::clamp(1.0 - cos, 0.0, 2.0));
    }
    if (best < options.threshold) out.push_back({id, best});
  }
  std::sort(out.begin(), out.end(), [](const ScoredLabel& a, const ScoredLabel& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.label < b.label;
  });
  if (out.size() > static_cast<std::size_t>(options.k)) out.resize(options.k);
  return out;
}

LabelSet LabelsOf(const std::vector<ScoredLabel>& scored) {
  LabelSet out;
  for (const auto& s : scored) out.insert(s.label);
  return out;
}

}  // namespace dsd
