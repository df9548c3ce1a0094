#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dsd/labels.h"

namespace dsd {

struct Post {
  std::string id;
  std::string text;  // normalized text when tokens are present
  std::vector<std::string> tokens;
  std::optional<LabelSet> labels;
  std::string provenance;  // ledger bucket, e.g. seed-train, zsl-union
  std::string source;      // seed-human, candidate-pool, external
};

using Dataset = std::vector<Post>;

// JSONL, one record per line:
//   {id, text, tokens:[str], labels:[int] (optional), provenance, source}
// Missing tokens are taken from whitespace-splitting the text. Ids must be
// unique and labels must be well formed.
Dataset ReadDataset(const std::filesystem::path& path);
Dataset ParseDataset(std::string_view jsonl, const std::string& origin = "<memory>");
std::string FormatDataset(std::span<const Post> posts);
// Write-new-then-rename.
void WriteDataset(const std::filesystem::path& path, std::span<const Post> posts);
void WriteFileAtomic(const std::filesystem::path& path, std::string_view content);

std::set<std::string> Ids(std::span<const Post> posts);
std::vector<LabelSet> LabelsOrEmpty(std::span<const Post> posts);

// Records of `a`, then records of `b` whose id is new. On a shared id the
// first record wins; when both carry different labels Error(kConflict) is
// thrown listing every offending id.
Dataset Union(std::span<const Post> a, std::span<const Post> b);
// Records of `a` whose id is absent from `b`, in order.
Dataset Subtract(std::span<const Post> a, std::span<const Post> b);
// n records drawn uniformly without replacement, in seeded shuffle order.
// Throws Error(kInvalidArgument) when the pool is smaller than n.
Dataset SampleControls(std::span<const Post> pool, std::size_t n,
                       std::uint64_t seed);

}  // namespace dsd
