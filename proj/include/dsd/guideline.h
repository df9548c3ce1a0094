#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dsd/embeddings.h"
#include "dsd/labels.h"

namespace dsd {

// Annotation guideline text for one label.
struct GuidelineEntry {
  LabelId id = 0;
  std::string title;
  std::string lead;  // empty for ED, NoED and Gibberish
  std::vector<std::string> elaboration;  // one sentence per element
  std::vector<std::string> examples;
};

// JSON {"labels": [{id, title, lead, elaboration:[..], examples:[..]}, ...]}
// covering labels 1..13 exactly once.
class Guideline {
 public:
  static Guideline Parse(std::string_view json);
  static Guideline Load(const std::filesystem::path& path);

  const std::vector<GuidelineEntry>& entries() const { return entries_; }
  const GuidelineEntry& at(LabelId id) const;
  std::string ToJson() const;

 private:
  std::vector<GuidelineEntry> entries_;  // ordered by id
};

// For every symptom label: its lead, then each elaboration sentence, then
// each example, in that order.
DescriptorCorpus DescriptorsFromGuideline(const Guideline& guideline);

}  // namespace dsd
