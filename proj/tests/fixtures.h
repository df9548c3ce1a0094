#pragma once

// Randomized fixture generators shared by unit tests and the acceptance run.

#include <algorithm>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dsd/annotation.h"
#include "dsd/labels.h"
#include "dsd/store.h"

namespace dsd::fixture {

// Valid label set: usually 1-3 symptoms (optionally with ED), sometimes a
// NoED or Gibberish singleton.
inline LabelSet RandomLabelSet(std::mt19937_64& rng) {
  const int kind = std::uniform_int_distribution<int>(0, 9)(rng);
  if (kind == 0) return LabelSet{label::kNoEvidenceOfDepression};
  if (kind == 1) return LabelSet{label::kGibberish};
  LabelSet s;
  const int n = std::uniform_int_distribution<int>(1, 3)(rng);
  for (int i = 0; i < n; ++i) s.insert(std::uniform_int_distribution<int>(1, 10)(rng));
  if (kind == 2) s.insert(label::kEvidenceOfDepression);
  return s;
}

// Possibly empty label set drawn from labels 1..max_label.
inline LabelSet RandomSubset(std::mt19937_64& rng, int max_label, double p) {
  std::bernoulli_distribution on(p);
  LabelSet s;
  for (LabelId l = 1; l <= max_label; ++l) {
    if (on(rng)) s.insert(l);
  }
  return s;
}

inline AnnotationRecord Record(const std::string& annotator, const std::string& post,
                               LabelSet labels, bool clinician = false, int rank = 0,
                               int round = 1) {
  AnnotationRecord r;
  r.annotator_id = annotator;
  r.post_id = post;
  r.labels = std::move(labels);
  r.round = round;
  r.is_clinician = clinician;
  r.clinician_rank = rank;
  return r;
}

struct Panel {
  std::vector<AnnotationRecord> records;  // one post, round 1
  int n_annotators = 0;
  std::optional<LabelSet> expected;  // set when the scenario fixes the answer
};

// Arbitrary panel of 1-6 annotators on post "p".
inline Panel RandomPanel(std::mt19937_64& rng) {
  Panel panel;
  panel.n_annotators = std::uniform_int_distribution<int>(1, 6)(rng);
  for (int i = 0; i < panel.n_annotators; ++i) {
    const bool clinician = std::bernoulli_distribution(0.4)(rng);
    panel.records.push_back(Record("a" + std::to_string(i), "p", RandomLabelSet(rng),
                                   clinician,
                                   clinician ? std::uniform_int_distribution<int>(0, 3)(rng)
                                             : 0));
  }
  return panel;
}

// Every annotator picks the same label set.
inline Panel UnanimousPanel(std::mt19937_64& rng) {
  Panel panel = RandomPanel(rng);
  const LabelSet shared = RandomLabelSet(rng);
  for (auto& r : panel.records) r.labels = shared;
  panel.expected = shared;
  return panel;
}

// 2-6 annotators with pairwise distinct single symptoms, so no label reaches
// a majority. With `with_clinician` at least one annotator is a clinician and
// the expected answer is the labels of the lowest (rank, id) clinician.
inline Panel NoMajorityPanel(std::mt19937_64& rng, bool with_clinician) {
  Panel panel;
  panel.n_annotators = std::uniform_int_distribution<int>(2, 6)(rng);
  std::vector<LabelId> symptoms{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::shuffle(symptoms.begin(), symptoms.end(), rng);
  for (int i = 0; i < panel.n_annotators; ++i) {
    bool clinician = with_clinician && std::bernoulli_distribution(0.5)(rng);
    panel.records.push_back(Record("a" + std::to_string(i), "p", LabelSet{symptoms[i]},
                                   clinician,
                                   clinician ? std::uniform_int_distribution<int>(0, 2)(rng)
                                             : 0));
  }
  if (with_clinician) {
    bool any = std::any_of(panel.records.begin(), panel.records.end(),
                           [](const AnnotationRecord& r) { return r.is_clinician; });
    if (!any) {
      auto& r = panel.records[rng() % panel.records.size()];
      r.is_clinician = true;
      r.clinician_rank = std::uniform_int_distribution<int>(0, 2)(rng);
    }
    const AnnotationRecord* best = nullptr;
    for (const auto& r : panel.records) {
      if (!r.is_clinician) continue;
      if (best == nullptr || r.clinician_rank < best->clinician_rank ||
          (r.clinician_rank == best->clinician_rank && r.annotator_id < best->annotator_id)) {
        best = &r;
      }
    }
    panel.expected = best->labels;
  }
  return panel;
}

// Posts with the given ids and labels; text is a placeholder.
inline Dataset Posts(const std::string& prefix, std::size_t n,
                     std::optional<LabelSet> labels = std::nullopt) {
  Dataset out;
  for (std::size_t i = 0; i < n; ++i) {
    Post p;
    p.id = prefix + std::to_string(i);
    p.text = "post " + p.id;
    p.tokens = {"post", p.id};
    p.labels = labels;
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace dsd::fixture
