#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "dsd/embeddings.h"
#include "dsd/labels.h"
#include "dsd/store.h"

namespace dsd {

// Planted-topic corpus for end-to-end runs. Every symptom label owns a small
// vocabulary of pseudo-words; symptom posts mix words from their labels'
// vocabularies with shared "distress" words and general filler, controls use
// a control vocabulary, and gibberish posts are one or two random words.
// Label frequencies decay with the label index so some labels are scarce.
struct SyntheticOptions {
  std::uint64_t seed = 1;
  int seed_posts = 300;      // labelled, all four categories
  int pool_posts = 2000;     // unlabelled candidate pool
  int external_posts = 400;  // unlabelled symptom posts
  int test_posts = 0;        // extra labelled symptom posts, never used in runs

  double seed_symptom_frac = 0.70;
  double seed_ed_frac = 0.10;
  double seed_noed_frac = 0.15;  // the rest is gibberish
  double pool_control_frac = 0.25;

  int topic_vocab = 12;
  int filler_vocab = 300;
  double second_label_prob = 0.3;
  double topic_confusion = 0.15;  // chance a topic word comes from another topic
  int descriptors_per_label = 3;
};

struct SyntheticCorpus {
  Dataset seed;
  Dataset pool;      // labels hidden; see truth
  Dataset external;  // labels hidden; see truth
  Dataset test;
  DescriptorCorpus descriptors;
  std::map<std::string, LabelSet> truth;  // hidden labels of pool and external
};

SyntheticCorpus GenerateSynthetic(const SyntheticOptions& options);

}  // namespace dsd
