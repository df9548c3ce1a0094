#include "dsd/synthetic.h"

#include <algorithm>
#include <random>
#include <set>

#include "dsd/error.h"
#include "dsd/normalizer.h"

namespace dsd {
namespace {

class Generator {
 public:
  explicit Generator(const SyntheticOptions& o) : o_(o), rng_(o.seed) {
    for (LabelId l : SymptomLabels()) topics_[l] = Words(o.topic_vocab);
    distress_ = Words(10);
    control_ = Words(15);
    filler_ = Words(o.filler_vocab);
    // Zipf-like label weights: label 1 most frequent, label 10 least.
    std::vector<double> w;
    for (LabelId l : SymptomLabels()) w.push_back(1.0 / (0.5 + l));
    label_pick_ = std::discrete_distribution<int>(w.begin(), w.end());
    std::vector<double> f;
    for (int i = 0; i < o.filler_vocab; ++i) f.push_back(1.0 / (1.0 + i));
    filler_pick_ = std::discrete_distribution<int>(f.begin(), f.end());
  }

  LabelSet SymptomLabelSet() {
    LabelSet s{label_pick_(rng_) + 1};
    if (Chance(o_.second_label_prob)) s.insert(label_pick_(rng_) + 1);
    return s;
  }

  Post Symptom(const std::string& id, const LabelSet& labels) {
    std::vector<std::string> t;
    for (LabelId l : labels.ids()) {
      int n = Uniform(2, 3);
      for (int i = 0; i < n; ++i) {
        LabelId from = Chance(o_.topic_confusion) ? Uniform(1, 10) : l;
        t.push_back(Pick(topics_[from]));
      }
    }
    t.push_back(Pick(distress_));
    AddFiller(t, Uniform(3, 7));
    return Finish(id, std::move(t));
  }

  Post Ed(const std::string& id) {
    std::vector<std::string> t;
    for (int i = 0; i < 3; ++i) t.push_back(Pick(distress_));
    AddFiller(t, Uniform(3, 6));
    return Finish(id, std::move(t));
  }

  Post Control(const std::string& id) {
    std::vector<std::string> t;
    int n = Uniform(2, 3);
    for (int i = 0; i < n; ++i) t.push_back(Pick(control_));
    AddFiller(t, Uniform(4, 8));
    return Finish(id, std::move(t));
  }

  Post Gibberish(const std::string& id) {
    std::vector<std::string> t;
    int n = Uniform(1, 2);
    for (int i = 0; i < n; ++i) t.push_back(RandomWord());
    return Finish(id, std::move(t));
  }

  std::string Descriptor(LabelId l) {
    std::vector<std::string> t;
    for (int i = 0; i < 4; ++i) t.push_back(Pick(topics_[l]));
    return JoinTokens(t);
  }

  bool Chance(double p) { return std::uniform_real_distribution<double>(0, 1)(rng_) < p; }
  std::mt19937_64& rng() { return rng_; }

 private:
  int Uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  const std::string& Pick(const std::vector<std::string>& v) {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng_)];
  }

  void AddFiller(std::vector<std::string>& t, int n) {
    for (int i = 0; i < n; ++i) t.push_back(filler_[filler_pick_(rng_)]);
  }

  Post Finish(const std::string& id, std::vector<std::string> tokens) {
    std::shuffle(tokens.begin(), tokens.end(), rng_);
    Post p;
    p.id = id;
    p.tokens = std::move(tokens);
    p.text = JoinTokens(p.tokens);
    return p;
  }

  // Consonant-vowel syllables: lowercase, four letters or more, and never
  // three identical letters in a row, so the words survive normalization.
  std::string RandomWord() {
    static constexpr std::string_view kConsonants = "bdfgklmnprstvz";
    static constexpr std::string_view kVowels = "aeiou";
    std::string w;
    int syllables = Uniform(2, 3);
    for (int s = 0; s < syllables; ++s) {
      w += kConsonants[static_cast<std::size_t>(Uniform(0, kConsonants.size() - 1))];
      w += kVowels[static_cast<std::size_t>(Uniform(0, kVowels.size() - 1))];
    }
    return w;
  }

  std::vector<std::string> Words(int n) {
    std::vector<std::string> out;
    while (static_cast<int>(out.size()) < n) {
      std::string w = RandomWord();
      if (used_.insert(w).second) out.push_back(w);
    }
    return out;
  }

  SyntheticOptions o_;
  std::mt19937_64 rng_;
  std::set<std::string> used_;
  std::map<LabelId, std::vector<std::string>> topics_;
  std::vector<std::string> distress_;
  std::vector<std::string> control_;
  std::vector<std::string> filler_;
  std::discrete_distribution<int> label_pick_;
  std::discrete_distribution<int> filler_pick_;
};

std::string Id(const char* prefix, int i) { return std::string(prefix) + std::to_string(i); }

}  // namespace

SyntheticCorpus GenerateSynthetic(const SyntheticOptions& o) {
  if (o.seed_posts < 0 || o.pool_posts < 0 || o.external_posts < 0 || o.test_posts < 0 ||
      o.topic_vocab < 4 || o.filler_vocab < 1) {
    throw Error(Errc::kConfig, "invalid synthetic corpus options");
  }
  Generator g(o);
  SyntheticCorpus c;
  for (int i = 0; i < o.seed_posts; ++i) {
    std::string id = Id("seed-", i);
    double u = std::uniform_real_distribution<double>(0, 1)(g.rng());
    Post p;
    if (u < o.seed_symptom_frac) {
      LabelSet labels = g.SymptomLabelSet();
      p = g.Symptom(id, labels);
      p.labels = labels;
    } else if (u < o.seed_symptom_frac + o.seed_ed_frac) {
      p = g.Ed(id);
      p.labels = LabelSet{label::kEvidenceOfDepression};
    } else if (u < o.seed_symptom_frac + o.seed_ed_frac + o.seed_noed_frac) {
      p = g.Control(id);
      p.labels = LabelSet{label::kNoEvidenceOfDepression};
    } else {
      p = g.Gibberish(id);
      p.labels = LabelSet{label::kGibberish};
    }
    p.source = "seed-human";
    c.seed.push_back(std::move(p));
  }
  for (int i = 0; i < o.pool_posts; ++i) {
    std::string id = Id("pool-", i);
    Post p;
    if (g.Chance(o.pool_control_frac)) {
      p = g.Control(id);
      c.truth[id] = LabelSet{label::kNoEvidenceOfDepression};
    } else {
      LabelSet labels = g.SymptomLabelSet();
      p = g.Symptom(id, labels);
      c.truth[id] = labels;
    }
    p.source = "candidate-pool";
    c.pool.push_back(std::move(p));
  }
  for (int i = 0; i < o.external_posts; ++i) {
    std::string id = Id("ext-", i);
    LabelSet labels = g.SymptomLabelSet();
    Post p = g.Symptom(id, labels);
    c.truth[id] = labels;
    p.source = "external";
    c.external.push_back(std::move(p));
  }
  for (int i = 0; i < o.test_posts; ++i) {
    std::string id = Id("test-", i);
    LabelSet labels = g.SymptomLabelSet();
    Post p = g.Symptom(id, labels);
    p.labels = labels;
    p.source = "synthetic-test";
    c.test.push_back(std::move(p));
  }
  for (LabelId l : SymptomLabels()) {
    for (int i = 0; i < o.descriptors_per_label; ++i) {
      c.descriptors.descriptors[l].push_back(g.Descriptor(l));
    }
  }
  return c;
}

}  // namespace dsd
