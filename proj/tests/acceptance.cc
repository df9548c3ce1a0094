// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any
// failure. Tolerances and time limits are pinned below.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "dsd/annotation.h"
#include "dsd/annotation_service.h"
#include "dsd/classifier.h"
#include "dsd/config.h"
#include "dsd/error.h"
#include "dsd/evaluation.h"
#include "dsd/normalizer.h"
#include "dsd/rules.h"
#include "dsd/ssl.h"
#include "dsd/synthetic.h"
#include "dsd/zsl.h"
#include "fixtures.h"
#include "oracles.h"
#include "test_paths.h"

// After Eigen: <resolv.h> defines a _res macro that clashes with Eigen.
#include <httplib.h>

namespace dsd {
namespace {

constexpr double kKappaTolerance = 1e-12;
constexpr double kReportTolerance = 1e-12;
constexpr double kGradientRelError = 1e-4;
constexpr double kSeparableMinMacroF1 = 0.95;
constexpr double kZslTolerance = 1e-9;
constexpr double kNormalizeSeconds = 5.0;
constexpr double kTrainSeconds = 30.0;
constexpr double kSslSeconds = 300.0;

// Thrown by Require; caught per criterion.
struct CheckFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void Require(bool ok, const std::string& what) {
  if (!ok) throw CheckFailed(what);
}

using Clock = std::chrono::steady_clock;

double SecondsSince(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string Fixed(double v, int digits = 4) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(digits);
  out << v;
  return out.str();
}

std::string Sci(double v) {
  std::ostringstream out;
  out.setf(std::ios::scientific);
  out.precision(2);
  out << v;
  return out.str();
}

std::string Normalization() {
  const auto start = Clock::now();
  Normalizer n(ContractionMap::Load(test::DataPath("contractions.tsv")));
  auto tokens = [&](std::string_view text) {
    auto r = n.Normalize(text);
    Require(std::holds_alternative<NormalizedPost>(r), "dropped: " + std::string(text));
    return std::get<NormalizedPost>(r).tokens;
  };
  using Tokens = std::vector<std::string>;
  Require(tokens("I've") == Tokens{"i", "have"}, "I've must become i have");
  Require(tokens("Looong") == Tokens{"long"}, "Looong must become long");
  Require(std::holds_alternative<Dropped>(n.Normalize("I was diagnosed today")),
          "post with diagnosed must be dropped");

  std::mt19937_64 rng(20240501);
  int kept = 0;
  for (int i = 0; i < 10000; ++i) {
    const std::string tweet = oracle::RandomTweet(rng);
    auto first = n.Normalize(tweet);
    const auto* post = std::get_if<NormalizedPost>(&first);
    if (post == nullptr) continue;
    ++kept;
    auto second = n.Normalize(post->text);
    Require(std::holds_alternative<NormalizedPost>(second) &&
                std::get<NormalizedPost>(second).tokens == post->tokens,
            "not idempotent on: " + tweet);
  }
  const double secs = SecondsSince(start);
  Require(secs < kNormalizeSeconds, "took " + Fixed(secs, 2) + " s");
  return "goldens exact; 10000 fuzz tweets idempotent (" + std::to_string(kept) +
         " kept); " + Fixed(secs, 2) + " s";
}

std::string Kappa() {
  std::mt19937_64 rng(31);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const int len = std::uniform_int_distribution<int>(1, 60)(rng);
    const double pa = std::uniform_real_distribution<double>(0, 1)(rng);
    const double pb = std::uniform_real_distribution<double>(0, 1)(rng);
    std::bernoulli_distribution da(pa), db(pb);
    std::vector<std::uint8_t> a(len), b(len);
    for (int j = 0; j < len; ++j) {
      a[j] = da(rng);
      b[j] = i % 4 == 0 ? a[j] : db(rng);  // a quarter share structure
    }
    worst = std::max(worst, std::abs(CohenKappaBinary(a, b) - oracle::Kappa(a, b)));
    Require(CohenKappaBinary(a, a) == 1.0, "kappa(a,a) != 1");
  }
  Require(worst <= kKappaTolerance, "max deviation " + Sci(worst));
  return "1000 pairs, max |diff| " + Sci(worst) + "; kappa(a,a)=1";
}

std::string Mvcp() {
  std::mt19937_64 rng(41);
  for (int i = 0; i < 500; ++i) {
    auto panel = fixture::RandomPanel(rng);
    auto expect = MvcpAggregate(panel.records, panel.n_annotators);
    std::shuffle(panel.records.begin(), panel.records.end(), rng);
    Require(MvcpAggregate(panel.records, panel.n_annotators) == expect,
            "permutation changed the result");
  }
  for (int i = 0; i < 500; ++i) {
    auto panel = fixture::UnanimousPanel(rng);
    Require(MvcpAggregate(panel.records, panel.n_annotators) == panel.expected,
            "unanimous panel not reproduced");
  }
  for (int i = 0; i < 500; ++i) {
    auto panel = fixture::NoMajorityPanel(rng, true);
    Require(MvcpAggregate(panel.records, panel.n_annotators) == panel.expected,
            "clinician fallback not applied");
  }
  for (int i = 0; i < 500; ++i) {
    auto panel = fixture::NoMajorityPanel(rng, false);
    Require(!MvcpAggregate(panel.records, panel.n_annotators).has_value(),
            "no-clinician panel without majority must be unlabelled");
  }
  return "4 families x 500 panels";
}

Eigen::MatrixXd Gaussian(std::mt19937_64& rng, int rows, int cols, double scale) {
  std::normal_distribution<double> g(0.0, scale);
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = g(rng);
  }
  return m;
}

std::string Classifier() {
  std::mt19937_64 rng(51);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + rng() % 8, l = 1 + rng() % 4, d = 1 + rng() % 6;
    Eigen::MatrixXd X = Gaussian(rng, n, d, 1.0), W = Gaussian(rng, l, d, 0.7);
    Eigen::VectorXd b = Gaussian(rng, l, 1, 0.5);
    Eigen::MatrixXd Y(n, l);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < l; ++j) Y(i, j) = rng() % 2;
    }
    Eigen::MatrixXd gW, nW;
    Eigen::VectorXd gb, nb;
    BceGradient(W, b, X, Y, 0.0, gW, gb);
    oracle::NumericGradient(
        [&](const Eigen::MatrixXd& w, const Eigen::VectorXd& bb) {
          return BceLoss(w, bb, X, Y);
        },
        W, b, 1e-5, nW, nb);
    const double diff = std::sqrt((gW - nW).squaredNorm() + (gb - nb).squaredNorm());
    const double scale = std::sqrt(gW.squaredNorm() + gb.squaredNorm()) +
                         std::sqrt(nW.squaredNorm() + nb.squaredNorm());
    worst = std::max(worst, diff / std::max(scale, 1e-12));
  }
  Require(worst < kGradientRelError, "gradient relative error " + Sci(worst));

  // Label l is present iff coordinate l-1 is positive.
  const int kN = 200, kDim = 12;
  Eigen::MatrixXd X = Gaussian(rng, kN, kDim, 0.3);
  std::vector<LabelSet> labels;
  std::uniform_real_distribution<double> margin(0.5, 1.5);
  for (int i = 0; i < kN; ++i) {
    LabelSet s;
    for (int l = 0; l < 3; ++l) {
      const bool on = rng() % 2;
      X(i, l) = on ? margin(rng) : -margin(rng);
      if (on) s.insert(l + 1);
    }
    labels.push_back(s);
  }
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.learning_rate = 2.0;
  const auto start = Clock::now();
  Model m = Train(X, labels, {1, 2, 3}, cfg);
  const double secs = SecondsSince(start);
  std::vector<LabelId> space{1, 2, 3};
  const double f1 = ClassificationReport(labels, PredictLabels(m, X), space).macro.f1;
  Require(f1 >= kSeparableMinMacroF1, "separable train macro-F1 " + Fixed(f1));
  Require(secs < kTrainSeconds, "training took " + Fixed(secs, 2) + " s");
  return "max grad rel err " + Sci(worst) + "; separable macro-F1 " + Fixed(f1) +
         " in " + Fixed(secs, 3) + " s";
}

std::string Rules() {
  std::mt19937_64 rng(61);
  int datasets = 0;
  for (int n = 1; n <= 100; ++n) {
    for (int rep = 0; rep < 5; ++rep, ++datasets) {
      std::vector<LabelSet> d;
      for (int i = 0; i < n; ++i) d.push_back(fixture::RandomSubset(rng, 10, 0.3));
      LabelSet weak, strong;
      for (LabelId l = 1; l <= 10; ++l) {
        const int r = rng() % 3;
        if (r == 0) weak.insert(l);
        if (r == 1) strong.insert(l);
      }
      auto got = MineRules(d, weak, strong);
      auto want = oracle::Rules(d, weak, strong);
      Require(got.size() == want.size(), "rule count differs at n=" + std::to_string(n));
      for (std::size_t i = 0; i < got.size(); ++i) {
        Require(got[i].antecedent == want[i].antecedent &&
                    got[i].consequent == want[i].consequent &&
                    std::abs(*got[i].support - want[i].support) < 1e-12 &&
                    std::abs(*got[i].confidence - want[i].confidence) < 1e-12,
                "rule differs at n=" + std::to_string(n));
      }
    }
  }
  auto table = LoadRules(test::DataPath("reference_rules.csv"));
  Require(ApplyRules(LabelSet{4}, table) == LabelSet{3, 4, 8, 10}, "{4} expansion");
  Require(ApplyRules(LabelSet{1, 9}, table) == LabelSet{1, 2, 6, 8, 9, 10},
          "{1,9} expansion");
  return std::to_string(datasets) + " datasets of 1-100 posts match; {4}->{3,4,8,10}, "
         "{1,9}->{1,2,6,8,9,10}";
}

std::string Evaluation() {
  std::mt19937_64 rng(71);
  const std::vector<LabelId> symptoms{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + rng() % 40;
    std::vector<LabelSet> gold, pred;
    for (int i = 0; i < n; ++i) {
      gold.push_back(fixture::RandomSubset(rng, 10, 0.25));
      pred.push_back(fixture::RandomSubset(rng, 10, 0.25));
    }
    auto got = ClassificationReport(gold, pred, symptoms);
    auto want = oracle::Report(gold, pred, symptoms);
    for (const auto& row : got.rows) {
      const auto& w = want.at(row.label);
      worst = std::max({worst, std::abs(row.precision - w.precision),
                        std::abs(row.recall - w.recall), std::abs(row.f1 - w.f1)});
      Require(row.support == w.support, "support differs");
    }
  }
  Require(worst <= kReportTolerance, "max deviation " + Sci(worst));
  std::vector<LabelSet> gold{LabelSet{1}}, pred{LabelSet{1}};
  std::vector<LabelId> two{1, 2};
  const std::string text = ReportText(ClassificationReport(gold, pred, two));
  std::istringstream lines(text);
  std::string line;
  bool zero_row = false;
  while (std::getline(lines, line)) {
    if (line.rfind("2 ", 0) == 0) {
      zero_row = line.find("0.00      0.00      0.00") != std::string::npos;
    }
  }
  Require(zero_row && text.find("nan") == std::string::npos, "zero row not 0.00:\n" + text);
  return "1000 fixtures, max |diff| " + Sci(worst) + "; empty row prints 0.00";
}

std::string SslEndToEnd() {
  const auto start = Clock::now();
  SyntheticOptions opts;
  opts.seed = 1;
  opts.seed_posts = 300;
  opts.pool_posts = 2000;
  opts.test_posts = 500;
  const SyntheticCorpus corpus = GenerateSynthetic(opts);
  const Config run_conf = Config::Load(test::DataPath("run.conf"));
  const SslConfig config = SslConfig::FromConfig(run_conf);
  const auto provider = MakeProvider(run_conf);
  Require(provider->signature().rfind("hashed", 0) == 0, "expected the hashed provider");
  const auto run_dir = test::ScratchDir("acceptance-ssl");
  SslInputs inputs{corpus.seed, corpus.pool, corpus.external, corpus.descriptors, nullptr};
  const SslState state = RunSsl(config, inputs, *provider, run_dir);

  // (a) conservation and no seed-test leakage
  CheckLedger(state.ledger);
  const auto test_ids = state.ledger.IdSet(bucket::kSeedTest);
  for (const auto& [name, entry] : state.ledger.entries()) {
    if (name == bucket::kSeedTest) continue;
    for (const auto& id : entry.ids) {
      Require(!test_ids.count(id) || name == bucket::kCandidatePool ||
                  name == bucket::kExternal,
              "seed-test id " + id + " in " + name);
    }
  }
  if (state.ledger.Has(bucket::kFinal)) {
    std::size_t parts = state.ledger.Count(bucket::kSeedTrain) +
                        state.ledger.Count(bucket::kZslUnion) +
                        (state.ledger.Has("step5-union") ? state.ledger.Count("step5-union") : 0);
    Require(parts == state.ledger.Count(bucket::kFinal), "final != sum of parts");
  }
  // (b) monotone growth
  for (std::size_t i = 1; i < state.train_sizes.size(); ++i) {
    Require(state.train_sizes[i] >= state.train_sizes[i - 1], "training set shrank");
  }
  // (c) held-out synthetic test
  const Model first = LoadModel(run_dir / "models" / "dsd-1.json");
  const Model& final_model = state.current_model;
  const std::vector<LabelId> symptoms = SymptomLabels();
  std::vector<LabelSet> gold;
  for (const auto& p : corpus.test) gold.push_back(p.labels.value_or(LabelSet{}));
  auto f1_of = [&](const Model& m) {
    const auto X = EmbedPosts(corpus.test, *provider, m.train_config.max_seq_len);
    return ClassificationReport(gold, PredictLabels(m, X), symptoms).macro.f1;
  };
  const double f1_first = f1_of(first), f1_final = f1_of(final_model);
  Require(f1_final >= f1_first,
          "held-out macro-F1 fell " + Fixed(f1_first) + " -> " + Fixed(f1_final));
  // (d) stop reason
  Require(state.stop_reason.has_value(), "no stop_reason recorded");
  const double secs = SecondsSince(start);
  Require(secs < kSslSeconds, "took " + Fixed(secs, 1) + " s");

  std::string sizes;
  for (auto s : state.train_sizes) sizes += (sizes.empty() ? "" : "->") + std::to_string(s);
  return "held-out macro-F1 " + Fixed(f1_first) + " -> " + Fixed(f1_final) + " (" +
         state.current_stage + "); seed-test " + Fixed(state.metric_history.front().macro_f1) +
         " -> " + Fixed(state.metric_history.back().macro_f1) + "; train " + sizes +
         "; stop " + StopReasonName(*state.stop_reason) + "; " + Fixed(secs, 1) + " s";
}

std::vector<std::string> Range(const std::string& prefix, int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

std::vector<std::string> Concat(std::vector<std::vector<std::string>> parts) {
  std::vector<std::string> out;
  for (auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

std::string LedgerArithmetic() {
  DatasetLedger ledger;
  ledger.RecordIds(bucket::kSeedTrain, bucket::kSeedTrain, Range("s", 377));
  ledger.RecordIds(bucket::kSeedTest, bucket::kSeedTest, Range("t", 162));
  ledger.RecordIds(bucket::kCandidatePool, bucket::kCandidatePool, Range("c", 3000));
  ledger.RecordIds(bucket::kExternal, bucket::kExternal, Range("x", 2000));
  ledger.RecordIds(bucket::kZslUnion, bucket::kZslUnion, Range("c", 2491));
  ledger.RecordIds(bucket::kFinal, bucket::kFinal,
                   Concat({Range("s", 377), Range("c", 2491)}));
  CheckLedger(ledger);
  Require(ledger.Count(bucket::kFinal) == 2868, "377 + 2491 != 2868");
  ledger.RecordIds("step5-union", bucket::kZslUnion, Range("x", 1699));
  ledger.RecordIds(bucket::kFinal, bucket::kFinal,
                   Concat({Range("s", 377), Range("c", 2491), Range("x", 1699)}));
  CheckLedger(ledger);
  Require(ledger.Count(bucket::kFinal) == 4567, "377 + 2491 + 1699 != 4567");

  std::mt19937_64 rng(81);
  Dataset posts;
  for (int i = 0; i < 539; ++i) {
    LabelSet s = fixture::RandomSubset(rng, 10, 0.15);
    if (s.empty()) s.insert(LabelId(1 + rng() % 10));
    Post p;
    p.id = "p" + std::to_string(i);
    p.labels = s;
    posts.push_back(p);
  }
  auto split = SplitSeed(posts, 0.7, 7);
  Require(split.train.size() == 377 && split.test.size() == 162,
          "split " + std::to_string(split.train.size()) + "/" +
              std::to_string(split.test.size()));
  return "2868 and 4567 conserved; 539 -> 377/162";
}

std::string Zsl() {
  DescriptorEmbeddings plane;
  const double r = 1.0 / std::sqrt(2.0);
  plane[1] = {{r, r}};
  plane[2] = {{0.0, 1.0}};
  for (LabelId l = 3; l <= 10; ++l) plane[l] = {{-1.0, 0.0}};
  auto out = ZslLabel(Vector{1.0, 0.0}, plane, {1.0, 3});
  Require(out.size() == 1 && out[0].label == 1 &&
              std::abs(out[0].distance - (1.0 - r)) <= kZslTolerance,
          "2-D fixture distance");

  std::mt19937_64 rng(91);
  std::normal_distribution<double> g;
  auto random_vec = [&] {
    Vector v(6);
    for (auto& x : v) x = g(rng);
    return v;
  };
  DescriptorEmbeddings d;
  for (LabelId l = 1; l <= 10; ++l) {
    for (int k = 0; k < 1 + static_cast<int>(rng() % 3); ++k) d[l].push_back(random_vec());
  }
  for (int i = 0; i < 500; ++i) {
    Vector v = random_vec();
    const double hi = std::uniform_real_distribution<double>(0.0, 2.0)(rng);
    const double lo = std::uniform_real_distribution<double>(0.0, hi)(rng);
    Require(LabelsOf(ZslLabel(v, d, {lo, 10})).IsSubsetOf(LabelsOf(ZslLabel(v, d, {hi, 10}))),
            "threshold monotonicity");
    auto scaled = d;
    for (auto& [l, vs] : scaled) {
      for (auto& x : vs) {
        const double c = std::exp(std::uniform_real_distribution<double>(-5, 5)(rng));
        for (auto& e : x) e *= c;
      }
    }
    auto a = ZslLabel(v, d, {1.2, 4}), b = ZslLabel(v, scaled, {1.2, 4});
    Require(a.size() == b.size(), "scale changed label count");
    for (std::size_t j = 0; j < a.size(); ++j) {
      Require(a[j].label == b[j].label &&
                  std::abs(a[j].distance - b[j].distance) <= kZslTolerance,
              "scale changed distances");
    }
    const LabelId pick = LabelId(1 + rng() % 10);
    auto self = ZslLabel(d[pick][0], d, {1.0, 10});
    Require(!self.empty() && std::abs(self[0].distance) <= kZslTolerance,
            "identity distance not zero");
  }
  return "2-D fixture " + Fixed(out[0].distance, 10) +
         "; monotonicity, scale invariance, identity on 500 draws";
}

PlanConfig ServicePlan(double rate, std::uint64_t seed) {
  PlanConfig p;
  p.seed = seed;
  p.duplicate_rate = rate;
  p.annotators = {{"clin1", true, 0}, {"clin2", true, 1}, {"lay1", false, 0},
                  {"lay2", false, 0}};
  return p;
}

Dataset ServicePosts(std::size_t n) {
  Dataset d = fixture::Posts("p", n);
  for (auto& p : d) p.text = "text " + p.id;
  return d;
}

std::vector<std::pair<std::string, int>> AnswerSequence(AnnotationService& s,
                                                        const std::string& who, int slots,
                                                        std::mt19937_64* rng) {
  std::vector<std::pair<std::string, int>> seq;
  for (int i = 0; i < slots; ++i) {
    auto batch = s.NextBatch(who, 1);
    if (batch.empty()) break;
    seq.emplace_back(batch[0].post_id, batch[0].round);
    s.Submit(who, batch[0].post_id, batch[0].round,
             rng ? fixture::RandomLabelSet(*rng) : LabelSet{2});
  }
  return seq;
}

std::string AnnotationContract() {
  // Exactly once, in-process and over HTTP.
  AnnotationService once(ServicePosts(10), ServicePlan(0.0, 1));
  auto item = once.NextBatch("lay1", 1).at(0);
  std::atomic<int> accepted{0};
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&] {
      try {
        once.Submit("lay1", item.post_id, 1, LabelSet{1});
        ++accepted;
      } catch (const Error&) {
      }
    });
  }
  for (auto& t : threads) t.join();
  Require(accepted == 1 && once.Records().size() == 1, "concurrent submit not exactly once");

  AnnotationServer server(once, Guideline::Load(test::DataPath("guideline.json")));
  const int port = server.BindToAnyPort();
  std::thread listener([&] { server.ListenAfterBind(); });
  server.WaitUntilReady();
  httplib::Client client("127.0.0.1", port);
  auto next = once.NextBatch("lay2", 1).at(0);
  const std::string body =
      nlohmann::json{{"annotator_id", "lay2"}, {"post_id", next.post_id}, {"labels", {3}}}
          .dump();
  auto first = client.Post("/api/annotations", body, "application/json");
  auto second = client.Post("/api/annotations", body, "application/json");
  server.Stop();
  listener.join();
  Require(first && first->status == 201, "first HTTP submit not 201");
  Require(second && second->status == 409, "repeated HTTP submit not 409");
  Require(once.Records().size() == 2, "HTTP submit persisted more than once");

  // Seeded duplicate injection.
  int duplicates = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    AnnotationService a(ServicePosts(200), ServicePlan(0.1, seed));
    AnnotationService b(ServicePosts(200), ServicePlan(0.1, seed));
    auto sa = AnswerSequence(a, "clin1", 100, nullptr);
    auto sb = AnswerSequence(b, "clin1", 100, nullptr);
    Require(sa == sb, "same seed gave different assignments");
    for (const auto& [post, round] : sa) duplicates += round > 1;
  }
  const auto [lo, hi] = oracle::BinomialInterval(990, 0.1, 1e-4);
  Require(duplicates >= lo && duplicates <= hi,
          "duplicate count " + std::to_string(duplicates) + " outside [" +
              std::to_string(lo) + "," + std::to_string(hi) + "]");

  // Export equals offline aggregation.
  AnnotationService panel(ServicePosts(40), ServicePlan(0.1, 3));
  std::mt19937_64 rng(101);
  for (const char* who : {"clin1", "clin2", "lay1", "lay2"}) {
    AnswerSequence(panel, who, 30, &rng);
  }
  const auto offline = MvcpAggregateAll(panel.Records(), panel.panel_size());
  const auto exported = panel.ExportMvcp();
  Require(exported.size() == offline.size(), "export size differs");
  for (const auto& p : exported) {
    Require(p.labels == offline.at(p.id), "export differs on " + p.id);
  }
  return "8 racing submits -> 1 record; HTTP 201 then 409; 10 seeds reproducible, " +
         std::to_string(duplicates) + " duplicates in 990 slots; export == offline on " +
         std::to_string(exported.size()) + " posts";
}

}  // namespace
}  // namespace dsd

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<std::string()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "normalization goldens and fuzz idempotence", dsd::Normalization},
      {2, "kappa oracle equivalence", dsd::Kappa},
      {3, "MVCP property families", dsd::Mvcp},
      {4, "classifier gradient check and separable training", dsd::Classifier},
      {5, "rule mining oracle and reference rule expansion", dsd::Rules},
      {6, "classification report oracle", dsd::Evaluation},
      {7, "SSL end-to-end synthetic run", dsd::SslEndToEnd},
      {8, "ledger arithmetic fixtures", dsd::LedgerArithmetic},
      {9, "ZSL property suite", dsd::Zsl},
      {10, "annotation service contract", dsd::AnnotationContract},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    std::string detail;
    bool ok = false;
    try {
      detail = c.run();
      ok = true;
    } catch (const std::exception& e) {
      detail = e.what();
    }
    failures += !ok;
    std::cout << (ok ? "PASS " : "FAIL ") << c.id << ' ' << c.name << ": " << detail
              << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
