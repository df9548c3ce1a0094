#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>
#include <json.hpp>

#include "dsd/error.h"
#include "dsd/ssl.h"
#include "dsd/synthetic.h"
#include "fixtures.h"
#include "test_paths.h"

namespace dsd {
namespace {

Post Labelled(const std::string& id, std::optional<LabelSet> labels) {
  Post p;
  p.id = id;
  p.tokens = {"post", id};
  p.text = "post " + id;
  p.labels = labels;
  return p;
}

TEST(FilterSeedTest, PartitionsByLabelSet) {
  Dataset seed;
  for (int i = 0; i < 539; ++i) {
    seed.push_back(Labelled("s" + std::to_string(i),
                            i % 3 == 0 ? LabelSet{1, 11} : LabelSet{LabelId(1 + i % 10)}));
  }
  for (int i = 0; i < 135; ++i) seed.push_back(Labelled("e" + std::to_string(i), LabelSet{11}));
  for (int i = 0; i < 785; ++i) seed.push_back(Labelled("n" + std::to_string(i), LabelSet{12}));
  for (int i = 0; i < 41; ++i) seed.push_back(Labelled("g" + std::to_string(i), LabelSet{13}));
  seed.push_back(Labelled("u", std::nullopt));
  auto part = FilterSeed(seed);
  EXPECT_EQ(part.original.size(), 539u);
  EXPECT_EQ(part.ed_pool.size(), 135u);
  EXPECT_EQ(part.noed_pool.size(), 785u);
  EXPECT_EQ(part.gibberish.size(), 41u);
  EXPECT_EQ(part.unlabelled, 1u);
  for (const auto& p : part.original) EXPECT_FALSE(p.labels->contains(11)) << p.id;
  EXPECT_EQ(part.ed_pool[0].provenance, bucket::kEdPool);

  auto split = SplitSeed(part.original, 0.7, 7);
  EXPECT_EQ(split.train.size(), 377u);
  EXPECT_EQ(split.test.size(), 162u);
}

TEST(SplitSeedTest, SizesDisjointnessAndStratification) {
  std::mt19937_64 rng(19);
  Dataset posts;
  for (int i = 0; i < 539; ++i) {
    LabelSet s = fixture::RandomSubset(rng, 10, 0.15);
    if (s.empty()) s.insert(LabelId(1 + rng() % 10));
    posts.push_back(Labelled("p" + std::to_string(i), s));
  }
  auto split = SplitSeed(posts, 0.7, 7);
  ASSERT_EQ(split.train.size(), 377u);
  ASSERT_EQ(split.test.size(), 162u);
  auto train_ids = Ids(split.train), test_ids = Ids(split.test);
  for (const auto& id : test_ids) EXPECT_FALSE(train_ids.count(id));
  EXPECT_EQ(train_ids.size() + test_ids.size(), 539u);
  for (LabelId l = 1; l <= 10; ++l) {
    int total = 0, in_test = 0;
    for (const auto& p : posts) total += p.labels->contains(l);
    for (const auto& p : split.test) in_test += p.labels->contains(l);
    EXPECT_NEAR(in_test, 0.3 * total, 3.0) << "label " << l;
  }
  auto again = SplitSeed(posts, 0.7, 7);
  EXPECT_EQ(Ids(again.test), test_ids);
}

TEST(SplitSeedTest, SmallAndDegenerateInputs) {
  Dataset ten;
  for (int i = 0; i < 10; ++i) ten.push_back(Labelled("t" + std::to_string(i), LabelSet{4}));
  auto split = SplitSeed(ten, 0.7, 1);
  EXPECT_EQ(split.train.size(), 7u);
  EXPECT_EQ(split.test.size(), 3u);
  EXPECT_THROW(SplitSeed(ten, 1.0, 1), Error);
  EXPECT_THROW(SplitSeed(ten, 0.0, 1), Error);

  ten.push_back(Labelled("rare", LabelSet{4, 9}));
  auto with_rare = SplitSeed(ten, 0.5, 3);
  EXPECT_TRUE(Ids(with_rare.train).count("rare"));
  ASSERT_EQ(with_rare.warnings.size(), 1u);
  EXPECT_NE(with_rare.warnings[0].find("label 9"), std::string::npos);
}

Model ConstantModel(const HashedNgramEmbedder& provider, double bias_for_2) {
  Model m;
  m.label_space = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  m.W = Eigen::MatrixXd::Zero(10, static_cast<Eigen::Index>(provider.dim()));
  m.b = Eigen::VectorXd::Constant(10, -5.0);
  m.b(1) = bias_for_2;
  return m;
}

TEST(HarvestTest, SplitsByEmptyPrediction) {
  HashedNgramEmbedder provider(64);
  Dataset pool;
  for (int i = 0; i < 20; ++i) pool.push_back(Labelled("c" + std::to_string(i), std::nullopt));
  auto none = Harvest(ConstantModel(provider, -5.0), nullptr, nullptr, pool, provider, 30);
  EXPECT_TRUE(none.confident.empty());
  ASSERT_EQ(none.less_confident.size(), 20u);
  EXPECT_FALSE(none.less_confident[0].labels.has_value());
  EXPECT_EQ(none.less_confident[0].provenance, bucket::kLessConfident);

  auto two = Harvest(ConstantModel(provider, 5.0), nullptr, nullptr, pool, provider, 30);
  ASSERT_EQ(two.confident.size(), 20u);
  EXPECT_TRUE(two.less_confident.empty());
  for (const auto& p : two.confident) EXPECT_EQ(*p.labels, LabelSet{2});
}

TEST(ZslUnionTest, UnionsAndDropsEmpty) {
  Dataset pool{Labelled("a", std::nullopt), Labelled("b", std::nullopt),
               Labelled("c", std::nullopt), Labelled("d", std::nullopt)};
  std::map<std::string, LabelSet> model{{"a", LabelSet{1}}, {"b", LabelSet{}},
                                        {"c", LabelSet{}}, {"d", LabelSet{5}}};
  std::map<std::string, std::vector<ScoredLabel>> zsl{
      {"a", {{3, 0.2}}}, {"b", {{7, 0.4}, {1, 0.5}}}, {"c", {}}, {"d", {{5, 0.1}}}};
  auto out = ZslUnion(pool, model, zsl);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0].id, "a");
  EXPECT_EQ(*out[0].labels, (LabelSet{1, 3}));
  EXPECT_EQ(*out[1].labels, (LabelSet{1, 7}));
  EXPECT_EQ(*out[2].labels, LabelSet{5});
  EXPECT_EQ(out[2].provenance, bucket::kZslUnion);
}

TEST(StoppingCheckTest, GainAndExhaustion) {
  std::vector<MetricPoint> h{{1, "dsd-1", 0.31, 0}, {2, "dsd-2", 0.35, 0}};
  EXPECT_FALSE(StoppingCheck(h, 0.01, 100).has_value());
  h = {{1, "dsd-1", 0.45, 0}, {2, "dsd-2", 0.451, 0}};
  EXPECT_EQ(StoppingCheck(h, 0.01, 100), StopReason::kNoGain);
  h = {{1, "dsd-1", 0.2, 0}};
  EXPECT_FALSE(StoppingCheck(h, 0.01, 5).has_value());
  EXPECT_EQ(StoppingCheck(h, 0.01, 0), StopReason::kPoolExhausted);
  std::vector<MetricPoint> empty;
  EXPECT_THROW(StoppingCheck(empty, 0.01, 1), Error);
  EXPECT_EQ(StopReasonName(StopReason::kNoGain), "no-gain");
}

std::vector<std::string> IdRange(const std::string& prefix, int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

DatasetLedger FixtureLedger(bool with_step5) {
  DatasetLedger ledger;
  ledger.RecordIds(bucket::kSeedTrain, bucket::kSeedTrain, IdRange("s", 377));
  ledger.RecordIds(bucket::kSeedTest, bucket::kSeedTest, IdRange("t", 162));
  ledger.RecordIds(bucket::kCandidatePool, bucket::kCandidatePool, IdRange("c", 3000));
  ledger.RecordIds(bucket::kExternal, bucket::kExternal, IdRange("x", 2000));
  ledger.RecordIds(bucket::kZslUnion, bucket::kZslUnion, IdRange("c", 2491));
  std::vector<std::string> final_ids = IdRange("s", 377);
  auto u = IdRange("c", 2491);
  final_ids.insert(final_ids.end(), u.begin(), u.end());
  if (with_step5) {
    ledger.RecordIds("step5-union", bucket::kZslUnion, IdRange("x", 1699));
    auto x = IdRange("x", 1699);
    final_ids.insert(final_ids.end(), x.begin(), x.end());
  }
  ledger.RecordIds(bucket::kFinal, bucket::kFinal, final_ids);
  return ledger;
}

TEST(LedgerTest, ConservationFixtures) {
  auto two = FixtureLedger(false);
  EXPECT_NO_THROW(CheckLedger(two));
  EXPECT_EQ(two.Count(bucket::kFinal), 2868u);
  auto three = FixtureLedger(true);
  EXPECT_NO_THROW(CheckLedger(three));
  EXPECT_EQ(three.Count(bucket::kFinal), 4567u);
}

TEST(LedgerTest, DetectsLeakageAndBrokenUnions) {
  auto ledger = FixtureLedger(true);
  auto ids = ledger.at(bucket::kZslUnion).ids;
  ids.push_back("t5");
  ledger.RecordIds(bucket::kZslUnion, bucket::kZslUnion, ids);
  try {
    CheckLedger(ledger);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kLeakage);
    EXPECT_NE(e.detail().find("t5"), std::string::npos);
  }

  auto missing = FixtureLedger(true);
  auto f = missing.at(bucket::kFinal).ids;
  f.pop_back();
  missing.RecordIds(bucket::kFinal, bucket::kFinal, f);
  EXPECT_THROW(CheckLedger(missing), Error);

  auto stray = FixtureLedger(false);
  stray.RecordIds(bucket::kConfident, bucket::kConfident, {"nowhere"});
  EXPECT_THROW(CheckLedger(stray), Error);

  auto overlap = FixtureLedger(false);
  overlap.RecordIds(bucket::kSeedTest, bucket::kSeedTest, {"s1"});
  EXPECT_THROW(CheckLedger(overlap), Error);
}

SslConfig FastConfig() {
  SslConfig c;
  c.dsd.learning_rate = 20.0;
  c.dsd.epochs = 30;
  c.dpd.learning_rate = 20.0;
  c.dpd.epochs = 5;
  return c;
}

SslInputs SyntheticInputs(const SyntheticCorpus& corpus) {
  return SslInputs{corpus.seed, corpus.pool, corpus.external, corpus.descriptors, nullptr};
}

TEST(RunSslTest, EndToEndIsDeterministicAndPersists) {
  SyntheticOptions opts;
  opts.pool_posts = 600;
  opts.external_posts = 150;
  auto corpus = GenerateSynthetic(opts);
  HashedNgramEmbedder provider(256);
  auto dir = test::ScratchDir("ssl-run");
  auto a = RunSsl(FastConfig(), SyntheticInputs(corpus), provider, dir);
  auto b = RunSsl(FastConfig(), SyntheticInputs(corpus), provider);
  ASSERT_EQ(a.metric_history.size(), b.metric_history.size());
  for (std::size_t i = 0; i < a.metric_history.size(); ++i) {
    EXPECT_EQ(a.metric_history[i].macro_f1, b.metric_history[i].macro_f1);
  }
  ASSERT_TRUE(a.stop_reason.has_value());
  EXPECT_EQ(a.last_completed_stage, "step6");
  EXPECT_NO_THROW(CheckLedger(a.ledger));
  for (std::size_t i = 1; i < a.train_sizes.size(); ++i) {
    EXPECT_GE(a.train_sizes[i], a.train_sizes[i - 1]);
  }
  EXPECT_TRUE(std::filesystem::exists(dir / "state.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "ledger.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "rules.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "models" / "dsd-1.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "models" / "current.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "stages" / "01-step1.json"));
  EXPECT_FALSE(std::filesystem::exists(dir / "failure.json"));
  std::ifstream state(dir / "state.json");
  auto j = nlohmann::json::parse(state);
  EXPECT_EQ(j["last_completed_stage"], "step6");
}

TEST(RunSslTest, EmptyPoolsStopAfterFirstModel) {
  SyntheticOptions opts;
  opts.pool_posts = 0;
  opts.external_posts = 0;
  opts.seed_ed_frac = 0.0;
  auto corpus = GenerateSynthetic(opts);
  HashedNgramEmbedder provider(128);
  auto state = RunSsl(FastConfig(), SyntheticInputs(corpus), provider);
  EXPECT_EQ(state.stop_reason, StopReason::kPoolExhausted);
  EXPECT_EQ(state.metric_history.size(), 1u);
  EXPECT_EQ(state.current_stage, "dsd-1");
}

TEST(RunSslTest, FailureSnapshotOnError) {
  SyntheticOptions opts;
  opts.pool_posts = 50;
  auto corpus = GenerateSynthetic(opts);
  corpus.descriptors.descriptors.erase(7);
  HashedNgramEmbedder provider(64);
  auto dir = test::ScratchDir("ssl-failure");
  try {
    RunSsl(FastConfig(), SyntheticInputs(corpus), provider, dir);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kIncompleteCorpus);
  }
  std::ifstream in(dir / "failure.json");
  ASSERT_TRUE(in.good());
  auto j = nlohmann::json::parse(in);
  EXPECT_EQ(j["stage"], "descriptors");
  EXPECT_EQ(j["code"], ErrcName(Errc::kIncompleteCorpus));
}

}  // namespace
}  // namespace dsd
