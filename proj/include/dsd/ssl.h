#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "dsd/classifier.h"
#include "dsd/embeddings.h"
#include "dsd/evaluation.h"
#include "dsd/rules.h"
#include "dsd/store.h"
#include "dsd/zsl.h"

namespace dsd {

class Config;
class Normalizer;

// Ledger bucket tags.
namespace bucket {
inline constexpr const char* kSeedTrain = "seed-train";
inline constexpr const char* kSeedTest = "seed-test";
inline constexpr const char* kEdPool = "ed-pool";
inline constexpr const char* kNoedPool = "noed-pool";
inline constexpr const char* kGibberish = "gibberish";
inline constexpr const char* kCandidatePool = "candidate-pool";
inline constexpr const char* kExternal = "external";
inline constexpr const char* kDpdControls = "dpd-controls";
inline constexpr const char* kDpdPositive = "dpd-positive";
inline constexpr const char* kConfident = "harvested-confident";
inline constexpr const char* kLessConfident = "harvested-less-confident";
inline constexpr const char* kZslUnion = "zsl-union";
inline constexpr const char* kFinal = "final";
}  // namespace bucket

struct SeedPartition {
  Dataset original;  // posts with at least one symptom; ED label stripped
  Dataset ed_pool;
  Dataset noed_pool;
  Dataset gibberish;
  std::size_t unlabelled = 0;  // excluded posts without a label set
};

// Partitions MVCP-labelled posts by label set.
SeedPartition FilterSeed(std::span<const Post> mvcp_labelled);

struct SeedSplit {
  Dataset train;
  Dataset test;
  std::vector<std::string> warnings;
};

// Iterative multi-label stratification. Labels are processed scarcest
// first; each post goes to the subset that still wants most of that label,
// then to the one with more room, then by a seeded coin. The train subset
// receives exactly floor(train_frac * N) posts. Posts carrying a label with
// fewer than two examples go to train and raise a warning.
SeedSplit SplitSeed(std::span<const Post> posts, double train_frac, std::uint64_t seed);

// DPD filter: posts the ensemble votes depression on, in order. Without an
// ensemble (nullptr) every post passes.
Dataset DpdFilter(const DpdEnsemble* ensemble, const DescriptorEmbeddings* descriptors,
                  std::span<const Post> pool, const EmbeddingProvider& provider,
                  int max_seq_len);

struct HarvestResult {
  Dataset confident;       // labelled with the model prediction
  Dataset less_confident;  // empty prediction, unlabelled
};

// DPD-filters the pool, then predicts every survivor with `model`.
HarvestResult Harvest(const Model& model, const DpdEnsemble* dpd,
                      const DescriptorEmbeddings* descriptors,
                      std::span<const Post> pool, const EmbeddingProvider& provider,
                      int dpd_max_seq_len);

// ZSL labels for each post; posts that embed to zero get no labels.
std::map<std::string, std::vector<ScoredLabel>> ZslPredictPosts(
    std::span<const Post> posts, const DescriptorEmbeddings& descriptors,
    const EmbeddingProvider& provider, const ZslOptions& options);

std::map<std::string, LabelSet> ModelPredictPosts(std::span<const Post> posts,
                                                  const Model& model,
                                                  const EmbeddingProvider& provider);

// Per post, model labels union ZSL labels; posts with an empty union are
// dropped. Provenance becomes zsl-union.
Dataset ZslUnion(std::span<const Post> pool,
                 const std::map<std::string, LabelSet>& model_preds,
                 const std::map<std::string, std::vector<ScoredLabel>>& zsl_preds);

enum class StopReason { kPoolExhausted, kNoGain };
std::string StopReasonName(StopReason reason);

struct MetricPoint {
  int iteration = 0;
  std::string stage;
  double macro_f1 = 0.0;
  double weighted_f1 = 0.0;
};

// pool_remaining == 0 -> pool-exhausted; otherwise a macro-F1 gain of the
// latest point over the previous one below epsilon -> no-gain.
std::optional<StopReason> StoppingCheck(std::span<const MetricPoint> history,
                                        double epsilon, std::size_t pool_remaining);

struct LedgerEntry {
  std::string tag;
  std::vector<std::string> ids;
};

class DatasetLedger {
 public:
  void Record(const std::string& name, const std::string& tag,
              std::span<const Post> posts);
  void RecordIds(const std::string& name, const std::string& tag,
                 std::vector<std::string> ids);
  bool Has(const std::string& name) const { return entries_.count(name) != 0; }
  const LedgerEntry& at(const std::string& name) const;
  std::size_t Count(const std::string& name) const;
  std::set<std::string> IdSet(const std::string& name) const;
  const std::map<std::string, LedgerEntry>& entries() const { return entries_; }

 private:
  std::map<std::string, LedgerEntry> entries_;
};

// Hard checks: seed-train and seed-test disjoint; no seed-test id in any
// training set; harvested ids come from a declared pool; the final set is
// the disjoint union of its parts. Throws Error(kLeakage) or
// Error(kConflict) naming the first failure.
void CheckLedger(const DatasetLedger& ledger);

struct SslConfig {
  double train_frac = 0.7;
  std::uint64_t split_seed = 7;
  std::uint64_t control_seed = 11;
  double epsilon = 0.01;
  ZslOptions zsl;
  TrainConfig dsd;
  TrainConfig dpd{20, 32, 30, 0.1, 42, 0.0};
  int dpd_members = 3;
  bool dpd_zsl_voter = true;
  double recall_floor = 0.2;
  bool ablation_retrain_step2 = false;
  bool ablation_step3a = false;

  static SslConfig FromConfig(const Config& config);
  // Every key FromConfig understands, including the embedding.* keys.
  static std::set<std::string> KnownKeys();
};

struct SslInputs {
  Dataset seed;      // MVCP-labelled
  Dataset pool;      // unlabelled candidate pool
  Dataset external;  // unlabelled external less-confident posts
  DescriptorCorpus descriptors;
  const Normalizer* descriptor_normalizer = nullptr;
};

struct SslState {
  int iteration = 0;
  std::vector<MetricPoint> metric_history;
  std::vector<std::size_t> train_sizes;  // training-set size per iteration
  DatasetLedger ledger;
  std::optional<StopReason> stop_reason;
  Model current_model;
  std::string current_stage;
  std::vector<LabelRule> rules;
  std::optional<MetricPoint> rule_augmented;
  std::map<std::string, MetricPoint> ablations;
  std::vector<std::string> warnings;
  std::string last_completed_stage;
};

std::string SslStateToJson(const SslState& state);
std::string LedgerToJson(const DatasetLedger& ledger);

// The full self-training loop with a stopping check after every trained
// model. When run_dir is non-empty, state and ledger are written there after
// each stage and a failure snapshot is written before an error propagates.
SslState RunSsl(const SslConfig& config, const SslInputs& inputs,
                const EmbeddingProvider& provider,
                const std::filesystem::path& run_dir = {});

}  // namespace dsd
