#include "dsd/ssl.h"

#include <algorithm>
#include <array>
#include <cstdio>
#include <cmath>
#include <numeric>
#include <random>

#include <json.hpp>

#include "dsd/config.h"
#include "dsd/error.h"
#include "dsd/normalizer.h"

namespace dsd {
namespace {

using Json = nlohmann::json;

constexpr const char* kStep5Union = "step5-union";
constexpr const char* kAblationTag = "ablation";

HarvestResult SplitByPrediction(std::span<const Post> posts,
                                const std::map<std::string, LabelSet>& preds) {
  HarvestResult out;
  for (const auto& p : posts) {
    Post copy = p;
    const LabelSet& labels = preds.at(p.id);
    if (labels.empty()) {
      copy.labels.reset();
      copy.provenance = bucket::kLessConfident;
      out.less_confident.push_back(std::move(copy));
    } else {
      copy.labels = labels;
      copy.provenance = bucket::kConfident;
      out.confident.push_back(std::move(copy));
    }
  }
  return out;
}

Json MetricToJson(const MetricPoint& m) {
  return {{"iteration", m.iteration},
          {"stage", m.stage},
          {"macro_f1", m.macro_f1},
          {"weighted_f1", m.weighted_f1}};
}

std::set<std::string> Intersect(const std::set<std::string>& a,
                                const std::set<std::string>& b) {
  std::set<std::string> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::inserter(out, out.begin()));
  return out;
}

std::string FirstFew(const std::set<std::string>& ids) {
  std::string out;
  int n = 0;
  for (const auto& id : ids) {
    if (n++ == 5) return out + ",...";
    out += (out.empty() ? "" : ",") + id;
  }
  return out;
}

}  // namespace

SeedPartition FilterSeed(std::span<const Post> mvcp_labelled) {
  SeedPartition out;
  for (const auto& p : mvcp_labelled) {
    if (!p.labels || p.labels->empty()) {
      ++out.unlabelled;
      continue;
    }
    Post copy = p;
    if (p.labels->HasSymptom()) {
      copy.labels = p.labels->SymptomsOnly();
      out.original.push_back(std::move(copy));
    } else if (p.labels->contains(label::kEvidenceOfDepression)) {
      copy.provenance = bucket::kEdPool;
      out.ed_pool.push_back(std::move(copy));
    } else if (p.labels->contains(label::kNoEvidenceOfDepression)) {
      copy.provenance = bucket::kNoedPool;
      out.noed_pool.push_back(std::move(copy));
    } else {
      copy.provenance = bucket::kGibberish;
      out.gibberish.push_back(std::move(copy));
    }
  }
  return out;
}

SeedSplit SplitSeed(std::span<const Post> posts, double train_frac, std::uint64_t seed) {
  if (!(train_frac > 0.0 && train_frac < 1.0)) {
    throw Error(Errc::kInvalidArgument, "train_frac must lie strictly between 0 and 1");
  }
  const std::size_t n = posts.size();
  // The epsilon absorbs representation error such as 0.7 * 10 = 6.999...
  const auto n_train = static_cast<std::size_t>(std::floor(train_frac * n + 1e-9));
  std::array<std::size_t, 2> capacity{n_train, n - n_train};
  const std::array<double, 2> share{static_cast<double>(n_train) / std::max<std::size_t>(n, 1),
                                    static_cast<double>(n - n_train) / std::max<std::size_t>(n, 1)};

  std::vector<LabelSet> labels;
  std::array<int, label::kLast + 1> count{};
  for (const auto& p : posts) {
    labels.push_back(p.labels.value_or(LabelSet{}));
    for (LabelId l : labels.back().ids()) ++count[l];
  }
  std::array<std::array<double, label::kLast + 1>, 2> desired{};
  for (LabelId l = label::kFirst; l <= label::kLast; ++l) {
    desired[0][l] = count[l] * share[0];
    desired[1][l] = count[l] * share[1];
  }

  SeedSplit out;
  std::vector<int> assigned(n, -1);
  auto assign = [&](std::size_t i, int s) {
    assigned[i] = s;
    --capacity[static_cast<std::size_t>(s)];
    for (LabelId l : labels[i].ids()) desired[static_cast<std::size_t>(s)][l] -= 1.0;
  };

  for (LabelId l = label::kFirst; l <= label::kLast; ++l) {
    if (count[l] == 0 || count[l] >= 2) continue;
    out.warnings.push_back("label " + std::to_string(l) + " has " +
                           std::to_string(count[l]) + " post(s); kept in train");
    for (std::size_t i = 0; i < n; ++i) {
      if (assigned[i] == -1 && labels[i].contains(l)) assign(i, capacity[0] > 0 ? 0 : 1);
    }
  }

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::bernoulli_distribution coin(0.5);

  auto choose = [&](LabelId l) -> int {
    if (capacity[0] == 0) return 1;
    if (capacity[1] == 0) return 0;
    if (l != 0 && desired[0][l] != desired[1][l]) return desired[0][l] > desired[1][l] ? 0 : 1;
    if (capacity[0] != capacity[1]) return capacity[0] > capacity[1] ? 0 : 1;
    return coin(rng) ? 0 : 1;
  };

  while (true) {
    std::array<int, label::kLast + 1> remaining{};
    bool any_unassigned = false;
    for (std::size_t i : order) {
      if (assigned[i] != -1) continue;
      any_unassigned = true;
      for (LabelId l : labels[i].ids()) ++remaining[l];
    }
    if (!any_unassigned) break;
    LabelId scarcest = 0;
    for (LabelId l = label::kFirst; l <= label::kLast; ++l) {
      if (remaining[l] > 0 && (scarcest == 0 || remaining[l] < remaining[scarcest])) {
        scarcest = l;
      }
    }
    for (std::size_t i : order) {
      if (assigned[i] != -1) continue;
      if (scarcest != 0 && !labels[i].contains(scarcest)) continue;
      assign(i, choose(scarcest));
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    Post p = posts[i];
    if (assigned[i] == 0) {
      p.provenance = bucket::kSeedTrain;
      out.train.push_back(std::move(p));
    } else {
      p.provenance = bucket::kSeedTest;
      out.test.push_back(std::move(p));
    }
  }
  return out;
}

Dataset DpdFilter(const DpdEnsemble* ensemble, const DescriptorEmbeddings* descriptors,
                  std::span<const Post> pool, const EmbeddingProvider& provider,
                  int max_seq_len) {
  if (ensemble == nullptr) return Dataset(pool.begin(), pool.end());
  const Eigen::MatrixXd X = EmbedPosts(pool, provider, max_seq_len);
  Dataset out;
  std::vector<double> row(static_cast<std::size_t>(X.cols()));
  for (std::size_t i = 0; i < pool.size(); ++i) {
    Eigen::Map<Eigen::RowVectorXd>(row.data(), X.cols()) = X.row(static_cast<Eigen::Index>(i));
    if (DpdPredict(*ensemble, row, descriptors) == DpdVote::kDepression) {
      out.push_back(pool[i]);
    }
  }
  return out;
}

std::map<std::string, LabelSet> ModelPredictPosts(std::span<const Post> posts,
                                                  const Model& model,
                                                  const EmbeddingProvider& provider) {
  std::map<std::string, LabelSet> out;
  if (posts.empty()) return out;
  const Eigen::MatrixXd X = EmbedPosts(posts, provider, model.train_config.max_seq_len);
  const std::vector<LabelSet> preds = PredictLabels(model, X);
  for (std::size_t i = 0; i < posts.size(); ++i) out[posts[i].id] = preds[i];
  return out;
}

HarvestResult Harvest(const Model& model, const DpdEnsemble* dpd,
                      const DescriptorEmbeddings* descriptors,
                      std::span<const Post> pool, const EmbeddingProvider& provider,
                      int dpd_max_seq_len) {
  const Dataset positive = DpdFilter(dpd, descriptors, pool, provider, dpd_max_seq_len);
  return SplitByPrediction(positive, ModelPredictPosts(positive, model, provider));
}

std::map<std::string, std::vector<ScoredLabel>> ZslPredictPosts(
    std::span<const Post> posts, const DescriptorEmbeddings& descriptors,
    const EmbeddingProvider& provider, const ZslOptions& options) {
  std::vector<std::string> texts;
  for (const auto& p : posts) texts.push_back(JoinTokens(p.tokens));
  const std::vector<Vector> vectors = provider.Embed(texts);
  std::map<std::string, std::vector<ScoredLabel>> out;
  for (std::size_t i = 0; i < posts.size(); ++i) {
    auto& slot = out[posts[i].id];
    if (L2Norm(vectors[i]) > 0.0) slot = ZslLabel(vectors[i], descriptors, options);
  }
  return out;
}

Dataset ZslUnion(std::span<const Post> pool,
                 const std::map<std::string, LabelSet>& model_preds,
                 const std::map<std::string, std::vector<ScoredLabel>>& zsl_preds) {
  Dataset out;
  for (const auto& p : pool) {
    LabelSet labels;
    if (auto it = model_preds.find(p.id); it != model_preds.end()) labels |= it->second;
    if (auto it = zsl_preds.find(p.id); it != zsl_preds.end()) labels |= LabelsOf(it->second);
    if (labels.empty()) continue;
    Post copy = p;
    copy.labels = labels;
    copy.provenance = bucket::kZslUnion;
    out.push_back(std::move(copy));
  }
  return out;
}

std::string StopReasonName(StopReason reason) {
  return reason == StopReason::kPoolExhausted ? "pool-exhausted" : "no-gain";
}

std::optional<StopReason> StoppingCheck(std::span<const MetricPoint> history,
                                        double epsilon, std::size_t pool_remaining) {
  if (history.empty()) {
    throw Error(Errc::kInvalidArgument, "stopping check needs a completed iteration");
  }
  if (pool_remaining == 0) return StopReason::kPoolExhausted;
  if (history.size() >= 2) {
    double gain = history.back().macro_f1 - history[history.size() - 2].macro_f1;
    if (gain < epsilon) return StopReason::kNoGain;
  }
  return std::nullopt;
}

void DatasetLedger::Record(const std::string& name, const std::string& tag,
                           std::span<const Post> posts) {
  std::vector<std::string> ids;
  ids.reserve(posts.size());
  for (const auto& p : posts) ids.push_back(p.id);
  RecordIds(name, tag, std::move(ids));
}

void DatasetLedger::RecordIds(const std::string& name, const std::string& tag,
                              std::vector<std::string> ids) {
  entries_[name] = LedgerEntry{tag, std::move(ids)};
}

const LedgerEntry& DatasetLedger::at(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw Error(Errc::kInvalidArgument, "no ledger entry " + name);
  return it->second;
}

std::size_t DatasetLedger::Count(const std::string& name) const {
  auto it = entries_.find(name);
  return it == entries_.end() ? 0 : it->second.ids.size();
}

std::set<std::string> DatasetLedger::IdSet(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) return {};
  return {it->second.ids.begin(), it->second.ids.end()};
}

void CheckLedger(const DatasetLedger& ledger) {
  for (const auto& [name, entry] : ledger.entries()) {
    std::set<std::string> unique(entry.ids.begin(), entry.ids.end());
    if (unique.size() != entry.ids.size()) {
      throw Error(Errc::kConflict, "ledger bucket " + name + " repeats ids");
    }
  }
  const std::set<std::string> test = ledger.IdSet(bucket::kSeedTest);
  const std::set<std::string> sources_only{bucket::kSeedTest, bucket::kCandidatePool,
                                           bucket::kExternal};
  for (const auto& [name, entry] : ledger.entries()) {
    if (sources_only.count(name)) continue;
    auto leaked = Intersect(ledger.IdSet(name), test);
    if (!leaked.empty()) {
      throw Error(Errc::kLeakage, "seed-test ids found in " + name, FirstFew(leaked));
    }
  }

  std::set<std::string> declared = ledger.IdSet(bucket::kCandidatePool);
  for (const char* source : {bucket::kExternal, bucket::kEdPool}) {
    auto ids = ledger.IdSet(source);
    declared.insert(ids.begin(), ids.end());
  }
  for (const auto& [name, entry] : ledger.entries()) {
    if (entry.tag != bucket::kConfident && entry.tag != bucket::kLessConfident &&
        entry.tag != bucket::kZslUnion && entry.tag != bucket::kDpdPositive) {
      continue;
    }
    for (const auto& id : entry.ids) {
      if (!declared.count(id)) {
        throw Error(Errc::kConflict, "harvested id outside every declared pool", id);
      }
    }
  }

  if (ledger.Has(bucket::kFinal)) {
    std::vector<std::string> parts{bucket::kSeedTrain, bucket::kZslUnion, kStep5Union};
    std::set<std::string> seen;
    std::size_t total = 0;
    for (const auto& part : parts) {
      for (const auto& id : ledger.IdSet(part)) {
        if (!seen.insert(id).second) {
          throw Error(Errc::kConflict, "final-set parts overlap", id);
        }
      }
      total += ledger.Count(part);
    }
    if (seen != ledger.IdSet(bucket::kFinal) || total != ledger.Count(bucket::kFinal)) {
      throw Error(Errc::kConflict, "final set is not seed-train + zsl-union + step5-union");
    }
  }
}

SslConfig SslConfig::FromConfig(const Config& config) {
  config.RequireKnown(KnownKeys());
  SslConfig c;
  c.train_frac = config.GetDouble("train_frac", c.train_frac);
  c.split_seed = static_cast<std::uint64_t>(
      config.GetInt("split_seed", static_cast<std::int64_t>(c.split_seed)));
  c.control_seed = static_cast<std::uint64_t>(
      config.GetInt("control_seed", static_cast<std::int64_t>(c.control_seed)));
  c.epsilon = config.GetDouble("epsilon", c.epsilon);
  c.zsl.threshold = config.GetDouble("zsl.threshold", c.zsl.threshold);
  c.zsl.k = static_cast<int>(config.GetInt("zsl.k", c.zsl.k));
  c.dsd = TrainConfig::FromConfig(config, "dsd.", c.dsd);
  c.dpd = TrainConfig::FromConfig(config, "dpd.", c.dpd);
  c.dpd_members = static_cast<int>(config.GetInt("dpd.members", c.dpd_members));
  c.dpd_zsl_voter = config.GetBool("dpd.zsl_voter", c.dpd_zsl_voter);
  c.recall_floor = config.GetDouble("rules.recall_floor", c.recall_floor);
  c.ablation_retrain_step2 =
      config.GetBool("ablation.retrain_step2", c.ablation_retrain_step2);
  c.ablation_step3a = config.GetBool("ablation.step3a", c.ablation_step3a);
  if (!(c.train_frac > 0.0 && c.train_frac < 1.0)) {
    throw Error(Errc::kConfig, "train_frac must lie strictly between 0 and 1");
  }
  if (c.dpd_members < 0) throw Error(Errc::kConfig, "dpd.members must be >= 0");
  return c;
}

std::set<std::string> SslConfig::KnownKeys() {
  std::set<std::string> keys{"train_frac",          "split_seed",
                             "control_seed",        "epsilon",
                             "zsl.threshold",       "zsl.k",
                             "dpd.members",         "dpd.zsl_voter",
                             "rules.recall_floor",  "ablation.retrain_step2",
                             "ablation.step3a",     "embedding.provider",
                             "embedding.dim",       "embedding.n_max",
                             "embedding.endpoint",  "embedding.timeout_ms",
                             "embedding.batch_size", "embedding.max_in_flight",
                             "embedding.max_attempts"};
  for (const char* prefix : {"dsd.", "dpd."}) {
    for (const char* field :
         {"epochs", "batch_size", "max_seq_len", "learning_rate", "seed", "l2"}) {
      keys.insert(std::string(prefix) + field);
    }
  }
  return keys;
}

std::string LedgerToJson(const DatasetLedger& ledger) {
  Json j = Json::object();
  for (const auto& [name, entry] : ledger.entries()) {
    j[name] = {{"tag", entry.tag}, {"count", entry.ids.size()}, {"ids", entry.ids}};
  }
  return j.dump(1);
}

std::string SslStateToJson(const SslState& state) {
  Json history = Json::array();
  for (const auto& m : state.metric_history) history.push_back(MetricToJson(m));
  Json counts = Json::object();
  for (const auto& [name, entry] : state.ledger.entries()) counts[name] = entry.ids.size();
  Json rules = Json::array();
  for (const auto& r : state.rules) {
    rules.push_back({{"antecedent", r.antecedent},
                     {"consequent", r.consequent},
                     {"support", r.support.value_or(0.0)},
                     {"confidence", r.confidence.value_or(0.0)}});
  }
  Json ablations = Json::object();
  for (const auto& [name, m] : state.ablations) ablations[name] = MetricToJson(m);
  Json j = {{"iteration", state.iteration},
            {"metric_history", history},
            {"train_sizes", state.train_sizes},
            {"ledger_counts", counts},
            {"stop_reason", state.stop_reason ? Json(StopReasonName(*state.stop_reason))
                                              : Json(nullptr)},
            {"current_stage", state.current_stage},
            {"provider_signature", state.current_model.provider_signature},
            {"rules", rules},
            {"rule_augmented", state.rule_augmented ? MetricToJson(*state.rule_augmented)
                                                    : Json(nullptr)},
            {"ablations", ablations},
            {"warnings", state.warnings},
            {"last_completed_stage", state.last_completed_stage}};
  return j.dump(1);
}

SslState RunSsl(const SslConfig& config, const SslInputs& inputs,
                const EmbeddingProvider& provider, const std::filesystem::path& run_dir) {
  SslState state;
  std::string stage = "setup";
  int stage_no = 0;
  const bool persist = !run_dir.empty();

  auto save_stage = [&](const std::string& name) {
    state.last_completed_stage = name;
    CheckLedger(state.ledger);
    if (!persist) return;
    ++stage_no;
    const std::string prefix = (stage_no < 10 ? "0" : "") + std::to_string(stage_no) + "-";
    const std::string snapshot = SslStateToJson(state);
    WriteFileAtomic(run_dir / "stages" / (prefix + name + ".json"), snapshot);
    WriteFileAtomic(run_dir / "state.json", snapshot);
    WriteFileAtomic(run_dir / "ledger.json", LedgerToJson(state.ledger));
  };
  auto save_model = [&](const std::string& name, const Model& m) {
    if (persist) SaveModel(run_dir / "models" / (name + ".json"), m);
  };
  auto save_dataset = [&](const std::string& name, std::span<const Post> posts) {
    if (persist) WriteDataset(run_dir / "datasets" / (name + ".jsonl"), posts);
  };

  try {
    const std::vector<LabelId> symptoms = SymptomLabels();
    stage = "descriptors";
    const DescriptorEmbeddings descriptors =
        BuildDescriptorEmbeddings(inputs.descriptors, provider, inputs.descriptor_normalizer);

    // Partition, split, first model.
    stage = "step1";
    SeedPartition part = FilterSeed(inputs.seed);
    if (part.unlabelled > 0) {
      state.warnings.push_back(std::to_string(part.unlabelled) +
                               " unlabelled seed post(s) excluded");
    }
    if (part.original.empty()) {
      throw Error(Errc::kEmptyDataset, "no seed posts carry a symptom label");
    }
    SeedSplit split = SplitSeed(part.original, config.train_frac, config.split_seed);
    state.warnings.insert(state.warnings.end(), split.warnings.begin(), split.warnings.end());
    auto& ledger = state.ledger;
    ledger.Record(bucket::kSeedTrain, bucket::kSeedTrain, split.train);
    ledger.Record(bucket::kSeedTest, bucket::kSeedTest, split.test);
    ledger.Record(bucket::kEdPool, bucket::kEdPool, part.ed_pool);
    ledger.Record(bucket::kNoedPool, bucket::kNoedPool, part.noed_pool);
    ledger.Record(bucket::kGibberish, bucket::kGibberish, part.gibberish);
    ledger.Record(bucket::kCandidatePool, bucket::kCandidatePool, inputs.pool);
    ledger.Record(bucket::kExternal, bucket::kExternal, inputs.external);

    const std::vector<LabelSet> test_gold = LabelsOrEmpty(split.test);
    const Eigen::MatrixXd X_test = EmbedPosts(split.test, provider, config.dsd.max_seq_len);
    std::vector<std::pair<std::string, Model>> models;
    auto evaluate = [&](const Model& m) {
      return ClassificationReport(test_gold, PredictLabels(m, X_test), symptoms);
    };
    auto record = [&](const std::string& name, Model m, std::size_t train_size) {
      EvalReport report = evaluate(m);
      ++state.iteration;
      state.metric_history.push_back(
          {state.iteration, name, report.macro.f1, report.weighted.f1});
      state.train_sizes.push_back(train_size);
      save_model(name, m);
      state.current_model = m;
      state.current_stage = name;
      models.emplace_back(name, std::move(m));
    };
    // On no-gain the better of the last two models is kept.
    auto stop_if = [&](std::size_t pool_remaining) {
      state.stop_reason = StoppingCheck(state.metric_history, config.epsilon, pool_remaining);
      if (state.stop_reason == StopReason::kNoGain && models.size() >= 2) {
        const auto& h = state.metric_history;
        if (h[h.size() - 2].macro_f1 > h.back().macro_f1) {
          state.current_model = models[models.size() - 2].second;
          state.current_stage = models[models.size() - 2].first;
        }
      }
      return state.stop_reason.has_value();
    };

    const Dataset seed_train = split.train;
    record("dsd-1", TrainOnPosts(seed_train, provider, symptoms, config.dsd),
           seed_train.size());
    save_dataset(bucket::kSeedTrain, seed_train);
    save_dataset(bucket::kSeedTest, split.test);

    const std::set<std::string> seed_ids = Ids(inputs.seed);
    Dataset pool;
    for (const auto& p : inputs.pool) {
      if (!seed_ids.count(p.id)) pool.push_back(p);
    }
    Dataset step5_source;
    {
      Dataset ed_unlabelled = part.ed_pool;
      for (auto& p : ed_unlabelled) p.labels.reset();
      step5_source = Union(inputs.external, ed_unlabelled);
    }
    bool stopped = stop_if(pool.size() + step5_source.size());
    save_stage("step1");

    // Rule mining runs on whichever model is current when the loop ends.
    auto finish = [&]() {
      stage = "step6";
      const Eigen::MatrixXd X_train =
          EmbedPosts(seed_train, provider, state.current_model.train_config.max_seq_len);
      const std::vector<LabelSet> train_gold = LabelsOrEmpty(seed_train);
      const EvalReport train_report = ClassificationReport(
          train_gold, PredictLabels(state.current_model, X_train), symptoms);
      const StrengthSplit strength = SplitByStrength(train_report, config.recall_floor);
      state.rules.clear();
      if (!strength.weak.empty() && !strength.strong.empty()) {
        state.rules = MineRules(train_gold, strength.weak, strength.strong);
      }
      std::vector<LabelSet> augmented = PredictLabels(state.current_model, X_test);
      for (auto& s : augmented) s = ApplyRules(s, state.rules);
      EvalReport report = ClassificationReport(test_gold, augmented, symptoms);
      state.rule_augmented =
          MetricPoint{state.iteration, state.current_stage + "+rules", report.macro.f1,
                      report.weighted.f1};
      if (persist) {
        SaveRules(run_dir / "rules.csv", state.rules);
        SaveModel(run_dir / "models" / "current.json", state.current_model);
      }
      save_stage("step6");
    };
    if (stopped) {
      finish();
      return state;
    }

    // DPD-Human: human-labelled positives against an equal number of controls.
    stage = "dpd";
    Dataset positives = Union(Union(seed_train, part.ed_pool), inputs.external);
    Dataset controls =
        SampleControls(part.noed_pool, std::min(positives.size(), part.noed_pool.size()),
                       config.control_seed);
    ledger.Record(bucket::kDpdControls, bucket::kDpdControls, controls);
    std::optional<DpdEnsemble> dpd;
    if (controls.empty() || (config.dpd_members == 0 && !config.dpd_zsl_voter)) {
      state.warnings.push_back("DPD filter disabled; every pool post passes");
    } else {
      Dataset dpd_train = positives;
      dpd_train.insert(dpd_train.end(), controls.begin(), controls.end());
      std::vector<bool> flags(positives.size(), true);
      flags.resize(dpd_train.size(), false);
      const Eigen::MatrixXd X = EmbedPosts(dpd_train, provider, config.dpd.max_seq_len);
      if (config.dpd_members > 0) {
        dpd = TrainDpdEnsemble(X, flags,
                               config.dpd_members, config.dpd, config.dpd_zsl_voter,
                               config.zsl, provider.signature());
      } else {
        dpd = DpdEnsemble{{}, true, config.zsl};
      }
    }
    save_stage("dpd");

    // DPD filter, then confident / less-confident harvest.
    stage = "step2";
    const Dataset dpd_positive = DpdFilter(dpd ? &*dpd : nullptr, &descriptors, pool,
                                           provider, config.dpd.max_seq_len);
    const auto preds1 = ModelPredictPosts(dpd_positive, models.front().second, provider);
    const HarvestResult harvest = SplitByPrediction(dpd_positive, preds1);
    ledger.Record(bucket::kDpdPositive, bucket::kDpdPositive, dpd_positive);
    ledger.Record(bucket::kConfident, bucket::kConfident, harvest.confident);
    ledger.Record(bucket::kLessConfident, bucket::kLessConfident, harvest.less_confident);
    if (config.ablation_retrain_step2) {
      Dataset train = Union(seed_train, harvest.confident);
      ledger.Record("ablation-step2-train", kAblationTag, train);
      Model m = TrainOnPosts(train, provider, symptoms, config.dsd);
      EvalReport r = evaluate(m);
      state.ablations["step2-retrain"] = {state.iteration, "step2-retrain", r.macro.f1,
                                          r.weighted.f1};
    }
    save_stage("step2");

    // ZSL over the same candidates, union with the model labels.
    stage = "step3";
    const auto zsl1 = ZslPredictPosts(dpd_positive, descriptors, provider, config.zsl);
    if (config.ablation_step3a) {
      Dataset zsl_only = ZslUnion(dpd_positive, {}, zsl1);
      Dataset train = Union(seed_train, zsl_only);
      ledger.Record("ablation-step3a-train", kAblationTag, train);
      Model m = TrainOnPosts(train, provider, symptoms, config.dsd);
      EvalReport r = evaluate(m);
      state.ablations["step3a-zsl-only"] = {state.iteration, "step3a-zsl-only", r.macro.f1,
                                            r.weighted.f1};
    }
    const Dataset union1 = ZslUnion(dpd_positive, preds1, zsl1);
    ledger.Record(bucket::kZslUnion, bucket::kZslUnion, union1);
    save_dataset(bucket::kZslUnion, union1);
    save_stage("step3");

    // Second model on seed-train + union.
    stage = "step4";
    const Dataset train2 = Union(seed_train, union1);
    record("dsd-2", TrainOnPosts(train2, provider, symptoms, config.dsd), train2.size());
    const Dataset source = Subtract(step5_source, train2);
    stopped = stop_if(source.size());
    save_stage("step4");
    if (stopped) {
      finish();
      return state;
    }

    // Second model + ZSL over external and ED posts, final model.
    stage = "step5";
    const auto preds2 = ModelPredictPosts(source, models.back().second, provider);
    const auto zsl2 = ZslPredictPosts(source, descriptors, provider, config.zsl);
    const Dataset union2 = ZslUnion(source, preds2, zsl2);
    ledger.Record(kStep5Union, bucket::kZslUnion, union2);
    Dataset final_train = Union(train2, union2);
    for (auto& p : final_train) {
      if (p.provenance != bucket::kSeedTrain) p.provenance = bucket::kFinal;
    }
    ledger.Record(bucket::kFinal, bucket::kFinal, final_train);
    save_dataset(bucket::kFinal, final_train);
    record("final", TrainOnPosts(final_train, provider, symptoms, config.dsd),
           final_train.size());
    stop_if(0);
    save_stage("step5");
    finish();
    return state;
  } catch (const std::exception& e) {
    if (persist) {
      Json failure = {{"stage", stage},
                      {"error", e.what()},
                      {"state", Json::parse(SslStateToJson(state))}};
      if (const auto* err = dynamic_cast<const Error*>(&e)) {
        failure["code"] = std::string(ErrcName(err->code()));
        failure["detail"] = err->detail();
      }
      try {
        WriteFileAtomic(run_dir / "failure.json", failure.dump(1));
        WriteFileAtomic(run_dir / "ledger.json", LedgerToJson(state.ledger));
      } catch (...) {
        // The original error is more useful than a secondary write failure.
      }
    }
    throw;
  }
}

}  // namespace dsd
