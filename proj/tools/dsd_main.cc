// Command-line front end for the dsd pipeline.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dsd/annotation.h"
#include "dsd/annotation_service.h"
#include "dsd/classifier.h"
#include "dsd/config.h"
#include "dsd/embeddings.h"
#include "dsd/error.h"
#include "dsd/evaluation.h"
#include "dsd/guideline.h"
#include "dsd/normalizer.h"
#include "dsd/rules.h"
#include "dsd/ssl.h"
#include "dsd/store.h"
#include "dsd/synthetic.h"
#include "dsd/zsl.h"

#ifndef DSD_DEFAULT_DATA_DIR
#define DSD_DEFAULT_DATA_DIR "data"
#endif

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

std::string DataFile(const char* name) {
  return (fs::path(DSD_DEFAULT_DATA_DIR) / name).string();
}

std::string ReadText(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw dsd::Error(dsd::Errc::kIo, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Writes to `path`, or stdout for "" and "-".
void Emit(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
  } else {
    dsd::WriteFileAtomic(path, content);
  }
}

dsd::Config LoadConfigOrEmpty(const std::string& path) {
  return path.empty() ? dsd::Config{} : dsd::Config::Load(path);
}

std::unique_ptr<dsd::Normalizer> MaybeNormalizer(const std::string& contractions) {
  if (contractions.empty()) return nullptr;
  return std::make_unique<dsd::Normalizer>(dsd::ContractionMap::Load(contractions));
}

void RequireSignature(const std::string& expected, const dsd::EmbeddingProvider& provider) {
  if (expected != provider.signature()) {
    throw dsd::Error(dsd::Errc::kConfig, "embedding provider does not match the model",
                     "model=" + expected + " provider=" + provider.signature());
  }
}

std::vector<dsd::Post> WithLabels(const dsd::Dataset& posts,
                                  const std::vector<dsd::LabelSet>& labels,
                                  const std::string& provenance) {
  std::vector<dsd::Post> out = posts;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].labels = labels[i];
    out[i].provenance = provenance;
  }
  return out;
}

struct NormalizeArgs {
  std::string in, out, contractions = DataFile("contractions.tsv"), dropped;
  bool keep_disclosure = false;
};

void RunNormalize(const NormalizeArgs& a) {
  dsd::NormalizerOptions options;
  options.drop_on_disclosure = !a.keep_disclosure;
  dsd::Normalizer normalizer(dsd::ContractionMap::Load(a.contractions), options);
  dsd::Dataset out;
  std::string dropped;
  for (const auto& post : dsd::ReadDataset(a.in)) {
    auto result = normalizer.Normalize(dsd::RawPost{post.id, post.text, post.source});
    if (auto* kept = std::get_if<dsd::NormalizedPost>(&result)) {
      dsd::Post p = post;
      p.text = kept->text;
      p.tokens = kept->tokens;
      out.push_back(std::move(p));
    } else {
      dropped += Json{{"id", post.id}, {"reason", "self-disclosure"}}.dump() + "\n";
    }
  }
  dsd::WriteDataset(a.out, out);
  if (!a.dropped.empty()) dsd::WriteFileAtomic(a.dropped, dropped);
  std::cerr << "normalized " << out.size() << " posts\n";
}

struct AggregateArgs {
  std::string annotations, out, posts;
  int panel = 0;
};

void RunAggregate(const AggregateArgs& a) {
  auto records = dsd::ReadAnnotations(a.annotations);
  const int panel = a.panel > 0 ? a.panel : dsd::CountAnnotators(records);
  auto mvcp = dsd::MvcpAggregateAll(records, panel);
  dsd::Dataset texts;
  if (!a.posts.empty()) texts = dsd::ReadDataset(a.posts);
  std::map<std::string, const dsd::Post*> by_id;
  for (const auto& p : texts) by_id[p.id] = &p;

  dsd::Dataset out;
  std::size_t unlabelled = 0;
  for (const auto& [id, labels] : mvcp) {
    dsd::Post p;
    if (auto it = by_id.find(id); it != by_id.end()) p = *it->second;
    p.id = id;
    p.labels = labels;
    p.provenance = "mvcp";
    unlabelled += !labels.has_value();
    out.push_back(std::move(p));
  }
  dsd::WriteDataset(a.out, out);
  std::cerr << "aggregated " << out.size() << " posts (" << unlabelled
            << " unlabelled) with panel size " << panel << "\n";
}

struct AgreementArgs {
  std::string annotations, report;
  int panel = 0;
};

void RunAgreement(const AgreementArgs& a) {
  auto records = dsd::ReadAnnotations(a.annotations);
  const int panel = a.panel > 0 ? a.panel : dsd::CountAnnotators(records);
  auto report = dsd::ComputeKappaReport(records, dsd::MvcpAggregateAll(records, panel));
  Emit(a.report, dsd::KappaReportCsv(report));
}

struct ZslArgs {
  std::string in, out, descriptors = DataFile("descriptors.json"), config, contractions;
  double threshold = 1.0;
  int k = 3;
};

void RunZsl(const ZslArgs& a) {
  auto provider = dsd::MakeProvider(LoadConfigOrEmpty(a.config));
  auto normalizer = MaybeNormalizer(a.contractions);
  auto descriptors = dsd::BuildDescriptorEmbeddings(
      dsd::DescriptorCorpus::Load(a.descriptors), *provider, normalizer.get());
  auto posts = dsd::ReadDataset(a.in);
  auto scored = dsd::ZslPredictPosts(posts, descriptors, *provider,
                                     dsd::ZslOptions{a.threshold, a.k});
  std::string out;
  for (auto& p : posts) {
    const auto& s = scored.at(p.id);
    Json j = Json::parse(dsd::FormatDataset(std::span<const dsd::Post>(&p, 1)));
    j["labels"] = dsd::LabelsOf(s).ids();
    j["provenance"] = "zsl";
    Json dist = Json::array();
    for (const auto& sl : s) dist.push_back({{"label", sl.label}, {"distance", sl.distance}});
    j["zsl"] = dist;
    out += j.dump() + "\n";
  }
  Emit(a.out, out);
}

struct TrainArgs {
  std::string config, data, out, labels = "1-10";
};

void RunTrain(const TrainArgs& a) {
  dsd::Config config = LoadConfigOrEmpty(a.config);
  dsd::SslConfig ssl = dsd::SslConfig::FromConfig(config);
  auto provider = dsd::MakeProvider(config);
  auto posts = dsd::ReadDataset(a.data);
  dsd::Model model =
      dsd::TrainOnPosts(posts, *provider, dsd::ParseLabelList(a.labels), ssl.dsd);
  dsd::SaveModel(a.out, model);
  std::cerr << "trained on " << posts.size() << " posts; final loss "
            << model.epoch_losses.back() << "\n";
}

struct PredictArgs {
  std::string config, model, in, out;
};

void RunPredict(const PredictArgs& a) {
  dsd::Model model = dsd::LoadModel(a.model);
  auto provider = dsd::MakeProvider(LoadConfigOrEmpty(a.config));
  RequireSignature(model.provider_signature, *provider);
  auto posts = dsd::ReadDataset(a.in);
  auto X = dsd::EmbedPosts(posts, *provider, model.train_config.max_seq_len);
  dsd::WriteDataset(a.out, WithLabels(posts, dsd::PredictLabels(model, X), "predicted"));
}

struct DpdTrainArgs {
  std::string config, positive, control, out, descriptors = DataFile("descriptors.json");
};

void RunDpdTrain(const DpdTrainArgs& a) {
  dsd::Config config = LoadConfigOrEmpty(a.config);
  dsd::SslConfig ssl = dsd::SslConfig::FromConfig(config);
  auto provider = dsd::MakeProvider(config);
  auto positive = dsd::ReadDataset(a.positive);
  auto control = dsd::ReadDataset(a.control);
  dsd::Dataset all = positive;
  all.insert(all.end(), control.begin(), control.end());
  std::vector<bool> is_depression(all.size(), false);
  std::fill(is_depression.begin(), is_depression.begin() + positive.size(), true);
  auto X = dsd::EmbedPosts(all, *provider, ssl.dpd.max_seq_len);
  auto ensemble = dsd::TrainDpdEnsemble(X, is_depression, ssl.dpd_members, ssl.dpd,
                                        ssl.dpd_zsl_voter, ssl.zsl, provider->signature());
  dsd::WriteFileAtomic(a.out, dsd::DpdEnsembleToJson(ensemble));
}

struct DpdPredictArgs {
  std::string config, model, in, out, descriptors = DataFile("descriptors.json"),
                                      contractions;
};

void RunDpdPredict(const DpdPredictArgs& a) {
  auto ensemble = dsd::DpdEnsembleFromJson(ReadText(a.model));
  auto provider = dsd::MakeProvider(LoadConfigOrEmpty(a.config));
  if (ensemble.members.empty() && !ensemble.zsl_voter) {
    throw dsd::Error(dsd::Errc::kConfig, "ensemble has no voters");
  }
  int max_seq_len = dsd::TrainConfig{}.max_seq_len;
  if (!ensemble.members.empty()) {
    RequireSignature(ensemble.members.front().provider_signature, *provider);
    max_seq_len = ensemble.members.front().train_config.max_seq_len;
  }
  std::optional<dsd::DescriptorEmbeddings> descriptors;
  if (ensemble.zsl_voter) {
    auto normalizer = MaybeNormalizer(a.contractions);
    descriptors = dsd::BuildDescriptorEmbeddings(
        dsd::DescriptorCorpus::Load(a.descriptors), *provider, normalizer.get());
  }
  auto posts = dsd::ReadDataset(a.in);
  auto X = dsd::EmbedPosts(posts, *provider, max_seq_len);
  std::string out;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < posts.size(); ++i) {
    Eigen::VectorXd row = X.row(static_cast<Eigen::Index>(i));
    auto vote = dsd::DpdPredict(ensemble, std::span<const double>(row.data(), row.size()),
                                descriptors ? &*descriptors : nullptr);
    const bool depressed = vote == dsd::DpdVote::kDepression;
    positives += depressed;
    out += Json{{"id", posts[i].id}, {"dpd", depressed ? "depression" : "control"}}.dump() +
           "\n";
  }
  Emit(a.out, out);
  std::cerr << positives << " of " << posts.size() << " posts voted depression\n";
}

struct MineRulesArgs {
  std::string data, out, weak, strong, gold, pred;
  double recall_floor = 0.2;
};

void RunMineRules(const MineRulesArgs& a) {
  auto posts = dsd::ReadDataset(a.data);
  dsd::LabelSet weak, strong;
  if (!a.gold.empty() || !a.pred.empty()) {
    if (a.gold.empty() || a.pred.empty()) {
      throw dsd::Error(dsd::Errc::kInvalidArgument, "--gold and --pred go together");
    }
    auto gold = dsd::ReadDataset(a.gold);
    auto pred = dsd::ReadDataset(a.pred);
    auto symptoms = dsd::SymptomLabels();
    auto split = dsd::SplitByStrength(
        dsd::ClassificationReport(dsd::LabelsOrEmpty(gold), dsd::LabelsOrEmpty(pred),
                                  symptoms),
        a.recall_floor);
    weak = split.weak;
    strong = split.strong;
  } else {
    auto w = dsd::ParseLabelList(a.weak);
    auto s = dsd::ParseLabelList(a.strong);
    weak = dsd::LabelSet(w);
    strong = dsd::LabelSet(s);
  }
  auto rules = dsd::MineRules(dsd::LabelsOrEmpty(posts), weak, strong);
  Emit(a.out, dsd::FormatRulesCsv(rules));
  std::cerr << "weak " << weak.ToString() << ", strong " << strong.ToString() << ": "
            << rules.size() << " rules\n";
}

struct ApplyRulesArgs {
  std::string rules = DataFile("reference_rules.csv"), in, out;
  bool closure = false;
};

void RunApplyRules(const ApplyRulesArgs& a) {
  auto rules = dsd::LoadRules(a.rules);
  auto posts = dsd::ReadDataset(a.in);
  for (auto& p : posts) {
    p.labels = dsd::ApplyRules(p.labels.value_or(dsd::LabelSet{}), rules, a.closure);
    p.provenance = "rule-augmented";
  }
  dsd::WriteDataset(a.out, posts);
}

struct SslRunArgs {
  std::string config, seed_data, pool, external, out,
      descriptors = DataFile("descriptors.json"), contractions = DataFile("contractions.tsv");
};

void RunSslCommand(const SslRunArgs& a) {
  dsd::Config config = LoadConfigOrEmpty(a.config);
  dsd::SslConfig ssl = dsd::SslConfig::FromConfig(config);
  auto provider = dsd::MakeProvider(config);
  auto normalizer = MaybeNormalizer(a.contractions);
  dsd::SslInputs inputs;
  inputs.seed = dsd::ReadDataset(a.seed_data);
  inputs.pool = dsd::ReadDataset(a.pool);
  if (!a.external.empty()) inputs.external = dsd::ReadDataset(a.external);
  inputs.descriptors = dsd::DescriptorCorpus::Load(a.descriptors);
  inputs.descriptor_normalizer = normalizer.get();
  auto state = dsd::RunSsl(ssl, inputs, *provider, a.out);
  for (const auto& m : state.metric_history) {
    std::cerr << "iteration " << m.iteration << " " << m.stage << ": macro-F1 "
              << m.macro_f1 << ", weighted-F1 " << m.weighted_f1 << "\n";
  }
  for (const auto& w : state.warnings) std::cerr << "warning: " << w << "\n";
  std::cerr << "stop: "
            << (state.stop_reason ? dsd::StopReasonName(*state.stop_reason) : "none")
            << "\n";
}

struct EvaluateArgs {
  std::string gold, pred, labels = "1-10", out;
  bool csv = false;
};

void RunEvaluate(const EvaluateArgs& a) {
  auto gold = dsd::ReadDataset(a.gold);
  auto pred = dsd::ReadDataset(a.pred);
  std::map<std::string, dsd::LabelSet> pred_by_id;
  for (const auto& p : pred) pred_by_id[p.id] = p.labels.value_or(dsd::LabelSet{});
  std::vector<dsd::LabelSet> g, q;
  for (const auto& p : gold) {
    auto it = pred_by_id.find(p.id);
    if (it == pred_by_id.end()) {
      throw dsd::Error(dsd::Errc::kLengthMismatch, "no prediction for gold post", p.id);
    }
    g.push_back(p.labels.value_or(dsd::LabelSet{}));
    q.push_back(it->second);
  }
  if (pred_by_id.size() != gold.size()) {
    throw dsd::Error(dsd::Errc::kLengthMismatch, "prediction file has extra posts");
  }
  auto labels = dsd::ParseLabelList(a.labels);
  auto report = dsd::ClassificationReport(g, q, labels);
  Emit(a.out, a.csv ? dsd::ReportCsv(report) : dsd::ReportText(report));
}

struct BigramsArgs {
  std::string in, stopwords = DataFile("stopwords.txt");
  int label = 0, k = 10;
};

void RunBigrams(const BigramsArgs& a) {
  auto posts = dsd::ReadDataset(a.in);
  for (const auto& [bigram, count] :
       dsd::TopBigrams(posts, a.label, a.k, dsd::LoadStopwords(a.stopwords))) {
    std::cout << bigram << "\t" << count << "\n";
  }
}

struct DistributionArgs {
  std::string in, compare, out;
};

void RunDistribution(const DistributionArgs& a) {
  auto dist = dsd::LabelDistribution(dsd::LabelsOrEmpty(dsd::ReadDataset(a.in)));
  Emit(a.out, dsd::DistributionCsv(dist));
  if (!a.compare.empty()) {
    auto other = dsd::LabelDistribution(dsd::LabelsOrEmpty(dsd::ReadDataset(a.compare)));
    std::cerr << "total variation distance: " << dsd::TotalVariationDistance(dist, other)
              << "\n";
  }
}

struct DatasetArgs {
  std::string a, b, out;
  std::size_t n = 0;
  std::uint64_t seed = 0;
};

struct ServeArgs {
  std::string data, plan, guideline = DataFile("guideline.json"), host = "127.0.0.1";
  int port = 8080;
};

void RunServe(const ServeArgs& a) {
  dsd::Config config = dsd::Config::Load(a.plan);
  auto plan = dsd::PlanConfig::FromConfig(config, fs::path(a.plan).parent_path());
  dsd::AnnotationService service(dsd::ReadDataset(a.data), plan);
  dsd::AnnotationServer server(service, dsd::Guideline::Load(a.guideline));
  std::cerr << "serving " << a.data << " on http://" << a.host << ":" << a.port << "\n";
  if (!server.Listen(a.host, a.port)) {
    throw dsd::Error(dsd::Errc::kIo, "cannot listen on port " + std::to_string(a.port));
  }
}

struct DescriptorsArgs {
  std::string guideline = DataFile("guideline.json"), out;
};

struct SynthArgs {
  std::string out_dir;
  dsd::SyntheticOptions options;
};

void RunSynth(const SynthArgs& a) {
  auto corpus = dsd::GenerateSynthetic(a.options);
  const fs::path dir(a.out_dir);
  dsd::WriteDataset(dir / "seed.jsonl", corpus.seed);
  dsd::WriteDataset(dir / "pool.jsonl", corpus.pool);
  dsd::WriteDataset(dir / "external.jsonl", corpus.external);
  if (!corpus.test.empty()) dsd::WriteDataset(dir / "test.jsonl", corpus.test);
  corpus.descriptors.Save(dir / "descriptors.json");
  Json truth = Json::object();
  for (const auto& [id, labels] : corpus.truth) truth[id] = labels.ids();
  dsd::WriteFileAtomic(dir / "truth.json", truth.dump(1));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Depression-symptom labelling pipeline"};
  app.require_subcommand(1);

  NormalizeArgs normalize;
  auto* cmd = app.add_subcommand("normalize", "Normalize raw posts");
  cmd->add_option("--in", normalize.in, "Raw posts (JSONL)")->required();
  cmd->add_option("--out", normalize.out, "Normalized posts (JSONL)")->required();
  cmd->add_option("--contractions", normalize.contractions, "Contraction map (TSV)");
  cmd->add_option("--dropped", normalize.dropped, "Write dropped post ids here");
  cmd->add_flag("--keep-disclosure", normalize.keep_disclosure,
                "Keep posts that mention a diagnosis");
  cmd->callback([&] { RunNormalize(normalize); });

  AggregateArgs aggregate;
  cmd = app.add_subcommand("aggregate", "MVCP consensus labels from annotations");
  cmd->add_option("--annotations", aggregate.annotations)->required();
  cmd->add_option("--out", aggregate.out)->required();
  cmd->add_option("--posts", aggregate.posts, "Posts whose text is copied into the output");
  cmd->add_option("--panel", aggregate.panel, "Panel size (default: distinct annotators)");
  cmd->callback([&] { RunAggregate(aggregate); });

  AgreementArgs agreement;
  cmd = app.add_subcommand("agreement", "Per-label Cohen's kappa table");
  cmd->add_option("--annotations", agreement.annotations)->required();
  cmd->add_option("--report", agreement.report, "CSV output (default stdout)");
  cmd->add_option("--panel", agreement.panel);
  cmd->callback([&] { RunAgreement(agreement); });

  std::string retest_annotations;
  cmd = app.add_subcommand("retest", "Test-retest reliability");
  cmd->add_option("--annotations", retest_annotations)->required();
  cmd->callback([&] {
    std::cout << dsd::TestRetestReliability(dsd::ReadAnnotations(retest_annotations))
              << "\n";
  });

  ZslArgs zsl;
  cmd = app.add_subcommand("zsl", "Zero-shot labels from descriptor similarity");
  cmd->add_option("--in", zsl.in)->required();
  cmd->add_option("--out", zsl.out);
  cmd->add_option("--descriptors", zsl.descriptors);
  cmd->add_option("--threshold", zsl.threshold);
  cmd->add_option("--k", zsl.k);
  cmd->add_option("--config", zsl.config, "Embedding configuration");
  cmd->add_option("--contractions", zsl.contractions, "Normalize descriptors first");
  cmd->callback([&] { RunZsl(zsl); });

  TrainArgs train;
  cmd = app.add_subcommand("train", "Train a multi-label symptom model");
  cmd->add_option("--config", train.config, "Run configuration (dsd.* keys)");
  cmd->add_option("--data", train.data)->required();
  cmd->add_option("--out", train.out)->required();
  cmd->add_option("--labels", train.labels, "Label space, e.g. 1-10");
  cmd->callback([&] { RunTrain(train); });

  PredictArgs predict;
  cmd = app.add_subcommand("predict", "Predict symptom labels");
  cmd->add_option("--config", predict.config);
  cmd->add_option("--model", predict.model)->required();
  cmd->add_option("--in", predict.in)->required();
  cmd->add_option("--out", predict.out)->required();
  cmd->callback([&] { RunPredict(predict); });

  DpdTrainArgs dpd_train;
  cmd = app.add_subcommand("dpd-train", "Train the depression-post voting ensemble");
  cmd->add_option("--config", dpd_train.config, "Run configuration (dpd.* keys)");
  cmd->add_option("--positive", dpd_train.positive)->required();
  cmd->add_option("--control", dpd_train.control)->required();
  cmd->add_option("--out", dpd_train.out)->required();
  cmd->callback([&] { RunDpdTrain(dpd_train); });

  DpdPredictArgs dpd_predict;
  cmd = app.add_subcommand("dpd-predict", "Depression-post votes");
  cmd->add_option("--config", dpd_predict.config);
  cmd->add_option("--model", dpd_predict.model)->required();
  cmd->add_option("--in", dpd_predict.in)->required();
  cmd->add_option("--out", dpd_predict.out);
  cmd->add_option("--descriptors", dpd_predict.descriptors);
  cmd->add_option("--contractions", dpd_predict.contractions);
  cmd->callback([&] { RunDpdPredict(dpd_predict); });

  MineRulesArgs mine;
  cmd = app.add_subcommand("mine-rules", "Strong-to-weak label co-occurrence rules");
  cmd->add_option("--data", mine.data)->required();
  cmd->add_option("--out", mine.out);
  cmd->add_option("--weak", mine.weak, "Weak labels, e.g. 1,4,7,9");
  cmd->add_option("--strong", mine.strong, "Strong labels");
  cmd->add_option("--gold", mine.gold, "Derive the split from gold vs pred");
  cmd->add_option("--pred", mine.pred);
  cmd->add_option("--recall-floor", mine.recall_floor);
  cmd->callback([&] { RunMineRules(mine); });

  ApplyRulesArgs apply;
  cmd = app.add_subcommand("apply-rules", "Add consequents of matching rules");
  cmd->add_option("--rules", apply.rules);
  cmd->add_option("--in", apply.in)->required();
  cmd->add_option("--out", apply.out)->required();
  cmd->add_flag("--closure", apply.closure, "Repeat until no label is added");
  cmd->callback([&] { RunApplyRules(apply); });

  SslRunArgs ssl;
  cmd = app.add_subcommand("ssl-run", "Semi-supervised harvest-and-retrain loop");
  cmd->add_option("--config", ssl.config);
  cmd->add_option("--seed-data", ssl.seed_data, "MVCP-labelled seed posts")->required();
  cmd->add_option("--pool", ssl.pool, "Unlabelled candidate pool")->required();
  cmd->add_option("--external", ssl.external, "Unlabelled external posts");
  cmd->add_option("--descriptors", ssl.descriptors);
  cmd->add_option("--contractions", ssl.contractions, "Used to normalize descriptors");
  cmd->add_option("--out", ssl.out, "Run directory")->required();
  cmd->callback([&] { RunSslCommand(ssl); });

  EvaluateArgs evaluate;
  cmd = app.add_subcommand("evaluate", "Per-label precision, recall and F1");
  cmd->add_option("--gold", evaluate.gold)->required();
  cmd->add_option("--pred", evaluate.pred)->required();
  cmd->add_option("--labels", evaluate.labels);
  cmd->add_option("--out", evaluate.out);
  cmd->add_flag("--csv", evaluate.csv);
  cmd->callback([&] { RunEvaluate(evaluate); });

  BigramsArgs bigrams;
  cmd = app.add_subcommand("bigrams", "Most frequent bigrams of one label");
  cmd->add_option("--in", bigrams.in)->required();
  cmd->add_option("--label", bigrams.label)->required();
  cmd->add_option("--k", bigrams.k);
  cmd->add_option("--stopwords", bigrams.stopwords);
  cmd->callback([&] { RunBigrams(bigrams); });

  DistributionArgs distribution;
  cmd = app.add_subcommand("distribution", "Label counts and ratios");
  cmd->add_option("--in", distribution.in)->required();
  cmd->add_option("--compare", distribution.compare, "Report total variation distance");
  cmd->add_option("--out", distribution.out);
  cmd->callback([&] { RunDistribution(distribution); });

  DatasetArgs dataset;
  cmd = app.add_subcommand("dataset", "Set operations on JSONL datasets");
  cmd->require_subcommand(1);
  auto* sub = cmd->add_subcommand("union", "Records of A, then new records of B");
  sub->add_option("a", dataset.a)->required();
  sub->add_option("b", dataset.b)->required();
  sub->add_option("--out", dataset.out)->required();
  sub->callback([&] {
    dsd::WriteDataset(dataset.out,
                      dsd::Union(dsd::ReadDataset(dataset.a), dsd::ReadDataset(dataset.b)));
  });
  sub = cmd->add_subcommand("subtract", "Records of A whose id is not in B");
  sub->add_option("a", dataset.a)->required();
  sub->add_option("b", dataset.b)->required();
  sub->add_option("--out", dataset.out)->required();
  sub->callback([&] {
    dsd::WriteDataset(dataset.out, dsd::Subtract(dsd::ReadDataset(dataset.a),
                                                 dsd::ReadDataset(dataset.b)));
  });
  sub = cmd->add_subcommand("sample", "Seeded sample without replacement");
  sub->add_option("a", dataset.a)->required();
  sub->add_option("--n", dataset.n)->required();
  sub->add_option("--seed", dataset.seed)->required();
  sub->add_option("--out", dataset.out)->required();
  sub->callback([&] {
    dsd::WriteDataset(dataset.out,
                      dsd::SampleControls(dsd::ReadDataset(dataset.a), dataset.n, dataset.seed));
  });

  ServeArgs serve;
  cmd = app.add_subcommand("serve", "Annotation HTTP service");
  cmd->add_option("--data", serve.data)->required();
  cmd->add_option("--plan", serve.plan)->required();
  cmd->add_option("--port", serve.port);
  cmd->add_option("--host", serve.host);
  cmd->add_option("--guideline", serve.guideline);
  cmd->callback([&] { RunServe(serve); });

  DescriptorsArgs descriptors;
  cmd = app.add_subcommand("descriptors", "Symptom descriptors from the guideline");
  cmd->add_option("--guideline", descriptors.guideline);
  cmd->add_option("--out", descriptors.out)->required();
  cmd->callback([&] {
    dsd::DescriptorsFromGuideline(dsd::Guideline::Load(descriptors.guideline))
        .Save(descriptors.out);
  });

  SynthArgs synth;
  cmd = app.add_subcommand("synth", "Generate a planted-topic corpus");
  cmd->add_option("--out-dir", synth.out_dir)->required();
  cmd->add_option("--seed", synth.options.seed);
  cmd->add_option("--seed-posts", synth.options.seed_posts);
  cmd->add_option("--pool-posts", synth.options.pool_posts);
  cmd->add_option("--external-posts", synth.options.external_posts);
  cmd->add_option("--test-posts", synth.options.test_posts);
  cmd->callback([&] { RunSynth(synth); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const dsd::Error& e) {
    std::cerr << "error [" << dsd::ErrcName(e.code()) << "]: " << e.what();
    if (!e.detail().empty()) std::cerr << " (" << e.detail() << ")";
    std::cerr << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
