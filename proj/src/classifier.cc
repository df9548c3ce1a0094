#include "dsd/classifier.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "dsd/config.h"
#include "dsd/error.h"
#include "dsd/normalizer.h"

namespace dsd {
namespace {

using Json = nlohmann::json;

constexpr double kScoreFloor = std::numeric_limits<double>::denorm_min();
const double kScoreCeil = std::nextafter(1.0, 0.0);

// log(1 + exp(z)) without overflow.
double Softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

Eigen::MatrixXd Logits(const Eigen::MatrixXd& W, const Eigen::VectorXd& b,
                       const Eigen::MatrixXd& X) {
  Eigen::MatrixXd Z = X * W.transpose();
  Z.rowwise() += b.transpose();
  return Z;
}

Json ConfigToJson(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"max_seq_len", c.max_seq_len},
          {"learning_rate", c.learning_rate},
          {"seed", c.seed},
          {"l2", c.l2},
          {"loss", "bce"}};
}

TrainConfig ConfigFromJson(const Json& j) {
  TrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.max_seq_len = j.value("max_seq_len", c.max_seq_len);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.seed = j.value("seed", c.seed);
  c.l2 = j.value("l2", c.l2);
  return c;
}

Json ModelToJsonValue(const Model& m) {
  Json W = Json::array();
  for (Eigen::Index r = 0; r < m.W.rows(); ++r) {
    std::vector<double> row(m.W.cols());
    for (Eigen::Index c = 0; c < m.W.cols(); ++c) row[c] = m.W(r, c);
    W.push_back(row);
  }
  return {{"label_space", m.label_space},
          {"dim", m.dim()},
          {"W", W},
          {"b", std::vector<double>(m.b.data(), m.b.data() + m.b.size())},
          {"threshold", m.threshold},
          {"provider_signature", m.provider_signature},
          {"train_config", ConfigToJson(m.train_config)},
          {"epoch_losses", m.epoch_losses}};
}

Model ModelFromJsonValue(const Json& j) {
  Model m;
  m.label_space = j.at("label_space").get<std::vector<LabelId>>();
  const std::size_t dim = j.at("dim").get<std::size_t>();
  const auto& W = j.at("W");
  m.W.resize(static_cast<Eigen::Index>(W.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t r = 0; r < W.size(); ++r) {
    auto row = W[r].get<std::vector<double>>();
    if (row.size() != dim) {
      throw Error(Errc::kDimensionMismatch, "model row width disagrees with dim");
    }
    for (std::size_t c = 0; c < dim; ++c) m.W(r, c) = row[c];
  }
  auto b = j.at("b").get<std::vector<double>>();
  m.b = Eigen::Map<Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
  m.threshold = j.value("threshold", 0.5);
  m.provider_signature = j.value("provider_signature", std::string{});
  if (j.contains("train_config")) m.train_config = ConfigFromJson(j["train_config"]);
  m.epoch_losses = j.value("epoch_losses", std::vector<double>{});
  m.Validate();
  return m;
}

std::string ReadAll(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

void TrainConfig::Validate() const {
  if (epochs < 1) throw Error(Errc::kConfig, "epochs must be >= 1");
  if (batch_size < 1) throw Error(Errc::kConfig, "batch_size must be >= 1");
  if (max_seq_len < 1) throw Error(Errc::kConfig, "max_seq_len must be >= 1");
  if (!(learning_rate > 0.0)) throw Error(Errc::kConfig, "learning_rate must be > 0");
  if (l2 < 0.0) throw Error(Errc::kConfig, "l2 must be >= 0");
}

TrainConfig TrainConfig::FromConfig(const Config& config, const std::string& prefix,
                                    const TrainConfig& defaults) {
  TrainConfig c;
  c.epochs = static_cast<int>(config.GetInt(prefix + "epochs", defaults.epochs));
  c.batch_size =
      static_cast<int>(config.GetInt(prefix + "batch_size", defaults.batch_size));
  c.max_seq_len =
      static_cast<int>(config.GetInt(prefix + "max_seq_len", defaults.max_seq_len));
  c.learning_rate = config.GetDouble(prefix + "learning_rate", defaults.learning_rate);
  c.seed = static_cast<std::uint64_t>(
      config.GetInt(prefix + "seed", static_cast<std::int64_t>(defaults.seed)));
  c.l2 = config.GetDouble(prefix + "l2", defaults.l2);
  c.Validate();
  return c;
}

void Model::Validate() const {
  if (label_space.empty()) throw Error(Errc::kInvalidArgument, "empty label space");
  for (LabelId l : label_space) {
    if (!IsValidLabel(l)) {
      throw Error(Errc::kInvalidLabels, "label space holds invalid label " +
                                            std::to_string(l));
    }
  }
  if (W.rows() != static_cast<Eigen::Index>(label_space.size()) ||
      b.size() != W.rows()) {
    throw Error(Errc::kDimensionMismatch, "W rows, b and label space disagree");
  }
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error(Errc::kConfig, "threshold must lie in (0, 1)");
  }
}

double Sigmoid(double z) {
  double s = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  return std::clamp(s, kScoreFloor, kScoreCeil);
}

Prediction Predict(const Model& model, std::span<const double> v) {
  if (v.size() != model.dim()) {
    throw Error(Errc::kDimensionMismatch,
                "vector width " + std::to_string(v.size()) + " != model dim " +
                    std::to_string(model.dim()));
  }
  Eigen::Map<const Eigen::VectorXd> x(v.data(), static_cast<Eigen::Index>(v.size()));
  Eigen::VectorXd z = model.W * x + model.b;
  Prediction p;
  p.scores.resize(model.label_space.size());
  for (std::size_t l = 0; l < model.label_space.size(); ++l) {
    p.scores[l] = Sigmoid(z(static_cast<Eigen::Index>(l)));
    if (p.scores[l] >= model.threshold) p.labels.insert(model.label_space[l]);
  }
  return p;
}

std::vector<Prediction> PredictRows(const Model& model, const Eigen::MatrixXd& X) {
  if (X.rows() > 0 && static_cast<std::size_t>(X.cols()) != model.dim()) {
    throw Error(Errc::kDimensionMismatch, "matrix width != model dim");
  }
  const Eigen::MatrixXd Z = Logits(model.W, model.b, X);
  std::vector<Prediction> out(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    auto& p = out[static_cast<std::size_t>(i)];
    p.scores.resize(model.label_space.size());
    for (std::size_t l = 0; l < model.label_space.size(); ++l) {
      p.scores[l] = Sigmoid(Z(i, static_cast<Eigen::Index>(l)));
      if (p.scores[l] >= model.threshold) p.labels.insert(model.label_space[l]);
    }
  }
  return out;
}

std::vector<LabelSet> PredictLabels(const Model& model, const Eigen::MatrixXd& X) {
  std::vector<LabelSet> out;
  for (auto& p : PredictRows(model, X)) out.push_back(p.labels);
  return out;
}

double BceLoss(const Eigen::MatrixXd& W, const Eigen::VectorXd& b,
               const Eigen::MatrixXd& X, const Eigen::MatrixXd& targets,
               double l2) {
  const Eigen::MatrixXd Z = Logits(W, b, X);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < Z.rows(); ++i) {
    for (Eigen::Index l = 0; l < Z.cols(); ++l) {
      sum += Softplus(Z(i, l)) - targets(i, l) * Z(i, l);
    }
  }
  double loss = sum / static_cast<double>(Z.rows() * Z.cols());
  return loss + 0.5 * l2 * W.squaredNorm();
}

void BceGradient(const Eigen::MatrixXd& W, const Eigen::VectorXd& b,
                 const Eigen::MatrixXd& X, const Eigen::MatrixXd& targets,
                 double l2, Eigen::MatrixXd& grad_W, Eigen::VectorXd& grad_b) {
  Eigen::MatrixXd residual = Logits(W, b, X);
  for (Eigen::Index i = 0; i < residual.rows(); ++i) {
    for (Eigen::Index l = 0; l < residual.cols(); ++l) {
      double z = residual(i, l);
      double s = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
      residual(i, l) = s - targets(i, l);
    }
  }
  const double scale = 1.0 / static_cast<double>(residual.rows() * residual.cols());
  grad_W = scale * residual.transpose() * X;
  if (l2 > 0.0) grad_W += l2 * W;
  grad_b = scale * residual.colwise().sum().transpose();
}

Eigen::MatrixXd TargetMatrix(std::span<const LabelSet> labels,
                             std::span<const LabelId> label_space) {
  LabelSet space;
  for (LabelId l : label_space) space.insert(l);
  Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels.size()),
                                            static_cast<Eigen::Index>(label_space.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!labels[i].IsSubsetOf(space)) {
      throw Error(Errc::kInvalidLabels,
                  "labels " + labels[i].ToString() + " fall outside the label space");
    }
    for (std::size_t l = 0; l < label_space.size(); ++l) {
      if (labels[i].contains(label_space[l])) {
        Y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l)) = 1.0;
      }
    }
  }
  return Y;
}

Model Train(const Eigen::MatrixXd& X, std::span<const LabelSet> labels,
            std::vector<LabelId> label_space, const TrainConfig& config,
            std::string provider_signature) {
  config.Validate();
  if (X.rows() == 0) throw Error(Errc::kEmptyDataset, "no training examples");
  if (static_cast<std::size_t>(X.rows()) != labels.size()) {
    throw Error(Errc::kLengthMismatch, "feature rows and label sets differ in count");
  }
  Model model;
  model.label_space = std::move(label_space);
  model.train_config = config;
  model.provider_signature = std::move(provider_signature);
  const Eigen::MatrixXd Y = TargetMatrix(labels, model.label_space);
  const auto L = static_cast<Eigen::Index>(model.label_space.size());
  model.W = Eigen::MatrixXd::Zero(L, X.cols());
  model.b = Eigen::VectorXd::Zero(L);
  model.Validate();

  std::vector<Eigen::Index> order(static_cast<std::size_t>(X.rows()));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(config.seed);
  Eigen::MatrixXd grad_W;
  Eigen::VectorXd grad_b;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      std::size_t end = std::min(order.size(),
                                 start + static_cast<std::size_t>(config.batch_size));
      std::vector<Eigen::Index> rows(order.begin() + start, order.begin() + end);
      BceGradient(model.W, model.b, X(rows, Eigen::all), Y(rows, Eigen::all),
                  config.l2, grad_W, grad_b);
      model.W -= config.learning_rate * grad_W;
      model.b -= config.learning_rate * grad_b;
    }
    model.epoch_losses.push_back(BceLoss(model.W, model.b, X, Y, config.l2));
  }
  return model;
}

Eigen::MatrixXd EmbedPosts(std::span<const Post> posts,
                           const EmbeddingProvider& provider, int max_seq_len) {
  std::vector<std::string> texts;
  texts.reserve(posts.size());
  for (const auto& p : posts) {
    std::size_t keep = std::min(p.tokens.size(), static_cast<std::size_t>(max_seq_len));
    texts.push_back(JoinTokens({p.tokens.begin(), p.tokens.begin() + keep}));
  }
  const std::vector<Vector> vectors = provider.Embed(texts);
  Eigen::MatrixXd X(static_cast<Eigen::Index>(posts.size()),
                    static_cast<Eigen::Index>(provider.dim()));
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].size() != provider.dim()) {
      throw Error(Errc::kDimensionMismatch, "provider returned a vector of wrong width");
    }
    for (std::size_t c = 0; c < vectors[i].size(); ++c) {
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = vectors[i][c];
    }
  }
  return X;
}

Model TrainOnPosts(std::span<const Post> posts, const EmbeddingProvider& provider,
                   std::vector<LabelId> label_space, const TrainConfig& config) {
  if (posts.empty()) throw Error(Errc::kEmptyDataset, "no training posts");
  const Eigen::MatrixXd X = EmbedPosts(posts, provider, config.max_seq_len);
  const std::vector<LabelSet> labels = LabelsOrEmpty(posts);
  return Train(X, labels, std::move(label_space), config, provider.signature());
}

std::string ModelToJson(const Model& model) { return ModelToJsonValue(model).dump(); }

Model ModelFromJson(std::string_view json) {
  try {
    return ModelFromJsonValue(Json::parse(json));
  } catch (const Json::exception& e) {
    throw Error(Errc::kIo, std::string("malformed model JSON: ") + e.what());
  }
}

void SaveModel(const std::filesystem::path& path, const Model& model) {
  WriteFileAtomic(path, ModelToJsonValue(model).dump(1) + "\n");
}

Model LoadModel(const std::filesystem::path& path) { return ModelFromJson(ReadAll(path)); }

DpdVote MajorityVote(std::span<const DpdVote> votes) {
  if (votes.empty()) throw Error(Errc::kInvalidArgument, "no DPD votes");
  auto dep = std::count(votes.begin(), votes.end(), DpdVote::kDepression);
  return 2 * dep >= static_cast<std::ptrdiff_t>(votes.size()) ? DpdVote::kDepression
                                                              : DpdVote::kControl;
}

DpdEnsemble TrainDpdEnsemble(const Eigen::MatrixXd& X,
                             const std::vector<bool>& is_depression, int n_members,
                             const TrainConfig& config, bool zsl_voter,
                             const ZslOptions& zsl_options,
                             std::string provider_signature) {
  if (n_members < 1) throw Error(Errc::kConfig, "DPD ensemble needs >= 1 member");
  if (static_cast<std::size_t>(X.rows()) != is_depression.size()) {
    throw Error(Errc::kLengthMismatch, "feature rows and DPD targets differ in count");
  }
  if (X.rows() == 0) throw Error(Errc::kEmptyDataset, "no DPD training examples");
  std::vector<LabelSet> labels;
  for (bool dep : is_depression) {
    labels.push_back(dep ? LabelSet{label::kEvidenceOfDepression} : LabelSet{});
  }
  DpdEnsemble ensemble;
  ensemble.zsl_voter = zsl_voter;
  ensemble.zsl_options = zsl_options;
  for (int m = 0; m < n_members; ++m) {
    TrainConfig member_config = config;
    member_config.seed = config.seed + static_cast<std::uint64_t>(m);
    if (n_members == 1) {
      ensemble.members.push_back(Train(X, labels, {label::kEvidenceOfDepression},
                                       member_config, provider_signature));
      continue;
    }
    std::mt19937_64 rng(member_config.seed);
    std::uniform_int_distribution<Eigen::Index> pick(0, X.rows() - 1);
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(X.rows()));
    std::vector<LabelSet> sample_labels;
    for (auto& r : rows) {
      r = pick(rng);
      sample_labels.push_back(labels[static_cast<std::size_t>(r)]);
    }
    ensemble.members.push_back(Train(X(rows, Eigen::all), sample_labels,
                                     {label::kEvidenceOfDepression}, member_config,
                                     provider_signature));
  }
  return ensemble;
}

DpdVote DpdPredict(const DpdEnsemble& ensemble, std::span<const double> v,
                   const DescriptorEmbeddings* descriptors) {
  std::vector<DpdVote> votes;
  for (const auto& m : ensemble.members) {
    votes.push_back(Predict(m, v).labels.empty() ? DpdVote::kControl
                                                 : DpdVote::kDepression);
  }
  if (ensemble.zsl_voter) {
    if (descriptors == nullptr) {
      throw Error(Errc::kConfig, "DPD ensemble has a ZSL voter but no descriptors");
    }
    bool symptom = L2Norm(v) > 0.0 && !ZslLabel(v, *descriptors, ensemble.zsl_options).empty();
    votes.push_back(symptom ? DpdVote::kDepression : DpdVote::kControl);
  }
  return MajorityVote(votes);
}

std::string DpdEnsembleToJson(const DpdEnsemble& ensemble) {
  Json members = Json::array();
  for (const auto& m : ensemble.members) members.push_back(ModelToJsonValue(m));
  Json j = {{"members", members},
            {"zsl_voter", ensemble.zsl_voter},
            {"zsl_threshold", ensemble.zsl_options.threshold},
            {"zsl_k", ensemble.zsl_options.k}};
  return j.dump(1);
}

DpdEnsemble DpdEnsembleFromJson(std::string_view json) {
  try {
    Json j = Json::parse(json);
    DpdEnsemble e;
    for (const auto& m : j.at("members")) e.members.push_back(ModelFromJsonValue(m));
    e.zsl_voter = j.value("zsl_voter", false);
    e.zsl_options.threshold = j.value("zsl_threshold", e.zsl_options.threshold);
    e.zsl_options.k = j.value("zsl_k", e.zsl_options.k);
    if (e.members.empty() && !e.zsl_voter) {
      throw Error(Errc::kInvalidArgument, "DPD ensemble has no voters");
    }
    return e;
  } catch (const Json::exception& e) {
    throw Error(Errc::kIo, std::string("malformed DPD ensemble JSON: ") + e.what());
  }
}

}  // namespace dsd
