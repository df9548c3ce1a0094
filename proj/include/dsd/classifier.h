#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "dsd/embeddings.h"
#include "dsd/labels.h"
#include "dsd/store.h"
#include "dsd/zsl.h"

namespace dsd {

class Config;

struct TrainConfig {
  int epochs = 10;
  int batch_size = 32;
  int max_seq_len = 30;  // tokens kept before embedding
  double learning_rate = 0.1;
  std::uint64_t seed = 42;
  double l2 = 0.0;

  void Validate() const;
  // Reads "<prefix>epochs", "<prefix>batch_size", ... from `config`, falling
  // back to the fields of `defaults`.
  static TrainConfig FromConfig(const Config& config, const std::string& prefix,
                                const TrainConfig& defaults);
};

// Multi-label linear model: score_l = sigmoid(W_l . v + b_l).
struct Model {
  std::vector<LabelId> label_space;
  Eigen::MatrixXd W;  // |label_space| x dim
  Eigen::VectorXd b;
  double threshold = 0.5;  // label kept iff score >= threshold
  std::string provider_signature;
  TrainConfig train_config;
  std::vector<double> epoch_losses;

  std::size_t dim() const { return static_cast<std::size_t>(W.cols()); }
  void Validate() const;
};

struct Prediction {
  LabelSet labels;
  std::vector<double> scores;  // aligned with label_space, strictly in (0, 1)
};

double Sigmoid(double z);

Prediction Predict(const Model& model, std::span<const double> v);
std::vector<Prediction> PredictRows(const Model& model, const Eigen::MatrixXd& X);
std::vector<LabelSet> PredictLabels(const Model& model, const Eigen::MatrixXd& X);

// Mean binary cross-entropy over all N x L cells, plus 0.5 * l2 * |W|^2.
// `targets` is N x L with entries in {0, 1}.
double BceLoss(const Eigen::MatrixXd& W, const Eigen::VectorXd& b,
               const Eigen::MatrixXd& X, const Eigen::MatrixXd& targets,
               double l2 = 0.0);
void BceGradient(const Eigen::MatrixXd& W, const Eigen::VectorXd& b,
                 const Eigen::MatrixXd& X, const Eigen::MatrixXd& targets,
                 double l2, Eigen::MatrixXd& grad_W, Eigen::VectorXd& grad_b);

// N x L indicator matrix. Throws Error(kInvalidLabels) for labels outside
// the label space.
Eigen::MatrixXd TargetMatrix(std::span<const LabelSet> labels,
                             std::span<const LabelId> label_space);

// Mini-batch gradient descent from zero weights with seeded shuffling.
// epoch_losses holds the full-data loss after every epoch.
Model Train(const Eigen::MatrixXd& X, std::span<const LabelSet> labels,
            std::vector<LabelId> label_space, const TrainConfig& config,
            std::string provider_signature = {});

// Truncates each post to max_seq_len tokens and embeds it; one row per post.
Eigen::MatrixXd EmbedPosts(std::span<const Post> posts,
                           const EmbeddingProvider& provider, int max_seq_len);

// Embeds and trains on posts; unlabelled posts count as the empty set.
Model TrainOnPosts(std::span<const Post> posts, const EmbeddingProvider& provider,
                   std::vector<LabelId> label_space, const TrainConfig& config);

std::string ModelToJson(const Model& model);
Model ModelFromJson(std::string_view json);
void SaveModel(const std::filesystem::path& path, const Model& model);
Model LoadModel(const std::filesystem::path& path);

// Binary depression-post detection by majority vote.
enum class DpdVote { kDepression, kControl };

// Ties go to depression. Throws Error(kInvalidArgument) on no votes.
DpdVote MajorityVote(std::span<const DpdVote> votes);

struct DpdEnsemble {
  std::vector<Model> members;  // binary models over label space {ED}
  bool zsl_voter = false;      // adds a vote: depression iff ZSL finds a symptom
  ZslOptions zsl_options;
};

// Member i is trained on a bootstrap resample drawn with seed config.seed + i
// (the full data when there is a single member).
DpdEnsemble TrainDpdEnsemble(const Eigen::MatrixXd& X,
                             const std::vector<bool>& is_depression, int n_members,
                             const TrainConfig& config, bool zsl_voter,
                             const ZslOptions& zsl_options,
                             std::string provider_signature = {});

// `descriptors` is required when the ensemble has a ZSL voter. A zero vector
// gives a control vote from the ZSL voter.
DpdVote DpdPredict(const DpdEnsemble& ensemble, std::span<const double> v,
                   const DescriptorEmbeddings* descriptors);

std::string DpdEnsembleToJson(const DpdEnsemble& ensemble);
DpdEnsemble DpdEnsembleFromJson(std::string_view json);

}  // namespace dsd
