#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dsd/labels.h"

namespace dsd {

class Config;
class Normalizer;

using Vector = std::vector<double>;

double Dot(std::span<const double> a, std::span<const double> b);
double L2Norm(std::span<const double> v);
// Scales v to unit length; zero vectors are left untouched.
void L2NormalizeInPlace(Vector& v);

// Turns normalized post text (space-separated tokens) into fixed-width
// vectors. Implementations must return unit-norm vectors, or the zero vector
// for text with no content.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::size_t dim() const = 0;
  // Recorded in trained models so that a model is never applied to vectors
  // from a different provider.
  virtual std::string signature() const = 0;
  virtual std::vector<Vector> Embed(std::span<const std::string> texts) const = 0;

  Vector EmbedOne(const std::string& text) const;
};

// 64-bit FNV-1a over the bytes of `s`.
std::uint64_t Fnv1a64(std::string_view s);
// splitmix64 finalizer.
std::uint64_t Mix64(std::uint64_t x);

// Signed feature hashing of word n-grams (n = 1..n_max). The n-gram key is
// its words joined by one space; bucket = Fnv1a64(key) % dim and the sign is
// negative iff the top bit of Mix64(Fnv1a64(key)) is set. Punctuation tokens
// (. , ? !) are skipped. The result is L2-normalized; no words -> zero vector.
Vector EmbedHashedNgrams(std::span<const std::string> tokens, std::size_t dim,
                         int n_max);

class HashedNgramEmbedder : public EmbeddingProvider {
 public:
  static constexpr std::size_t kDefaultDim = 512;
  static constexpr int kDefaultNMax = 2;

  explicit HashedNgramEmbedder(std::size_t dim = kDefaultDim,
                               int n_max = kDefaultNMax);

  std::size_t dim() const override { return dim_; }
  std::string signature() const override;
  std::vector<Vector> Embed(std::span<const std::string> texts) const override;

 private:
  std::size_t dim_;
  int n_max_;
};

// Client for an embedding server speaking
//   POST {"texts": [...]}  ->  {"vectors": [[...], ...], "dim": D}
struct RemoteEmbedderOptions {
  std::string endpoint;  // http://host:port/path
  std::size_t dim = 512;
  std::chrono::milliseconds timeout{10000};
  std::size_t batch_size = 64;
  std::size_t max_in_flight = 2;
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{100};
};

inline constexpr const char* kEndpointEnvVar = "DSD_EMBEDDING_ENDPOINT";

// Returns $DSD_EMBEDDING_ENDPOINT when set, else `configured`.
std::string ResolveEndpoint(const std::string& configured);

// Order-preserving batched embedding with per-batch retry and exponential
// backoff. Connection failures, timeouts and 5xx answers are retried; once
// the attempts are spent a RetryableError is thrown. Short answers and other
// malformed responses raise Error(kProtocol); a dimension other than the
// configured one raises Error(kConfig).
std::vector<Vector> EmbedRemote(std::span<const std::string> texts,
                                const RemoteEmbedderOptions& options);

class RemoteEmbedder : public EmbeddingProvider {
 public:
  explicit RemoteEmbedder(RemoteEmbedderOptions options);

  std::size_t dim() const override { return options_.dim; }
  std::string signature() const override;
  std::vector<Vector> Embed(std::span<const std::string> texts) const override;

 private:
  RemoteEmbedderOptions options_;
};

// Keys: embedding.provider (hashed | remote), embedding.dim,
// embedding.n_max, embedding.endpoint, embedding.timeout_ms,
// embedding.batch_size, embedding.max_in_flight, embedding.max_attempts.
std::unique_ptr<EmbeddingProvider> MakeProvider(const Config& config);

// Symptom descriptors for zero-shot labelling, keyed by label 1..10.
struct DescriptorCorpus {
  std::map<LabelId, std::vector<std::string>> descriptors;

  // JSON object {"<label index>": ["descriptor", ...], ...}.
  static DescriptorCorpus Load(const std::filesystem::path& path);
  void Save(const std::filesystem::path& path) const;
};

using DescriptorEmbeddings = std::map<LabelId, std::vector<Vector>>;

// Embeds every descriptor. When `normalizer` is given each descriptor is
// normalized first (self-disclosure drops disabled) so descriptors share the
// token space of normalized posts. Throws Error(kIncompleteCorpus) unless
// every symptom label has at least one descriptor.
DescriptorEmbeddings BuildDescriptorEmbeddings(const DescriptorCorpus& corpus,
                                               const EmbeddingProvider& provider,
                                               const Normalizer* normalizer);

}  // namespace dsd
