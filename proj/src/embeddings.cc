#include "dsd/embeddings.h"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <future>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "dsd/config.h"
#include "dsd/error.h"
#include "dsd/normalizer.h"

namespace dsd {
namespace {

using Json = nlohmann::json;

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

ParsedUrl ParseEndpoint(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos || url.substr(0, scheme_end) != "http") {
    throw Error(Errc::kConfig, "embedding endpoint must be http://host:port/path",
                url);
  }
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

struct BatchOutcome {
  std::vector<Vector> vectors;
  std::string failure;  // non-empty => retryable failure
};

BatchOutcome PostBatch(const ParsedUrl& url, std::span<const std::string> texts,
                       const RemoteEmbedderOptions& options) {
  httplib::Client client(url.origin);
  auto seconds = std::chrono::duration_cast<std::chrono::seconds>(options.timeout);
  auto micros = std::chrono::duration_cast<std::chrono::microseconds>(
      options.timeout - seconds);
  client.set_connection_timeout(seconds.count(), micros.count());
  client.set_read_timeout(seconds.count(), micros.count());
  client.set_write_timeout(seconds.count(), micros.count());

  Json body = {{"texts", Json::array()}};
  for (const auto& t : texts) body["texts"].push_back(t);
  auto res = client.Post(url.path, body.dump(), "application/json");
  if (!res) return {{}, "request failed: " + httplib::to_string(res.error())};
  if (res->status >= 500) {
    return {{}, "server error " + std::to_string(res->status)};
  }
  if (res->status != 200) {
    throw Error(Errc::kProtocol,
                "embedding server answered HTTP " + std::to_string(res->status),
                res->body);
  }

  Json reply;
  try {
    reply = Json::parse(res->body);
  } catch (const Json::exception& e) {
    throw Error(Errc::kProtocol, "embedding server sent invalid JSON", e.what());
  }
  if (!reply.contains("vectors") || !reply["vectors"].is_array()) {
    throw Error(Errc::kProtocol, "embedding reply lacks a 'vectors' array");
  }
  if (reply.contains("dim") &&
      reply["dim"].get<std::size_t>() != options.dim) {
    throw Error(Errc::kConfig,
                "embedding server dimension " + reply["dim"].dump() +
                    " != configured " + std::to_string(options.dim),
                "dimension-mismatch");
  }
  const auto& rows = reply["vectors"];
  if (rows.size() != texts.size()) {
    throw Error(Errc::kProtocol, "embedding server returned " +
                                     std::to_string(rows.size()) +
                                     " vectors for " +
                                     std::to_string(texts.size()) + " texts");
  }
  BatchOutcome out;
  out.vectors.reserve(rows.size());
  for (const auto& row : rows) {
    Vector v = row.get<Vector>();
    if (v.size() != options.dim) {
      throw Error(Errc::kConfig,
                  "embedding vector of width " + std::to_string(v.size()) +
                      " != configured " + std::to_string(options.dim),
                  "dimension-mismatch");
    }
    L2NormalizeInPlace(v);
    out.vectors.push_back(std::move(v));
  }
  return out;
}

std::vector<Vector> EmbedBatchWithRetry(const ParsedUrl& url,
                                        std::span<const std::string> texts,
                                        const RemoteEmbedderOptions& options) {
  auto backoff = options.initial_backoff;
  std::string last_failure;
  for (int attempt = 1; attempt <= options.max_attempts; ++attempt) {
    BatchOutcome outcome = PostBatch(url, texts, options);
    if (outcome.failure.empty()) return std::move(outcome.vectors);
    last_failure = std::move(outcome.failure);
    if (attempt < options.max_attempts) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw RetryableError("embedding request failed: " + last_failure,
                       options.max_attempts);
}

}  // namespace

double Dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double L2Norm(std::span<const double> v) { return std::sqrt(Dot(v, v)); }

void L2NormalizeInPlace(Vector& v) {
  double norm = L2Norm(v);
  if (norm == 0.0) return;
  for (double& x : v) x /= norm;
}

Vector EmbeddingProvider::EmbedOne(const std::string& text) const {
  auto out = Embed(std::span<const std::string>(&text, 1));
  return std::move(out.front());
}

std::uint64_t Fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t Mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

Vector EmbedHashedNgrams(std::span<const std::string> tokens, std::size_t dim,
                         int n_max) {
  if (dim < 16) throw Error(Errc::kConfig, "embedding dimension must be >= 16");
  if (n_max < 1 || n_max > 2) throw Error(Errc::kConfig, "n_max must be 1 or 2");
  std::vector<const std::string*> words;
  for (const auto& t : tokens) {
    if (!t.empty() && !IsRetainedPunctuation(t)) words.push_back(&t);
  }
  Vector v(dim, 0.0);
  auto add = [&](std::string_view key) {
    std::uint64_t h = Fnv1a64(key);
    double sign = (Mix64(h) >> 63) ? -1.0 : 1.0;
    v[h % dim] += sign;
  };
  std::string key;
  for (std::size_t i = 0; i < words.size(); ++i) {
    add(*words[i]);
    if (n_max >= 2 && i + 1 < words.size()) {
      key.assign(*words[i]);
      key.push_back(' ');
      key.append(*words[i + 1]);
      add(key);
    }
  }
  L2NormalizeInPlace(v);
  return v;
}

HashedNgramEmbedder::HashedNgramEmbedder(std::size_t dim, int n_max)
    : dim_(dim), n_max_(n_max) {
  if (dim < 16) throw Error(Errc::kConfig, "embedding dimension must be >= 16");
  if (n_max < 1 || n_max > 2) throw Error(Errc::kConfig, "n_max must be 1 or 2");
}

std::string HashedNgramEmbedder::signature() const {
  return "hashed-ngrams:dim=" + std::to_string(dim_) +
         ":n_max=" + std::to_string(n_max_);
}

std::vector<Vector> HashedNgramEmbedder::Embed(
    std::span<const std::string> texts) const {
  std::vector<Vector> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    out.push_back(EmbedHashedNgrams(SplitWhitespace(text), dim_, n_max_));
  }
  return out;
}

std::string ResolveEndpoint(const std::string& configured) {
  if (const char* env = std::getenv(kEndpointEnvVar); env && *env) return env;
  return configured;
}

std::vector<Vector> EmbedRemote(std::span<const std::string> texts,
                                const RemoteEmbedderOptions& options) {
  if (texts.empty()) return {};
  if (options.batch_size == 0 || options.max_in_flight == 0 ||
      options.max_attempts < 1) {
    throw Error(Errc::kConfig, "invalid remote embedder options");
  }
  const ParsedUrl url = ParseEndpoint(options.endpoint);

  std::vector<std::span<const std::string>> batches;
  for (std::size_t start = 0; start < texts.size(); start += options.batch_size) {
    batches.push_back(texts.subspan(
        start, std::min(options.batch_size, texts.size() - start)));
  }

  std::vector<Vector> out;
  out.reserve(texts.size());
  // Windows of at most max_in_flight concurrent batches, joined in order.
  for (std::size_t first = 0; first < batches.size();
       first += options.max_in_flight) {
    std::size_t last = std::min(batches.size(), first + options.max_in_flight);
    std::vector<std::future<std::vector<Vector>>> pending;
    for (std::size_t b = first; b < last; ++b) {
      pending.push_back(std::async(std::launch::async, EmbedBatchWithRetry,
                                   std::cref(url), batches[b],
                                   std::cref(options)));
    }
    std::exception_ptr failure;
    for (auto& f : pending) {
      try {
        for (auto& v : f.get()) out.push_back(std::move(v));
      } catch (...) {
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
  }
  return out;
}

RemoteEmbedder::RemoteEmbedder(RemoteEmbedderOptions options)
    : options_(std::move(options)) {
  options_.endpoint = ResolveEndpoint(options_.endpoint);
  ParseEndpoint(options_.endpoint);
}

std::string RemoteEmbedder::signature() const {
  return "remote:" + options_.endpoint + ":dim=" + std::to_string(options_.dim);
}

std::vector<Vector> RemoteEmbedder::Embed(std::span<const std::string> texts) const {
  return EmbedRemote(texts, options_);
}

std::unique_ptr<EmbeddingProvider> MakeProvider(const Config& config) {
  const std::string kind = config.GetString("embedding.provider", "hashed");
  const auto dim = static_cast<std::size_t>(
      config.GetInt("embedding.dim", HashedNgramEmbedder::kDefaultDim));
  if (kind == "hashed") {
    return std::make_unique<HashedNgramEmbedder>(
        dim, static_cast<int>(config.GetInt("embedding.n_max",
                                            HashedNgramEmbedder::kDefaultNMax)));
  }
  if (kind == "remote") {
    RemoteEmbedderOptions o;
    o.endpoint = config.GetString("embedding.endpoint", "");
    o.dim = dim;
    o.timeout = std::chrono::milliseconds(
        config.GetInt("embedding.timeout_ms", o.timeout.count()));
    o.batch_size = static_cast<std::size_t>(
        config.GetInt("embedding.batch_size", static_cast<std::int64_t>(o.batch_size)));
    o.max_in_flight = static_cast<std::size_t>(config.GetInt(
        "embedding.max_in_flight", static_cast<std::int64_t>(o.max_in_flight)));
    o.max_attempts =
        static_cast<int>(config.GetInt("embedding.max_attempts", o.max_attempts));
    return std::make_unique<RemoteEmbedder>(std::move(o));
  }
  throw Error(Errc::kConfig, "unknown embedding.provider '" + kind + "'");
}

DescriptorCorpus DescriptorCorpus::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(Errc::kIo, path.string() + ": " + e.what());
  }
  DescriptorCorpus corpus;
  for (const auto& [key, value] : j.items()) {
    LabelId id = 0;
    try {
      id = std::stoi(key);
    } catch (const std::exception&) {
      throw Error(Errc::kConfig, "descriptor key is not a label index: " + key);
    }
    if (!IsSymptom(id)) {
      throw Error(Errc::kConfig, "descriptor label must be 1-10: " + key);
    }
    corpus.descriptors[id] = value.get<std::vector<std::string>>();
  }
  return corpus;
}

void DescriptorCorpus::Save(const std::filesystem::path& path) const {
  Json j = Json::object();
  for (const auto& [id, list] : descriptors) j[std::to_string(id)] = list;
  std::ofstream out(path);
  if (!out) throw Error(Errc::kIo, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

DescriptorEmbeddings BuildDescriptorEmbeddings(const DescriptorCorpus& corpus,
                                               const EmbeddingProvider& provider,
                                               const Normalizer* normalizer) {
  for (LabelId id : SymptomLabels()) {
    auto it = corpus.descriptors.find(id);
    if (it == corpus.descriptors.end() || it->second.empty()) {
      throw Error(Errc::kIncompleteCorpus,
                  "descriptor corpus has no entry for label " +
                      std::to_string(id));
    }
  }
  DescriptorEmbeddings out;
  for (const auto& [id, list] : corpus.descriptors) {
    std::vector<std::string> texts;
    texts.reserve(list.size());
    for (const auto& d : list) {
      texts.push_back(normalizer ? normalizer->NormalizeKeepingDisclosure(d).text
                                 : d);
    }
    out[id] = provider.Embed(texts);
  }
  return out;
}

}  // namespace dsd
