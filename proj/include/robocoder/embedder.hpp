#pragma once

#include <atomic>
#include <cstddef>
#include <memory>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "robocoder/net.hpp"

namespace robocoder {

inline constexpr std::size_t kDefaultEmbeddingDimension = 384;

/// Dense vector. Embedders return unit vectors; cosine() accepts any non-zero one.
struct Embedding {
  std::vector<double> values;

  std::size_t dimension() const { return values.size(); }
  double norm() const;
  /// Throws std::invalid_argument for zero or non-finite vectors.
  Embedding normalized() const;

  bool operator==(const Embedding&) const = default;
};

/// Eight-lane sums; cosine() and the searcher share them so cached norms agree
/// bit for bit with freshly computed ones.
double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> a);

class EmbedderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  /// Unit-norm embedding of `text`. Throws EmbedderError for empty text or
  /// provider failure.
  virtual Embedding embed(std::string_view text) const = 0;
  /// One embedding per text, in order. The default embeds one at a time.
  virtual std::vector<Embedding> embed_batch(const std::vector<std::string>& texts) const;
  virtual std::size_t dimension() const = 0;
  virtual std::string describe() const = 0;
};

/// Hashing n-gram embedder: lowercase, split on non-alphanumerics, hash
/// unigrams and bigrams (FNV-1a) into signed buckets, L2-normalise.
class LocalEmbedder final : public Embedder {
 public:
  explicit LocalEmbedder(std::size_t dimension = kDefaultEmbeddingDimension);

  Embedding embed(std::string_view text) const override;
  std::size_t dimension() const override { return dimension_; }
  std::string describe() const override;

  static std::vector<std::string> tokenize(std::string_view text);

 private:
  std::size_t dimension_;
};

struct RemoteEmbedderConfig {
  std::string endpoint;  // full URL of an embeddings endpoint
  std::string model;
  std::string auth_env;  // name of the env var holding the API token
  std::size_t dimension = kDefaultEmbeddingDimension;
  int max_in_flight = 4;
  net::HttpOptions http;
};

/// Client for an OpenAI-style embeddings endpoint:
///   request  {"model": m, "input": [text]}
///   response {"data": [{"index": 0, "embedding": [...]}]}
class RemoteEmbedder final : public Embedder {
 public:
  explicit RemoteEmbedder(RemoteEmbedderConfig config);

  Embedding embed(std::string_view text) const override;
  std::vector<Embedding> embed_batch(const std::vector<std::string>& texts) const override;
  std::size_t dimension() const override { return config_.dimension; }
  std::string describe() const override;

 private:
  RemoteEmbedderConfig config_;
  mutable std::counting_semaphore<64> in_flight_;
};

struct EmbedderConfig {
  enum class Provider { Local, Remote };
  Provider provider = Provider::Local;
  std::size_t dimension = kDefaultEmbeddingDimension;
  RemoteEmbedderConfig remote;
};

std::unique_ptr<Embedder> make_embedder(const EmbedderConfig& config);

}  // namespace robocoder
