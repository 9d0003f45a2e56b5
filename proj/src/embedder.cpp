#include "robocoder/embedder.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>

namespace robocoder {

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (const char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

class SemaphoreGuard {
 public:
  explicit SemaphoreGuard(std::counting_semaphore<64>& sem) : sem_(sem) { sem_.acquire(); }
  ~SemaphoreGuard() { sem_.release(); }
  SemaphoreGuard(const SemaphoreGuard&) = delete;
  SemaphoreGuard& operator=(const SemaphoreGuard&) = delete;

 private:
  std::counting_semaphore<64>& sem_;
};

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
  double s[8] = {};
  const std::size_t n = std::min(a.size(), b.size());
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (std::size_t j = 0; j < 8; ++j) s[j] += a[i + j] * b[i + j];
  }
  for (; i < n; ++i) s[0] += a[i] * b[i];
  return ((s[0] + s[1]) + (s[2] + s[3])) + ((s[4] + s[5]) + (s[6] + s[7]));
}

double squared_norm(std::span<const double> a) { return dot(a, a); }

double Embedding::norm() const { return std::sqrt(squared_norm(values)); }

Embedding Embedding::normalized() const {
  const double n = norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw std::invalid_argument("cannot normalise a zero or non-finite vector");
  Embedding out;
  out.values.reserve(values.size());
  for (const double v : values) out.values.push_back(v / n);
  return out;
}

std::vector<Embedding> Embedder::embed_batch(const std::vector<std::string>& texts) const {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed(t));
  return out;
}

LocalEmbedder::LocalEmbedder(std::size_t dimension) : dimension_(dimension) {
  if (dimension_ == 0) throw std::invalid_argument("embedding dimension must be >= 1");
}

std::vector<std::string> LocalEmbedder::tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (const char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) {
      current += static_cast<char>(std::tolower(u));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Embedding LocalEmbedder::embed(std::string_view text) const {
  const auto tokens = tokenize(text);
  if (tokens.empty()) throw EmbedderError("cannot embed empty text");

  Embedding e;
  e.values.assign(dimension_, 0.0);
  const auto add = [&](std::string_view feature) {
    const auto h = fnv1a(feature);
    const auto bucket = static_cast<std::size_t>(h % dimension_);
    e.values[bucket] += (h >> 63) != 0 ? -1.0 : 1.0;
  };
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    add(tokens[i]);
    if (i + 1 < tokens.size()) add(tokens[i] + " " + tokens[i + 1]);
  }
  // Signed collisions can cancel every feature; fall back to the first
  // token's unsigned bucket so the vector stays normalisable.
  if (std::all_of(e.values.begin(), e.values.end(), [](double v) { return v == 0.0; })) {
    e.values[static_cast<std::size_t>(fnv1a(tokens.front()) % dimension_)] = 1.0;
  }
  return e.normalized();
}

std::string LocalEmbedder::describe() const { return "local-hash-ngram/" + std::to_string(dimension_); }

RemoteEmbedder::RemoteEmbedder(RemoteEmbedderConfig config)
    : config_(std::move(config)), in_flight_(std::clamp(config_.max_in_flight, 1, 64)) {
  if (config_.endpoint.empty()) throw std::invalid_argument("remote embedder needs an endpoint");
  if (config_.dimension == 0) throw std::invalid_argument("embedding dimension must be >= 1");
}

std::vector<Embedding> RemoteEmbedder::embed_batch(const std::vector<std::string>& texts) const {
  for (const auto& t : texts) {
    if (LocalEmbedder::tokenize(t).empty()) throw EmbedderError("cannot embed empty text");
  }
  nlohmann::json request = {{"model", config_.model}, {"input", texts}};
  std::string body;
  {
    SemaphoreGuard guard(in_flight_);
    try {
      body = net::post_json(config_.endpoint, request, net::bearer_from_env(config_.auth_env), config_.http);
    } catch (const std::exception& e) {
      throw EmbedderError(std::string("embedding request failed: ") + e.what());
    }
  }
  nlohmann::json response;
  try {
    response = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception&) {
    throw EmbedderError("embedding response is not JSON");
  }
  if (!response.contains("data") || !response["data"].is_array() || response["data"].size() != texts.size()) {
    throw EmbedderError("embedding response carries no data list of the expected length");
  }
  std::vector<Embedding> out(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const auto& item = response["data"][i];
    const std::size_t index = item.value("index", i);
    if (index >= texts.size() || !item.contains("embedding") || !item["embedding"].is_array()) {
      throw EmbedderError("malformed embedding item");
    }
    Embedding e;
    for (const auto& v : item["embedding"]) {
      if (!v.is_number()) throw EmbedderError("non-numeric embedding value");
      e.values.push_back(v.get<double>());
    }
    if (e.dimension() != config_.dimension) {
      throw EmbedderError("embedding dimension " + std::to_string(e.dimension()) + " != configured " +
                          std::to_string(config_.dimension));
    }
    try {
      out[index] = e.normalized();
    } catch (const std::invalid_argument& err) {
      throw EmbedderError(err.what());
    }
  }
  return out;
}

Embedding RemoteEmbedder::embed(std::string_view text) const { return embed_batch({std::string(text)}).front(); }

std::string RemoteEmbedder::describe() const { return "remote/" + config_.model + "/" + std::to_string(config_.dimension); }

std::unique_ptr<Embedder> make_embedder(const EmbedderConfig& config) {
  if (config.provider == EmbedderConfig::Provider::Remote) {
    auto remote = config.remote;
    remote.dimension = config.dimension;
    return std::make_unique<RemoteEmbedder>(std::move(remote));
  }
  return std::make_unique<LocalEmbedder>(config.dimension);
}

}  // namespace robocoder
