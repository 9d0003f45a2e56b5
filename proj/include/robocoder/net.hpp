#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

namespace robocoder::net {

using Headers = std::map<std::string, std::string>;

struct Url {
  std::string scheme;  // "http" or "https"
  std::string host;
  int port = 0;
  std::string path;  // always starts with '/'

  static Url parse(const std::string& url);
  std::string origin() const;
};

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{250};
  double multiplier = 2.0;
};

struct HttpOptions {
  std::chrono::milliseconds timeout{60'000};
  RetryPolicy retry;
};

/// Connection refused, DNS failure, timeout, or a retryable status that
/// persisted through every attempt.
class TransportError : public std::runtime_error {
 public:
  TransportError(const std::string& message, int attempts);
  int attempts() const { return attempts_; }

 private:
  int attempts_;
};

/// Non-retryable HTTP status (auth, bad request, ...).
class HttpStatusError : public std::runtime_error {
 public:
  HttpStatusError(int status, const std::string& body);
  int status() const { return status_; }
  const std::string& body() const { return body_; }

 private:
  int status_;
  std::string body_;
};

/// Appends one JSON line per exchange, with the Authorization header redacted.
class ExchangeLog {
 public:
  explicit ExchangeLog(std::filesystem::path path);
  void record(const std::string& url, const Headers& headers, const std::string& request, int status,
              const std::string& response);

 private:
  std::filesystem::path path_;
  std::mutex mutex_;
};

/// POSTs `body` as JSON and returns the response body of a 2xx reply.
/// Retries transport failures, 429 and 5xx with exponential backoff.
std::string post_json(const std::string& url, const nlohmann::json& body, const Headers& headers,
                      const HttpOptions& options, ExchangeLog* log = nullptr);

/// Bearer header from the named environment variable; empty when unset.
Headers bearer_from_env(const std::string& env_var);

}  // namespace robocoder::net
