#include "robocoder/net.hpp"

#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>

namespace robocoder::net {

Url Url::parse(const std::string& url) {
  Url out;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw std::invalid_argument("url without scheme: " + url);
  out.scheme = url.substr(0, scheme_end);
  if (out.scheme != "http" && out.scheme != "https") throw std::invalid_argument("unsupported scheme in " + url);
  const auto rest = url.substr(scheme_end + 3);
  const auto slash = rest.find('/');
  const auto authority = rest.substr(0, slash);
  out.path = slash == std::string::npos ? "/" : rest.substr(slash);
  const auto colon = authority.rfind(':');
  if (colon != std::string::npos && authority.find(']') == std::string::npos) {
    out.host = authority.substr(0, colon);
    out.port = std::stoi(authority.substr(colon + 1));
  } else {
    out.host = authority;
    out.port = out.scheme == "https" ? 443 : 80;
  }
  if (out.host.empty()) throw std::invalid_argument("url without host: " + url);
  return out;
}

std::string Url::origin() const { return scheme + "://" + host + ":" + std::to_string(port); }

TransportError::TransportError(const std::string& message, int attempts)
    : std::runtime_error(message), attempts_(attempts) {}

HttpStatusError::HttpStatusError(int status, const std::string& body)
    : std::runtime_error("http status " + std::to_string(status)), status_(status), body_(body) {}

ExchangeLog::ExchangeLog(std::filesystem::path path) : path_(std::move(path)) {}

void ExchangeLog::record(const std::string& url, const Headers& headers, const std::string& request, int status,
                         const std::string& response) {
  nlohmann::json redacted = nlohmann::json::object();
  for (const auto& [name, value] : headers) {
    const bool secret = name == "Authorization" || name == "authorization" || name == "x-api-key";
    redacted[name] = secret ? "<redacted>" : value;
  }
  nlohmann::json line = {{"url", url}, {"headers", redacted}, {"request", request}, {"status", status},
                         {"response", response}};
  std::lock_guard lock(mutex_);
  std::ofstream out(path_, std::ios::app);
  out << line.dump() << '\n';
}

std::string post_json(const std::string& url, const nlohmann::json& body, const Headers& headers,
                      const HttpOptions& options, ExchangeLog* log) {
  const auto target = Url::parse(url);
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (target.scheme == "https") throw TransportError("https endpoints need a build with OpenSSL", 0);
#endif
  const auto payload = body.dump();
  httplib::Headers http_headers;
  for (const auto& [name, value] : headers) http_headers.emplace(name, value);

  const int attempts = std::max(1, options.retry.attempts);
  auto backoff = options.retry.initial_backoff;
  std::string last_error;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    httplib::Client client(target.origin());
    const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(options.timeout);
    const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(options.timeout - seconds);
    client.set_connection_timeout(seconds.count(), micros.count());
    client.set_read_timeout(seconds.count(), micros.count());
    client.set_write_timeout(seconds.count(), micros.count());

    auto result = client.Post(target.path, http_headers, payload, "application/json");
    if (!result) {
      last_error = "transport error: " + httplib::to_string(result.error());
      if (log) log->record(url, headers, payload, 0, last_error);
    } else {
      if (log) log->record(url, headers, payload, result->status, result->body);
      if (result->status >= 200 && result->status < 300) return result->body;
      if (result->status != 429 && result->status < 500) throw HttpStatusError(result->status, result->body);
      last_error = "http status " + std::to_string(result->status);
    }
    if (attempt < attempts) {
      std::this_thread::sleep_for(backoff);
      backoff = std::chrono::milliseconds(static_cast<long long>(static_cast<double>(backoff.count()) *
                                                                 options.retry.multiplier));
    }
  }
  throw TransportError(url + ": " + last_error + " after " + std::to_string(attempts) + " attempts", attempts);
}

Headers bearer_from_env(const std::string& env_var) {
  Headers headers;
  if (env_var.empty()) return headers;
  if (const char* token = std::getenv(env_var.c_str()); token != nullptr && *token != '\0') {
    headers["Authorization"] = std::string("Bearer ") + token;
  }
  return headers;
}

}  // namespace robocoder::net
