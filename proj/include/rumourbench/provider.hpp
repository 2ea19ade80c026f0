#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rumourbench::provider {

struct CompletionRequest {
  std::string model;
  std::string prompt;
  double temperature = 0.8;
  bool multi_label = false; // shapes the structured-output schema
  bool use_tools = true;    // function-call output vs plain prose
  int max_tokens = 0;       // 0 = provider default

  // Content-addressed identity of this request; cache key and dedup key.
  std::string key() const;
};

enum class FailureKind {
  timeout,
  rate_limited,
  server_error,
  bad_response,
  auth,
  script_exhausted,
};

std::string to_string(FailureKind k);
bool is_retryable(FailureKind k);

// Thrown by transports for a single failed attempt.
class TransportFailure : public std::runtime_error {
 public:
  TransportFailure(FailureKind kind, const std::string& message)
      : std::runtime_error(message), kind(kind) {}
  FailureKind kind;
};

// Thrown by Provider::complete once retries are exhausted (or immediately
// for non-retryable failures).
class ProviderError : public std::runtime_error {
 public:
  ProviderError(FailureKind kind, int attempts, const std::string& message)
      : std::runtime_error(message), kind(kind), attempts(attempts) {}
  FailureKind kind;
  int attempts = 0;
};

struct CompletionOutcome {
  std::string raw;      // assistant text or tool-call arguments
  int attempts = 0;     // transport attempts made (0 on cache hit)
  double latency_ms = 0;
  std::string source;   // "cache" or the transport name
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::string name() const = 0;
  // Returns the raw completion or throws TransportFailure.
  virtual std::string complete(const CompletionRequest& req) = 0;
};

// Scriptable transport for deterministic tests and offline runs. Entries
// are consumed in order; an entry applies when it has uses left and its
// `match` substring (if any) occurs in the prompt.
struct ScriptEntry {
  std::string kind = "ok"; // ok | timeout | rate_limited | server_error | auth
  std::string text;        // payload for kind=ok
  std::string match;       // "" matches any prompt
  int repeat = 1;          // -1 = unbounded
};

class MockTransport : public Transport {
 public:
  explicit MockTransport(std::vector<ScriptEntry> script); // throws on empty script
  static std::vector<ScriptEntry> script_from_json(const std::string& json_text);

  std::string name() const override { return "mock"; }
  std::string complete(const CompletionRequest& req) override;

  std::vector<CompletionRequest> requests() const; // everything seen, in order
  int request_count() const;

 private:
  mutable std::mutex mu_;
  std::vector<ScriptEntry> script_;
  std::vector<int> used_;
  std::vector<CompletionRequest> requests_;
};

struct HttpOptions {
  std::string base_url = "https://api.openai.com/v1";
  std::string api_key_env = "OPENAI_API_KEY";
  int timeout_ms = 30000;
};

// Chat-completions client. Requests structured output through a forced
// function call when req.use_tools is set; otherwise reads message content.
class HttpTransport : public Transport {
 public:
  explicit HttpTransport(HttpOptions opts);
  std::string name() const override { return "http"; }
  std::string complete(const CompletionRequest& req) override;

  // Exposed for tests: the JSON body sent for a request.
  static std::string request_body(const CompletionRequest& req);

 private:
  HttpOptions opts_;
  std::string scheme_host_; // e.g. "http://127.0.0.1:8080"
  std::string path_prefix_; // e.g. "/v1"
  std::string api_key_;
  bool warned_no_key_ = false;
  std::mutex warn_mu_;
};

struct RetryPolicy {
  int max_attempts = 4;
  double initial_delay_ms = 500;
  double multiplier = 2.0;
  double max_delay_ms = 8000;
  double jitter = 0.25; // +/- fraction applied to each delay

  // Delay before retry following attempt `attempt` (1-based), jittered by u
  // in [-1, 1].
  double delay_ms(int attempt, double u) const;
};

using Sleeper = std::function<void(double ms)>;
using Clock = std::function<std::uint64_t()>; // monotonic milliseconds

// Token-bucket rate limiter: `rpm` requests/minute sustained, `burst` at once.
class RateLimiter {
 public:
  RateLimiter(double rpm, double burst, Clock clock = {}, Sleeper sleeper = {});
  void acquire();

 private:
  std::mutex mu_;
  double rate_per_ms_;
  double capacity_;
  double tokens_;
  std::uint64_t last_ms_;
  Clock clock_;
  Sleeper sleeper_;
};

// Content-addressed response cache: one payload file per request key (raw
// bytes, so replay is byte-identical) plus a small JSON metadata sidecar.
class DiskCache {
 public:
  explicit DiskCache(std::string dir);
  std::optional<std::string> get(const std::string& key);
  void put(const std::string& key, const std::string& raw, const std::string& model);

  std::uint64_t hits() const { return hits_; }
  std::uint64_t misses() const { return misses_; }

 private:
  std::string dir_;
  std::mutex mu_;
  std::uint64_t hits_ = 0;
  std::uint64_t misses_ = 0;
};

struct ProviderOptions {
  RetryPolicy retry;
  std::uint64_t retry_seed = 0; // seeds retry jitter
  Sleeper sleeper = {};         // injectable for tests; default real sleep
};

// Ties transport, cache, retry, and rate limiting together.
class Provider {
 public:
  Provider(std::shared_ptr<Transport> transport, std::shared_ptr<DiskCache> cache,
           std::shared_ptr<RateLimiter> limiter, ProviderOptions opts = {});

  // Returns the completion or throws ProviderError.
  CompletionOutcome complete(const CompletionRequest& req);

 private:
  std::shared_ptr<Transport> transport_;
  std::shared_ptr<DiskCache> cache_;
  std::shared_ptr<RateLimiter> limiter_;
  ProviderOptions opts_;
  std::mutex rng_mu_;
  std::uint64_t rng_state_;
};

} // namespace rumourbench::provider
