#include "rumourbench/provider.hpp"

#include <chrono>
#include <filesystem>
#include <thread>

#include <json.hpp>

#include "rumourbench/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace rumourbench::provider {

namespace {

void real_sleep(double ms) {
  if (ms > 0) std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(ms));
}

std::uint64_t steady_ms() {
  return static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                        std::chrono::steady_clock::now().time_since_epoch())
                                        .count());
}

// xorshift64*: cheap, seedable, and stateful without <random> object churn.
std::uint64_t next_rand(std::uint64_t& state) {
  state ^= state >> 12;
  state ^= state << 25;
  state ^= state >> 27;
  return state * 0x2545F4914F6CDD1DULL;
}

} // namespace

std::string CompletionRequest::key() const {
  std::vector<std::string_view> parts;
  parts.push_back("chat-completion-v1");
  parts.push_back(model);
  std::string temp = util::format_temperature(temperature);
  parts.push_back(temp);
  parts.push_back(multi_label ? "multi" : "single");
  parts.push_back(use_tools ? "tools" : "prose");
  std::string mt = std::to_string(max_tokens);
  parts.push_back(mt);
  parts.push_back(prompt);
  return util::sha256_hex(parts);
}

std::string to_string(FailureKind k) {
  switch (k) {
    case FailureKind::timeout: return "timeout";
    case FailureKind::rate_limited: return "rate_limited";
    case FailureKind::server_error: return "server_error";
    case FailureKind::bad_response: return "bad_response";
    case FailureKind::auth: return "auth";
    case FailureKind::script_exhausted: return "script_exhausted";
  }
  return "unknown";
}

bool is_retryable(FailureKind k) {
  switch (k) {
    case FailureKind::timeout:
    case FailureKind::rate_limited:
    case FailureKind::server_error:
    case FailureKind::bad_response:
      return true;
    case FailureKind::auth:
    case FailureKind::script_exhausted:
      return false;
  }
  return false;
}

// ---- MockTransport ----

MockTransport::MockTransport(std::vector<ScriptEntry> script) : script_(std::move(script)) {
  if (script_.empty())
    throw ProviderError(FailureKind::script_exhausted, 0, "mock transport script is empty");
  for (const auto& e : script_) {
    if (e.kind != "ok" && e.kind != "timeout" && e.kind != "rate_limited" &&
        e.kind != "server_error" && e.kind != "auth")
      throw ProviderError(FailureKind::bad_response, 0,
                          "unknown mock script entry kind: '" + e.kind + "'");
  }
  used_.assign(script_.size(), 0);
}

std::vector<ScriptEntry> MockTransport::script_from_json(const std::string& json_text) {
  json j = json::parse(json_text);
  const json& arr = j.is_array() ? j : j.at("entries");
  std::vector<ScriptEntry> script;
  for (const auto& item : arr) {
    ScriptEntry e;
    e.kind = item.value("kind", "ok");
    e.text = item.value("text", "");
    e.match = item.value("match", "");
    e.repeat = item.value("repeat", 1);
    script.push_back(std::move(e));
  }
  return script;
}

std::string MockTransport::complete(const CompletionRequest& req) {
  std::lock_guard<std::mutex> lock(mu_);
  requests_.push_back(req);
  for (std::size_t i = 0; i < script_.size(); ++i) {
    const auto& e = script_[i];
    if (e.repeat >= 0 && used_[i] >= e.repeat) continue;
    if (!e.match.empty() && req.prompt.find(e.match) == std::string::npos) continue;
    ++used_[i];
    if (e.kind == "ok") return e.text;
    if (e.kind == "timeout") throw TransportFailure(FailureKind::timeout, "scripted timeout");
    if (e.kind == "rate_limited")
      throw TransportFailure(FailureKind::rate_limited, "scripted rate limit");
    if (e.kind == "server_error")
      throw TransportFailure(FailureKind::server_error, "scripted server error");
    if (e.kind == "auth") throw TransportFailure(FailureKind::auth, "scripted auth failure");
  }
  throw TransportFailure(FailureKind::script_exhausted,
                         "mock script has no entry left for this prompt");
}

std::vector<CompletionRequest> MockTransport::requests() const {
  std::lock_guard<std::mutex> lock(mu_);
  return requests_;
}

int MockTransport::request_count() const {
  std::lock_guard<std::mutex> lock(mu_);
  return static_cast<int>(requests_.size());
}

// ---- RetryPolicy ----

double RetryPolicy::delay_ms(int attempt, double u) const {
  double base = initial_delay_ms;
  for (int i = 1; i < attempt; ++i) base *= multiplier;
  if (base > max_delay_ms) base = max_delay_ms;
  double jittered = base * (1.0 + jitter * u);
  return jittered < 0 ? 0 : jittered;
}

// ---- RateLimiter ----

RateLimiter::RateLimiter(double rpm, double burst, Clock clock, Sleeper sleeper)
    : rate_per_ms_(rpm / 60000.0),
      capacity_(burst < 1 ? 1 : burst),
      tokens_(capacity_),
      clock_(clock ? std::move(clock) : Clock(steady_ms)),
      sleeper_(sleeper ? std::move(sleeper) : Sleeper(real_sleep)) {
  if (rpm <= 0) throw ProviderError(FailureKind::bad_response, 0, "rate limit rpm must be > 0");
  last_ms_ = clock_();
}

void RateLimiter::acquire() {
  while (true) {
    double wait_ms = 0;
    {
      std::lock_guard<std::mutex> lock(mu_);
      std::uint64_t now = clock_();
      if (now > last_ms_) {
        tokens_ = std::min(capacity_, tokens_ + rate_per_ms_ * static_cast<double>(now - last_ms_));
        last_ms_ = now;
      }
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      wait_ms = (1.0 - tokens_) / rate_per_ms_;
    }
    sleeper_(wait_ms);
  }
}

// ---- DiskCache ----

DiskCache::DiskCache(std::string dir) : dir_(std::move(dir)) {
  fs::create_directories(dir_);
}

std::optional<std::string> DiskCache::get(const std::string& key) {
  std::lock_guard<std::mutex> lock(mu_);
  fs::path path = fs::path(dir_) / key;
  std::error_code ec;
  if (!fs::exists(path, ec)) {
    ++misses_;
    return std::nullopt;
  }
  ++hits_;
  return util::read_file(path.string());
}

void DiskCache::put(const std::string& key, const std::string& raw, const std::string& model) {
  std::lock_guard<std::mutex> lock(mu_);
  fs::path path = fs::path(dir_) / key;
  util::write_file_atomic(path.string(), raw);
  json meta;
  meta["key"] = key;
  meta["model"] = model;
  meta["bytes"] = raw.size();
  meta["stored_ms"] = util::now_ms();
  util::write_file_atomic(
      path.string() + ".meta.json",
      meta.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace));
}

// ---- Provider ----

Provider::Provider(std::shared_ptr<Transport> transport, std::shared_ptr<DiskCache> cache,
                   std::shared_ptr<RateLimiter> limiter, ProviderOptions opts)
    : transport_(std::move(transport)),
      cache_(std::move(cache)),
      limiter_(std::move(limiter)),
      opts_(std::move(opts)),
      rng_state_(opts_.retry_seed ? opts_.retry_seed : 0x9E3779B97F4A7C15ULL) {
  if (!transport_) throw ProviderError(FailureKind::bad_response, 0, "provider needs a transport");
  if (!opts_.sleeper) opts_.sleeper = real_sleep;
  if (opts_.retry.max_attempts < 1)
    throw ProviderError(FailureKind::bad_response, 0, "retry max_attempts must be >= 1");
}

CompletionOutcome Provider::complete(const CompletionRequest& req) {
  std::string key;
  if (cache_) {
    key = req.key();
    if (auto cached = cache_->get(key)) {
      CompletionOutcome out;
      out.raw = std::move(*cached);
      out.attempts = 0;
      out.latency_ms = 0;
      out.source = "cache";
      return out;
    }
  }

  for (int attempt = 1; attempt <= opts_.retry.max_attempts; ++attempt) {
    if (limiter_) limiter_->acquire();
    std::uint64_t t0 = steady_ms();
    try {
      std::string raw = transport_->complete(req);
      CompletionOutcome out;
      out.raw = std::move(raw);
      out.attempts = attempt;
      out.latency_ms = static_cast<double>(steady_ms() - t0);
      out.source = transport_->name();
      if (cache_) cache_->put(key, out.raw, req.model);
      return out;
    } catch (const TransportFailure& failure) {
      bool last = attempt == opts_.retry.max_attempts;
      if (!is_retryable(failure.kind) || last)
        throw ProviderError(failure.kind, attempt,
                            std::string(failure.what()) + " (after " + std::to_string(attempt) +
                                (attempt == 1 ? " attempt)" : " attempts)"));
      double u;
      {
        std::lock_guard<std::mutex> lock(rng_mu_);
        u = static_cast<double>(next_rand(rng_state_) >> 11) / 9007199254740992.0; // [0,1)
      }
      opts_.sleeper(opts_.retry.delay_ms(attempt, 2.0 * u - 1.0));
    }
  }
  throw ProviderError(FailureKind::bad_response, opts_.retry.max_attempts, "unreachable");
}

} // namespace rumourbench::provider
