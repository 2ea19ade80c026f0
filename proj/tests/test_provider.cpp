#include <doctest.h>

#include <httplib.h>

#include <cstdlib>
#include <filesystem>
#include <json.hpp>
#include <thread>

#include "rumourbench/provider.hpp"
#include "rumourbench/util.hpp"

namespace fs = std::filesystem;
using namespace rumourbench;
using nlohmann::json;
using provider::CompletionRequest;
using provider::DiskCache;
using provider::FailureKind;
using provider::HttpOptions;
using provider::HttpTransport;
using provider::MockTransport;
using provider::Provider;
using provider::ProviderError;
using provider::ProviderOptions;
using provider::RateLimiter;
using provider::RetryPolicy;
using provider::ScriptEntry;
using provider::TransportFailure;

namespace {

CompletionRequest req_with_prompt(std::string prompt) {
  CompletionRequest r;
  r.model = "gpt-4";
  r.prompt = std::move(prompt);
  return r;
}

const std::string kOkPayload =
    R"({"prediction": "true", "confidence": 0.9, "justification": "ok"})";

template <typename Fn>
FailureKind transport_failure_kind(Fn&& fn) {
  try {
    fn();
  } catch (const TransportFailure& f) {
    return f.kind;
  }
  FAIL("expected a TransportFailure");
  return FailureKind::bad_response;
}

template <typename Fn>
ProviderError provider_error_of(Fn&& fn) {
  try {
    fn();
  } catch (const ProviderError& e) {
    return e;
  }
  FAIL("expected a ProviderError");
  return ProviderError(FailureKind::bad_response, 0, "unreachable");
}

} // namespace

TEST_SUITE("provider") {

TEST_CASE("request keys are content-addressed and field-sensitive") {
  CompletionRequest base = req_with_prompt("classify this");
  CHECK(base.key() == req_with_prompt("classify this").key());
  CHECK(base.key().size() == 64);

  auto differs = [&](CompletionRequest changed) { CHECK(changed.key() != base.key()); };
  {
    auto r = base;
    r.model = "gpt-3.5-turbo";
    differs(r);
  }
  {
    auto r = base;
    r.prompt = "classify that";
    differs(r);
  }
  {
    auto r = base;
    r.temperature = 0.9;
    differs(r);
  }
  {
    auto r = base;
    r.multi_label = true;
    differs(r);
  }
  {
    auto r = base;
    r.use_tools = false;
    differs(r);
  }
  {
    auto r = base;
    r.max_tokens = 256;
    differs(r);
  }
  // Numerically equal temperatures hash identically.
  auto a = base;
  a.temperature = 0.8;
  auto b = base;
  b.temperature = 0.80;
  CHECK(a.key() == b.key());
}

TEST_CASE("retryable and fatal failure kinds are fixed") {
  CHECK(provider::is_retryable(FailureKind::timeout));
  CHECK(provider::is_retryable(FailureKind::rate_limited));
  CHECK(provider::is_retryable(FailureKind::server_error));
  CHECK(provider::is_retryable(FailureKind::bad_response));
  CHECK_FALSE(provider::is_retryable(FailureKind::auth));
  CHECK_FALSE(provider::is_retryable(FailureKind::script_exhausted));
  CHECK(provider::to_string(FailureKind::rate_limited) == "rate_limited");
}

TEST_CASE("retry delays follow exponential backoff with a cap and jitter") {
  RetryPolicy p; // 4 attempts, 500ms, x2, 8000ms cap, 25% jitter
  CHECK(p.delay_ms(1, 0) == doctest::Approx(500));
  CHECK(p.delay_ms(2, 0) == doctest::Approx(1000));
  CHECK(p.delay_ms(3, 0) == doctest::Approx(2000));
  CHECK(p.delay_ms(4, 0) == doctest::Approx(4000));
  CHECK(p.delay_ms(5, 0) == doctest::Approx(8000));
  CHECK(p.delay_ms(6, 0) == doctest::Approx(8000)); // capped
  CHECK(p.delay_ms(1, 1) == doctest::Approx(625));
  CHECK(p.delay_ms(1, -1) == doctest::Approx(375));
  CHECK(p.delay_ms(5, 1) == doctest::Approx(10000)); // jitter applies after the cap
}

TEST_CASE("mock transport routes by match substring and honours repeats") {
  auto mock = std::make_shared<MockTransport>(std::vector<ScriptEntry>{
      {"ok", "alpha-answer", "alpha", 2},
      {"ok", "fallback-answer", "", -1},
  });
  CHECK(mock->complete(req_with_prompt("prompt with alpha inside")) == "alpha-answer");
  CHECK(mock->complete(req_with_prompt("prompt with alpha inside")) == "alpha-answer");
  // Third alpha prompt: the matched entry is spent, falls to the wildcard.
  CHECK(mock->complete(req_with_prompt("prompt with alpha inside")) == "fallback-answer");
  CHECK(mock->complete(req_with_prompt("unrelated")) == "fallback-answer");
  CHECK(mock->request_count() == 4);
  CHECK(mock->requests()[0].prompt == "prompt with alpha inside");

  CHECK_THROWS_AS(MockTransport(std::vector<ScriptEntry>{}), ProviderError);
  CHECK_THROWS_AS(MockTransport(std::vector<ScriptEntry>{{"explode", "", "", 1}}), ProviderError);

  MockTransport finite(std::vector<ScriptEntry>{{"ok", "once", "", 1}});
  CHECK(finite.complete(req_with_prompt("a")) == "once");
  auto kind =
      transport_failure_kind([&] { finite.complete(req_with_prompt("b")); });
  CHECK(kind == FailureKind::script_exhausted);

  MockTransport failing(std::vector<ScriptEntry>{{"timeout", "", "", 1},
                                                 {"rate_limited", "", "", 1},
                                                 {"server_error", "", "", 1},
                                                 {"auth", "", "", 1}});
  CHECK(transport_failure_kind([&] { failing.complete(req_with_prompt("x")); }) ==
        FailureKind::timeout);
  CHECK(transport_failure_kind([&] { failing.complete(req_with_prompt("x")); }) ==
        FailureKind::rate_limited);
  CHECK(transport_failure_kind([&] { failing.complete(req_with_prompt("x")); }) ==
        FailureKind::server_error);
  CHECK(transport_failure_kind([&] { failing.complete(req_with_prompt("x")); }) ==
        FailureKind::auth);
}

TEST_CASE("mock scripts load from JSON in array or object form") {
  auto arr = MockTransport::script_from_json(
      R"([{"kind": "ok", "text": "hello", "match": "m", "repeat": 3}, {"text": "default"}])");
  REQUIRE(arr.size() == 2);
  CHECK(arr[0].kind == "ok");
  CHECK(arr[0].text == "hello");
  CHECK(arr[0].match == "m");
  CHECK(arr[0].repeat == 3);
  CHECK(arr[1].kind == "ok"); // defaults
  CHECK(arr[1].match == "");
  CHECK(arr[1].repeat == 1);

  auto obj = MockTransport::script_from_json(
      R"({"entries": [{"kind": "server_error", "repeat": -1}]})");
  REQUIRE(obj.size() == 1);
  CHECK(obj[0].kind == "server_error");
  CHECK(obj[0].repeat == -1);
}

TEST_CASE("provider retries transient failures then succeeds") {
  auto mock = std::make_shared<MockTransport>(std::vector<ScriptEntry>{
      {"timeout", "", "", 1},
      {"server_error", "", "", 1},
      {"ok", kOkPayload, "", -1},
  });
  std::vector<double> sleeps;
  ProviderOptions opts;
  opts.retry_seed = 42;
  opts.sleeper = [&](double ms) { sleeps.push_back(ms); };
  Provider prov(mock, nullptr, nullptr, opts);

  auto out = prov.complete(req_with_prompt("p"));
  CHECK(out.raw == kOkPayload);
  CHECK(out.attempts == 3);
  CHECK(out.source == "mock");
  CHECK(mock->request_count() == 3);
  REQUIRE(sleeps.size() == 2);
  CHECK(sleeps[0] >= 375);
  CHECK(sleeps[0] <= 625);
  CHECK(sleeps[1] >= 750);
  CHECK(sleeps[1] <= 1250);
}

TEST_CASE("provider surfaces exhaustion and fatal failures with attempt counts") {
  std::vector<double> sleeps;
  ProviderOptions opts;
  opts.sleeper = [&](double ms) { sleeps.push_back(ms); };

  auto always_down = std::make_shared<MockTransport>(
      std::vector<ScriptEntry>{{"server_error", "", "", -1}});
  Provider prov(always_down, nullptr, nullptr, opts);
  auto err = provider_error_of([&] { prov.complete(req_with_prompt("p")); });
  CHECK(err.kind == FailureKind::server_error);
  CHECK(err.attempts == 4);
  CHECK(std::string(err.what()).find("(after 4 attempts)") != std::string::npos);
  CHECK(always_down->request_count() == 4);
  CHECK(sleeps.size() == 3); // no sleep after the final attempt

  sleeps.clear();
  auto locked_out =
      std::make_shared<MockTransport>(std::vector<ScriptEntry>{{"auth", "", "", -1}});
  Provider prov2(locked_out, nullptr, nullptr, opts);
  auto auth_err = provider_error_of([&] { prov2.complete(req_with_prompt("p")); });
  CHECK(auth_err.kind == FailureKind::auth);
  CHECK(auth_err.attempts == 1);
  CHECK(std::string(auth_err.what()).find("(after 1 attempt)") != std::string::npos);
  CHECK(locked_out->request_count() == 1);
  CHECK(sleeps.empty());
}

TEST_CASE("disk cache round-trips raw bytes and counts hits") {
  auto dir = fs::temp_directory_path() / "rb-cache-test";
  fs::remove_all(dir);
  DiskCache cache(dir.string());

  std::string key(64, 'a');
  CHECK_FALSE(cache.get(key).has_value());
  CHECK(cache.misses() == 1);

  // Payload with NUL bytes and invalid UTF-8 must survive unchanged.
  std::string raw = std::string("prefix\0middle", 13) + "\xff\xfe suffix";
  cache.put(key, raw, "gpt-4");
  auto back = cache.get(key);
  REQUIRE(back.has_value());
  CHECK(*back == raw);
  CHECK(cache.hits() == 1);

  json meta = json::parse(util::read_file((dir / (key + ".meta.json")).string()));
  CHECK(meta.at("key") == key);
  CHECK(meta.at("model") == "gpt-4");
  CHECK(meta.at("bytes").get<std::size_t>() == raw.size());

  fs::remove_all(dir);
}

TEST_CASE("provider serves identical requests from the cache") {
  auto dir = fs::temp_directory_path() / "rb-cache-provider";
  fs::remove_all(dir);
  auto mock = std::make_shared<MockTransport>(
      std::vector<ScriptEntry>{{"ok", kOkPayload, "", -1}});
  auto cache = std::make_shared<DiskCache>(dir.string());
  Provider prov(mock, cache, nullptr, {});

  auto first = prov.complete(req_with_prompt("p"));
  CHECK(first.attempts == 1);
  CHECK(first.source == "mock");

  auto second = prov.complete(req_with_prompt("p"));
  CHECK(second.attempts == 0);
  CHECK(second.source == "cache");
  CHECK(second.raw == first.raw);
  CHECK(mock->request_count() == 1); // no second transport call

  // A different prompt misses and goes back to the transport.
  auto third = prov.complete(req_with_prompt("q"));
  CHECK(third.source == "mock");
  CHECK(mock->request_count() == 2);

  fs::remove_all(dir);
}

TEST_CASE("token-bucket limiter allows bursts then enforces the rate") {
  struct FakeTime {
    std::uint64_t now = 1000;
    std::vector<double> sleeps;
  } t;
  RateLimiter limiter(
      60.0, 2.0, [&t] { return t.now; },
      [&t](double ms) {
        t.sleeps.push_back(ms);
        t.now += static_cast<std::uint64_t>(ms);
      });

  limiter.acquire();
  limiter.acquire();
  CHECK(t.sleeps.empty()); // burst capacity covers the first two

  limiter.acquire(); // must wait for one token: 60 rpm = 1 per second
  REQUIRE(t.sleeps.size() == 1);
  CHECK(t.sleeps[0] == doctest::Approx(1000.0));

  // After a long idle stretch tokens cap at the burst size, not more.
  t.now += 3600000;
  limiter.acquire();
  limiter.acquire();
  CHECK(t.sleeps.size() == 1);
  limiter.acquire();
  CHECK(t.sleeps.size() == 2);

  CHECK_THROWS_AS(RateLimiter(0.0, 1.0), ProviderError);
}

TEST_CASE("chat request bodies carry the forced function schema") {
  CompletionRequest req = req_with_prompt("the prompt text");
  req.temperature = 0.3;

  json body = json::parse(HttpTransport::request_body(req));
  CHECK(body.at("model") == "gpt-4");
  CHECK(body.at("temperature").get<double>() == doctest::Approx(0.3));
  REQUIRE(body.at("messages").size() == 1);
  CHECK(body["messages"][0].at("role") == "user");
  CHECK(body["messages"][0].at("content") == "the prompt text");
  CHECK_FALSE(body.contains("max_tokens"));

  REQUIRE(body.contains("tools"));
  const json& fn = body["tools"][0].at("function");
  CHECK(fn.at("name") == "submit_prediction");
  const json& props = fn.at("parameters").at("properties");
  CHECK(props.at("prediction").at("type") == "string");
  CHECK(props.at("confidence").at("type") == "number");
  CHECK(props.at("justification").at("type") == "string");
  CHECK(fn.at("parameters").at("required") ==
        json::array({"prediction", "confidence", "justification"}));
  CHECK(body.at("tool_choice").at("function").at("name") == "submit_prediction");

  req.multi_label = true;
  json multi = json::parse(HttpTransport::request_body(req));
  const json& mprops = multi["tools"][0]["function"]["parameters"]["properties"];
  CHECK(mprops.at("prediction").at("type") == "array");
  CHECK(mprops.at("confidence").at("type") == "array");

  req.use_tools = false;
  req.max_tokens = 256;
  json prose = json::parse(HttpTransport::request_body(req));
  CHECK_FALSE(prose.contains("tools"));
  CHECK_FALSE(prose.contains("tool_choice"));
  CHECK(prose.at("max_tokens") == 256);
}

TEST_CASE("http transport maps statuses and extracts completions") {
  httplib::Server svr;
  std::mutex mu;
  std::string mode = "tool_call";
  std::string seen_auth;
  json seen_body;

  svr.Post("/v1/chat/completions", [&](const httplib::Request& request,
                                       httplib::Response& response) {
    std::lock_guard<std::mutex> lock(mu);
    seen_auth = request.get_header_value("Authorization");
    seen_body = json::parse(request.body, nullptr, false);
    if (mode == "tool_call") {
      json args = {{"prediction", "true"}, {"confidence", 0.9}, {"justification", "ok"}};
      json body = {{"choices",
                    json::array({{{"message",
                                   {{"tool_calls",
                                     json::array({{{"type", "function"},
                                                   {"function",
                                                    {{"name", "submit_prediction"},
                                                     {"arguments", args.dump()}}}}})}}}}})}};
      response.set_content(body.dump(), "application/json");
    } else if (mode == "function_call") {
      json body = {{"choices", json::array({{{"message",
                                              {{"function_call",
                                                {{"arguments", "legacy-args"}}}}}}})}};
      response.set_content(body.dump(), "application/json");
    } else if (mode == "content") {
      json body = {{"choices", json::array({{{"message", {{"content", "plain answer"}}}}})}};
      response.set_content(body.dump(), "application/json");
    } else if (mode == "empty_message") {
      json body = {{"choices", json::array({{{"message", json::object()}}})}};
      response.set_content(body.dump(), "application/json");
    } else if (mode == "malformed") {
      response.set_content("{\"unexpected\": true}", "application/json");
    } else if (mode == "auth") {
      response.status = 401;
    } else if (mode == "rate") {
      response.status = 429;
    } else if (mode == "server") {
      response.status = 503;
    } else if (mode == "teapot") {
      response.status = 418;
    }
  });

  int port = svr.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread server_thread([&] { svr.listen_after_bind(); });
  svr.wait_until_ready();
  auto set_mode = [&](const std::string& m) {
    std::lock_guard<std::mutex> lock(mu);
    mode = m;
  };

  setenv("RB_TEST_API_KEY", "testkey-123", 1);
  HttpOptions opts;
  opts.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
  opts.api_key_env = "RB_TEST_API_KEY";
  opts.timeout_ms = 5000;
  HttpTransport transport(opts);
  CompletionRequest req = req_with_prompt("classify me");

  SUBCASE("tool-call arguments win and the bearer token is sent") {
    auto raw = transport.complete(req);
    json args = json::parse(raw);
    CHECK(args.at("prediction") == "true");
    std::lock_guard<std::mutex> lock(mu);
    CHECK(seen_auth == "Bearer testkey-123");
    CHECK(seen_body.at("model") == "gpt-4");
    CHECK(seen_body.contains("tools"));
  }
  SUBCASE("legacy function_call arguments are accepted") {
    set_mode("function_call");
    CHECK(transport.complete(req) == "legacy-args");
  }
  SUBCASE("message content is the fallback") {
    set_mode("content");
    CHECK(transport.complete(req) == "plain answer");
  }
  SUBCASE("status codes map onto failure kinds") {
    set_mode("auth");
    CHECK(transport_failure_kind([&] { transport.complete(req); }) == FailureKind::auth);
    set_mode("rate");
    CHECK(transport_failure_kind([&] { transport.complete(req); }) == FailureKind::rate_limited);
    set_mode("server");
    CHECK(transport_failure_kind([&] { transport.complete(req); }) == FailureKind::server_error);
    set_mode("teapot");
    CHECK(transport_failure_kind([&] { transport.complete(req); }) == FailureKind::bad_response);
  }
  SUBCASE("bodies without a usable completion are bad responses") {
    set_mode("malformed");
    CHECK(transport_failure_kind([&] { transport.complete(req); }) == FailureKind::bad_response);
    set_mode("empty_message");
    CHECK(transport_failure_kind([&] { transport.complete(req); }) == FailureKind::bad_response);
  }
  SUBCASE("a missing key warns and sends unauthenticated requests") {
    unsetenv("RB_TEST_MISSING_KEY");
    HttpOptions nokey = opts;
    nokey.api_key_env = "RB_TEST_MISSING_KEY";
    HttpTransport anon(nokey);
    set_mode("content");
    CHECK(anon.complete(req) == "plain answer");
    std::lock_guard<std::mutex> lock(mu);
    CHECK(seen_auth.empty());
  }

  svr.stop();
  server_thread.join();
}

TEST_CASE("an unreachable host is reported as a timeout-class failure") {
  HttpOptions opts;
  opts.base_url = "http://127.0.0.1:9/v1"; // discard port; nothing listens
  opts.timeout_ms = 2000;
  HttpTransport transport(opts);
  CHECK(transport_failure_kind([&] { transport.complete(req_with_prompt("p")); }) ==
        FailureKind::timeout);

  HttpOptions bad;
  bad.base_url = "not-a-url";
  CHECK_THROWS_AS(HttpTransport{bad}, ProviderError);
}

} // TEST_SUITE("provider")
