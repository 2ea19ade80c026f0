#include <httplib.h>

#include <cstdio>
#include <cstdlib>

#include <json.hpp>

#include "rumourbench/provider.hpp"

using nlohmann::json;

namespace rumourbench::provider {

namespace {

json output_schema(bool multi_label) {
  json props;
  if (multi_label) {
    props["prediction"] = {{"type", "array"},
                           {"items", {{"type", "string"}}},
                           {"description", "one or more predicted categories"}};
    props["confidence"] = {{"type", "array"},
                           {"items", {{"type", "number"}}},
                           {"description", "a confidence between 0 and 1 per predicted category"}};
  } else {
    props["prediction"] = {{"type", "string"}, {"description", "the predicted category"}};
    props["confidence"] = {{"type", "number"},
                           {"description", "a confidence between 0 and 1 for the prediction"}};
  }
  props["justification"] = {{"type", "string"},
                            {"description", "a short justification of the prediction"}};
  json schema;
  schema["type"] = "object";
  schema["properties"] = props;
  schema["required"] = json::array({"prediction", "confidence", "justification"});
  return schema;
}

} // namespace

HttpTransport::HttpTransport(HttpOptions opts) : opts_(std::move(opts)) {
  std::string url = opts_.base_url;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw ProviderError(FailureKind::bad_response, 0, "base url lacks a scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    scheme_host_ = url;
    path_prefix_.clear();
  } else {
    scheme_host_ = url.substr(0, path_start);
    path_prefix_ = url.substr(path_start);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
  }
  if (const char* key = std::getenv(opts_.api_key_env.c_str()); key && *key) api_key_ = key;
}

std::string HttpTransport::request_body(const CompletionRequest& req) {
  json body;
  body["model"] = req.model;
  body["temperature"] = req.temperature;
  body["messages"] = json::array({json{{"role", "user"}, {"content", req.prompt}}});
  if (req.max_tokens > 0) body["max_tokens"] = req.max_tokens;
  if (req.use_tools) {
    json fn;
    fn["name"] = "submit_prediction";
    fn["description"] = "Submit the category prediction with confidence and justification.";
    fn["parameters"] = output_schema(req.multi_label);
    body["tools"] = json::array({json{{"type", "function"}, {"function", fn}}});
    body["tool_choice"] = json{{"type", "function"}, {"function", {{"name", "submit_prediction"}}}};
  }
  return body.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::string HttpTransport::complete(const CompletionRequest& req) {
  if (api_key_.empty()) {
    std::lock_guard<std::mutex> lock(warn_mu_);
    if (!warned_no_key_) {
      std::fprintf(stderr, "warning: environment variable %s is empty; sending unauthenticated requests\n",
                   opts_.api_key_env.c_str());
      warned_no_key_ = true;
    }
  }

  httplib::Client client(scheme_host_);
  client.set_connection_timeout(0, opts_.timeout_ms * 1000LL);
  client.set_read_timeout(0, opts_.timeout_ms * 1000LL);
  client.set_write_timeout(0, opts_.timeout_ms * 1000LL);

  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  auto res = client.Post(path_prefix_ + "/chat/completions", headers, request_body(req),
                         "application/json");
  if (!res)
    throw TransportFailure(FailureKind::timeout,
                           "connection failed: " + httplib::to_string(res.error()));

  if (res->status == 401 || res->status == 403)
    throw TransportFailure(FailureKind::auth,
                           "authentication rejected (HTTP " + std::to_string(res->status) + ")");
  if (res->status == 408 || res->status == 429)
    throw TransportFailure(FailureKind::rate_limited,
                           "rate limited (HTTP " + std::to_string(res->status) + ")");
  if (res->status >= 500)
    throw TransportFailure(FailureKind::server_error,
                           "server error (HTTP " + std::to_string(res->status) + ")");
  if (res->status < 200 || res->status >= 300)
    throw TransportFailure(FailureKind::bad_response,
                           "unexpected HTTP status " + std::to_string(res->status));

  json j = json::parse(res->body, nullptr, false);
  if (j.is_discarded() || !j.contains("choices") || !j["choices"].is_array() ||
      j["choices"].empty())
    throw TransportFailure(FailureKind::bad_response, "malformed completion response body");
  const json& msg = j["choices"][0].value("message", json::object());
  if (msg.contains("tool_calls") && msg["tool_calls"].is_array() && !msg["tool_calls"].empty()) {
    const json& call = msg["tool_calls"][0];
    if (call.contains("function") && call["function"].contains("arguments") &&
        call["function"]["arguments"].is_string())
      return call["function"]["arguments"].get<std::string>();
  }
  if (msg.contains("function_call") && msg["function_call"].contains("arguments") &&
      msg["function_call"]["arguments"].is_string())
    return msg["function_call"]["arguments"].get<std::string>();
  if (msg.contains("content") && msg["content"].is_string())
    return msg["content"].get<std::string>();
  throw TransportFailure(FailureKind::bad_response,
                         "completion response has neither tool call nor content");
}

} // namespace rumourbench::provider
