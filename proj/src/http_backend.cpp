// Chat-completions transport for the elicitation runner. Kept in its own
// translation unit so httplib (and OpenSSL, when enabled) stay out of every
// other compile.

#ifdef PREFKIT_HAVE_OPENSSL
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

#include <cstdlib>

#include "prefkit/common.hpp"
#include "prefkit/elicitation.hpp"

namespace prefkit {

HttpBackend::HttpBackend(HttpBackendConfig config)
    : config_(std::move(config)) {
  if (config_.base_url.empty())
    throw ConfigError("http backend: base_url is required");
  if (config_.model.empty())
    throw ConfigError("http backend: model is required");
  const char* key = std::getenv(config_.api_key_env.c_str());
  if (key == nullptr || *key == '\0')
    throw ConfigError("http backend: environment variable " +
                      config_.api_key_env + " is not set");
  api_key_ = key;
}

std::string HttpBackend::tag() const { return "http:" + config_.model; }

nlohmann::ordered_json HttpBackend::request_body(
    const std::string& prompt) const {
  nlohmann::ordered_json body;
  body["model"] = config_.model;
  body["temperature"] = config_.temperature;
  auto& messages = body["messages"] = nlohmann::ordered_json::array();
  if (!config_.system_message.empty())
    messages.push_back(
        {{"role", "system"}, {"content", config_.system_message}});
  messages.push_back({{"role", "user"}, {"content", prompt}});
  return body;
}

std::string HttpBackend::respond(const TrialContext& ctx) {
  httplib::Client client(config_.base_url);
#ifndef PREFKIT_HAVE_OPENSSL
  if (config_.base_url.rfind("https://", 0) == 0)
    throw ConfigError(
        "http backend: built without TLS support, cannot use https URL");
#endif
  client.set_connection_timeout(config_.timeout_s);
  client.set_read_timeout(config_.timeout_s);
  client.set_write_timeout(config_.timeout_s);
  client.set_bearer_token_auth(api_key_);

  auto res = client.Post(config_.path, request_body(ctx.prompt).dump(),
                         "application/json");
  if (!res)
    throw BackendError("http backend: transport failure: " +
                       httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300)
    throw BackendError("http backend: HTTP " + std::to_string(res->status) +
                       " from " + config_.path);

  nlohmann::json reply;
  try {
    reply = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::parse_error&) {
    throw BackendError("http backend: response body is not JSON");
  }
  // Standard chat-completions shape: choices[0].message.content.
  if (!reply.contains("choices") || !reply["choices"].is_array() ||
      reply["choices"].empty())
    throw BackendError("http backend: response has no choices");
  const auto& message = reply["choices"][0].value("message", nlohmann::json{});
  if (!message.contains("content") || !message["content"].is_string())
    throw BackendError("http backend: response has no message content");
  return message["content"].get<std::string>();
}

}  // namespace prefkit
