#include "docflow/model/http_backend.hpp"

#include "docflow/common/errors.hpp"

#include <httplib.h>
#include <json.hpp>

#include <cmath>
#include <cstdlib>

namespace docflow::model {

using nlohmann::json;

namespace {

std::string env_or(const char* name, const std::string& fallback = {}) {
  const char* v = std::getenv(name);
  return v ? std::string(v) : fallback;
}

httplib::Result post_json(const RemoteConfig& cfg, const Endpoint& ep, const json& body) {
  httplib::Client client(ep.scheme_host_port);
  client.set_connection_timeout(cfg.timeout);
  client.set_read_timeout(cfg.timeout);
  client.set_write_timeout(cfg.timeout);
  httplib::Headers headers;
  if (!cfg.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg.api_key);
  return client.Post(ep.path, headers, body.dump(), "application/json");
}

// Maps an HTTP outcome onto the error taxonomy; returns the parsed body on 200.
json checked_body(const httplib::Result& res, const std::string& what) {
  if (!res) throw TransportError(what + ": " + httplib::to_string(res.error()));
  int status = res->status;
  if (status == 408 || status == 429 || status >= 500) {
    throw TransportError(what + ": HTTP " + std::to_string(status));
  }
  if (status != 200) throw ProtocolError(what + ": HTTP " + std::to_string(status) + " " + res->body.substr(0, 200));
  try {
    return json::parse(res->body);
  } catch (const json::exception& e) {
    throw ProtocolError(what + ": malformed JSON payload: " + e.what());
  }
}

}  // namespace

Endpoint Endpoint::parse(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ValidationError("endpoint URL needs a scheme: '" + url + "'");
  std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw ValidationError("unsupported endpoint scheme '" + scheme + "'");
  auto path_start = url.find('/', scheme_end + 3);
  Endpoint ep;
  ep.scheme_host_port = url.substr(0, path_start);
  ep.path = path_start == std::string::npos ? "/" : url.substr(path_start);
  if (ep.scheme_host_port.size() <= scheme_end + 3) throw ValidationError("endpoint URL has no host: '" + url + "'");
  return ep;
}

RemoteConfig RemoteConfig::from_env() {
  RemoteConfig cfg;
  cfg.endpoint = env_or("MODEL_ENDPOINT");
  if (cfg.endpoint.empty()) throw ValidationError("MODEL_ENDPOINT is not set");
  cfg.api_key = env_or("MODEL_API_KEY");
  cfg.model = env_or("MODEL_NAME", "default");
  return cfg;
}

HttpChatBackend::HttpChatBackend(RemoteConfig config)
    : config_(std::move(config)), endpoint_(Endpoint::parse(config_.endpoint)) {}

std::string HttpChatBackend::complete(const ChatRequest& request) {
  json messages = json::array();
  if (!request.role_prompt.empty()) messages.push_back({{"role", "system"}, {"content", request.role_prompt}});
  for (const auto& t : request.turns) {
    messages.push_back({{"role", t.speaker == Speaker::user ? "user" : "assistant"}, {"content", t.text}});
  }
  json body = {{"model", config_.model},
               {"messages", messages},
               {"temperature", request.params.temperature},
               {"max_tokens", request.params.max_tokens}};

  json reply = checked_body(post_json(config_, endpoint_, body), "chat completion");
  try {
    const auto& content = reply.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw ProtocolError("chat completion: content is not a string");
    return content.get<std::string>();
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("chat completion: unexpected payload shape: ") + e.what());
  }
}

HttpEmbedder::HttpEmbedder(RemoteConfig config, std::size_t expected_dimension)
    : config_(std::move(config)), endpoint_(Endpoint::parse(config_.endpoint)), dimension_(expected_dimension) {}

std::optional<RemoteConfig> HttpEmbedder::config_from_env() {
  std::string ep = env_or("EMBED_ENDPOINT");
  if (ep.empty()) return std::nullopt;
  RemoteConfig cfg;
  cfg.endpoint = ep;
  cfg.api_key = env_or("MODEL_API_KEY");
  cfg.model = env_or("MODEL_NAME", "default");
  return cfg;
}

std::size_t HttpEmbedder::dimension() const {
  std::lock_guard lock(mu_);
  return dimension_;
}

EmbeddingVector HttpEmbedder::embed(std::string_view text) {
  if (text.empty()) throw ValidationError("cannot embed empty text");
  json body = {{"model", config_.model}, {"input", std::string(text)}};
  json reply = checked_body(post_json(config_, endpoint_, body), "embedding");
  EmbeddingVector v;
  try {
    v.components = reply.at("data").at(0).at("embedding").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("embedding: unexpected payload shape: ") + e.what());
  }
  {
    std::lock_guard lock(mu_);
    if (dimension_ == 0) dimension_ = v.dimension();
    if (v.dimension() != dimension_ || dimension_ == 0) {
      throw ProtocolError("embedding: dimension " + std::to_string(v.dimension()) + " != " + std::to_string(dimension_));
    }
  }
  double n = v.norm();
  if (n == 0.0 || !std::isfinite(n)) throw ProtocolError("embedding: zero or non-finite vector");
  for (double& c : v.components) c /= n;
  return v;
}

}  // namespace docflow::model
