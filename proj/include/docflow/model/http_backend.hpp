#pragma once

#include "docflow/model/chat.hpp"
#include "docflow/model/embedding.hpp"

#include <chrono>
#include <mutex>
#include <optional>
#include <string>

namespace docflow::model {

struct Endpoint {
  std::string scheme_host_port;  // "https://api.example.com:443"
  std::string path;              // "/v1/chat/completions"

  static Endpoint parse(const std::string& url);
};

struct RemoteConfig {
  std::string endpoint;  // full URL
  std::string api_key;
  std::string model;
  std::chrono::seconds timeout{60};

  // MODEL_ENDPOINT, MODEL_API_KEY, MODEL_NAME. Throws ValidationError when
  // MODEL_ENDPOINT is unset.
  static RemoteConfig from_env();
};

// Chat-completion over HTTP: POST {model, messages[], temperature, max_tokens}
// with a bearer token; reads choices[0].message.content.
class HttpChatBackend final : public ChatBackend {
 public:
  explicit HttpChatBackend(RemoteConfig config);
  std::string complete(const ChatRequest& request) override;

 private:
  RemoteConfig config_;
  Endpoint endpoint_;
};

// POST {model, input} -> data[0].embedding. Vectors are L2-normalised locally;
// the dimension is pinned by the first response.
class HttpEmbedder final : public Embedder {
 public:
  HttpEmbedder(RemoteConfig config, std::size_t expected_dimension = 0);

  // EMBED_ENDPOINT (plus MODEL_API_KEY / MODEL_NAME); nullopt when unset.
  static std::optional<RemoteConfig> config_from_env();

  std::size_t dimension() const override;
  EmbeddingVector embed(std::string_view text) override;

 private:
  RemoteConfig config_;
  Endpoint endpoint_;
  mutable std::mutex mu_;
  std::size_t dimension_;
};

}  // namespace docflow::model
