#pragma once

#include "docflow/model/chat.hpp"
#include "docflow/model/embedding.hpp"

#include <atomic>
#include <chrono>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

namespace docflow::model {

class Captioner {
 public:
  virtual ~Captioner() = default;
  virtual std::string caption(std::string_view image_bytes) = 0;
};

// Offline captioner: "IMAGE(<first 8 hex of sha256(bytes)>)".
class StubCaptioner final : public Captioner {
 public:
  std::string caption(std::string_view image_bytes) override;
};

struct TapRecord {
  enum class Kind { chat, caption };

  std::size_t seq = 0;
  Kind kind = Kind::chat;
  ChatRequest request;  // for captions: role "captioner", one user turn naming the image hash
  std::string response;
  std::string error;  // empty on success
};

// Append-only, thread-safe record of every chat and caption exchange.
// Embedding calls are only counted.
class Tap {
 public:
  void append(TapRecord record);
  std::vector<TapRecord> records() const;
  std::vector<TapRecord> records_since(std::size_t first_seq) const;
  std::size_t size() const;
  std::size_t count_role(std::string_view role) const;

  void note_embedding() noexcept { embeddings_.fetch_add(1, std::memory_order_relaxed); }
  std::size_t embedding_calls() const noexcept { return embeddings_.load(std::memory_order_relaxed); }

 private:
  mutable std::mutex mu_;
  std::vector<TapRecord> records_;
  std::atomic<std::size_t> embeddings_{0};
};

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds base_delay{250};
  std::chrono::milliseconds max_delay{4000};
};

// The single choke point for model traffic. Reentrant; the backends it wraps
// must tolerate concurrent calls.
class Gateway {
 public:
  Gateway(std::shared_ptr<ChatBackend> chat, std::shared_ptr<Captioner> captioner,
          std::shared_ptr<Embedder> embedder, RetryPolicy retry = {});

  // Retries TransportError with exponential backoff up to retry.max_retries
  // times; other ModelErrors surface immediately. Never returns empty text.
  std::string complete(const ChatRequest& request);

  std::string caption_image(std::string_view image_bytes);

  EmbeddingVector embed(std::string_view text);

  Embedder& embedder() noexcept { return *embedder_; }
  const Tap& tap() const noexcept { return tap_; }
  const RetryPolicy& retry_policy() const noexcept { return retry_; }

  // Replaceable for tests so backoff does not actually sleep.
  void set_sleeper(std::function<void(std::chrono::milliseconds)> sleeper) { sleeper_ = std::move(sleeper); }

 private:
  std::shared_ptr<ChatBackend> chat_;
  std::shared_ptr<Captioner> captioner_;
  std::shared_ptr<Embedder> embedder_;
  RetryPolicy retry_;
  std::function<void(std::chrono::milliseconds)> sleeper_;
  Tap tap_;
};

}  // namespace docflow::model
