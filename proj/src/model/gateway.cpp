#include "docflow/model/gateway.hpp"

#include "docflow/common/errors.hpp"
#include "docflow/common/text.hpp"

#include <algorithm>
#include <thread>

namespace docflow::model {

void ChatRequest::validate() const {
  if (role.empty()) throw ValidationError("chat request without role tag");
  if (turns.empty()) throw ValidationError("chat request has no turns");
  if (turns.back().speaker != Speaker::user) throw ValidationError("last turn of a chat request must be the user's");
  if (params.temperature < 0.0) throw ValidationError("temperature must be >= 0");
  if (params.max_tokens <= 0) throw ValidationError("max_tokens must be positive");
}

const std::string& ChatRequest::last_user_text() const {
  for (auto it = turns.rbegin(); it != turns.rend(); ++it) {
    if (it->speaker == Speaker::user) return it->text;
  }
  throw ValidationError("chat request has no user turn");
}

std::string ChatRequest::flatten() const {
  std::string out = role_prompt;
  for (const auto& t : turns) {
    out += '\n';
    out += t.text;
  }
  return out;
}

std::string StubCaptioner::caption(std::string_view image_bytes) {
  return "IMAGE(" + text::sha256_hex(image_bytes).substr(0, 8) + ")";
}

void Tap::append(TapRecord record) {
  std::lock_guard lock(mu_);
  record.seq = records_.size();
  records_.push_back(std::move(record));
}

std::vector<TapRecord> Tap::records() const {
  std::lock_guard lock(mu_);
  return records_;
}

std::vector<TapRecord> Tap::records_since(std::size_t first_seq) const {
  std::lock_guard lock(mu_);
  if (first_seq >= records_.size()) return {};
  return {records_.begin() + static_cast<std::ptrdiff_t>(first_seq), records_.end()};
}

std::size_t Tap::size() const {
  std::lock_guard lock(mu_);
  return records_.size();
}

std::size_t Tap::count_role(std::string_view role) const {
  std::lock_guard lock(mu_);
  return static_cast<std::size_t>(
      std::count_if(records_.begin(), records_.end(), [&](const TapRecord& r) { return r.request.role == role; }));
}

Gateway::Gateway(std::shared_ptr<ChatBackend> chat, std::shared_ptr<Captioner> captioner,
                 std::shared_ptr<Embedder> embedder, RetryPolicy retry)
    : chat_(std::move(chat)),
      captioner_(std::move(captioner)),
      embedder_(std::move(embedder)),
      retry_(retry),
      sleeper_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {
  if (!chat_ || !captioner_ || !embedder_) throw ValidationError("gateway needs chat, captioner and embedder backends");
}

std::string Gateway::complete(const ChatRequest& request) {
  request.validate();
  for (int attempt = 0;; ++attempt) {
    TapRecord rec;
    rec.kind = TapRecord::Kind::chat;
    rec.request = request;
    try {
      std::string reply = chat_->complete(request);
      if (text::trim(reply).empty()) throw ProtocolError("backend returned an empty completion for role '" + request.role + "'");
      rec.response = reply;
      tap_.append(std::move(rec));
      return reply;
    } catch (const TransportError& e) {
      rec.error = e.what();
      tap_.append(std::move(rec));
      if (attempt >= retry_.max_retries) {
        throw TransportError(std::string(e.what()) + " (gave up after " + std::to_string(attempt + 1) + " attempts)");
      }
      std::chrono::milliseconds delay = std::min<std::chrono::milliseconds>(retry_.max_delay, retry_.base_delay * (1 << std::min(attempt, 20)));
      sleeper_(delay);
    } catch (const ModelError& e) {
      rec.error = e.what();
      tap_.append(std::move(rec));
      throw;
    }
  }
}

std::string Gateway::caption_image(std::string_view image_bytes) {
  if (image_bytes.empty()) throw ValidationError("cannot caption an empty image");
  TapRecord rec;
  rec.kind = TapRecord::Kind::caption;
  rec.request = single_turn("captioner", "", "image sha256=" + text::sha256_hex(image_bytes));
  try {
    rec.response = captioner_->caption(image_bytes);
    if (text::trim(rec.response).empty()) throw ProtocolError("captioner returned empty text");
  } catch (const ModelError& e) {
    rec.error = e.what();
    tap_.append(rec);
    throw;
  }
  tap_.append(rec);
  return rec.response;
}

EmbeddingVector Gateway::embed(std::string_view text) {
  if (text.empty()) throw ValidationError("cannot embed empty text");
  tap_.note_embedding();
  return embedder_->embed(text);
}

}  // namespace docflow::model
