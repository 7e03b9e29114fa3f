#include "docflow/core/artifact.hpp"

#include "docflow/common/errors.hpp"
#include "docflow/common/text.hpp"

#include <json.hpp>

#include <fstream>
#include <mutex>
#include <sstream>

namespace docflow::core {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::int64_t to_millis(std::chrono::system_clock::time_point t) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(t.time_since_epoch()).count();
}

std::chrono::system_clock::time_point from_millis(std::int64_t ms) {
  return std::chrono::system_clock::time_point(std::chrono::milliseconds(ms));
}

}  // namespace

bool newer_than(const ArtifactHandle& a, const ArtifactHandle& b) {
  if (a.created_at != b.created_at) return a.created_at > b.created_at;
  return a.seq > b.seq;
}

ArtifactStore::ArtifactStore(fs::path dir) : dir_(std::move(dir)) {
  fs::create_directories(*dir_ / "blobs");
  load();
}

void ArtifactStore::load() {
  std::unique_lock lock(mu_);
  if (!dir_) return;
  blobs_.clear();
  handles_.clear();
  next_seq_ = 1;
  std::ifstream in(*dir_ / "handles.jsonl");
  if (!in) return;
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception&) {
      // A torn final line from an interrupted append; everything before it is intact.
      break;
    }
    ArtifactHandle h;
    h.id = j.at("id").get<std::string>();
    h.kind = ArtifactKind(j.at("kind").get<std::string>());
    h.created_by = j.at("created_by").get<std::string>();
    h.created_at = from_millis(j.at("created_at_ms").get<std::int64_t>());
    h.seq = j.at("seq").get<std::uint64_t>();
    h.name = j.value("name", "");
    if (!blobs_.count(h.id)) {
      std::ifstream blob(*dir_ / "blobs" / h.id, std::ios::binary);
      if (!blob) continue;
      std::ostringstream ss;
      ss << blob.rdbuf();
      blobs_.emplace(h.id, ss.str());
    }
    next_seq_ = std::max(next_seq_, h.seq + 1);
    handles_.push_back(std::move(h));
  }
}

ArtifactHandle ArtifactStore::put(const ArtifactKind& kind, std::string content, std::string created_by, std::string name) {
  if (content.empty()) throw ValidationError("artifact content must be non-empty");
  if (kind.tag().empty()) throw ValidationError("artifact kind must be non-empty");

  std::string address = kind.tag();
  address += '\0';
  address += content;
  ArtifactHandle h;
  h.id = text::sha256_hex(address).substr(0, 32);
  h.kind = kind;
  h.created_by = std::move(created_by);
  h.created_at = std::chrono::system_clock::now();
  h.name = std::move(name);

  std::unique_lock lock(mu_);
  h.seq = next_seq_++;
  if (dir_) {
    fs::path blob_path = *dir_ / "blobs" / h.id;
    if (!fs::exists(blob_path)) {
      fs::path tmp = blob_path;
      tmp += ".tmp";
      {
        std::ofstream out(tmp, std::ios::binary);
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error("cannot write artifact " + blob_path.string());
      }
      fs::rename(tmp, blob_path);
    }
    json rec = {{"id", h.id},         {"kind", h.kind.tag()}, {"created_by", h.created_by},
                {"created_at_ms", to_millis(h.created_at)}, {"seq", h.seq}, {"name", h.name}};
    std::ofstream idx(*dir_ / "handles.jsonl", std::ios::app);
    idx << rec.dump() << '\n';
    if (!idx) throw Error("cannot append artifact index in " + dir_->string());
  }
  blobs_.try_emplace(h.id, std::move(content));
  handles_.push_back(h);
  return h;
}

std::string ArtifactStore::get(const ArtifactHandle& handle) const { return get(handle.id); }

std::string ArtifactStore::get(std::string_view id) const {
  std::shared_lock lock(mu_);
  auto it = blobs_.find(id);
  if (it == blobs_.end()) throw NotFoundError("unknown artifact '" + std::string(id) + "'");
  return it->second;
}

bool ArtifactStore::contains(std::string_view id) const {
  std::shared_lock lock(mu_);
  return blobs_.find(id) != blobs_.end();
}

std::optional<ArtifactHandle> ArtifactStore::find(std::string_view id) const {
  std::shared_lock lock(mu_);
  for (auto it = handles_.rbegin(); it != handles_.rend(); ++it) {
    if (it->id == id) return *it;
  }
  return std::nullopt;
}

std::vector<ArtifactHandle> ArtifactStore::handles() const {
  std::shared_lock lock(mu_);
  return handles_;
}

bool ArtifactStore::embeds_stored_content(std::string_view text, std::size_t min_length) const {
  std::shared_lock lock(mu_);
  for (const auto& [id, body] : blobs_) {
    if (body.size() < min_length || body.size() > text.size()) continue;
    if (text.find(body) != std::string_view::npos) return true;
  }
  return false;
}

}  // namespace docflow::core
