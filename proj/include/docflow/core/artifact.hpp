#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

namespace docflow::core {

// Tag naming what an artifact *is*; workers declare their inputs and outputs
// in terms of kinds.
class ArtifactKind {
 public:
  ArtifactKind() = default;
  explicit ArtifactKind(std::string tag) : tag_(std::move(tag)) {}

  const std::string& tag() const noexcept { return tag_; }
  auto operator<=>(const ArtifactKind&) const = default;

 private:
  std::string tag_;
};

namespace kinds {
inline const ArtifactKind fsd_source{"fsd-source"};
inline const ArtifactKind fsd_preprocessed{"fsd-preprocessed"};
inline const ArtifactKind chapter_extract{"chapter-extract"};
inline const ArtifactKind scenario_md{"scenario-md"};
inline const ArtifactKind factcheck_report{"factcheck-report"};
inline const ArtifactKind scenario_translated{"scenario-translated"};
inline const ArtifactKind spreadsheet{"spreadsheet"};
}  // namespace kinds

struct ArtifactHandle {
  std::string id;  // content address: sha256(kind, content), 32 hex chars
  ArtifactKind kind;
  std::string created_by;
  std::chrono::system_clock::time_point created_at;
  std::uint64_t seq = 0;  // store-wide put order; breaks created_at ties
  std::string name;       // optional file name hint, e.g. "scenario.csv"

  bool operator==(const ArtifactHandle& o) const { return id == o.id && seq == o.seq; }
};

// Newer handle first: created_at, then seq.
bool newer_than(const ArtifactHandle& a, const ArtifactHandle& b);

// Out-of-context storage for artifact bodies. Content-addressed; reads may run
// concurrently, writes are serialised. With a directory, every put is appended
// to <dir>/handles.jsonl and the body written to <dir>/blobs/<id>.
class ArtifactStore {
 public:
  ArtifactStore() = default;
  explicit ArtifactStore(std::filesystem::path dir);

  ArtifactStore(const ArtifactStore&) = delete;
  ArtifactStore& operator=(const ArtifactStore&) = delete;

  // Throws ValidationError on empty content.
  ArtifactHandle put(const ArtifactKind& kind, std::string content, std::string created_by, std::string name = {});

  // Throws NotFoundError for unknown ids.
  std::string get(const ArtifactHandle& handle) const;
  std::string get(std::string_view id) const;

  bool contains(std::string_view id) const;

  // Most recent handle record for an id.
  std::optional<ArtifactHandle> find(std::string_view id) const;

  std::vector<ArtifactHandle> handles() const;

  // True when some stored body of at least `min_length` bytes occurs verbatim in text.
  bool embeds_stored_content(std::string_view text, std::size_t min_length = 256) const;

  const std::optional<std::filesystem::path>& directory() const noexcept { return dir_; }

 private:
  void load();

  mutable std::shared_mutex mu_;
  std::optional<std::filesystem::path> dir_;
  std::map<std::string, std::string, std::less<>> blobs_;
  std::vector<ArtifactHandle> handles_;
  std::uint64_t next_seq_ = 1;
};

}  // namespace docflow::core
