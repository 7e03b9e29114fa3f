#pragma once

#include "docflow/common/text.hpp"
#include "docflow/model/embedding.hpp"

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace docflow::store {

using Metadata = std::map<std::string, std::string>;

struct TextSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - begin; }
  bool operator==(const TextSpan&) const = default;
};

inline constexpr std::size_t kDefaultChunkBudget = 1000;
inline constexpr std::size_t kMinChunkBudget = 200;
inline constexpr std::size_t kSnapWindow = 200;

// Tiles body into spans of at most `budget` bytes. A cut is moved back to the
// nearest blank line or sentence end within kSnapWindow bytes; otherwise it
// lands on the budget (adjusted to a UTF-8 boundary). Throws ValidationError
// for budget < kMinChunkBudget.
std::vector<TextSpan> chunk_document(std::string_view body, std::size_t budget = kDefaultChunkBudget);

struct VersionRecord {
  std::string doc_id;
  int version_no = 0;
  text::Timestamp timestamp{};
  std::string body;
  Metadata metadata;

  // sha256 over body and metadata; constant for the life of the record.
  std::string content_hash() const;
};

using VersionPtr = std::shared_ptr<const VersionRecord>;

struct DocumentRecord {
  std::string doc_id;
  std::string title;
  std::vector<VersionPtr> versions;  // ascending version_no

  const VersionRecord& latest() const { return *versions.back(); }
};

struct Chunk {
  std::string doc_id;
  int version_no = 0;
  int chunk_no = 0;
  TextSpan span;
  std::string text;
  model::EmbeddingVector vector;
};

using ChunkPtr = std::shared_ptr<const Chunk>;

struct QuerySpec {
  std::string query_text;
  std::size_t top_k = 5;
  Metadata filters;  // equality on metadata; the key "doc_id" matches the document id
  bool latest_only = true;
};

struct ScoredChunk {
  ChunkPtr chunk;
  double score = 0.0;
};

// score desc, doc_id asc, version_no desc, chunk_no asc
bool ranks_before(const ScoredChunk& a, const ScoredChunk& b);

struct IngestOutcome {
  VersionPtr version;
  bool created = false;
  std::string notice;  // set when the ingest was a no-op
};

// Immutable view of the whole corpus. Readers hold one for the duration of a
// request and never observe a half-applied write.
struct Snapshot {
  std::map<std::string, DocumentRecord> documents;
  std::vector<ChunkPtr> chunks;  // every version of every document

  const DocumentRecord* find(const std::string& doc_id) const;
  std::vector<ScoredChunk> search(const QuerySpec& spec, const model::EmbeddingVector& query) const;
};

struct StoreOptions {
  std::size_t chunk_budget = kDefaultChunkBudget;
  // Append-only persistence: docs/<doc>/v<N>.txt plus manifest.jsonl.
  std::optional<std::filesystem::path> directory;
};

class DocumentStore {
 public:
  explicit DocumentStore(std::shared_ptr<model::Embedder> embedder, StoreOptions options = {});

  DocumentStore(const DocumentStore&) = delete;
  DocumentStore& operator=(const DocumentStore&) = delete;

  // version_no = previous max + 1. A body identical to the latest version is
  // a no-op reported through IngestOutcome::notice. Throws ValidationError for
  // an empty doc_id/body or a timestamp older than the latest version.
  IngestOutcome ingest_version(const std::string& doc_id, const std::string& title, std::string body,
                               Metadata metadata, text::Timestamp timestamp);

  std::vector<ScoredChunk> search(const QuerySpec& spec) const;

  // Throws NotFoundError for an unknown document.
  std::vector<VersionPtr> list_versions(const std::string& doc_id) const;
  VersionPtr version(const std::string& doc_id, int version_no) const;

  std::shared_ptr<const Snapshot> snapshot() const;
  model::Embedder& embedder() const noexcept { return *embedder_; }
  const StoreOptions& options() const noexcept { return options_; }

  std::size_t document_count() const;
  std::size_t chunk_count() const;

 private:
  IngestOutcome apply(const std::string& doc_id, const std::string& title, std::string body, Metadata metadata,
                      text::Timestamp timestamp, std::optional<int> expected_version, bool persist);
  void load();
  void persist(const DocumentRecord& doc, const VersionRecord& v);

  std::shared_ptr<model::Embedder> embedder_;
  StoreOptions options_;
  std::mutex write_mu_;
  mutable std::mutex snap_mu_;
  std::shared_ptr<const Snapshot> snapshot_;

  friend std::size_t ingest_corpus(DocumentStore& store, const std::filesystem::path& dir);
};

// Reads a corpus directory: manifest.jsonl with one
// {doc_id, title, version_no, timestamp, metadata, path} object per line and
// UTF-8 text files at `path` (relative to dir). Lines are applied in order;
// a version_no that is not the next one for its document is an error.
// Returns the number of versions created.
std::size_t ingest_corpus(DocumentStore& store, const std::filesystem::path& dir);

// [{doc_id, title, version_no, chunk_no, span, score, text, metadata}, ...]
std::string search_results_json(const Snapshot& snapshot, const std::vector<ScoredChunk>& results);

}  // namespace docflow::store
