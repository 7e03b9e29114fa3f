#include "docflow/store/document_store.hpp"

#include "docflow/common/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace docflow::store {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool is_space(char c) { return c == ' ' || c == '\n' || c == '\t' || c == '\r'; }

bool is_cut_point(std::string_view body, std::size_t c) {
  if (c >= 2 && body[c - 1] == '\n' && body[c - 2] == '\n') return true;
  char p = body[c - 1];
  return (p == '.' || p == '!' || p == '?') && (c == body.size() || is_space(body[c]));
}

bool matches_filters(const DocumentRecord& doc, const VersionRecord& v, const Metadata& filters) {
  for (const auto& [key, value] : filters) {
    if (key == "doc_id") {
      if (doc.doc_id != value) return false;
      continue;
    }
    auto it = v.metadata.find(key);
    if (it == v.metadata.end() || it->second != value) return false;
  }
  return true;
}

// Rounds to 12 decimal places so equal cosines tie exactly.
double quantize_score(double s) { return std::round(s * 1e12) / 1e12; }

std::string encode_path_component(const std::string& s) {
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || (c == '.' && !out.empty())) {
      out += static_cast<char>(c);
    } else {
      out += '%';
      out += hex[c >> 4];
      out += hex[c & 0xF];
    }
  }
  return out;
}

std::string read_binary(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ValidationError("cannot read '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct ManifestLine {
  std::string doc_id;
  std::string title;
  std::optional<int> version_no;
  text::Timestamp timestamp{};
  Metadata metadata;
  std::string path;
};

ManifestLine parse_manifest_line(const std::string& line, std::size_t line_no) {
  auto fail = [&](const std::string& why) {
    return ValidationError("manifest line " + std::to_string(line_no) + ": " + why);
  };
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw fail(e.what());
  }
  if (!j.is_object()) throw fail("not an object");
  ManifestLine m;
  try {
    m.doc_id = j.at("doc_id").get<std::string>();
    m.title = j.value("title", m.doc_id);
    if (j.contains("version_no")) m.version_no = j.at("version_no").get<int>();
    m.timestamp = j.contains("timestamp") ? text::parse_utc(j.at("timestamp").get<std::string>()) : text::now_utc();
    if (j.contains("metadata")) m.metadata = j.at("metadata").get<Metadata>();
    m.path = j.at("path").get<std::string>();
  } catch (const json::exception& e) {
    throw fail(e.what());
  } catch (const ValidationError& e) {
    throw fail(e.what());
  }
  return m;
}

}  // namespace

std::vector<TextSpan> chunk_document(std::string_view body, std::size_t budget) {
  if (budget < kMinChunkBudget) {
    throw ValidationError("chunk budget must be at least " + std::to_string(kMinChunkBudget) + ", got " +
                          std::to_string(budget));
  }
  std::vector<TextSpan> spans;
  std::size_t begin = 0;
  while (body.size() - begin > budget) {
    std::size_t limit = text::utf8_floor(body, begin + budget);
    if (limit <= begin) limit = begin + budget;
    std::size_t floor = limit > begin + kSnapWindow ? limit - kSnapWindow : begin + 1;
    std::size_t cut = limit;
    for (std::size_t c = limit; c >= floor && c > begin; --c) {
      if (is_cut_point(body, c)) {
        cut = c;
        break;
      }
    }
    spans.push_back({begin, cut});
    begin = cut;
  }
  if (begin < body.size() || spans.empty()) spans.push_back({begin, body.size()});
  return spans;
}

std::string VersionRecord::content_hash() const {
  std::string material = body;
  for (const auto& [k, v] : metadata) {
    material += '\0';
    material += k;
    material += '\0';
    material += v;
  }
  return text::sha256_hex(material);
}

bool ranks_before(const ScoredChunk& a, const ScoredChunk& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.chunk->doc_id != b.chunk->doc_id) return a.chunk->doc_id < b.chunk->doc_id;
  if (a.chunk->version_no != b.chunk->version_no) return a.chunk->version_no > b.chunk->version_no;
  return a.chunk->chunk_no < b.chunk->chunk_no;
}

const DocumentRecord* Snapshot::find(const std::string& doc_id) const {
  auto it = documents.find(doc_id);
  return it == documents.end() ? nullptr : &it->second;
}

std::vector<ScoredChunk> Snapshot::search(const QuerySpec& spec, const model::EmbeddingVector& query) const {
  if (spec.top_k < 1) throw ValidationError("top_k must be at least 1");
  std::vector<ScoredChunk> scored;
  for (const auto& chunk : chunks) {
    const DocumentRecord& doc = documents.at(chunk->doc_id);
    const VersionRecord& v = *doc.versions.at(static_cast<std::size_t>(chunk->version_no - 1));
    if (spec.latest_only && chunk->version_no != doc.latest().version_no) continue;
    if (!matches_filters(doc, v, spec.filters)) continue;
    scored.push_back({chunk, quantize_score(model::dot(query, chunk->vector))});
  }
  std::size_t k = std::min(spec.top_k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end(), ranks_before);
  scored.resize(k);
  return scored;
}

DocumentStore::DocumentStore(std::shared_ptr<model::Embedder> embedder, StoreOptions options)
    : embedder_(std::move(embedder)), options_(std::move(options)), snapshot_(std::make_shared<Snapshot>()) {
  if (!embedder_) throw ValidationError("document store needs an embedder");
  if (options_.chunk_budget < kMinChunkBudget) {
    throw ValidationError("chunk budget must be at least " + std::to_string(kMinChunkBudget));
  }
  if (options_.directory) {
    fs::create_directories(*options_.directory / "docs");
    load();
  }
}

IngestOutcome DocumentStore::ingest_version(const std::string& doc_id, const std::string& title, std::string body,
                                            Metadata metadata, text::Timestamp timestamp) {
  return apply(doc_id, title, std::move(body), std::move(metadata), timestamp, std::nullopt, true);
}

IngestOutcome DocumentStore::apply(const std::string& doc_id, const std::string& title, std::string body,
                                   Metadata metadata, text::Timestamp timestamp, std::optional<int> expected_version,
                                   bool persist_version) {
  if (text::trim(doc_id).empty()) throw ValidationError("doc_id must not be empty");
  if (text::trim(body).empty()) throw ValidationError("document body must not be empty");

  std::lock_guard write_lock(write_mu_);
  auto current = snapshot();
  const DocumentRecord* existing = current->find(doc_id);
  int next_no = existing ? existing->latest().version_no + 1 : 1;

  if (existing && existing->latest().body == body) {
    IngestOutcome out;
    out.version = existing->versions.back();
    out.notice = "document '" + doc_id + "' already has this body as version " +
                 std::to_string(existing->latest().version_no) + "; nothing ingested";
    return out;
  }
  if (expected_version && *expected_version != next_no) {
    throw ValidationError("document '" + doc_id + "': expected version " + std::to_string(next_no) + ", got " +
                          std::to_string(*expected_version));
  }
  if (existing && timestamp < existing->latest().timestamp) {
    throw ValidationError("document '" + doc_id + "': timestamp " + text::format_utc(timestamp) +
                          " is older than version " + std::to_string(existing->latest().version_no) + " (" +
                          text::format_utc(existing->latest().timestamp) + ")");
  }

  auto record = std::make_shared<VersionRecord>();
  record->doc_id = doc_id;
  record->version_no = next_no;
  record->timestamp = timestamp;
  record->body = std::move(body);
  record->metadata = std::move(metadata);

  std::vector<ChunkPtr> new_chunks;
  int chunk_no = 0;
  for (const auto& span : chunk_document(record->body, options_.chunk_budget)) {
    auto c = std::make_shared<Chunk>();
    c->doc_id = doc_id;
    c->version_no = next_no;
    c->chunk_no = chunk_no++;
    c->span = span;
    c->text = record->body.substr(span.begin, span.size());
    c->vector = embedder_->embed(c->text);
    new_chunks.push_back(std::move(c));
  }

  auto next = std::make_shared<Snapshot>(*current);
  DocumentRecord& doc = next->documents[doc_id];
  doc.doc_id = doc_id;
  if (!title.empty() || doc.title.empty()) doc.title = title.empty() ? doc_id : title;
  doc.versions.push_back(record);
  next->chunks.insert(next->chunks.end(), new_chunks.begin(), new_chunks.end());

  if (persist_version && options_.directory) persist(doc, *record);

  {
    std::lock_guard snap_lock(snap_mu_);
    snapshot_ = std::move(next);
  }
  IngestOutcome out;
  out.version = record;
  out.created = true;
  return out;
}

void DocumentStore::persist(const DocumentRecord& doc, const VersionRecord& v) {
  fs::path rel = fs::path("docs") / encode_path_component(doc.doc_id) / ("v" + std::to_string(v.version_no) + ".txt");
  fs::path full = *options_.directory / rel;
  fs::create_directories(full.parent_path());
  fs::path tmp = full;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << v.body;
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
  }
  fs::rename(tmp, full);

  json line = {{"doc_id", doc.doc_id},
               {"title", doc.title},
               {"version_no", v.version_no},
               {"timestamp", text::format_utc(v.timestamp)},
               {"metadata", v.metadata},
               {"path", rel.generic_string()}};
  std::ofstream manifest(*options_.directory / "manifest.jsonl", std::ios::app | std::ios::binary);
  manifest << line.dump() << '\n';
  manifest.flush();
  if (!manifest) throw Error("cannot append to manifest in '" + options_.directory->string() + "'");
}

void DocumentStore::load() {
  fs::path manifest = *options_.directory / "manifest.jsonl";
  if (!fs::exists(manifest)) return;
  std::ifstream in(manifest, std::ios::binary);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    ManifestLine m = parse_manifest_line(line, line_no);
    apply(m.doc_id, m.title, read_binary(*options_.directory / m.path), std::move(m.metadata), m.timestamp,
          m.version_no, false);
  }
}

std::vector<ScoredChunk> DocumentStore::search(const QuerySpec& spec) const {
  if (text::trim(spec.query_text).empty()) throw ValidationError("query text must not be empty");
  if (spec.top_k < 1) throw ValidationError("top_k must be at least 1");
  auto snap = snapshot();
  return snap->search(spec, embedder_->embed(spec.query_text));
}

std::vector<VersionPtr> DocumentStore::list_versions(const std::string& doc_id) const {
  auto snap = snapshot();
  const DocumentRecord* doc = snap->find(doc_id);
  if (!doc) {
    std::vector<std::string> ids;
    for (const auto& [id, _] : snap->documents) ids.push_back(id);
    throw NotFoundError("document not found: '" + doc_id + "'", std::move(ids));
  }
  return doc->versions;
}

VersionPtr DocumentStore::version(const std::string& doc_id, int version_no) const {
  auto versions = list_versions(doc_id);
  if (version_no < 1 || static_cast<std::size_t>(version_no) > versions.size()) {
    throw NotFoundError("document '" + doc_id + "' has no version " + std::to_string(version_no));
  }
  return versions[static_cast<std::size_t>(version_no - 1)];
}

std::shared_ptr<const Snapshot> DocumentStore::snapshot() const {
  std::lock_guard lock(snap_mu_);
  return snapshot_;
}

std::size_t DocumentStore::document_count() const { return snapshot()->documents.size(); }

std::size_t DocumentStore::chunk_count() const { return snapshot()->chunks.size(); }

std::size_t ingest_corpus(DocumentStore& store, const fs::path& dir) {
  fs::path manifest = dir / "manifest.jsonl";
  std::ifstream in(manifest, std::ios::binary);
  if (!in) throw ValidationError("corpus has no manifest: '" + manifest.string() + "'");
  std::vector<ManifestLine> lines;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!text::trim(line).empty()) lines.push_back(parse_manifest_line(line, line_no));
  }
  std::size_t created = 0;
  for (auto& m : lines) {
    auto out = store.apply(m.doc_id, m.title, read_binary(dir / m.path), std::move(m.metadata), m.timestamp,
                           m.version_no, true);
    if (out.created) ++created;
  }
  return created;
}

std::string search_results_json(const Snapshot& snapshot, const std::vector<ScoredChunk>& results) {
  json arr = json::array();
  for (const auto& r : results) {
    const DocumentRecord* doc = snapshot.find(r.chunk->doc_id);
    const VersionRecord* v = doc ? doc->versions.at(static_cast<std::size_t>(r.chunk->version_no - 1)).get() : nullptr;
    arr.push_back({{"doc_id", r.chunk->doc_id},
                   {"title", doc ? doc->title : r.chunk->doc_id},
                   {"version_no", r.chunk->version_no},
                   {"chunk_no", r.chunk->chunk_no},
                   {"span", {r.chunk->span.begin, r.chunk->span.end}},
                   {"score", r.score},
                   {"text", r.chunk->text},
                   {"metadata", v ? json(v->metadata) : json::object()}});
  }
  return arr.dump();
}

}  // namespace docflow::store
