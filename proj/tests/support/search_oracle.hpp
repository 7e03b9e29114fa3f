#pragma once

#include "docflow/common/text.hpp"
#include "docflow/store/document_store.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <tuple>
#include <vector>

namespace docflow::testing {

// Brute-force reference for DocumentStore::search, written without the
// library's embedding code: raw bucket counts and a textbook cosine.

using Counts = std::map<std::size_t, std::int64_t>;

inline std::uint64_t oracle_fnv(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline Counts oracle_counts(const std::string& text, std::size_t dim = 256) {
  Counts counts;
  std::string tok;
  auto flush = [&] {
    if (!tok.empty()) ++counts[oracle_fnv(tok) % dim];
    tok.clear();
  };
  for (unsigned char c : text) {
    if (std::isalnum(c) || c >= 0x80) {
      tok += static_cast<char>(std::tolower(c));
    } else {
      flush();
    }
  }
  flush();
  if (counts.empty()) counts[oracle_fnv(text) % dim] = 1;
  return counts;
}

inline std::int64_t oracle_dot(const Counts& a, const Counts& b) {
  std::int64_t s = 0;
  for (const auto& [k, v] : a) {
    auto it = b.find(k);
    if (it != b.end()) s += v * it->second;
  }
  return s;
}

struct OracleChunk {
  std::string doc_id;
  int version_no = 0;
  int chunk_no = 0;
  bool latest = false;
  store::Metadata metadata;
  Counts counts;
  std::int64_t norm2 = 0;
};

struct OracleHit {
  std::string doc_id;
  int version_no = 0;
  int chunk_no = 0;
  double score = 0.0;
};

// Chunk texts come from the store; scores, filtering, latest-version logic
// and ordering are recomputed here from the caller's own records.
inline std::vector<OracleHit> oracle_search(const std::vector<OracleChunk>& chunks, const store::QuerySpec& spec) {
  Counts q = oracle_counts(spec.query_text);
  std::int64_t qn2 = oracle_dot(q, q);
  struct Cand {
    const OracleChunk* c;
    std::int64_t d;
  };
  std::vector<Cand> cands;
  for (const auto& c : chunks) {
    if (spec.latest_only && !c.latest) continue;
    bool ok = true;
    for (const auto& [k, v] : spec.filters) {
      if (k == "doc_id") {
        ok = ok && c.doc_id == v;
      } else {
        auto it = c.metadata.find(k);
        ok = ok && it != c.metadata.end() && it->second == v;
      }
    }
    if (ok) cands.push_back({&c, oracle_dot(q, c.counts)});
  }
  // Exact comparison of d_a/sqrt(n_a) against d_b/sqrt(n_b) in integers.
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    __int128 lhs = static_cast<__int128>(a.d) * a.d * b.c->norm2;
    __int128 rhs = static_cast<__int128>(b.d) * b.d * a.c->norm2;
    if (lhs != rhs) return lhs > rhs;
    return std::make_tuple(a.c->doc_id, -a.c->version_no, a.c->chunk_no) <
           std::make_tuple(b.c->doc_id, -b.c->version_no, b.c->chunk_no);
  });
  std::vector<OracleHit> out;
  for (std::size_t i = 0; i < cands.size() && i < spec.top_k; ++i) {
    const auto& c = *cands[i].c;
    long double score = static_cast<long double>(cands[i].d) /
                        (std::sqrt(static_cast<long double>(qn2)) * std::sqrt(static_cast<long double>(c.norm2)));
    out.push_back({c.doc_id, c.version_no, c.chunk_no, static_cast<double>(score)});
  }
  return out;
}

// Random corpus: pseudo-word vocabulary, sentences, paragraphs, several
// versions per document, two metadata keys.
struct CorpusOp {
  std::string doc_id;
  std::string title;
  std::string body;
  store::Metadata metadata;
  text::Timestamp timestamp;
};

class CorpusGenerator {
 public:
  explicit CorpusGenerator(unsigned seed, std::size_t vocab_size = 300) : rng_(seed) {
    for (std::size_t i = 0; i < vocab_size; ++i) {
      std::string w;
      std::size_t len = 3 + rng_() % 6;
      for (std::size_t j = 0; j < len; ++j) w += static_cast<char>('a' + rng_() % 26);
      vocab_.push_back(w);
    }
  }

  const std::string& word() { return vocab_[rng_() % vocab_.size()]; }

  std::string sentence() {
    std::string s;
    std::size_t n = 4 + rng_() % 12;
    for (std::size_t i = 0; i < n; ++i) {
      if (i) s += ' ';
      s += word();
    }
    s += (rng_() % 5 == 0) ? "?" : ".";
    return s;
  }

  std::string body(std::size_t min_bytes, std::size_t max_bytes) {
    std::size_t target = min_bytes + rng_() % (max_bytes - min_bytes + 1);
    std::string b;
    while (b.size() < target) {
      b += sentence();
      b += (rng_() % 6 == 0) ? "\n\n" : " ";
    }
    return b;
  }

  std::string query() {
    std::string q;
    std::size_t n = 2 + rng_() % 5;
    for (std::size_t i = 0; i < n; ++i) q += (i ? " " : "") + word();
    return q;
  }

  // Produces ingest operations until the chunk estimate reaches target_chunks.
  std::vector<CorpusOp> corpus(std::size_t target_chunks, std::size_t chunk_budget = store::kDefaultChunkBudget) {
    std::vector<CorpusOp> ops;
    std::size_t estimate = 0;
    std::map<std::string, std::string> latest;
    auto t = text::parse_utc("2024-01-01T00:00:00Z");
    int next_doc = 0;
    while (estimate < target_chunks) {
      std::string id;
      if (!latest.empty() && rng_() % 3 == 0) {
        auto it = latest.begin();
        std::advance(it, static_cast<long>(rng_() % latest.size()));
        id = it->first;
      } else {
        id = "doc-" + std::to_string(next_doc++);
      }
      std::string b = body(200, 6 * chunk_budget);
      store::Metadata md{{"doc_type", kinds()[rng_() % 3]}, {"project", rng_() % 2 ? "alpha" : "beta"}};
      t += std::chrono::seconds(60 + rng_() % 3600);
      ops.push_back({id, "Title of " + id, b, md, t});
      latest[id] = b;
      estimate += store::chunk_document(b, chunk_budget).size();
    }
    return ops;
  }

  store::QuerySpec random_spec() {
    store::QuerySpec s;
    s.query_text = query();
    s.top_k = 1 + rng_() % 20;
    s.latest_only = rng_() % 2 == 0;
    if (rng_() % 3 == 0) s.filters["doc_type"] = kinds()[rng_() % 3];
    if (rng_() % 4 == 0) s.filters["project"] = "alpha";
    return s;
  }

  std::mt19937& rng() { return rng_; }

 private:
  static const std::vector<std::string>& kinds() {
    static const std::vector<std::string> k{"spec", "memo", "manual"};
    return k;
  }

  std::mt19937 rng_;
  std::vector<std::string> vocab_;
};

// Builds oracle records from the generator's operations plus the store's
// chunk texts.
inline std::vector<OracleChunk> oracle_chunks(const std::vector<CorpusOp>& ops, const store::Snapshot& snap) {
  std::map<std::pair<std::string, int>, store::Metadata> meta;
  std::map<std::string, int> version_count;
  std::map<std::string, std::string> last_body;
  for (const auto& op : ops) {
    if (last_body.count(op.doc_id) && last_body[op.doc_id] == op.body) continue;
    last_body[op.doc_id] = op.body;
    int v = ++version_count[op.doc_id];
    meta[{op.doc_id, v}] = op.metadata;
  }
  std::vector<OracleChunk> out;
  for (const auto& c : snap.chunks) {
    OracleChunk o;
    o.doc_id = c->doc_id;
    o.version_no = c->version_no;
    o.chunk_no = c->chunk_no;
    o.latest = version_count.at(c->doc_id) == c->version_no;
    o.metadata = meta.at({c->doc_id, c->version_no});
    o.counts = oracle_counts(c->text);
    o.norm2 = oracle_dot(o.counts, o.counts);
    out.push_back(std::move(o));
  }
  return out;
}

// Empty when results match the oracle: same order, scores within tol.
inline std::string compare_with_oracle(const std::vector<store::ScoredChunk>& got,
                                       const std::vector<OracleHit>& want, double tol) {
  if (got.size() != want.size()) {
    return "result count " + std::to_string(got.size()) + " != " + std::to_string(want.size());
  }
  for (std::size_t i = 0; i < got.size(); ++i) {
    const auto& g = *got[i].chunk;
    const auto& w = want[i];
    if (g.doc_id != w.doc_id || g.version_no != w.version_no || g.chunk_no != w.chunk_no) {
      return "rank " + std::to_string(i) + ": got " + g.doc_id + "/v" + std::to_string(g.version_no) + "/c" +
             std::to_string(g.chunk_no) + ", want " + w.doc_id + "/v" + std::to_string(w.version_no) + "/c" +
             std::to_string(w.chunk_no);
    }
    if (std::fabs(got[i].score - w.score) > tol) {
      return "rank " + std::to_string(i) + ": score " + std::to_string(got[i].score) + " vs " + std::to_string(w.score);
    }
  }
  return {};
}

// Empty when spans tile body, respect the budget, end on UTF-8 boundaries
// and every cut is the nearest snap point within the window (or a hard cut
// when there is none).
inline std::string check_tiling(const std::string& body, std::size_t budget, const std::vector<store::TextSpan>& spans) {
  auto boundary = [&](std::size_t p) {
    return p == 0 || p >= body.size() || (static_cast<unsigned char>(body[p]) & 0xC0) != 0x80;
  };
  auto snap_point = [&](std::size_t c) {
    if (c >= 2 && body[c - 1] == '\n' && body[c - 2] == '\n') return true;
    char p = body[c - 1];
    bool end_char = p == '.' || p == '!' || p == '?';
    return end_char && (c == body.size() || std::isspace(static_cast<unsigned char>(body[c])));
  };
  if (spans.empty()) return "no spans";
  if (spans.front().begin != 0) return "first span does not start at 0";
  if (spans.back().end != body.size()) return "last span does not end at body size";
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const auto& s = spans[i];
    if (s.end <= s.begin && !body.empty()) return "empty span " + std::to_string(i);
    if (s.end - s.begin > budget) return "span " + std::to_string(i) + " exceeds budget";
    if (i + 1 < spans.size() && spans[i + 1].begin != s.end) return "gap/overlap after span " + std::to_string(i);
    if (!boundary(s.begin) || !boundary(s.end)) return "span " + std::to_string(i) + " splits a UTF-8 sequence";
    if (i + 1 < spans.size()) {
      std::size_t hard = s.begin + budget;
      while (!boundary(hard)) --hard;
      std::size_t lo = hard >= s.begin + 200 ? hard - 200 : s.begin + 1;
      std::size_t nearest = 0;
      for (std::size_t c = hard; c >= lo && c > s.begin; --c) {
        if (snap_point(c)) {
          nearest = c;
          break;
        }
      }
      std::size_t want = nearest ? nearest : hard;
      if (s.end != want) {
        return "span " + std::to_string(i) + " ends at " + std::to_string(s.end) + ", expected " + std::to_string(want);
      }
    }
  }
  return {};
}

}  // namespace docflow::testing
