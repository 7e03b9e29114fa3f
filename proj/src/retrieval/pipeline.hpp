#pragma once

#include "docflow/model/gateway.hpp"
#include "docflow/retrieval/agents.hpp"
#include "docflow/store/document_store.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace docflow::retrieval::detail {

inline constexpr int kFormatReasks = 2;

struct BuiltQuery {
  std::string text;
  store::Metadata filters;
};

// "QUERY: ..." plus optional "FILTER: key=value" lines; an unusable reply
// falls back to the user's text without filters.
BuiltQuery build_query(model::Gateway& gateway, const char* role, std::string_view user_query);

// Retrieved chunks grouped per document, in order of each document's best
// chunk.
struct Candidate {
  const store::DocumentRecord* doc = nullptr;
  int version_no = 0;  // newest version among the matched chunks
  std::vector<store::ScoredChunk> chunks;
  double best_score = 0.0;
};

std::vector<Candidate> retrieve_candidates(const store::Snapshot& snapshot, model::Embedder& embedder,
                                           const BuiltQuery& query, std::size_t top_k, bool latest_only);

// "Title (doc_id, version N)"
std::string describe(const store::DocumentRecord& doc, int version_no);

// Matched chunk texts of one candidate joined in span order, capped at max_chars.
std::string candidate_excerpt(const Candidate& c, std::size_t max_chars);

// KEEP / DROP at document granularity.
bool judge_document(model::Gateway& gateway, const char* role, std::string_view query, const Candidate& c,
                    std::size_t excerpt_chars);

// Value after "<keyword>:" on the first line that starts with it (case
// insensitive, markdown bold and bullets ignored).
std::optional<std::string> keyword_value(std::string_view reply, std::string_view keyword);
std::vector<std::string> keyword_values(std::string_view reply, std::string_view keyword);

// Line with markdown bold markers and a leading bullet removed, trimmed.
std::string clean_line(std::string_view line);

Reference reference_of(const store::Chunk& chunk);

}  // namespace docflow::retrieval::detail
