#include "pipeline.hpp"

#include "docflow/common/errors.hpp"
#include "docflow/common/text.hpp"
#include "docflow/model/reask.hpp"

#include <algorithm>
#include <map>

namespace docflow::retrieval::detail {

namespace {

const char* const kQueryPrompt =
    "Turn the user's request into a search query for a document store.\n"
    "Reply with one line 'QUERY: <search terms>'. Add one line 'FILTER: <key>=<value>' only for a metadata "
    "constraint the request states explicitly (keys: doc_type, project, author, doc_id).";

const char* const kJudgePrompt =
    "Decide whether the document is relevant to the query.\n"
    "Reply with 'KEEP' or 'DROP' on the first line, optionally followed by a one-line reason.";

}  // namespace

std::string clean_line(std::string_view line) {
  std::string out;
  for (char c : line) {
    if (c != '*') out += c;
  }
  std::string_view v = text::trim(out);
  if (!v.empty() && (v.front() == '-' || v.front() == '+')) v.remove_prefix(1);
  return text::trim_copy(v);
}

std::vector<std::string> keyword_values(std::string_view reply, std::string_view keyword) {
  std::vector<std::string> out;
  for (std::string_view raw : text::split_lines(reply)) {
    std::string line = clean_line(raw);
    if (line.size() <= keyword.size() || !text::starts_with_icase(line, keyword)) continue;
    std::string_view rest = std::string_view(line).substr(keyword.size());
    rest = text::trim(rest);
    if (rest.empty() || rest.front() != ':') continue;
    out.push_back(text::trim_copy(rest.substr(1)));
  }
  return out;
}

std::optional<std::string> keyword_value(std::string_view reply, std::string_view keyword) {
  auto all = keyword_values(reply, keyword);
  if (all.empty()) return std::nullopt;
  return all.front();
}

BuiltQuery build_query(model::Gateway& gateway, const char* role, std::string_view user_query) {
  std::string reply = gateway.complete(model::single_turn(role, kQueryPrompt, std::string(user_query)));
  BuiltQuery q;
  auto text_value = keyword_value(reply, "QUERY");
  if (!text_value || text_value->empty()) {
    q.text = text::trim_copy(user_query);
    return q;
  }
  q.text = *text_value;
  for (const auto& f : keyword_values(reply, "FILTER")) {
    auto eq = f.find('=');
    if (eq == std::string::npos) continue;
    std::string key = text::trim_copy(std::string_view(f).substr(0, eq));
    std::string value = text::trim_copy(std::string_view(f).substr(eq + 1));
    if (!key.empty() && !value.empty()) q.filters[key] = value;
  }
  return q;
}

std::vector<Candidate> retrieve_candidates(const store::Snapshot& snapshot, model::Embedder& embedder,
                                           const BuiltQuery& query, std::size_t top_k, bool latest_only) {
  if (snapshot.chunks.empty()) return {};
  store::QuerySpec spec;
  spec.query_text = query.text;
  spec.top_k = top_k;
  spec.filters = query.filters;
  spec.latest_only = latest_only;
  auto hits = snapshot.search(spec, embedder.embed(query.text));

  std::vector<Candidate> out;
  std::map<std::string, std::size_t> index;
  for (const auto& h : hits) {
    auto [it, inserted] = index.try_emplace(h.chunk->doc_id, out.size());
    if (inserted) {
      Candidate c;
      c.doc = snapshot.find(h.chunk->doc_id);
      c.best_score = h.score;
      out.push_back(c);
    }
    Candidate& c = out[it->second];
    c.chunks.push_back(h);
    c.version_no = std::max(c.version_no, h.chunk->version_no);
  }
  return out;
}

std::string describe(const store::DocumentRecord& doc, int version_no) {
  return doc.title + " (" + doc.doc_id + ", version " + std::to_string(version_no) + ")";
}

std::string candidate_excerpt(const Candidate& c, std::size_t max_chars) {
  std::vector<const store::Chunk*> chunks;
  for (const auto& s : c.chunks) {
    if (s.chunk->version_no == c.version_no) chunks.push_back(s.chunk.get());
  }
  std::sort(chunks.begin(), chunks.end(),
            [](const store::Chunk* a, const store::Chunk* b) { return a->span.begin < b->span.begin; });
  std::string out;
  for (const auto* ch : chunks) {
    if (!out.empty()) out += "\n[...]\n";
    out += ch->text;
  }
  return text::truncate_utf8(out, max_chars);
}

bool judge_document(model::Gateway& gateway, const char* role, std::string_view query, const Candidate& c,
                    std::size_t excerpt_chars) {
  std::string user = "Query: " + std::string(query) + "\n\nDocument: " + describe(*c.doc, c.version_no) + "\n" +
                     candidate_excerpt(c, excerpt_chars);
  return model::ask_with_reasks(gateway, model::single_turn(role, kJudgePrompt, user), kFormatReasks,
                                "relevance judgment was not KEEP or DROP", [](std::string_view reply) {
                                  for (std::string_view raw : text::split_lines(reply)) {
                                    std::string line = clean_line(raw);
                                    if (line.empty()) continue;
                                    std::string_view v = line;
                                    for (std::string_view prefix : {"verdict:", "decision:", "answer:"}) {
                                      if (text::starts_with_icase(v, prefix)) v = text::trim(v.substr(prefix.size()));
                                    }
                                    if (text::starts_with_icase(v, "keep")) return true;
                                    if (text::starts_with_icase(v, "drop")) return false;
                                    throw ValidationError("first line must be KEEP or DROP");
                                  }
                                  throw ValidationError("empty reply");
                                });
}

Reference reference_of(const store::Chunk& chunk) { return {chunk.doc_id, chunk.version_no, chunk.span}; }

}  // namespace docflow::retrieval::detail
