#include "docflow/common/errors.hpp"
#include "docflow/common/text.hpp"
#include "docflow/model/reask.hpp"
#include "docflow/retrieval/agents.hpp"
#include "pipeline.hpp"

#include <cctype>
#include <set>

namespace docflow::retrieval {

namespace {

const char* const kSummaryPrompt =
    "Summarise, in at most three sentences, what the document says that matters for the query.";

const char* const kSplitPrompt =
    "Sort the documents into the most relevant ones and supplementary material for the query.\n"
    "Reply with two lines listing document numbers:\n"
    "PRIMARY: <numbers, comma separated, or none>\n"
    "SUPPLEMENTARY: <numbers, comma separated, or none>\n"
    "Leave out documents that belong to neither.";

std::vector<std::size_t> parse_numbers(const std::string& list, std::size_t count) {
  std::vector<std::size_t> out;
  if (text::iequals(text::trim(list), "none") || text::trim(list).empty()) return out;
  std::string digits;
  auto flush = [&] {
    if (digits.empty()) return;
    std::size_t n = std::stoul(digits);
    digits.clear();
    if (n < 1 || n > count) throw ValidationError("document number " + std::to_string(n) + " is out of range");
    out.push_back(n - 1);
  };
  for (char c : list) {
    if (std::isdigit(static_cast<unsigned char>(c))) {
      if (digits.size() > 6) throw ValidationError("document number too long");
      digits += c;
    } else if (c == ',' || c == ' ' || c == '[' || c == ']' || c == ';') {
      flush();
    } else {
      throw ValidationError("unexpected character in number list: '" + std::string(1, c) + "'");
    }
  }
  flush();
  return out;
}

struct Split {
  std::vector<std::size_t> primary;
  std::vector<std::size_t> supplementary;
};

Split parse_split(std::string_view reply, std::size_t count) {
  auto p = detail::keyword_value(reply, "PRIMARY");
  auto s = detail::keyword_value(reply, "SUPPLEMENTARY");
  if (!p && !s) throw ValidationError("expected PRIMARY and SUPPLEMENTARY lines");
  Split out;
  if (p) out.primary = parse_numbers(*p, count);
  if (s) out.supplementary = parse_numbers(*s, count);
  std::set<std::size_t> seen;
  for (auto i : out.primary) {
    if (!seen.insert(i).second) throw ValidationError("document " + std::to_string(i + 1) + " listed twice");
  }
  for (auto i : out.supplementary) {
    if (!seen.insert(i).second) throw ValidationError("document " + std::to_string(i + 1) + " listed twice");
  }
  return out;
}

}  // namespace

SearchReport run_search(model::Gateway& gateway, const store::DocumentStore& store, std::string_view user_query,
                        const RetrievalOptions& options) {
  if (text::trim(user_query).empty()) throw ValidationError("query must not be empty");
  auto snapshot = store.snapshot();
  SearchReport report;
  if (snapshot->chunks.empty()) {
    report.notice = kNoDocumentsNotice;
    return report;
  }
  auto query = detail::build_query(gateway, kSearchQueryRole, user_query);
  auto candidates =
      detail::retrieve_candidates(*snapshot, store.embedder(), query, options.search_top_k, true);
  if (candidates.empty()) {
    report.notice = kNoDocumentsNotice;
    return report;
  }

  std::vector<const detail::Candidate*> kept;
  for (const auto& c : candidates) {
    if (detail::judge_document(gateway, kSearchJudgeRole, user_query, c, options.excerpt_chars)) kept.push_back(&c);
  }
  if (kept.empty()) {
    report.notice = kNothingRelevantNotice;
    return report;
  }

  std::vector<SearchRecord> records;
  for (const auto* c : kept) {
    const store::Chunk& best = *c->chunks.front().chunk;
    std::string user = "Query: " + std::string(user_query) + "\n\nDocument: " + detail::describe(*c->doc, c->version_no) +
                       "\n" + detail::candidate_excerpt(*c, options.excerpt_chars);
    SearchRecord r;
    r.title = c->doc->title;
    r.excerpt = best.text;
    r.reference = detail::reference_of(best);
    r.metadata = c->doc->versions.at(static_cast<std::size_t>(c->version_no - 1))->metadata;
    r.summary = text::trim_copy(gateway.complete(model::single_turn(kSearchSummaryRole, kSummaryPrompt, user)));
    r.score = c->best_score;
    records.push_back(std::move(r));
  }

  std::string listing = "Query: " + std::string(user_query) + "\n\nDocuments:\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    listing += "[" + std::to_string(i + 1) + "] " + detail::describe(*kept[i]->doc, kept[i]->version_no) +
               "\nSummary: " + records[i].summary + "\n\n";
  }
  auto split = model::ask_with_reasks(gateway, model::single_turn(kSearchSplitRole, kSplitPrompt, listing),
                                      detail::kFormatReasks, "document split was not usable",
                                      [&](std::string_view reply) { return parse_split(reply, records.size()); });

  // Candidates are already in relevance order; keep it inside each section.
  std::set<std::size_t> primary(split.primary.begin(), split.primary.end());
  std::set<std::size_t> supplementary(split.supplementary.begin(), split.supplementary.end());
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (primary.count(i)) report.primary.push_back(records[i]);
    if (supplementary.count(i)) report.supplementary.push_back(records[i]);
  }
  if (report.empty()) report.notice = kNothingRelevantNotice;
  return report;
}

}  // namespace docflow::retrieval
