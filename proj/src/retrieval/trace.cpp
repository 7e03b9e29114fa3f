#include "docflow/common/errors.hpp"
#include "docflow/common/text.hpp"
#include "docflow/model/reask.hpp"
#include "docflow/retrieval/agents.hpp"
#include "pipeline.hpp"

#include <algorithm>

namespace docflow::retrieval {

namespace {

const char* const kExtractPrompt =
    "Look for the requirement in this version of the document.\n"
    "Reply 'FOUND: <the requirement as written in this version>' or 'NOT FOUND'.";

const char* const kNarratePrompt =
    "Describe how the requirement evolved over time across the listed documents and versions, in a short "
    "paragraph. Use only the listed history.";

std::optional<std::string> parse_extraction(std::string_view reply) {
  for (std::string_view raw : text::split_lines(reply)) {
    std::string line = detail::clean_line(raw);
    if (line.empty()) continue;
    if (text::starts_with_icase(line, "not found")) return std::nullopt;
    auto found = detail::keyword_value(line, "FOUND");
    if (!found) throw ValidationError("expected 'FOUND: <text>' or 'NOT FOUND'");
    // Continuation lines belong to the excerpt.
    std::size_t at = static_cast<std::size_t>(raw.data() - reply.data());
    std::string excerpt = *found;
    std::string_view tail = reply.substr(at + raw.size());
    std::string rest = text::trim_copy(tail);
    if (!rest.empty()) excerpt += "\n" + rest;
    if (text::trim(excerpt).empty()) throw ValidationError("FOUND without text");
    return excerpt;
  }
  throw ValidationError("empty reply");
}

std::string change_note(const std::vector<HistoryEntry>& earlier, const std::optional<std::string>& now) {
  const HistoryEntry* prev = earlier.empty() ? nullptr : &earlier.back();
  const HistoryEntry* last_found = nullptr;
  for (const auto& e : earlier) {
    if (e.extracted_text) last_found = &e;
  }
  if (!now) {
    if (prev && prev->extracted_text) return "removed";
    return "not present";
  }
  if (!last_found) return "introduced";
  if (!prev->extracted_text) return "reintroduced";
  return text::trim(*prev->extracted_text) == text::trim(*now) ? "unchanged" : "changed";
}

}  // namespace

RequirementHistory run_trace(model::Gateway& gateway, const store::DocumentStore& store,
                             std::string_view requirement_query, const RetrievalOptions& options) {
  if (text::trim(requirement_query).empty()) throw ValidationError("requirement query must not be empty");
  auto snapshot = store.snapshot();
  RequirementHistory history;
  if (snapshot->chunks.empty()) {
    history.notice = kRequirementNotFound;
    return history;
  }
  auto query = detail::build_query(gateway, kTraceQueryRole, requirement_query);
  auto candidates = detail::retrieve_candidates(*snapshot, store.embedder(), query, options.trace_top_k, false);

  struct Group {
    HistoryGroup group;
    std::optional<text::Timestamp> first_match;
  };
  std::vector<Group> groups;
  for (const auto& c : candidates) {
    if (!detail::judge_document(gateway, kTraceJudgeRole, requirement_query, c, options.excerpt_chars)) continue;
    Group g;
    g.group.doc_id = c.doc->doc_id;
    g.group.title = c.doc->title;
    for (const auto& v : c.doc->versions) {
      std::string user = "Requirement: " + std::string(requirement_query) + "\n\nDocument: " +
                         detail::describe(*c.doc, v->version_no) + ", dated " + text::format_utc(v->timestamp) +
                         "\n\n" + v->body;
      auto extracted = model::ask_with_reasks(gateway, model::single_turn(kTraceExtractRole, kExtractPrompt, user),
                                              detail::kFormatReasks, "extraction was not FOUND or NOT FOUND",
                                              parse_extraction);
      history.examined.emplace_back(c.doc->doc_id, v->version_no);
      HistoryEntry e;
      e.version_no = v->version_no;
      e.timestamp = v->timestamp;
      e.change_note = change_note(g.group.entries, extracted);
      e.extracted_text = std::move(extracted);
      if (e.extracted_text && !g.first_match) g.first_match = e.timestamp;
      g.group.entries.push_back(std::move(e));
    }
    if (g.first_match) groups.push_back(std::move(g));
  }
  std::stable_sort(groups.begin(), groups.end(), [](const Group& a, const Group& b) {
    if (*a.first_match != *b.first_match) return *a.first_match < *b.first_match;
    return a.group.doc_id < b.group.doc_id;
  });
  for (auto& g : groups) history.groups.push_back(std::move(g.group));

  if (history.groups.empty()) {
    history.notice = kRequirementNotFound;
    return history;
  }
  RequirementHistory listing_only;
  listing_only.groups = history.groups;
  std::string user = "Requirement: " + std::string(requirement_query) + "\n\n" + listing_only.to_text();
  history.narrative = text::trim_copy(gateway.complete(model::single_turn(kTraceNarrateRole, kNarratePrompt, user)));
  return history;
}

}  // namespace docflow::retrieval
