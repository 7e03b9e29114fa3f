#include "docflow/common/errors.hpp"
#include "docflow/common/text.hpp"
#include "docflow/retrieval/agents.hpp"

#include <json.hpp>

namespace docflow::retrieval {

using nlohmann::json;

namespace {

json reference_json(const Reference& r) {
  return {{"doc_id", r.doc_id}, {"version_no", r.version_no}, {"span", {r.span.begin, r.span.end}}};
}

json record_json(const SearchRecord& r) {
  return {{"title", r.title},         {"excerpt", r.excerpt}, {"reference", reference_json(r.reference)},
          {"metadata", r.metadata},   {"summary", r.summary}, {"score", r.score}};
}

json search_json(const SearchReport& r) {
  json primary = json::array();
  json supplementary = json::array();
  for (const auto& rec : r.primary) primary.push_back(record_json(rec));
  for (const auto& rec : r.supplementary) supplementary.push_back(record_json(rec));
  return {{"primary", primary}, {"supplementary", supplementary}, {"notice", r.notice}};
}

json qa_json(const QAAnswer& a) {
  json quotes = json::array();
  for (const auto& q : a.quotations) quotes.push_back({{"quote", q.quote}, {"reference", reference_json(q.reference)}});
  return {{"answerable", a.answerable}, {"answer", a.answer}, {"quotations", quotes}, {"warnings", a.warnings}};
}

json trace_json(const RequirementHistory& h) {
  json groups = json::array();
  for (const auto& g : h.groups) {
    json entries = json::array();
    for (const auto& e : g.entries) {
      entries.push_back({{"version_no", e.version_no},
                         {"timestamp", text::format_utc(e.timestamp)},
                         {"extracted_text", e.extracted_text ? json(*e.extracted_text) : json(nullptr)},
                         {"change_note", e.change_note}});
    }
    groups.push_back({{"doc_id", g.doc_id}, {"title", g.title}, {"entries", entries}});
  }
  json examined = json::array();
  for (const auto& [doc, v] : h.examined) examined.push_back({{"doc_id", doc}, {"version_no", v}});
  return {{"groups", groups}, {"examined", examined}, {"narrative", h.narrative}, {"notice", h.notice}};
}

json reading_json(const ReadingReport& r) {
  return {{"doc_id", r.doc_id},
          {"title", r.title},
          {"version_no", r.version_no},
          {"response", r.response},
          {"notes", {{"text", r.notes.text}, {"blocks_consumed", r.notes.blocks_consumed}}}};
}

std::string ref_text(const Reference& r) { return r.doc_id + ", version " + std::to_string(r.version_no); }

std::string one_line(std::string_view s, std::size_t max) {
  std::string out;
  for (char c : s) out += (c == '\n' || c == '\r') ? ' ' : c;
  out = text::trim_copy(out);
  if (out.size() > max) out = text::truncate_utf8(out, max) + "...";
  return out;
}

void append_records(std::string& out, const std::vector<SearchRecord>& records) {
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    out += std::to_string(i + 1) + ". " + r.title + " (" + ref_text(r.reference) + ")\n";
    out += "   Summary: " + one_line(r.summary, 600) + "\n";
    out += "   Excerpt: \"" + one_line(r.excerpt, 300) + "\"\n";
  }
}

}  // namespace

std::string SearchReport::to_json() const { return search_json(*this).dump(); }

std::string SearchReport::to_text() const {
  if (empty()) return notice;
  std::string out;
  if (!primary.empty()) {
    out += "Most relevant documents:\n";
    append_records(out, primary);
  }
  if (!supplementary.empty()) {
    if (!out.empty()) out += "\n";
    out += "Supplementary materials:\n";
    append_records(out, supplementary);
  }
  return text::trim_copy(out);
}

std::string QAAnswer::to_json() const { return qa_json(*this).dump(); }

std::string QAAnswer::to_text() const {
  std::string out = answer;
  if (!quotations.empty()) {
    out += "\n\nQuotations:";
    for (const auto& q : quotations) out += "\n- \"" + q.quote + "\" (" + ref_text(q.reference) + ")";
  }
  return out;
}

std::string RequirementHistory::to_json() const { return trace_json(*this).dump(); }

std::string RequirementHistory::to_text() const {
  if (groups.empty()) return notice;
  std::string out;
  if (!narrative.empty()) out += narrative + "\n\n";
  out += "History:";
  for (const auto& g : groups) {
    out += "\n" + g.title + " (" + g.doc_id + ")";
    for (const auto& e : g.entries) {
      out += "\n  version " + std::to_string(e.version_no) + ", " + text::format_utc(e.timestamp) + ": " +
             e.change_note;
      if (e.extracted_text) out += ": " + one_line(*e.extracted_text, 400);
    }
  }
  return out;
}

std::string ReadingReport::to_json() const { return reading_json(*this).dump(); }

std::string ReadingReport::to_text() const { return response; }

std::string QueryOutcome::to_json() const {
  json uses = json::array();
  for (auto u : plan.use_cases) uses.push_back(retrieval::to_string(u));
  json j = {{"plan", {{"use_cases", uses}, {"rationale", plan.rationale}, {"fallback", plan.fallback}}},
            {"response", response}};
  if (search) j["search"] = search_json(*search);
  if (qa) j["qa"] = qa_json(*qa);
  if (trace) j["trace"] = trace_json(*trace);
  if (reading) j["reading"] = reading_json(*reading);
  return j.dump();
}

QueryOutcome answer_query(model::Gateway& gateway, const store::DocumentStore& store, std::string_view user_query,
                          std::optional<UseCase> forced, const RetrievalOptions& options) {
  if (text::trim(user_query).empty()) throw ValidationError("query must not be empty");
  QueryOutcome out;
  if (forced) {
    out.plan.use_cases = {*forced};
    out.plan.rationale = "requested explicitly";
  } else {
    auto snapshot = store.snapshot();
    out.plan = delegate(gateway, user_query, snapshot.get());
  }
  std::vector<std::string> parts;
  for (auto u : out.plan.use_cases) {
    switch (u) {
      case UseCase::search:
        out.search = run_search(gateway, store, user_query, options);
        parts.push_back(out.search->to_text());
        break;
      case UseCase::qa:
        out.qa = run_qa(gateway, store, user_query, options);
        parts.push_back(out.qa->to_text());
        break;
      case UseCase::trace:
        out.trace = run_trace(gateway, store, user_query, options);
        parts.push_back(out.trace->to_text());
        break;
      case UseCase::reading:
        out.reading = run_reading(gateway, store, user_query, options);
        parts.push_back(out.reading->to_text());
        break;
    }
  }
  out.response = text::join(parts, "\n\n");
  return out;
}

}  // namespace docflow::retrieval
