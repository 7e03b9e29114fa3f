#pragma once

#include "docflow/common/text.hpp"
#include "docflow/model/gateway.hpp"
#include "docflow/store/document_store.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace docflow::retrieval {

// Role tags, one per model call site.
inline constexpr const char* kDelegatorRole = "delegator";
inline constexpr const char* kSearchQueryRole = "search-query";
inline constexpr const char* kSearchJudgeRole = "search-judge";
inline constexpr const char* kSearchSummaryRole = "search-summarize";
inline constexpr const char* kSearchSplitRole = "search-split";
inline constexpr const char* kQaQueryRole = "qa-query";
inline constexpr const char* kQaJudgeRole = "qa-judge";
inline constexpr const char* kQaAnswerRole = "qa-answer";
inline constexpr const char* kQaAggregateRole = "qa-aggregate";
inline constexpr const char* kTraceQueryRole = "trace-query";
inline constexpr const char* kTraceJudgeRole = "trace-judge";
inline constexpr const char* kTraceExtractRole = "trace-extract";
inline constexpr const char* kTraceNarrateRole = "trace-narrate";
inline constexpr const char* kReadingNotesRole = "reading-notes";
inline constexpr const char* kReadingAnswerRole = "reading-answer";

inline constexpr const char* kCannotAnswer = "I cannot answer this from the available documents.";
inline constexpr const char* kNoDocumentsNotice = "No documents matched the query.";
inline constexpr const char* kNothingRelevantNotice = "None of the retrieved documents was judged relevant.";
inline constexpr const char* kRequirementNotFound = "The requirement was not found in any document version.";
inline constexpr const char* kNotesTruncatedMarker = "\n[notes truncated]";

struct RetrievalOptions {
  std::size_t search_top_k = 20;
  std::size_t qa_top_k = 10;
  std::size_t trace_top_k = 30;
  std::size_t excerpt_chars = 3000;  // per document in judge/answer prompts
  std::size_t reading_block_budget = 4000;
  std::size_t notes_budget = 8000;
};

enum class UseCase { search, qa, trace, reading };

std::string to_string(UseCase u);
// Accepts "search", "qa", "trace", "reading" and "read"; throws ValidationError.
UseCase parse_use_case(std::string_view s);

struct DelegationPlan {
  std::vector<UseCase> use_cases;
  std::string rationale;
  bool fallback = false;  // classifier reply was unusable
};

// The classifier answers "USE: <case>[, <case>...]" plus an optional
// "RATIONALE:" line. Anything unusable falls back to {qa}. When a snapshot is
// given, reading is dropped unless the query names exactly one document.
DelegationPlan delegate(model::Gateway& gateway, std::string_view user_query,
                        const store::Snapshot* snapshot = nullptr);

struct Reference {
  std::string doc_id;
  int version_no = 0;
  store::TextSpan span;

  bool operator==(const Reference&) const = default;
};

struct SearchRecord {
  std::string title;
  std::string excerpt;
  Reference reference;
  store::Metadata metadata;
  std::string summary;
  double score = 0.0;
};

struct SearchReport {
  std::vector<SearchRecord> primary;
  std::vector<SearchRecord> supplementary;
  std::string notice;

  bool empty() const noexcept { return primary.empty() && supplementary.empty(); }
  std::string to_json() const;
  std::string to_text() const;
};

struct Quotation {
  std::string quote;
  Reference reference;  // span locates the quote inside the version body
};

struct QAAnswer {
  bool answerable = false;
  std::string answer;
  std::vector<Quotation> quotations;
  std::vector<std::string> warnings;

  std::string to_json() const;
  std::string to_text() const;
};

struct HistoryEntry {
  int version_no = 0;
  text::Timestamp timestamp{};
  std::optional<std::string> extracted_text;
  std::string change_note;  // introduced | unchanged | changed | removed | reintroduced | not present
};

struct HistoryGroup {
  std::string doc_id;
  std::string title;
  std::vector<HistoryEntry> entries;
};

struct RequirementHistory {
  std::vector<HistoryGroup> groups;
  std::vector<std::pair<std::string, int>> examined;  // every (doc_id, version_no) sent to the extractor
  std::string narrative;
  std::string notice;

  std::string to_json() const;
  std::string to_text() const;
};

struct ReadingNotes {
  std::string text;
  std::size_t blocks_consumed = 0;
};

struct ReadingReport {
  std::string doc_id;
  std::string title;
  int version_no = 0;
  std::string response;
  ReadingNotes notes;

  std::string to_json() const;
  std::string to_text() const;
};

// The latest version of the one document named in the query (by doc_id or
// title, case-insensitive). Throws NotFoundError or AmbiguityError.
const store::DocumentRecord& resolve_document(const store::Snapshot& snapshot, std::string_view query);

// Every pipeline reads one store snapshot for its whole run. Model failures
// propagate as ModelError; no partial report is returned.
SearchReport run_search(model::Gateway& gateway, const store::DocumentStore& store, std::string_view user_query,
                        const RetrievalOptions& options = {});
QAAnswer run_qa(model::Gateway& gateway, const store::DocumentStore& store, std::string_view question,
                const RetrievalOptions& options = {});
RequirementHistory run_trace(model::Gateway& gateway, const store::DocumentStore& store,
                             std::string_view requirement_query, const RetrievalOptions& options = {});
ReadingReport run_reading(model::Gateway& gateway, const store::DocumentStore& store, std::string_view user_query,
                          const RetrievalOptions& options = {});

struct QueryOutcome {
  DelegationPlan plan;
  std::optional<SearchReport> search;
  std::optional<QAAnswer> qa;
  std::optional<RequirementHistory> trace;
  std::optional<ReadingReport> reading;
  std::string response;  // per-use-case texts in plan order

  std::string to_json() const;
};

// Runs the plan's use cases in order. With `forced` set, the delegator is
// skipped.
QueryOutcome answer_query(model::Gateway& gateway, const store::DocumentStore& store, std::string_view user_query,
                          std::optional<UseCase> forced = std::nullopt, const RetrievalOptions& options = {});

}  // namespace docflow::retrieval
