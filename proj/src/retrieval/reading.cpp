#include "docflow/common/errors.hpp"
#include "docflow/common/text.hpp"
#include "docflow/retrieval/agents.hpp"
#include "pipeline.hpp"

#include <algorithm>
#include <cctype>

namespace docflow::retrieval {

namespace {

std::string notes_prompt(std::size_t budget) {
  return "You read a long document one block at a time and keep running notes for the task.\n"
         "Reply with the complete updated notes only: keep what matters from the previous notes and add what "
         "this block contributes. Stay under " +
         std::to_string(budget) + " characters.";
}

const char* const kAnswerPrompt = "Write the response to the task using only the notes taken while reading the document.";

bool is_word_byte(char c) { return std::isalnum(static_cast<unsigned char>(c)) || static_cast<unsigned char>(c) >= 0x80; }

// Case-insensitive occurrence of name in query that is not part of a longer word.
bool mentions(std::string_view query, std::string_view name) {
  if (text::trim(name).empty()) return false;
  std::string q = text::to_lower(query);
  std::string n = text::to_lower(text::trim(name));
  for (std::size_t at = q.find(n); at != std::string::npos; at = q.find(n, at + 1)) {
    bool left = at == 0 || !is_word_byte(q[at - 1]);
    bool right = at + n.size() >= q.size() || !is_word_byte(q[at + n.size()]);
    if (left && right) return true;
  }
  return false;
}

std::string label(const store::DocumentRecord& d) { return d.doc_id + " (" + d.title + ")"; }

}  // namespace

const store::DocumentRecord& resolve_document(const store::Snapshot& snapshot, std::string_view query) {
  struct Match {
    const store::DocumentRecord* doc;
    std::string name;  // longest mentioned name
  };
  std::vector<Match> matches;
  for (const auto& [id, doc] : snapshot.documents) {
    std::string best;
    for (const std::string& name : {doc.doc_id, doc.title}) {
      if (mentions(query, name) && name.size() > best.size()) best = name;
    }
    if (!best.empty()) matches.push_back({&doc, text::to_lower(best)});
  }
  if (matches.size() > 1) {
    // "Login" loses to "Login spec" when both are mentioned.
    std::vector<Match> maximal;
    for (const auto& m : matches) {
      bool shadowed = std::any_of(matches.begin(), matches.end(), [&](const Match& o) {
        return o.name.size() > m.name.size() && o.name.find(m.name) != std::string::npos;
      });
      if (!shadowed) maximal.push_back(m);
    }
    matches = std::move(maximal);
  }
  if (matches.size() == 1) return *matches.front().doc;
  if (matches.empty()) {
    std::vector<std::string> all;
    for (const auto& [id, doc] : snapshot.documents) all.push_back(label(doc));
    throw NotFoundError("the query does not name a stored document", std::move(all));
  }
  std::vector<std::string> names;
  for (const auto& m : matches) names.push_back(label(*m.doc));
  throw AmbiguityError("the query names more than one document", std::move(names));
}

ReadingReport run_reading(model::Gateway& gateway, const store::DocumentStore& store, std::string_view user_query,
                          const RetrievalOptions& options) {
  if (text::trim(user_query).empty()) throw ValidationError("query must not be empty");
  if (options.notes_budget < std::string_view(kNotesTruncatedMarker).size() + 1) {
    throw ValidationError("notes budget is too small");
  }
  auto snapshot = store.snapshot();
  const store::DocumentRecord& doc = resolve_document(*snapshot, user_query);
  const store::VersionRecord& version = doc.latest();

  ReadingReport report;
  report.doc_id = doc.doc_id;
  report.title = doc.title;
  report.version_no = version.version_no;

  auto blocks = store::chunk_document(version.body, options.reading_block_budget);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    std::string block = version.body.substr(blocks[i].begin, blocks[i].size());
    std::string user = "Task: " + std::string(user_query) + "\n\nDocument: " + doc.title + "\n\nNotes so far:\n" +
                       (report.notes.text.empty() ? std::string("(none)") : report.notes.text) + "\n\nBlock " +
                       std::to_string(i + 1) + " of " + std::to_string(blocks.size()) + ":\n" + block;
    auto request = model::single_turn(kReadingNotesRole, notes_prompt(options.notes_budget), user);
    std::string notes = text::trim_copy(gateway.complete(request));
    if (notes.size() > options.notes_budget) {
      request.turns.push_back({model::Speaker::assistant, notes});
      request.turns.push_back({model::Speaker::user, "These notes have " + std::to_string(notes.size()) +
                                                         " characters; the limit is " +
                                                         std::to_string(options.notes_budget) +
                                                         ". Reply with a shorter version of the notes."});
      notes = text::trim_copy(gateway.complete(request));
    }
    if (notes.size() > options.notes_budget) {
      std::string_view marker = kNotesTruncatedMarker;
      notes = text::truncate_utf8(notes, options.notes_budget - marker.size()) + std::string(marker);
    }
    report.notes.text = std::move(notes);
    ++report.notes.blocks_consumed;
  }

  std::string user = "Task: " + std::string(user_query) + "\n\nDocument: " + doc.title + "\n\nNotes:\n" +
                     report.notes.text;
  report.response = text::trim_copy(gateway.complete(model::single_turn(kReadingAnswerRole, kAnswerPrompt, user)));
  return report;
}

}  // namespace docflow::retrieval
