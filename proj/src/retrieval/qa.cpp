#include "docflow/common/errors.hpp"
#include "docflow/common/text.hpp"
#include "docflow/model/reask.hpp"
#include "docflow/retrieval/agents.hpp"
#include "pipeline.hpp"

namespace docflow::retrieval {

namespace {

const char* const kAnswerPrompt =
    "Answer the question using only the document excerpts.\n"
    "Reply with 'ANSWER: <answer>' followed by one line 'QUOTE: <passage copied verbatim from the excerpts>' per "
    "supporting passage.\n"
    "If the excerpts do not answer the question, reply 'NO ANSWER'.";

const char* const kAggregatePrompt =
    "Combine the answers taken from individual documents into one answer to the question. Mention disagreements "
    "between documents.\n"
    "Reply with 'ANSWER: <answer>', or 'INSUFFICIENT' if the answers do not settle the question.";

struct PartialAnswer {
  std::optional<std::string> answer;
  std::vector<std::string> quotes;
};

std::string strip_quote_marks(std::string s) {
  auto strip = [&](std::string_view open, std::string_view close) {
    if (s.size() >= open.size() + close.size() && s.compare(0, open.size(), open) == 0 &&
        s.compare(s.size() - close.size(), close.size(), close) == 0) {
      s = s.substr(open.size(), s.size() - open.size() - close.size());
      return true;
    }
    return false;
  };
  strip("\"", "\"") || strip("\xE2\x80\x9C", "\xE2\x80\x9D") || strip("'", "'");
  return s;
}

PartialAnswer parse_partial(std::string_view reply) {
  PartialAnswer out;
  bool in_answer = false;
  for (std::string_view raw : text::split_lines(reply)) {
    std::string line = detail::clean_line(raw);
    if (!out.answer && !in_answer) {
      if (line.empty()) continue;
      if (text::starts_with_icase(line, "no answer")) return out;
      auto a = detail::keyword_value(line, "ANSWER");
      if (!a) throw ValidationError("expected 'ANSWER:' or 'NO ANSWER' first");
      out.answer = *a;
      in_answer = true;
      continue;
    }
    if (auto q = detail::keyword_value(line, "QUOTE")) {
      in_answer = false;
      std::string quote = strip_quote_marks(*q);
      if (!quote.empty()) out.quotes.push_back(quote);
    } else if (in_answer && !line.empty()) {
      *out.answer += "\n" + std::string(text::trim(raw));
    }
  }
  if (out.answer && text::trim(*out.answer).empty()) throw ValidationError("empty answer");
  return out;
}

}  // namespace

QAAnswer run_qa(model::Gateway& gateway, const store::DocumentStore& store, std::string_view question,
                const RetrievalOptions& options) {
  if (text::trim(question).empty()) throw ValidationError("question must not be empty");
  auto snapshot = store.snapshot();
  QAAnswer result;
  result.answer = kCannotAnswer;
  if (snapshot->chunks.empty()) return result;

  auto query = detail::build_query(gateway, kQaQueryRole, question);
  auto candidates = detail::retrieve_candidates(*snapshot, store.embedder(), query, options.qa_top_k, true);
  std::vector<const detail::Candidate*> kept;
  for (const auto& c : candidates) {
    if (detail::judge_document(gateway, kQaJudgeRole, question, c, options.excerpt_chars)) kept.push_back(&c);
  }
  if (kept.empty()) return result;

  struct DocAnswer {
    const detail::Candidate* c;
    PartialAnswer partial;
  };
  std::vector<DocAnswer> answers;
  std::vector<std::string> warnings;
  for (const auto* c : kept) {
    const std::string& body = c->doc->versions.at(static_cast<std::size_t>(c->version_no - 1))->body;
    std::string user = "Question: " + std::string(question) + "\n\nDocument: " +
                       detail::describe(*c->doc, c->version_no) + "\n" +
                       detail::candidate_excerpt(*c, options.excerpt_chars);
    auto request = model::single_turn(kQaAnswerRole, kAnswerPrompt, user);
    PartialAnswer p;
    for (int attempt = 0;; ++attempt) {
      std::string reply;
      p = model::ask_with_reasks(gateway, request, detail::kFormatReasks, "document answer was not usable",
                                 [&](std::string_view r) {
                                   reply = std::string(r);
                                   return parse_partial(r);
                                 });
      std::vector<std::string> bad;
      for (const auto& q : p.quotes) {
        if (body.find(q) == std::string::npos) bad.push_back(q);
      }
      if (bad.empty()) break;
      if (attempt == 1) {
        std::erase_if(p.quotes, [&](const std::string& q) { return body.find(q) == std::string::npos; });
        warnings.push_back("dropped " + std::to_string(bad.size()) + " quotation(s) from '" + c->doc->doc_id +
                           "' that are not verbatim");
        break;
      }
      request.turns.push_back({model::Speaker::assistant, reply});
      std::string correction = "These QUOTE lines are not verbatim passages of the excerpts:\n";
      for (const auto& q : bad) correction += "- " + q + "\n";
      correction += "Copy the passages exactly or leave them out.";
      request.turns.push_back({model::Speaker::user, correction});
    }
    answers.push_back({c, std::move(p)});
  }

  std::string listing = "Question: " + std::string(question) + "\n\nAnswers from individual documents:\n";
  for (std::size_t i = 0; i < answers.size(); ++i) {
    const auto& a = answers[i];
    listing += "[" + std::to_string(i + 1) + "] " + detail::describe(*a.c->doc, a.c->version_no) + ": " +
               (a.partial.answer ? *a.partial.answer : std::string("no answer in this document")) + "\n";
  }
  std::string reply = gateway.complete(model::single_turn(kQaAggregateRole, kAggregatePrompt, listing));
  std::string first;
  for (std::string_view raw : text::split_lines(reply)) {
    first = detail::clean_line(raw);
    if (!first.empty()) break;
  }
  if (text::starts_with_icase(first, "insufficient")) {
    result.warnings = std::move(warnings);
    return result;
  }
  auto final_answer = detail::keyword_value(reply, "ANSWER");
  if (final_answer) {
    std::string_view whole = reply;
    auto pos = text::to_lower(reply).find("answer:");
    std::string_view rest = whole.substr(pos + 7);
    while (!rest.empty() && (rest.front() == '*' || rest.front() == ' ')) rest.remove_prefix(1);
    result.answer = text::trim_copy(rest);
  } else {
    result.answer = text::trim_copy(reply);
  }
  result.answerable = true;
  for (const auto& a : answers) {
    if (!a.partial.answer) continue;
    const std::string& body = a.c->doc->versions.at(static_cast<std::size_t>(a.c->version_no - 1))->body;
    for (const auto& q : a.partial.quotes) {
      std::size_t at = body.find(q);
      result.quotations.push_back({q, {a.c->doc->doc_id, a.c->version_no, {at, at + q.size()}}});
    }
  }
  result.warnings = std::move(warnings);
  return result;
}

}  // namespace docflow::retrieval
