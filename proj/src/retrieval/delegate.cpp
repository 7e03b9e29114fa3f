#include "docflow/common/errors.hpp"
#include "docflow/common/text.hpp"
#include "docflow/retrieval/agents.hpp"
#include "pipeline.hpp"

#include <algorithm>
#include <cctype>

namespace docflow::retrieval {

namespace {

const char* const kDelegatorPrompt =
    "Choose the tools needed for the user's request:\n"
    "- search: find the most relevant documents and supplementary material\n"
    "- qa: answer a question from the stored documents, with quotations\n"
    "- trace: history of a requirement across documents and their versions\n"
    "- reading: work through one named document from start to end\n"
    "Reply with 'USE: <tool>[, <tool>...]' in execution order and 'RATIONALE: <one sentence>'.";

DelegationPlan fallback_plan(std::string why) {
  DelegationPlan p;
  p.use_cases = {UseCase::qa};
  p.rationale = std::move(why);
  p.fallback = true;
  return p;
}

}  // namespace

std::string to_string(UseCase u) {
  switch (u) {
    case UseCase::search: return "search";
    case UseCase::qa: return "qa";
    case UseCase::trace: return "trace";
    case UseCase::reading: return "reading";
  }
  return "qa";
}

UseCase parse_use_case(std::string_view s) {
  std::string v = text::to_lower(text::trim(s));
  if (v == "search") return UseCase::search;
  if (v == "qa" || v == "q&a") return UseCase::qa;
  if (v == "trace") return UseCase::trace;
  if (v == "reading" || v == "read") return UseCase::reading;
  throw ValidationError("unknown use case: '" + std::string(s) + "' (expected search, qa, trace or reading)");
}

DelegationPlan delegate(model::Gateway& gateway, std::string_view user_query, const store::Snapshot* snapshot) {
  if (text::trim(user_query).empty()) throw ValidationError("query must not be empty");
  std::string reply = gateway.complete(model::single_turn(kDelegatorRole, kDelegatorPrompt, std::string(user_query)));

  auto use = detail::keyword_value(reply, "USE");
  if (!use) return fallback_plan("classifier reply had no USE line");
  DelegationPlan plan;
  std::string token;
  std::vector<std::string> tokens;
  for (char c : *use + ",") {
    if (c == ',' || c == ';' || std::isspace(static_cast<unsigned char>(c))) {
      if (!token.empty() && !text::iequals(token, "and")) tokens.push_back(token);
      token.clear();
    } else {
      token += c;
    }
  }
  try {
    for (const auto& t : tokens) {
      UseCase u = parse_use_case(t);
      if (std::find(plan.use_cases.begin(), plan.use_cases.end(), u) == plan.use_cases.end()) {
        plan.use_cases.push_back(u);
      }
    }
  } catch (const ValidationError& e) {
    return fallback_plan(std::string("classifier reply not usable: ") + e.what());
  }
  if (plan.use_cases.empty()) return fallback_plan("classifier selected no tool");
  plan.rationale = detail::keyword_value(reply, "RATIONALE").value_or("");

  auto reading = std::find(plan.use_cases.begin(), plan.use_cases.end(), UseCase::reading);
  if (snapshot && reading != plan.use_cases.end()) {
    try {
      resolve_document(*snapshot, user_query);
    } catch (const Error& e) {
      plan.use_cases.erase(reading);
      plan.rationale += (plan.rationale.empty() ? "" : " ") + std::string("(reading dropped: ") + e.what() + ")";
      if (plan.use_cases.empty()) return fallback_plan(plan.rationale);
    }
  }
  return plan;
}

}  // namespace docflow::retrieval
