#include "docflow/scenario/agents.hpp"

#include "docflow/common/errors.hpp"
#include "docflow/common/text.hpp"
#include "docflow/model/gateway.hpp"
#include "docflow/model/reask.hpp"
#include "docflow/scenario/language.hpp"

#include <cctype>

namespace docflow::scenario {

const char* const kScenarioCriteria =
    "- Cover every rule the section states, including limits, formats and error messages.\n"
    "- One observable user action per step; every expected result must be checkable.\n"
    "- Use only facts present in the section; do not invent behaviour or values.\n"
    "- Preconditions list the state required before step 1.\n"
    "- Number the steps consecutively from 1.";

namespace {

const char* const kScenarioFormat =
    "# <scenario title>\n"
    "\n"
    "Source section: <section heading>\n"
    "Language: <language tag>\n"
    "\n"
    "Preconditions:\n"
    "- <precondition>\n"
    "\n"
    "| Step No. | Action | Expected Result |\n"
    "|---|---|---|\n"
    "| 1 | <action> | <expected result> |";

std::string writer_prompt() {
  return std::string("You write manual test scenarios from a functional specification section.\n"
                     "Reply with exactly one scenario in this markdown structure and nothing else:\n") +
         kScenarioFormat + "\n\nCriteria:\n" + kScenarioCriteria;
}

const char* const kCheckerPrompt =
    "You verify a test scenario against the specification section it was written from.\n"
    "Check that every step and expected result is supported by the section and that no rule of the section "
    "is missing.\n"
    "Reply with 'VERDICT: PASS' or 'VERDICT: FAIL' on the first line. For FAIL, add one line per issue:\n"
    "- step <n>: <problem>\n"
    "- global: <problem>";

std::string translator_prompt(std::string_view target) {
  return "Translate the test scenario into " + language_name(target) + " (" + std::string(target) +
         "). Keep the markdown structure, the labels 'Source section:', 'Language:' and 'Preconditions:', "
         "the table header and the step numbering exactly as they are; translate the texts only. "
         "Set the Language line to " + std::string(target) + ". Reply with the translated scenario only.";
}

std::string strip_bold(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c != '*') out += c;
  }
  return text::trim_copy(out);
}

std::optional<int> leading_step(std::string_view& s) {
  if (!text::starts_with_icase(s, "step")) return std::nullopt;
  std::size_t i = 4;
  while (i < s.size() && (s[i] == ' ' || s[i] == '#')) ++i;
  std::size_t digits = i;
  while (digits < s.size() && std::isdigit(static_cast<unsigned char>(s[digits]))) ++digits;
  if (digits == i || digits - i > 6) return std::nullopt;
  int n = std::stoi(std::string(s.substr(i, digits - i)));
  std::size_t rest = digits;
  while (rest < s.size() && (s[rest] == ' ' || s[rest] == ':' || s[rest] == '-' || s[rest] == '.' || s[rest] == ')')) ++rest;
  s.remove_prefix(rest);
  return n;
}

}  // namespace

std::string FactCheckReport::to_text() const {
  std::string out = passed ? "VERDICT: PASS\n" : "VERDICT: FAIL\n";
  for (const auto& i : issues) {
    out += i.step_no ? "- step " + std::to_string(*i.step_no) + ": " : std::string("- global: ");
    out += i.description + "\n";
  }
  return out;
}

FactCheckReport FactCheckReport::parse(std::string_view reply) {
  FactCheckReport r;
  bool have_verdict = false;
  for (std::string_view raw : text::split_lines(reply)) {
    std::string line = strip_bold(raw);
    if (!have_verdict) {
      if (!text::starts_with_icase(line, "verdict")) continue;
      std::string_view v = text::trim(std::string_view(line).substr(7));
      if (!v.empty() && v.front() == ':') v.remove_prefix(1);
      v = text::trim(v);
      if (text::starts_with_icase(v, "pass")) {
        r.passed = true;
      } else if (text::starts_with_icase(v, "fail")) {
        r.passed = false;
      } else {
        throw ValidationError("verdict '" + std::string(v) + "' is neither PASS nor FAIL");
      }
      have_verdict = true;
      continue;
    }
    std::string_view s = text::trim(std::string_view(line));
    if (s.size() < 2 || !(s[0] == '-' || s[0] == '+') || s[1] != ' ') continue;
    s = text::trim(s.substr(2));
    FactCheckIssue issue;
    if (auto n = leading_step(s)) {
      issue.step_no = n;
    } else if (text::starts_with_icase(s, "global")) {
      s.remove_prefix(6);
      while (!s.empty() && (s.front() == ':' || s.front() == ' ' || s.front() == '-')) s.remove_prefix(1);
    }
    issue.description = text::trim_copy(s);
    if (!issue.description.empty()) r.issues.push_back(std::move(issue));
  }
  if (!have_verdict) throw ValidationError("no 'VERDICT: PASS|FAIL' line");
  if (!r.passed && r.issues.empty()) throw ValidationError("FAIL verdict without any issue line");
  return r;
}

TestScenario write_scenario(model::Gateway& gateway, const ChapterExtract& extract, std::string_view language,
                            const std::vector<std::string>& issues) {
  std::string user = "Section: " + extract.heading + "\nLanguage: " + std::string(language) + "\n\n" + extract.body;
  if (!issues.empty()) {
    user += "\n\nA reviewer rejected the previous version of this scenario. Fix these issues:";
    for (const auto& i : issues) user += "\n" + i;
  }
  auto request = model::single_turn(kWriterRole, writer_prompt(), std::move(user));
  return model::ask_with_reasks(gateway, std::move(request), kFormatReasks, "writer reply was not a valid scenario",
                         [&](std::string_view reply) {
                           TestScenario sc = parse_scenario_markdown(reply, language);
                           sc.source_section = text::trim_copy(extract.heading);
                           sc.validate();
                           return sc;
                         });
}

FactCheckReport fact_check(model::Gateway& gateway, const TestScenario& scenario, const ChapterExtract& extract) {
  std::string user = "Specification section:\n" + extract.body + "\n\nTest scenario:\n" + to_markdown(scenario);
  auto request = model::single_turn(kFactCheckerRole, kCheckerPrompt, std::move(user));
  try {
    return model::ask_with_reasks(gateway, std::move(request), kFormatReasks, "unparseable verdict",
                           [](std::string_view reply) { return FactCheckReport::parse(reply); });
  } catch (const OutputFormatError&) {
    FactCheckReport r;
    r.passed = false;
    r.issues.push_back({std::nullopt, "unparseable verdict"});
    return r;
  }
}

TestScenario translate_scenario(model::Gateway& gateway, const TestScenario& scenario, std::string_view target_language) {
  scenario.validate();
  std::string target = normalize_language(target_language);
  if (target.empty()) throw ValidationError("no target language given");
  if (target == normalize_language(scenario.language)) return scenario;

  auto request = model::single_turn(kTranslatorRole, translator_prompt(target), to_markdown(scenario));
  std::string last_error;
  for (int attempt = 0; attempt < 2; ++attempt) {
    std::string reply = gateway.complete(request);
    try {
      TestScenario out = parse_scenario_markdown(reply, target);
      if (out.steps.size() != scenario.steps.size()) {
        throw ValidationError("expected " + std::to_string(scenario.steps.size()) + " steps, got " +
                              std::to_string(out.steps.size()));
      }
      out.language = target;
      out.source_section = scenario.source_section;
      out.validate();
      return out;
    } catch (const ValidationError& e) {
      last_error = e.what();
      request.turns.push_back({model::Speaker::assistant, reply});
      request.turns.push_back({model::Speaker::user,
                               "The translation changed the scenario structure (" + last_error + "). Keep exactly " +
                                   std::to_string(scenario.steps.size()) +
                                   " steps numbered from 1 and the same markdown layout."});
    }
  }
  throw OutputFormatError("translation changed the scenario structure: " + last_error);
}

}  // namespace docflow::scenario
