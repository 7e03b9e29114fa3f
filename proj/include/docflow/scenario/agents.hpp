#pragma once

#include "docflow/scenario/fsd.hpp"
#include "docflow/scenario/test_scenario.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace docflow::model {
class Gateway;
}

namespace docflow::scenario {

// Role tags used towards the model gateway.
inline constexpr const char* kWriterRole = "writer";
inline constexpr const char* kFactCheckerRole = "fact-checker";
inline constexpr const char* kTranslatorRole = "translator";

// Quality criteria handed to the writer; part of its role prompt.
extern const char* const kScenarioCriteria;

// Format re-asks after the first attempt, for writer and fact checker.
inline constexpr int kFormatReasks = 2;

struct FactCheckIssue {
  std::optional<int> step_no;  // nullopt: concerns the scenario as a whole
  std::string description;

  bool operator==(const FactCheckIssue&) const = default;
};

struct FactCheckReport {
  bool passed = false;
  std::vector<FactCheckIssue> issues;

  // "VERDICT: PASS|FAIL" then "- step N: ..." / "- global: ..." lines.
  std::string to_text() const;
  // Throws ValidationError when no verdict line is present, or on FAIL
  // without any issue.
  static FactCheckReport parse(std::string_view reply);

  bool operator==(const FactCheckReport&) const = default;
};

// Writes a scenario for the extract. `issues` are the checker's findings from
// a failed review and are passed to the model verbatim. The source section is
// always the extract heading; a missing language defaults to `language`.
// Throws OutputFormatError after kFormatReasks unparseable replies.
TestScenario write_scenario(model::Gateway& gateway, const ChapterExtract& extract, std::string_view language,
                            const std::vector<std::string>& issues = {});

// Sees only the scenario and the extract. After kFormatReasks unparseable
// replies the result is FAIL with the single issue "unparseable verdict".
FactCheckReport fact_check(model::Gateway& gateway, const TestScenario& scenario, const ChapterExtract& extract);

// Same target as the scenario language: returned unchanged, no model call.
// A reply that changes the step structure gets one re-ask, then
// OutputFormatError.
TestScenario translate_scenario(model::Gateway& gateway, const TestScenario& scenario, std::string_view target_language);

}  // namespace docflow::scenario
