#include "docflow/common/errors.hpp"
#include "docflow/scenario/agents.hpp"
#include "docflow/scenario/job.hpp"
#include "docflow/scenario/language.hpp"
#include "docflow/scenario/spreadsheet.hpp"
#include "docflow/common/text.hpp"
#include "fake_workers.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace docflow;
using namespace docflow::scenario;
using docflow::testing::always;
using docflow::testing::rule;

namespace {

const char* kPrompt =
    "Please create a test scenario based on section Password and translate it into German.";

struct Demo {
  std::vector<model::ScriptRule> rules =
      model::ScriptedBackend::load_file(docflow::testing::data_dir() / "scripts/scenario_demo.jsonl");
  std::string fsd = docflow::testing::read_file(docflow::testing::data_dir() / "sample_fsd.md");
  ScenarioJobOptions options;

  Demo() {
    options.images["images/login_form.png"] =
        docflow::testing::read_file(docflow::testing::data_dir() / "images/login_form.png");
  }
};

std::string rule_reply(const std::vector<model::ScriptRule>& rules, const std::string& role) {
  for (const auto& r : rules) {
    if (r.role == role) return r.reply;
  }
  return {};
}

}  // namespace

TEST(Language, NamesAndNormalisation) {
  EXPECT_EQ(language_name("de"), "German");
  EXPECT_EQ(language_name("xx"), "xx");
  EXPECT_EQ(normalize_language("German"), "de");
  EXPECT_EQ(normalize_language(" EN "), "en");
  EXPECT_EQ(normalize_language("de-AT"), "de");
  EXPECT_EQ(language_from_prompt(kPrompt), "de");
  EXPECT_EQ(language_from_prompt("write it in Slovak please"), "sk");
  EXPECT_EQ(language_from_prompt("log in to the portal"), std::nullopt);
}

TEST(Language, SectionFromPrompt) {
  EXPECT_EQ(section_from_prompt(kPrompt), "Password");
  EXPECT_EQ(section_from_prompt("Use section \"Password reset\" please"), "Password reset");
  EXPECT_EQ(section_from_prompt("Test scenario for chapter 2.2."), "2.2");
  EXPECT_EQ(section_from_prompt("Write a scenario for section 3.1 Payment order, then translate"), "3.1 Payment order");
  EXPECT_EQ(section_from_prompt("make me a scenario"), std::nullopt);
}

TEST(ScenarioJob, DemoRunProducesGermanSpreadsheet) {
  Demo demo;
  auto g = docflow::testing::scripted(demo.rules);
  core::ArtifactStore store;
  auto r = run_scenario_job(*g, store, demo.fsd, kPrompt, demo.options);
  ASSERT_EQ(r.status, core::SessionStatus::done) << r.final_text;
  EXPECT_EQ(r.final_text, text::render(kCompletionTemplate, {{"language", "German"}}));
  EXPECT_EQ(r.section, "Password");
  EXPECT_EQ(r.target_language, "de");
  ASSERT_TRUE(r.csv);
  ASSERT_TRUE(r.xlsx);

  auto expected = parse_scenario_markdown(rule_reply(demo.rules, "translator"));
  expected.source_section = "Password";
  EXPECT_EQ(store.get(*r.csv), to_csv(build_spreadsheet(expected)));

  EXPECT_EQ(docflow::testing::ok_dispatch_order(r.transcript),
            (std::vector<std::string>{"retriever", "writer", "fact-checker", "translator", "spreadsheet-writer"}));
}

TEST(ScenarioJob, WritersContextHoldsOnlyTheRequestedChapter) {
  Demo demo;
  auto g = docflow::testing::scripted(demo.rules);
  core::ArtifactStore store;
  run_scenario_job(*g, store, demo.fsd, kPrompt, demo.options);
  for (const auto& rec : g->tap().records()) {
    if (rec.kind != model::TapRecord::Kind::chat) continue;
    std::string ctx = rec.request.flatten();
    EXPECT_EQ(ctx.find("daily limit"), std::string::npos) << rec.request.role;
    EXPECT_EQ(ctx.find("contract number. It consists"), std::string::npos) << rec.request.role;
  }
}

TEST(ScenarioJob, FailedFactCheckSendsIssuesBackToWriter) {
  Demo demo;
  std::vector<model::ScriptRule> rules = {
      rule("fact-checker", "VERDICT: FAIL\n- step 5: the lock lasts 30 minutes; waiting is not specified as enough"),
  };
  rules.insert(rules.end(), demo.rules.begin(), demo.rules.end());
  auto g = docflow::testing::scripted(rules);
  core::ArtifactStore store;
  auto r = run_scenario_job(*g, store, demo.fsd, kPrompt, demo.options);
  ASSERT_EQ(r.status, core::SessionStatus::done) << r.final_text;
  EXPECT_EQ(g->tap().count_role("writer"), 2u);
  EXPECT_EQ(g->tap().count_role("fact-checker"), 2u);
  std::string second_writer;
  for (const auto& rec : g->tap().records()) {
    if (rec.request.role == "writer") second_writer = rec.request.last_user_text();
  }
  EXPECT_NE(second_writer.find("- step 5: the lock lasts 30 minutes; waiting is not specified as enough"),
            std::string::npos);
}

TEST(ScenarioJob, PersistentFailVerdictAbortsAfterThreeRevisions) {
  Demo demo;
  std::vector<model::ScriptRule> rules = {always("fact-checker", "VERDICT: FAIL\n- global: incomplete")};
  rules.insert(rules.end(), demo.rules.begin(), demo.rules.end());
  auto g = docflow::testing::scripted(rules);
  core::ArtifactStore store;
  auto r = run_scenario_job(*g, store, demo.fsd, kPrompt, demo.options);
  EXPECT_EQ(r.status, core::SessionStatus::aborted);
  EXPECT_EQ(r.final_text.rfind("revision loop exhausted: 'writer' revised 3 time(s)", 0), 0u) << r.final_text;
  EXPECT_EQ(g->tap().count_role("writer"), 4u);
  EXPECT_FALSE(r.csv);
}

TEST(ScenarioJob, WriterFormatFailureAbortsSession) {
  Demo demo;
  auto g = docflow::testing::scripted({always("writer", "garbage")});
  core::ArtifactStore store;
  auto r = run_scenario_job(*g, store, demo.fsd, kPrompt, demo.options);
  EXPECT_EQ(r.status, core::SessionStatus::aborted);
  EXPECT_EQ(r.final_text.rfind("'writer' failed: writer reply was not a valid scenario after 3 attempts", 0), 0u)
      << r.final_text;
}

TEST(ScenarioJob, SameLanguageSkipsTranslationCall) {
  Demo demo;
  auto g = docflow::testing::scripted(demo.rules);
  core::ArtifactStore store;
  auto r = run_scenario_job(*g, store, demo.fsd, "Create a test scenario for section Password.", demo.options);
  ASSERT_EQ(r.status, core::SessionStatus::done) << r.final_text;
  EXPECT_EQ(r.target_language, "en");
  EXPECT_EQ(g->tap().count_role("translator"), 0u);
  EXPECT_NE(r.final_text.find("translated into English"), std::string::npos);
}

TEST(ScenarioJob, BadRequestsFailBeforeTheSession) {
  Demo demo;
  auto g = docflow::testing::scripted(demo.rules);
  core::ArtifactStore store;
  EXPECT_THROW(run_scenario_job(*g, store, demo.fsd, "make a scenario", demo.options), ValidationError);
  EXPECT_THROW(run_scenario_job(*g, store, demo.fsd, "scenario for section Refunds", demo.options), NotFoundError);
  EXPECT_THROW(run_scenario_job(*g, store, demo.fsd, "scenario for section pay", demo.options), AmbiguityError);
  EXPECT_THROW(run_scenario_job(*g, store, demo.fsd, kPrompt, {}), ValidationError);  // image missing
  EXPECT_EQ(g->tap().count_role("writer"), 0u);
}

TEST(ScenarioJob, ExplicitParametersOverrideThePrompt) {
  Demo demo;
  demo.options.section = "Password";
  demo.options.target_language = "de";
  auto g = docflow::testing::scripted(demo.rules);
  core::ArtifactStore store;
  auto r = run_scenario_job(*g, store, demo.fsd, "go", demo.options);
  EXPECT_EQ(r.status, core::SessionStatus::done) << r.final_text;
  EXPECT_EQ(r.target_language, "de");
}
