#include "docflow/scenario/job.hpp"

#include "docflow/common/errors.hpp"
#include "docflow/common/text.hpp"
#include "docflow/model/gateway.hpp"
#include "docflow/scenario/agents.hpp"
#include "docflow/scenario/language.hpp"
#include "docflow/scenario/spreadsheet.hpp"

namespace docflow::scenario {

namespace kinds = core::kinds;

const char* const kCompletionTemplate =
    "The entire process has been completed successfully. The test scenario has been created, fact-checked, "
    "translated into {{language}}, and written to an Excel file. If you need any further assistance or "
    "modifications, please let me know!";

namespace {

core::AgentDescriptor make_descriptor(std::string id, std::string prompt, std::set<core::ArtifactKind> accepts,
                                 std::set<core::ArtifactKind> produces) {
  return {std::move(id), std::move(prompt), std::move(accepts), std::move(produces)};
}

std::string issue_line(const FactCheckIssue& i) {
  return i.step_no ? "- step " + std::to_string(*i.step_no) + ": " + i.description : "- global: " + i.description;
}

core::ArtifactHandle require(const core::Envelope& env, const core::ArtifactKind& kind) {
  std::optional<core::ArtifactHandle> best;
  for (const auto& h : env.handles) {
    if (h.kind == kind && (!best || core::newer_than(h, *best))) best = h;
  }
  if (!best) throw ValidationError("no input of kind " + kind.tag());
  return *best;
}

}  // namespace

core::SessionConfig default_scenario_config() {
  core::SessionConfig cfg;
  cfg.declared_order = {kRetrieverId, kWriterId, kFactCheckerId, kTranslatorId, kSpreadsheetWriterId};
  cfg.completion_template = kCompletionTemplate;
  return cfg;
}

RetrieverWorker::RetrieverWorker(std::string section)
    : Worker(make_descriptor(kRetrieverId, "Extracts the requested chapter from the preprocessed FSD.",
                             {kinds::fsd_preprocessed}, {kinds::chapter_extract})),
      section_(std::move(section)) {}

core::WorkerReport RetrieverWorker::perform(const core::Envelope& envelope, core::ArtifactStore& store) {
  auto fsd = PreprocessedFSD::from_json(store.get(require(envelope, kinds::fsd_preprocessed)));
  ChapterExtract extract = retrieve_chapter(fsd, section_);
  auto handle = emit(store, kinds::chapter_extract, extract.to_json(), extract.heading);
  return core::WorkerReport::ok("Retrieved chapter '" + extract.heading + "' (" + std::to_string(extract.body.size()) +
                                    " characters).",
                                {handle});
}

WriterWorker::WriterWorker(model::Gateway& gateway, std::string language)
    : Worker(make_descriptor(kWriterId, "Writes a test scenario for a chapter extract.", {kinds::chapter_extract},
                             {kinds::scenario_md})),
      gateway_(gateway),
      language_(std::move(language)) {}

core::WorkerReport WriterWorker::perform(const core::Envelope& envelope, core::ArtifactStore& store) {
  auto extract = ChapterExtract::from_json(store.get(require(envelope, kinds::chapter_extract)));
  std::vector<std::string> issues;
  if (auto report = input_of(envelope, kinds::factcheck_report)) {
    for (const auto& i : FactCheckReport::parse(store.get(*report)).issues) issues.push_back(issue_line(i));
  }
  TestScenario sc = write_scenario(gateway_, extract, language_, issues);
  auto handle = emit(store, kinds::scenario_md, to_markdown(sc), sc.title);
  std::string summary = issues.empty() ? "Wrote" : "Revised";
  summary += " scenario '" + sc.title + "' with " + std::to_string(sc.steps.size()) + " step(s).";
  return core::WorkerReport::ok(std::move(summary), {handle});
}

FactCheckerWorker::FactCheckerWorker(model::Gateway& gateway)
    : Worker(make_descriptor(kFactCheckerId, "Checks a scenario against its chapter extract.",
                             {kinds::chapter_extract, kinds::scenario_md}, {kinds::factcheck_report})),
      gateway_(gateway) {}

core::WorkerReport FactCheckerWorker::perform(const core::Envelope& envelope, core::ArtifactStore& store) {
  auto extract = ChapterExtract::from_json(store.get(require(envelope, kinds::chapter_extract)));
  TestScenario sc = parse_scenario_markdown(store.get(require(envelope, kinds::scenario_md)));
  FactCheckReport report = fact_check(gateway_, sc, extract);
  auto handle = emit(store, kinds::factcheck_report, report.to_text());

  std::vector<std::string> lines;
  for (const auto& i : report.issues) lines.push_back(issue_line(i));
  auto out = core::WorkerReport::ok(report.passed ? "Verdict: PASS."
                                                  : "Verdict: FAIL (" + std::to_string(report.issues.size()) +
                                                        " issue(s)).",
                                    {handle});
  out.verdict = report.passed ? core::Verdict::pass : core::Verdict::fail;
  out.issues = text::join(lines, "\n");
  return out;
}

TranslatorWorker::TranslatorWorker(model::Gateway& gateway, std::string target_language)
    : Worker(make_descriptor(kTranslatorId, "Translates a checked scenario.", {kinds::scenario_md},
                             {kinds::scenario_translated})),
      gateway_(gateway),
      target_(std::move(target_language)) {}

core::WorkerReport TranslatorWorker::perform(const core::Envelope& envelope, core::ArtifactStore& store) {
  TestScenario sc = parse_scenario_markdown(store.get(require(envelope, kinds::scenario_md)));
  TestScenario out = translate_scenario(gateway_, sc, target_);
  auto handle = emit(store, kinds::scenario_translated, to_markdown(out), out.title);
  std::string summary = out.language == sc.language ? "Scenario already in " + language_name(out.language) + "; kept as is."
                                                    : "Translated the scenario into " + language_name(out.language) + ".";
  return core::WorkerReport::ok(std::move(summary), {handle});
}

SpreadsheetWorker::SpreadsheetWorker(bool emit_xlsx)
    : Worker(make_descriptor(kSpreadsheetWriterId, "Writes the translated scenario as a spreadsheet.",
                             {kinds::scenario_translated}, {kinds::spreadsheet})),
      emit_xlsx_(emit_xlsx) {}

core::WorkerReport SpreadsheetWorker::perform(const core::Envelope& envelope, core::ArtifactStore& store) {
  TestScenario sc = parse_scenario_markdown(store.get(require(envelope, kinds::scenario_translated)));
  SpreadsheetModel sheet = build_spreadsheet(sc);
  std::vector<core::ArtifactHandle> produced{emit(store, kinds::spreadsheet, to_csv(sheet), "scenario.csv")};
  if (emit_xlsx_) produced.push_back(emit(store, kinds::spreadsheet, to_xlsx(sheet), "scenario.xlsx"));
  return core::WorkerReport::ok("Wrote the spreadsheet with " + std::to_string(sheet.rows.size()) + " step row(s).",
                                std::move(produced));
}

ScenarioJobResult run_scenario_job(model::Gateway& gateway, core::ArtifactStore& store, std::string_view fsd_text,
                                   std::string_view user_prompt, const ScenarioJobOptions& options) {
  ScenarioJobResult result;
  result.section = text::trim_copy(options.section);
  if (result.section.empty()) result.section = section_from_prompt(user_prompt).value_or("");
  if (result.section.empty()) {
    throw ValidationError("no section requested: name it in the request (\"... section Password\") or pass it explicitly");
  }
  std::string fsd_language = normalize_language(options.fsd_language.empty() ? "en" : options.fsd_language);
  if (!text::trim(options.target_language).empty()) {
    result.target_language = normalize_language(options.target_language);
  } else {
    result.target_language = language_from_prompt(user_prompt).value_or(fsd_language);
  }

  PreprocessedFSD fsd = preprocess_fsd(fsd_text, options.images, gateway, options.source_name, options.preprocess);
  retrieve_chapter(fsd, result.section);
  result.warnings = fsd.warnings;

  std::vector<core::ArtifactHandle> attachments{
      store.put(kinds::fsd_source, std::string(fsd_text), kPreprocessorId, options.source_name),
      store.put(kinds::fsd_preprocessed, fsd.to_json(), kPreprocessorId, options.source_name),
  };

  core::Registry registry;
  registry.register_worker(std::make_shared<RetrieverWorker>(result.section))
      .register_worker(std::make_shared<WriterWorker>(gateway, fsd_language))
      .register_worker(std::make_shared<FactCheckerWorker>(gateway))
      .register_worker(std::make_shared<TranslatorWorker>(gateway, result.target_language))
      .register_worker(std::make_shared<SpreadsheetWorker>(options.emit_xlsx));

  core::Supervisor supervisor(registry, store, options.session.value_or(default_scenario_config()), options.planner);
  core::SessionResult session =
      supervisor.run(options.session_id, std::string(user_prompt), attachments,
                     {{"language", language_name(result.target_language)}, {"section", result.section}});

  result.status = session.status;
  result.final_text = session.final_text;
  result.artifacts = session.artifacts;
  result.transcript = std::move(session.transcript);
  for (const auto& h : result.artifacts) {
    if (h.kind != kinds::spreadsheet) continue;
    if (text::icontains(h.name, ".xlsx")) {
      result.xlsx = h;
    } else {
      result.csv = h;
    }
  }
  return result;
}

}  // namespace docflow::scenario
