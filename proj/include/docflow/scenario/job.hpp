#pragma once

#include "docflow/core/agent.hpp"
#include "docflow/core/artifact.hpp"
#include "docflow/core/supervisor.hpp"
#include "docflow/scenario/fsd.hpp"

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace docflow::model {
class Gateway;
}

namespace docflow::scenario {

inline constexpr const char* kRetrieverId = "retriever";
inline constexpr const char* kWriterId = "writer";
inline constexpr const char* kFactCheckerId = "fact-checker";
inline constexpr const char* kTranslatorId = "translator";
inline constexpr const char* kSpreadsheetWriterId = "spreadsheet-writer";
inline constexpr const char* kPreprocessorId = "preprocessor";

// "{{language}}" is the display name of the target language.
extern const char* const kCompletionTemplate;

// retriever -> writer -> fact-checker -> translator -> spreadsheet-writer
core::SessionConfig default_scenario_config();

class RetrieverWorker final : public core::Worker {
 public:
  explicit RetrieverWorker(std::string section);

 protected:
  core::WorkerReport perform(const core::Envelope& envelope, core::ArtifactStore& store) override;

 private:
  std::string section_;
};

class WriterWorker final : public core::Worker {
 public:
  WriterWorker(model::Gateway& gateway, std::string language);

 protected:
  core::WorkerReport perform(const core::Envelope& envelope, core::ArtifactStore& store) override;

 private:
  model::Gateway& gateway_;
  std::string language_;
};

class FactCheckerWorker final : public core::Worker {
 public:
  explicit FactCheckerWorker(model::Gateway& gateway);

 protected:
  core::WorkerReport perform(const core::Envelope& envelope, core::ArtifactStore& store) override;

 private:
  model::Gateway& gateway_;
};

class TranslatorWorker final : public core::Worker {
 public:
  TranslatorWorker(model::Gateway& gateway, std::string target_language);

 protected:
  core::WorkerReport perform(const core::Envelope& envelope, core::ArtifactStore& store) override;

 private:
  model::Gateway& gateway_;
  std::string target_;
};

class SpreadsheetWorker final : public core::Worker {
 public:
  explicit SpreadsheetWorker(bool emit_xlsx);

 protected:
  core::WorkerReport perform(const core::Envelope& envelope, core::ArtifactStore& store) override;

 private:
  bool emit_xlsx_;
};

struct ScenarioJobOptions {
  std::string section;          // empty: taken from the prompt
  std::string target_language;  // empty: taken from the prompt, else the FSD language
  std::string fsd_language = "en";
  std::string source_name = "fsd.md";
  ImageMap images;
  PreprocessOptions preprocess;
  bool emit_xlsx = true;
  std::string session_id = "scenario";
  std::optional<core::SessionConfig> session;      // default_scenario_config() when unset
  std::shared_ptr<core::DispatchPlanner> planner;  // kind matching when unset
};

struct ScenarioJobResult {
  core::SessionStatus status = core::SessionStatus::aborted;
  std::string final_text;
  std::string section;
  std::string target_language;
  std::vector<std::string> warnings;
  std::optional<core::ArtifactHandle> csv;
  std::optional<core::ArtifactHandle> xlsx;
  std::vector<core::ArtifactHandle> artifacts;
  std::vector<core::TranscriptEntry> transcript;
};

// Preprocesses the FSD, stores source and preprocessed text as attachments
// and runs one supervised session. Bad requests (no section, missing image)
// throw before the session starts.
ScenarioJobResult run_scenario_job(model::Gateway& gateway, core::ArtifactStore& store, std::string_view fsd_text,
                                   std::string_view user_prompt, const ScenarioJobOptions& options = {});

}  // namespace docflow::scenario
