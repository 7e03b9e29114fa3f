#pragma once

#include "docflow/core/agent.hpp"
#include "docflow/core/artifact.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace docflow::model {
class Gateway;
}

namespace docflow::core {

// Declarative session configuration; JSON on disk:
//   {"declared_order": [...], "max_revisions": 3, "max_reroutes": 2,
//    "context_budget": 4000, "completion_template": "..."}
struct SessionConfig {
  std::vector<std::string> declared_order;
  int max_revisions = 3;
  int max_reroutes = 2;
  std::size_t context_budget = 4000;
  // "{{name}}" placeholders are filled from the session's template variables.
  std::string completion_template = "The entire process has been completed successfully.";

  void validate() const;
  // len(order) · (1 + max_revisions) · (1 + max_reroutes)
  std::size_t dispatch_bound() const;

  static SessionConfig from_json_text(const std::string& json_text);
  static SessionConfig load_file(const std::filesystem::path& path);
  std::string to_json_text() const;
};

struct ReportEntry {
  std::size_t step_index = 0;
  std::string from_agent;
  WorkerReport report;
};

using TranscriptEntry = std::variant<Envelope, ReportEntry>;

std::size_t step_of(const TranscriptEntry& e);

enum class SessionStatus { running, done, aborted };
const char* to_string(SessionStatus s);

// One JSON object per line: {step, from, to, text, handles[], status}.
// Envelopes carry status "sent", worker reports their WorkerStatus, and the
// closing supervisor→user message the session outcome.
void write_transcript_jsonl(std::ostream& out, const std::vector<TranscriptEntry>& transcript, SessionStatus outcome);

struct PipelineState {
  std::string session_id;
  std::vector<std::string> declared_order;
  std::size_t cursor = 0;
  std::map<std::string, int> revision_count;
  std::map<std::size_t, int> reroute_count;  // by cursor position
  std::vector<TranscriptEntry> transcript;
  SessionStatus status = SessionStatus::running;

  std::string user_prompt;
  std::vector<std::pair<std::string, std::string>> template_vars;
  // Attachments plus everything produced during the session; kind matching
  // only ever looks here, so concurrent sessions on one store stay apart.
  std::vector<ArtifactHandle> artifacts;
  std::optional<Envelope> in_flight;
  std::size_t next_step = 0;
  std::size_t dispatches = 0;
};

struct RoutingDecision {
  enum class Action { invoke, finish, abort };

  Action action = Action::abort;
  std::string agent_id;               // invoke
  std::optional<Envelope> envelope;   // invoke
  std::string text;                   // finish: final text; abort: diagnostic

  static RoutingDecision invoke(std::string agent_id, Envelope envelope);
  static RoutingDecision finish(std::string final_text);
  static RoutingDecision abort(std::string diagnostic);
};

struct DispatchPlan {
  std::string text;
  std::vector<ArtifactKind> attach;
};

struct PlanningContext {
  const PipelineState& state;
  const AgentDescriptor& target;
  std::size_t position;
};

// Decides what the supervisor says to the next worker and which artifact
// kinds it attaches on a first dispatch. Re-routes after a rejection never
// consult the planner; they rebuild the envelope by kind matching.
class DispatchPlanner {
 public:
  virtual ~DispatchPlanner() = default;
  virtual DispatchPlan plan(const PlanningContext& ctx) = 0;
};

// Attaches exactly the target's accepted kinds; templated text.
class KindMatchingPlanner final : public DispatchPlanner {
 public:
  DispatchPlan plan(const PlanningContext& ctx) override;
};

// Lets a model pick the attachments and phrasing. Expected reply lines:
//   ATTACH: kind-a, kind-b
//   MESSAGE: free text for the worker
// Missing or unparseable lines fall back to kind matching.
class ModelPlanner final : public DispatchPlanner {
 public:
  explicit ModelPlanner(model::Gateway& gateway, std::size_t context_budget = 4000)
      : gateway_(gateway), budget_(context_budget) {}
  DispatchPlan plan(const PlanningContext& ctx) override;

 private:
  model::Gateway& gateway_;
  std::size_t budget_;
};

struct SessionResult {
  SessionStatus status = SessionStatus::aborted;
  std::string final_text;  // completion text, or the abort diagnostic
  std::vector<ArtifactHandle> artifacts;
  std::vector<TranscriptEntry> transcript;
  std::size_t dispatches = 0;
};

// Hub of the star topology. Holds natural-language text and handles only;
// bodies stay in the ArtifactStore.
class Supervisor {
 public:
  Supervisor(const Registry& registry, ArtifactStore& store, SessionConfig config,
             std::shared_ptr<DispatchPlanner> planner = nullptr);

  PipelineState start(std::string session_id, std::string user_prompt, std::vector<ArtifactHandle> attachments,
                      std::vector<std::pair<std::string, std::string>> template_vars = {}) const;

  // Pure function of (state, last) plus the store contents; mutates the
  // cursor and loop counters.
  RoutingDecision route_next(PipelineState& state, const std::optional<WorkerReport>& last);

  SessionResult run(std::string session_id, std::string user_prompt, std::vector<ArtifactHandle> attachments,
                    std::vector<std::pair<std::string, std::string>> template_vars = {});

  const SessionConfig& config() const noexcept { return config_; }

 private:
  RoutingDecision dispatch(PipelineState& state, std::size_t position, std::string text,
                           const std::vector<ArtifactKind>& attach, std::vector<ArtifactHandle> extra = {});
  RoutingDecision first_dispatch(PipelineState& state, std::size_t position);
  std::string contain(std::string text, std::string_view fallback) const;
  std::optional<std::string> revision_target(const PipelineState& state) const;

  const Registry& registry_;
  ArtifactStore& store_;
  SessionConfig config_;
  std::shared_ptr<DispatchPlanner> planner_;
};

inline SessionResult run_session(const Registry& registry, ArtifactStore& store, const SessionConfig& config,
                                 std::string user_prompt, std::vector<ArtifactHandle> attachments,
                                 std::vector<std::pair<std::string, std::string>> template_vars = {},
                                 std::shared_ptr<DispatchPlanner> planner = nullptr) {
  Supervisor sup(registry, store, config, std::move(planner));
  return sup.run("session", std::move(user_prompt), std::move(attachments), std::move(template_vars));
}

}  // namespace docflow::core
