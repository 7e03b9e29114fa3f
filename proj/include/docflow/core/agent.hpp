#pragma once

#include "docflow/core/artifact.hpp"

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace docflow::core {

inline constexpr const char* kSupervisorId = "supervisor";
inline constexpr const char* kUserId = "user";

struct AgentDescriptor {
  std::string agent_id;
  std::string role_prompt;
  std::set<ArtifactKind> accepts;
  std::set<ArtifactKind> produces;

  // Throws ValidationError: empty/reserved id, or accepts ∩ produces ≠ ∅.
  void validate() const;
};

struct Envelope {
  std::size_t step_index = 0;
  std::string from_agent;
  std::string to_agent;
  std::string text;
  std::vector<ArtifactHandle> handles;
};

enum class WorkerStatus { ok, input_rejected, failed };
enum class Verdict { pass, fail };

const char* to_string(WorkerStatus s);
const char* to_string(Verdict v);

struct WorkerReport {
  WorkerStatus status = WorkerStatus::ok;
  std::string summary;
  std::vector<ArtifactHandle> produced;
  std::optional<std::string> reject_reason;

  // Set by reviewing workers. A fail verdict sends the reviewed artifact's
  // producer back to work with `issues` as instructions.
  std::optional<Verdict> verdict;
  std::string issues;

  static WorkerReport ok(std::string summary, std::vector<ArtifactHandle> produced);
  static WorkerReport rejected(std::string reason);
  static WorkerReport failure(std::string summary);
};

struct InputCheck {
  bool accepted = true;
  std::string reason;
};

// Accept iff the kinds of the envelope's handles cover descriptor.accepts and
// every handle resolves in the store. A rejection names the missing kinds and
// any unexpected ones.
InputCheck check_input(const AgentDescriptor& descriptor, const Envelope& envelope, const ArtifactStore& store);

class Worker {
 public:
  explicit Worker(AgentDescriptor descriptor);
  virtual ~Worker() = default;

  Worker(const Worker&) = delete;
  Worker& operator=(const Worker&) = delete;

  const AgentDescriptor& descriptor() const noexcept { return descriptor_; }
  const std::string& id() const noexcept { return descriptor_.agent_id; }

  // Verifies the input, then performs. Exceptions from perform() become
  // `failed` reports; this never throws for domain errors.
  WorkerReport handle(const Envelope& envelope, ArtifactStore& store);

 protected:
  virtual WorkerReport perform(const Envelope& envelope, ArtifactStore& store) = 0;

  // Newest handle of `kind` in the envelope, if any.
  static std::optional<ArtifactHandle> input_of(const Envelope& envelope, const ArtifactKind& kind);

  ArtifactHandle emit(ArtifactStore& store, const ArtifactKind& kind, std::string content, std::string name = {}) const;

 private:
  AgentDescriptor descriptor_;
};

class Registry {
 public:
  // Throws ValidationError on duplicate id or invalid descriptor.
  Registry& register_worker(std::shared_ptr<Worker> worker);

  Worker* find(const std::string& agent_id) const;
  bool contains(const std::string& agent_id) const { return find(agent_id) != nullptr; }
  std::size_t size() const noexcept { return workers_.size(); }
  bool empty() const noexcept { return workers_.empty(); }
  std::vector<std::string> ids() const;

 private:
  std::map<std::string, std::shared_ptr<Worker>> workers_;
};

}  // namespace docflow::core
