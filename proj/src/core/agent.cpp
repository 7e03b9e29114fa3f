#include "docflow/core/agent.hpp"

#include "docflow/common/errors.hpp"
#include "docflow/common/text.hpp"

#include <algorithm>

namespace docflow::core {

void AgentDescriptor::validate() const {
  if (agent_id.empty()) throw ValidationError("agent id must be non-empty");
  if (agent_id == kSupervisorId || agent_id == kUserId) throw ValidationError("agent id '" + agent_id + "' is reserved");
  for (const auto& k : accepts) {
    if (produces.count(k)) {
      throw ValidationError("agent '" + agent_id + "' both accepts and produces '" + k.tag() + "'");
    }
  }
}

const char* to_string(WorkerStatus s) {
  switch (s) {
    case WorkerStatus::ok: return "ok";
    case WorkerStatus::input_rejected: return "input_rejected";
    case WorkerStatus::failed: return "failed";
  }
  return "unknown";
}

const char* to_string(Verdict v) { return v == Verdict::pass ? "pass" : "fail"; }

WorkerReport WorkerReport::ok(std::string summary, std::vector<ArtifactHandle> produced) {
  WorkerReport r;
  r.status = WorkerStatus::ok;
  r.summary = std::move(summary);
  r.produced = std::move(produced);
  return r;
}

WorkerReport WorkerReport::rejected(std::string reason) {
  WorkerReport r;
  r.status = WorkerStatus::input_rejected;
  r.summary = "input rejected: " + reason;
  r.reject_reason = std::move(reason);
  return r;
}

WorkerReport WorkerReport::failure(std::string summary) {
  WorkerReport r;
  r.status = WorkerStatus::failed;
  r.summary = std::move(summary);
  return r;
}

InputCheck check_input(const AgentDescriptor& descriptor, const Envelope& envelope, const ArtifactStore& store) {
  if (envelope.to_agent != descriptor.agent_id) {
    return {false, "envelope addressed to '" + envelope.to_agent + "', not '" + descriptor.agent_id + "'"};
  }
  for (const auto& h : envelope.handles) {
    if (!store.contains(h.id)) return {false, "unresolvable artifact '" + h.id + "'"};
  }

  std::set<ArtifactKind> present;
  for (const auto& h : envelope.handles) present.insert(h.kind);

  std::vector<std::string> missing;
  std::vector<std::string> unexpected;
  for (const auto& k : descriptor.accepts) {
    if (!present.count(k)) missing.push_back(k.tag());
  }
  for (const auto& k : present) {
    if (!descriptor.accepts.count(k)) unexpected.push_back(k.tag());
  }
  if (missing.empty()) return {};

  std::string reason = "missing input of kind " + text::join(missing, ", ");
  if (!unexpected.empty()) reason += "; unexpected kind " + text::join(unexpected, ", ");
  return {false, reason};
}

Worker::Worker(AgentDescriptor descriptor) : descriptor_(std::move(descriptor)) { descriptor_.validate(); }

WorkerReport Worker::handle(const Envelope& envelope, ArtifactStore& store) {
  InputCheck check = check_input(descriptor_, envelope, store);
  if (!check.accepted) return WorkerReport::rejected(std::move(check.reason));
  try {
    return perform(envelope, store);
  } catch (const std::exception& e) {
    return WorkerReport::failure(e.what());
  }
}

std::optional<ArtifactHandle> Worker::input_of(const Envelope& envelope, const ArtifactKind& kind) {
  std::optional<ArtifactHandle> best;
  for (const auto& h : envelope.handles) {
    if (h.kind == kind && (!best || newer_than(h, *best))) best = h;
  }
  return best;
}

ArtifactHandle Worker::emit(ArtifactStore& store, const ArtifactKind& kind, std::string content, std::string name) const {
  return store.put(kind, std::move(content), descriptor_.agent_id, std::move(name));
}

Registry& Registry::register_worker(std::shared_ptr<Worker> worker) {
  if (!worker) throw ValidationError("cannot register a null worker");
  worker->descriptor().validate();
  const auto& id = worker->id();
  if (workers_.count(id)) throw ValidationError("registration error: agent '" + id + "' is already registered");
  workers_.emplace(id, std::move(worker));
  return *this;
}

Worker* Registry::find(const std::string& agent_id) const {
  auto it = workers_.find(agent_id);
  return it == workers_.end() ? nullptr : it->second.get();
}

std::vector<std::string> Registry::ids() const {
  std::vector<std::string> out;
  out.reserve(workers_.size());
  for (const auto& [id, w] : workers_) out.push_back(id);
  return out;
}

}  // namespace docflow::core
