#include "docflow/core/supervisor.hpp"

#include "docflow/common/errors.hpp"
#include "docflow/common/text.hpp"
#include "docflow/model/gateway.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace docflow::core {

using nlohmann::json;

// ---------------------------------------------------------------------------
// SessionConfig

void SessionConfig::validate() const {
  if (max_revisions < 0) throw ValidationError("max_revisions must be >= 0");
  if (max_reroutes < 0) throw ValidationError("max_reroutes must be >= 0");
  if (context_budget < 256) throw ValidationError("context_budget must be at least 256 characters");
  std::set<std::string> seen;
  for (const auto& id : declared_order) {
    if (!seen.insert(id).second) throw ValidationError("agent '" + id + "' appears twice in declared_order");
  }
}

std::size_t SessionConfig::dispatch_bound() const {
  return declared_order.size() * static_cast<std::size_t>(1 + max_revisions) * static_cast<std::size_t>(1 + max_reroutes);
}

SessionConfig SessionConfig::from_json_text(const std::string& json_text) {
  SessionConfig cfg;
  try {
    json j = json::parse(json_text);
    cfg.declared_order = j.at("declared_order").get<std::vector<std::string>>();
    cfg.max_revisions = j.value("max_revisions", cfg.max_revisions);
    cfg.max_reroutes = j.value("max_reroutes", cfg.max_reroutes);
    cfg.context_budget = j.value("context_budget", cfg.context_budget);
    cfg.completion_template = j.value("completion_template", cfg.completion_template);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("session config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

SessionConfig SessionConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open session config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

std::string SessionConfig::to_json_text() const {
  json j = {{"declared_order", declared_order},
            {"max_revisions", max_revisions},
            {"max_reroutes", max_reroutes},
            {"context_budget", context_budget},
            {"completion_template", completion_template}};
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Transcript

std::size_t step_of(const TranscriptEntry& e) {
  return std::visit([](const auto& v) { return v.step_index; }, e);
}

const char* to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::running: return "running";
    case SessionStatus::done: return "done";
    case SessionStatus::aborted: return "aborted";
  }
  return "unknown";
}

namespace {

json handles_json(const std::vector<ArtifactHandle>& handles) {
  json arr = json::array();
  for (const auto& h : handles) {
    arr.push_back({{"id", h.id}, {"kind", h.kind.tag()}, {"created_by", h.created_by}});
  }
  return arr;
}

}  // namespace

void write_transcript_jsonl(std::ostream& out, const std::vector<TranscriptEntry>& transcript, SessionStatus outcome) {
  for (std::size_t i = 0; i < transcript.size(); ++i) {
    json j;
    if (const auto* env = std::get_if<Envelope>(&transcript[i])) {
      j = {{"step", env->step_index}, {"from", env->from_agent}, {"to", env->to_agent},
           {"text", env->text},       {"handles", handles_json(env->handles)}, {"status", "sent"}};
      if (env->to_agent == kUserId) j["status"] = to_string(outcome);
    } else {
      const auto& rep = std::get<ReportEntry>(transcript[i]);
      j = {{"step", rep.step_index},
           {"from", rep.from_agent},
           {"to", kSupervisorId},
           {"text", rep.report.summary},
           {"handles", handles_json(rep.report.produced)},
           {"status", to_string(rep.report.status)}};
      if (rep.report.reject_reason) j["reject_reason"] = *rep.report.reject_reason;
      if (rep.report.verdict) j["verdict"] = to_string(*rep.report.verdict);
    }
    out << j.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------
// Routing decisions and planners

RoutingDecision RoutingDecision::invoke(std::string agent_id, Envelope envelope) {
  RoutingDecision d;
  d.action = Action::invoke;
  d.agent_id = std::move(agent_id);
  d.envelope = std::move(envelope);
  return d;
}

RoutingDecision RoutingDecision::finish(std::string final_text) {
  RoutingDecision d;
  d.action = Action::finish;
  d.text = std::move(final_text);
  return d;
}

RoutingDecision RoutingDecision::abort(std::string diagnostic) {
  RoutingDecision d;
  d.action = Action::abort;
  d.text = std::move(diagnostic);
  return d;
}

namespace {

std::string kind_list(const std::vector<ArtifactKind>& kinds) {
  std::vector<std::string> tags;
  for (const auto& k : kinds) tags.push_back(k.tag());
  return tags.empty() ? std::string("none") : text::join(tags, ", ");
}

std::vector<ArtifactKind> as_vector(const std::set<ArtifactKind>& s) { return {s.begin(), s.end()}; }

std::string default_instruction(const PlanningContext& ctx) {
  std::ostringstream os;
  os << "Step " << ctx.position + 1 << " of " << ctx.state.declared_order.size() << " for " << ctx.target.agent_id
     << ". User request: " << ctx.state.user_prompt << "\nAttached inputs: " << kind_list(as_vector(ctx.target.accepts))
     << ".";
  return os.str();
}

}  // namespace

DispatchPlan KindMatchingPlanner::plan(const PlanningContext& ctx) {
  return {default_instruction(ctx), as_vector(ctx.target.accepts)};
}

DispatchPlan ModelPlanner::plan(const PlanningContext& ctx) {
  std::set<std::string> available;
  for (const auto& h : ctx.state.artifacts) available.insert(h.kind.tag());

  std::string last_summary = "none";
  for (auto it = ctx.state.transcript.rbegin(); it != ctx.state.transcript.rend(); ++it) {
    if (const auto* rep = std::get_if<ReportEntry>(&*it)) {
      last_summary = rep->from_agent + ": " + rep->report.summary;
      break;
    }
  }

  std::ostringstream user;
  user << "User request: " << ctx.state.user_prompt << "\n"
       << "Next worker: " << ctx.target.agent_id << " (step " << ctx.position + 1 << " of "
       << ctx.state.declared_order.size() << ")\n"
       << "Available artifact kinds: " << (available.empty() ? "none" : text::join({available.begin(), available.end()}, ", "))
       << "\nLast worker report: " << last_summary;

  auto req = model::single_turn(
      kSupervisorId,
      "You supervise specialised worker agents and never see artifact contents. Decide which artifacts to "
      "hand to the next worker and what to tell it. Reply with two lines:\nATTACH: <comma-separated artifact "
      "kinds>\nMESSAGE: <instruction for the worker>",
      text::truncate_utf8(user.str(), budget_));
  std::string reply = gateway_.complete(req);

  DispatchPlan plan = KindMatchingPlanner{}.plan(ctx);
  for (auto line : text::split_lines(reply)) {
    line = text::trim(line);
    if (text::starts_with_icase(line, "ATTACH:")) {
      std::vector<ArtifactKind> kinds;
      for (const auto& part : text::split(line.substr(7), ',')) {
        auto tag = text::trim_copy(part);
        if (!tag.empty()) kinds.emplace_back(text::to_lower(tag));
      }
      if (!kinds.empty()) plan.attach = std::move(kinds);
    } else if (text::starts_with_icase(line, "MESSAGE:")) {
      auto msg = text::trim_copy(line.substr(8));
      if (!msg.empty()) plan.text = std::move(msg);
    }
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Supervisor

Supervisor::Supervisor(const Registry& registry, ArtifactStore& store, SessionConfig config,
                       std::shared_ptr<DispatchPlanner> planner)
    : registry_(registry),
      store_(store),
      config_(std::move(config)),
      planner_(planner ? std::move(planner) : std::make_shared<KindMatchingPlanner>()) {
  config_.validate();
}

PipelineState Supervisor::start(std::string session_id, std::string user_prompt, std::vector<ArtifactHandle> attachments,
                                std::vector<std::pair<std::string, std::string>> template_vars) const {
  PipelineState state;
  state.session_id = std::move(session_id);
  state.declared_order = config_.declared_order;
  state.user_prompt = std::move(user_prompt);
  state.template_vars = std::move(template_vars);
  for (const auto& h : attachments) {
    if (!store_.contains(h.id)) throw ValidationError("attachment '" + h.id + "' is not in the artifact store");
  }
  state.artifacts = attachments;

  Envelope opening;
  opening.step_index = state.next_step++;
  opening.from_agent = kUserId;
  opening.to_agent = kSupervisorId;
  opening.text = contain(state.user_prompt, "(user request withheld: it embeds an attached artifact)");
  state.user_prompt = opening.text;
  opening.handles = std::move(attachments);
  state.transcript.emplace_back(std::move(opening));
  return state;
}

std::string Supervisor::contain(std::string text, std::string_view fallback) const {
  if (store_.embeds_stored_content(text)) text = std::string(fallback);
  return text::truncate_utf8(text, config_.context_budget);
}

std::optional<std::string> Supervisor::revision_target(const PipelineState& state) const {
  if (!state.in_flight) return std::nullopt;
  const std::string& reviewer = state.in_flight->to_agent;
  std::optional<ArtifactHandle> newest;
  for (const auto& h : state.in_flight->handles) {
    if (h.created_by == reviewer || !registry_.contains(h.created_by)) continue;
    if (std::find(state.declared_order.begin(), state.declared_order.end(), h.created_by) == state.declared_order.end()) continue;
    if (!newest || newer_than(h, *newest)) newest = h;
  }
  if (!newest) return std::nullopt;
  return newest->created_by;
}

RoutingDecision Supervisor::dispatch(PipelineState& state, std::size_t position, std::string text,
                                     const std::vector<ArtifactKind>& attach, std::vector<ArtifactHandle> extra) {
  if (state.dispatches >= config_.dispatch_bound()) {
    return RoutingDecision::abort("dispatch bound of " + std::to_string(config_.dispatch_bound()) + " reached");
  }
  const std::string& agent = state.declared_order[position];

  Envelope env;
  env.step_index = state.next_step++;
  env.from_agent = kSupervisorId;
  env.to_agent = agent;
  for (const auto& kind : attach) {
    std::optional<ArtifactHandle> best;
    for (const auto& h : state.artifacts) {
      if (h.kind == kind && (!best || newer_than(h, *best))) best = h;
    }
    if (best) env.handles.push_back(*best);
  }
  for (auto& h : extra) {
    if (std::find(env.handles.begin(), env.handles.end(), h) == env.handles.end()) env.handles.push_back(std::move(h));
  }
  env.text = contain(std::move(text), "Please process the attached artifacts for: " + agent + ".");
  state.in_flight = env;
  return RoutingDecision::invoke(agent, std::move(env));
}

RoutingDecision Supervisor::first_dispatch(PipelineState& state, std::size_t position) {
  const Worker* worker = registry_.find(state.declared_order[position]);
  DispatchPlan plan;
  try {
    plan = planner_->plan(PlanningContext{state, worker->descriptor(), position});
  } catch (const Error& e) {
    return RoutingDecision::abort(std::string("supervisor planning failed: ") + e.what());
  }
  return dispatch(state, position, std::move(plan.text), plan.attach);
}

RoutingDecision Supervisor::route_next(PipelineState& state, const std::optional<WorkerReport>& last) {
  if (state.status != SessionStatus::running) throw std::logic_error("route_next on a finished session");

  auto conclude = [&](RoutingDecision d) {
    if (d.action == RoutingDecision::Action::finish) state.status = SessionStatus::done;
    if (d.action == RoutingDecision::Action::abort) state.status = SessionStatus::aborted;
    return d;
  };

  if (registry_.empty()) return conclude(RoutingDecision::abort("no workers"));
  for (const auto& id : state.declared_order) {
    if (!registry_.contains(id)) return conclude(RoutingDecision::abort("agent '" + id + "' in declared order is not registered"));
  }
  if (!last) {
    if (state.declared_order.empty()) return conclude(RoutingDecision::finish(text::render(config_.completion_template, state.template_vars)));
    return conclude(first_dispatch(state, state.cursor));
  }
  if (state.cursor >= state.declared_order.size()) throw std::logic_error("report received with exhausted cursor");

  const std::string agent = state.declared_order[state.cursor];
  const AgentDescriptor& desc = registry_.find(agent)->descriptor();

  switch (last->status) {
    case WorkerStatus::failed:
      return conclude(RoutingDecision::abort("'" + agent + "' failed: " + last->summary));

    case WorkerStatus::input_rejected: {
      int& reroutes = state.reroute_count[state.cursor];
      std::string reason = last->reject_reason.value_or(last->summary);
      if (reroutes >= config_.max_reroutes) {
        return conclude(RoutingDecision::abort("reroute budget exhausted for '" + agent + "' after " +
                                               std::to_string(reroutes) + " re-route(s) (max_reroutes=" +
                                               std::to_string(config_.max_reroutes) + "): " + reason));
      }
      ++reroutes;
      auto accepts = as_vector(desc.accepts);
      std::string text = "Re-sending your task with inputs matched by kind (" + kind_list(accepts) +
                         "). Previous rejection: " + reason;
      return conclude(dispatch(state, state.cursor, std::move(text), accepts));
    }

    case WorkerStatus::ok:
      break;
  }

  // Output contract: exactly the declared kinds, all resolvable.
  std::set<ArtifactKind> got;
  for (const auto& h : last->produced) {
    if (!desc.produces.count(h.kind) || !store_.contains(h.id)) {
      return conclude(RoutingDecision::abort("'" + agent + "' violated its output contract with artifact kind '" +
                                             h.kind.tag() + "'"));
    }
    got.insert(h.kind);
  }
  if (got != desc.produces) {
    return conclude(RoutingDecision::abort("'" + agent + "' reported ok without producing " +
                                           kind_list(as_vector(desc.produces))));
  }
  state.artifacts.insert(state.artifacts.end(), last->produced.begin(), last->produced.end());

  if (last->verdict == Verdict::fail) {
    std::string issues = last->issues.empty() ? last->summary : last->issues;
    auto target = revision_target(state);
    if (!target) return conclude(RoutingDecision::abort("'" + agent + "' rejected work with no producing agent to revise"));
    int& revisions = state.revision_count[*target];
    if (revisions >= config_.max_revisions) {
      return conclude(RoutingDecision::abort("revision loop exhausted: '" + *target + "' revised " +
                                             std::to_string(revisions) + " time(s) (max_revisions=" +
                                             std::to_string(config_.max_revisions) + ") and '" + agent +
                                             "' still reports: " + issues));
    }
    ++revisions;
    auto pos = static_cast<std::size_t>(
        std::find(state.declared_order.begin(), state.declared_order.end(), *target) - state.declared_order.begin());
    state.cursor = pos;
    const AgentDescriptor& target_desc = registry_.find(*target)->descriptor();
    std::string text = "Please revise your output. '" + agent + "' found these issues:\n" + issues;
    return conclude(dispatch(state, pos, std::move(text), as_vector(target_desc.accepts), last->produced));
  }

  ++state.cursor;
  if (state.cursor == state.declared_order.size()) {
    return conclude(RoutingDecision::finish(text::render(config_.completion_template, state.template_vars)));
  }
  return conclude(first_dispatch(state, state.cursor));
}

SessionResult Supervisor::run(std::string session_id, std::string user_prompt, std::vector<ArtifactHandle> attachments,
                              std::vector<std::pair<std::string, std::string>> template_vars) {
  PipelineState state = start(std::move(session_id), std::move(user_prompt), attachments, std::move(template_vars));
  RoutingDecision decision = route_next(state, std::nullopt);

  std::vector<ArtifactHandle> last_outputs;
  while (decision.action == RoutingDecision::Action::invoke) {
    Envelope env = std::move(*decision.envelope);
    state.transcript.emplace_back(env);
    Worker* worker = registry_.find(decision.agent_id);
    WorkerReport report = worker->handle(env, store_);
    ++state.dispatches;

    // The supervisor keeps only bounded natural language from its workers.
    report.summary = contain(report.summary, "(summary withheld: it embeds a stored artifact)");
    report.issues = contain(report.issues, "(issues withheld: they embed a stored artifact)");
    if (report.status == WorkerStatus::ok) last_outputs = report.produced;
    state.transcript.emplace_back(ReportEntry{state.next_step++, decision.agent_id, report});
    decision = route_next(state, report);
  }

  Envelope closing;
  closing.step_index = state.next_step++;
  closing.from_agent = kSupervisorId;
  closing.to_agent = kUserId;
  closing.text = contain(decision.text, "(final text withheld)");
  if (decision.action == RoutingDecision::Action::finish) closing.handles = last_outputs;
  state.transcript.emplace_back(closing);

  SessionResult result;
  result.status = state.status;
  result.final_text = decision.text;
  for (const auto& h : state.artifacts) {
    if (std::find(attachments.begin(), attachments.end(), h) == attachments.end()) result.artifacts.push_back(h);
  }
  result.transcript = std::move(state.transcript);
  result.dispatches = state.dispatches;
  return result;
}

}  // namespace docflow::core
