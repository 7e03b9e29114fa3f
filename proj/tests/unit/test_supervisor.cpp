#include "docflow/common/errors.hpp"
#include "docflow/core/supervisor.hpp"
#include "fake_workers.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <json.hpp>

#include <sstream>

using namespace docflow;
using core::ArtifactKind;
using core::SessionStatus;
using docflow::testing::FakeWorker;

namespace {

const ArtifactKind k0{"k0"};
const ArtifactKind k1{"k1"};
const ArtifactKind k2{"k2"};
const ArtifactKind k3{"k3"};

struct Pipeline {
  core::ArtifactStore store;
  core::Registry registry;
  std::shared_ptr<FakeWorker> a, b, c;
  core::SessionConfig config;
  core::ArtifactHandle input;

  explicit Pipeline(FakeWorker::Behavior c_behavior = {}, FakeWorker::Behavior b_behavior = {}) {
    a = std::make_shared<FakeWorker>("a", std::set{k0}, std::set{k1});
    b = std::make_shared<FakeWorker>("b", std::set{k1}, std::set{k2}, std::move(b_behavior));
    c = std::make_shared<FakeWorker>("c", std::set{k1, k2}, std::set{k3}, std::move(c_behavior));
    registry.register_worker(a).register_worker(b).register_worker(c);
    config.declared_order = {"a", "b", "c"};
    config.completion_template = "Finished {{what}}.";
    input = store.put(k0, "input", "user");
  }

  core::SessionResult run(std::shared_ptr<core::DispatchPlanner> planner = nullptr) {
    return core::run_session(registry, store, config, "do it", {input}, {{"what", "everything"}}, std::move(planner));
  }
};

class WrongFirstPlanner : public core::DispatchPlanner {
 public:
  core::DispatchPlan plan(const core::PlanningContext& ctx) override {
    if (ctx.target.agent_id == "b") return {"here you go", {k0}};
    return core::KindMatchingPlanner{}.plan(ctx);
  }
};

std::string transcript_jsonl(const core::SessionResult& r) {
  std::ostringstream os;
  core::write_transcript_jsonl(os, r.transcript, r.status);
  return os.str();
}

}  // namespace

TEST(Supervisor, LinearSessionFollowsDeclaredOrder) {
  Pipeline p;
  auto r = p.run();
  EXPECT_EQ(r.status, SessionStatus::done);
  EXPECT_EQ(r.final_text, "Finished everything.");
  EXPECT_EQ(docflow::testing::ok_dispatch_order(r.transcript), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(r.dispatches, 3u);
  EXPECT_EQ(r.artifacts.size(), 3u);
}

TEST(Supervisor, EveryMessageTouchesTheSupervisor) {
  Pipeline p;
  auto r = p.run();
  for (const auto& e : r.transcript) {
    if (const auto* env = std::get_if<core::Envelope>(&e)) {
      EXPECT_TRUE(env->from_agent == core::kSupervisorId || env->to_agent == core::kSupervisorId)
          << env->from_agent << " -> " << env->to_agent;
    }
  }
  for (std::size_t i = 1; i < r.transcript.size(); ++i) {
    EXPECT_LT(core::step_of(r.transcript[i - 1]), core::step_of(r.transcript[i]));
  }
}

TEST(Supervisor, WorkersReceiveOnlyTheKindsTheyAccept) {
  Pipeline p;
  p.run();
  ASSERT_EQ(p.c->received.size(), 1u);
  std::set<ArtifactKind> got;
  for (const auto& h : p.c->received[0].handles) got.insert(h.kind);
  EXPECT_EQ(got, (std::set{k1, k2}));
  ASSERT_EQ(p.a->received.size(), 1u);
  ASSERT_EQ(p.a->received[0].handles.size(), 1u);
  EXPECT_EQ(p.a->received[0].handles[0].id, p.input.id);
}

TEST(Supervisor, RejectedInputIsReRoutedByKind) {
  Pipeline p;
  auto r = p.run(std::make_shared<WrongFirstPlanner>());
  EXPECT_EQ(r.status, SessionStatus::done);
  std::string log = transcript_jsonl(r);
  EXPECT_NE(log.find("\"status\":\"input_rejected\""), std::string::npos);
  EXPECT_NE(log.find("missing input of kind k1; unexpected kind k0"), std::string::npos);
  EXPECT_EQ(p.b->calls, 1);
  EXPECT_EQ(docflow::testing::ok_dispatch_order(r.transcript), (std::vector<std::string>{"a", "b", "c"}));
}

TEST(Supervisor, RerouteBudgetExhaustionAborts) {
  core::ArtifactStore store;
  core::Registry registry;
  const ArtifactKind never{"never"};
  auto w = std::make_shared<FakeWorker>("w", std::set{never}, std::set{k1});
  registry.register_worker(w);
  core::SessionConfig cfg;
  cfg.declared_order = {"w"};
  auto r = core::run_session(registry, store, cfg, "go", {});
  EXPECT_EQ(r.status, SessionStatus::aborted);
  EXPECT_EQ(r.final_text.rfind("reroute budget exhausted for 'w' after 2 re-route(s) (max_reroutes=2)", 0), 0u)
      << r.final_text;
  EXPECT_EQ(r.dispatches, 3u);
  EXPECT_EQ(w->calls, 0);
}

TEST(Supervisor, FailedWorkerAbortsWithItsMessage) {
  Pipeline p({}, [](FakeWorker&, const core::Envelope&, core::ArtifactStore&) -> core::WorkerReport {
    throw ModelError("backend down");
  });
  auto r = p.run();
  EXPECT_EQ(r.status, SessionStatus::aborted);
  EXPECT_EQ(r.final_text, "'b' failed: backend down");
  EXPECT_EQ(p.c->calls, 0);
}

TEST(Supervisor, FailVerdictRoutesBackToProducer) {
  for (int k = 0; k <= 3; ++k) {
    Pipeline p(docflow::testing::failing_checker(k));
    auto r = p.run();
    EXPECT_EQ(r.status, SessionStatus::done) << "k=" << k;
    EXPECT_EQ(p.b->calls, 1 + k) << "k=" << k;
    EXPECT_EQ(p.c->calls, 1 + k) << "k=" << k;
    EXPECT_EQ(p.a->calls, 1);
    EXPECT_EQ(docflow::testing::contracted_order(r.transcript, p.config.declared_order),
              (std::vector<std::string>{"a", "b", "c"}));
  }
}

TEST(Supervisor, RevisionCarriesIssuesAndReport) {
  Pipeline p(docflow::testing::failing_checker(1));
  p.run();
  ASSERT_EQ(p.b->received.size(), 2u);
  const auto& revision = p.b->received[1];
  EXPECT_NE(revision.text.find("- step 1: unsupported claim #1"), std::string::npos);
  std::set<ArtifactKind> kinds;
  for (const auto& h : revision.handles) kinds.insert(h.kind);
  EXPECT_TRUE(kinds.count(k1));
  EXPECT_TRUE(kinds.count(k3));
  // The re-check sees the revised k2, not the first one.
  ASSERT_EQ(p.c->received.size(), 2u);
  auto k2_of = [](const core::Envelope& env) {
    for (const auto& h : env.handles) {
      if (h.kind == k2) return h.id;
    }
    return std::string();
  };
  EXPECT_FALSE(k2_of(p.c->received[1]).empty());
  EXPECT_NE(k2_of(p.c->received[1]), k2_of(p.c->received[0]));
}

TEST(Supervisor, RevisionLoopExhaustionAborts) {
  Pipeline p(docflow::testing::failing_checker(4));
  auto r = p.run();
  EXPECT_EQ(r.status, SessionStatus::aborted);
  EXPECT_EQ(r.final_text.rfind("revision loop exhausted: 'b' revised 3 time(s) (max_revisions=3)", 0), 0u)
      << r.final_text;
  EXPECT_EQ(p.b->calls, 4);
  EXPECT_LE(r.dispatches, p.config.dispatch_bound());
}

TEST(Supervisor, OutputContractViolationAborts) {
  Pipeline p({}, [](FakeWorker& self, const core::Envelope&, core::ArtifactStore& store) {
    return core::WorkerReport::ok("wrong", {self.put(store, k3, "not mine")});
  });
  auto r = p.run();
  EXPECT_EQ(r.status, SessionStatus::aborted);
  EXPECT_NE(r.final_text.find("violated its output contract"), std::string::npos);
}

TEST(Supervisor, ReportsAreBoundedAndArtifactBodiesWithheld) {
  std::string big(10000, 'z');
  Pipeline p({}, [&big](FakeWorker& self, const core::Envelope&, core::ArtifactStore& store) {
    auto report = self.produce_all(store);
    report.summary = big;
    return report;
  });
  std::string body(400, 'q');
  auto stored = p.store.put(k0, body, "user");
  auto r = core::run_session(p.registry, p.store, p.config, "please use " + body, {p.input, stored});
  EXPECT_EQ(r.status, SessionStatus::done);
  for (const auto& e : r.transcript) {
    std::string text;
    if (const auto* env = std::get_if<core::Envelope>(&e)) text = env->text;
    if (const auto* rep = std::get_if<core::ReportEntry>(&e)) text = rep->report.summary + rep->report.issues;
    EXPECT_LE(text.size(), p.config.context_budget);
    EXPECT_EQ(text.find(body), std::string::npos);
  }
}

TEST(Supervisor, ConfigurationErrors) {
  core::ArtifactStore store;
  core::Registry empty;
  core::SessionConfig cfg;
  cfg.declared_order = {"a"};
  auto r = core::run_session(empty, store, cfg, "go", {});
  EXPECT_EQ(r.status, SessionStatus::aborted);
  EXPECT_EQ(r.final_text, "no workers");

  Pipeline p;
  p.config.declared_order = {"a", "ghost"};
  auto r2 = p.run();
  EXPECT_EQ(r2.status, SessionStatus::aborted);
  EXPECT_NE(r2.final_text.find("'ghost'"), std::string::npos);

  EXPECT_THROW(p.registry.register_worker(std::make_shared<FakeWorker>("a", std::set{k0}, std::set{k1})),
               ValidationError);
  EXPECT_THROW((FakeWorker("supervisor", std::set{k0}, std::set{k1})), ValidationError);
  EXPECT_THROW((FakeWorker("x", std::set{k0}, std::set{k0})), ValidationError);
}

TEST(Supervisor, EmptyOrderFinishesImmediately) {
  Pipeline p;
  p.config.declared_order.clear();
  auto r = p.run();
  EXPECT_EQ(r.status, SessionStatus::done);
  EXPECT_EQ(r.dispatches, 0u);
}

TEST(SessionConfig, JsonRoundTripAndValidation) {
  core::SessionConfig cfg;
  cfg.declared_order = {"a", "b"};
  cfg.max_revisions = 1;
  auto back = core::SessionConfig::from_json_text(cfg.to_json_text());
  EXPECT_EQ(back.declared_order, cfg.declared_order);
  EXPECT_EQ(back.max_revisions, 1);
  EXPECT_EQ(back.dispatch_bound(), 2u * 2u * 3u);
  EXPECT_THROW(core::SessionConfig::from_json_text("{\"declared_order\": [\"a\", \"a\"]}"), ValidationError);
  EXPECT_THROW(core::SessionConfig::from_json_text("{\"context_budget\": 10}"), ValidationError);
  EXPECT_THROW(core::SessionConfig::from_json_text("not json"), ValidationError);
}

TEST(Transcript, JsonlCarriesRequiredFields) {
  Pipeline p(docflow::testing::failing_checker(1));
  auto r = p.run();
  std::istringstream in(transcript_jsonl(r));
  std::string line;
  std::vector<nlohmann::json> rows;
  while (std::getline(in, line)) rows.push_back(nlohmann::json::parse(line));
  ASSERT_FALSE(rows.empty());
  for (const auto& j : rows) {
    for (const char* key : {"step", "from", "to", "text", "handles", "status"}) EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(rows.front()["from"], "user");
  EXPECT_EQ(rows.back()["to"], "user");
  EXPECT_EQ(rows.back()["status"], "done");
  bool saw_fail = false;
  for (const auto& j : rows) saw_fail |= j.value("verdict", "") == "fail";
  EXPECT_TRUE(saw_fail);
}

TEST(CheckInput, ExtraKindsAreToleratedMissingOnesNot) {
  core::ArtifactStore store;
  auto h0 = store.put(k0, "zero", "user");
  auto h1 = store.put(k1, "one", "a");
  core::AgentDescriptor d{"b", "", {k1}, {k2}};
  core::Envelope env{0, "supervisor", "b", "", {h0, h1}};
  EXPECT_TRUE(core::check_input(d, env, store).accepted);
  env.handles = {h0};
  auto check = core::check_input(d, env, store);
  EXPECT_FALSE(check.accepted);
  EXPECT_EQ(check.reason, "missing input of kind k1; unexpected kind k0");
  env.handles = {h1};
  env.to_agent = "c";
  EXPECT_FALSE(core::check_input(d, env, store).accepted);
}

TEST(ModelPlanner, UsesModelChoiceAndFallsBack) {
  auto g = docflow::testing::scripted({docflow::testing::rule("supervisor", "ATTACH: k0\nMESSAGE: take this"),
                                       docflow::testing::always("supervisor", "no structure at all")});
  Pipeline p;
  auto planner = std::make_shared<core::ModelPlanner>(*g);
  auto r = p.run(planner);
  EXPECT_EQ(r.status, SessionStatus::done);
  EXPECT_EQ(p.a->received[0].text, "take this");
  EXPECT_EQ(p.b->received[0].text.rfind("Step 2 of 3 for b.", 0), 0u);
  EXPECT_EQ(g->tap().count_role("supervisor"), 3u);
}
