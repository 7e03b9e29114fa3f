#include "docflow/common/errors.hpp"
#include "docflow/model/embedding.hpp"
#include "docflow/model/gateway.hpp"
#include "docflow/model/scripted_backend.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <sstream>

using namespace docflow;
using docflow::testing::always;
using docflow::testing::rule;
using docflow::testing::scripted;

namespace {

// Reference FNV-1a 64 written from the published constants.
std::uint64_t reference_fnv(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

class FlakyBackend : public model::ChatBackend {
 public:
  explicit FlakyBackend(int failures) : failures_(failures) {}
  std::string complete(const model::ChatRequest&) override {
    if (calls_++ < failures_) throw TransportError("connection reset");
    return "ok";
  }
  int calls() const { return calls_; }

 private:
  int failures_;
  int calls_ = 0;
};

}  // namespace

TEST(ScriptedBackend, FirstUnconsumedMatchingRuleWins) {
  auto g = scripted({rule("writer", "first"), rule("writer", "second"), rule("checker", "verdict")});
  EXPECT_EQ(g->complete(model::single_turn("writer", "", "x")), "first");
  EXPECT_EQ(g->complete(model::single_turn("checker", "", "x")), "verdict");
  EXPECT_EQ(g->complete(model::single_turn("writer", "", "x")), "second");
  EXPECT_EQ(g.backend->remaining("writer"), 0u);
}

TEST(ScriptedBackend, ExhaustionNamesTheRole) {
  auto g = scripted({rule("writer", "only")});
  g->complete(model::single_turn("writer", "", "x"));
  try {
    g->complete(model::single_turn("writer", "", "x"));
    FAIL() << "expected ScriptExhaustedError";
  } catch (const ScriptExhaustedError& e) {
    EXPECT_EQ(std::string(e.what()), "script exhausted for role 'writer'");
  }
}

TEST(ScriptedBackend, PatternsCapturesAndWildcardRole) {
  auto g = scripted({always("qa-answer", "ANSWER: {{1}} days", "after (\\d+) days"),
                     always("*", "echo: {{input}}")});
  EXPECT_EQ(g->complete(model::single_turn("qa-answer", "", "locked after 30 days")), "ANSWER: 30 days");
  EXPECT_EQ(g->complete(model::single_turn("qa-answer", "", "no digits")), "echo: no digits");
  EXPECT_EQ(g->complete(model::single_turn("anything", "", "hi")), "echo: hi");
}

TEST(ScriptedBackend, ParsesJsonlSkippingCommentsAndBlankLines) {
  std::istringstream in(
      "# demo\n"
      "\n"
      "{\"role\": \"writer\", \"match\": \"Password\", \"reply\": \"r1\", \"repeat\": true}\n"
      "{\"role\": \"*\", \"reply\": \"r2\"}\n");
  auto rules = model::ScriptedBackend::parse_jsonl(in);
  ASSERT_EQ(rules.size(), 2u);
  EXPECT_EQ(rules[0].role, "writer");
  EXPECT_EQ(rules[0].match, "Password");
  EXPECT_TRUE(rules[0].repeat);
  EXPECT_FALSE(rules[1].match.has_value());

  std::istringstream bad("{\"role\": \"writer\"}\n");
  EXPECT_THROW(model::ScriptedBackend::parse_jsonl(bad), ValidationError);
}

TEST(Gateway, RetriesTransportErrorsWithExponentialBackoff) {
  auto flaky = std::make_shared<FlakyBackend>(2);
  model::Gateway gw(flaky, std::make_shared<model::StubCaptioner>(), std::make_shared<model::HashingEmbedder>());
  std::vector<long> sleeps;
  gw.set_sleeper([&](std::chrono::milliseconds d) { sleeps.push_back(static_cast<long>(d.count())); });
  EXPECT_EQ(gw.complete(model::single_turn("writer", "", "x")), "ok");
  EXPECT_EQ(sleeps, (std::vector<long>{250, 500}));
  EXPECT_EQ(gw.tap().size(), 3u);
}

TEST(Gateway, GivesUpAfterMaxRetries) {
  auto flaky = std::make_shared<FlakyBackend>(100);
  model::Gateway gw(flaky, std::make_shared<model::StubCaptioner>(), std::make_shared<model::HashingEmbedder>());
  std::vector<long> sleeps;
  gw.set_sleeper([&](std::chrono::milliseconds d) { sleeps.push_back(static_cast<long>(d.count())); });
  EXPECT_THROW(gw.complete(model::single_turn("writer", "", "x")), TransportError);
  EXPECT_EQ(flaky->calls(), 4);
  EXPECT_EQ(sleeps, (std::vector<long>{250, 500, 1000}));
}

TEST(Gateway, EmptyReplyIsAProtocolError) {
  auto g = scripted({rule("writer", "   ")});
  EXPECT_THROW(g->complete(model::single_turn("writer", "", "x")), ProtocolError);
}

TEST(Gateway, RejectsMalformedRequests) {
  auto g = scripted({});
  model::ChatRequest req;
  req.role = "writer";
  EXPECT_THROW(g->complete(req), ValidationError);
  req.turns.push_back({model::Speaker::assistant, "hi"});
  EXPECT_THROW(g->complete(req), ValidationError);
}

TEST(Gateway, TapRecordsRoleAndPrivateContext) {
  auto g = scripted({always("writer", "done")});
  g->complete(model::single_turn("writer", "role prompt", "user text"));
  g->caption_image("\x89PNG fake");
  auto records = g->tap().records();
  ASSERT_EQ(records.size(), 2u);
  EXPECT_EQ(records[0].request.role, "writer");
  EXPECT_EQ(records[0].request.flatten(), "role prompt\nuser text");
  EXPECT_EQ(records[0].response, "done");
  EXPECT_EQ(records[1].kind, model::TapRecord::Kind::caption);
  EXPECT_EQ(g->tap().count_role("writer"), 1u);
}

TEST(StubCaptioner, IsDeterministicPerImage) {
  model::StubCaptioner c;
  EXPECT_EQ(c.caption("abc"), "IMAGE(ba7816bf)");
  EXPECT_NE(c.caption("abd"), c.caption("abc"));
}

TEST(Embedding, Fnv1aMatchesPublishedVectors) {
  EXPECT_EQ(model::fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(model::fnv1a64("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(model::fnv1a64("foobar"), 0x85944171f73967e8ull);
  EXPECT_EQ(model::fnv1a64("password"), reference_fnv("password"));
}

TEST(Embedding, TokenizerLowercasesAlnumRuns) {
  EXPECT_EQ(model::HashingEmbedder::tokenize("Password-Reset, 30 min! \xC3\xA4nd"),
            (std::vector<std::string>{"password", "reset", "30", "min", "\xC3\xA4nd"}));
}

TEST(Embedding, HashingVectorMatchesCountOracle) {
  model::HashingEmbedder e;
  auto v = e.embed("Password password LOGIN");
  ASSERT_EQ(v.dimension(), 256u);
  std::map<std::size_t, double> counts;
  counts[reference_fnv("password") % 256] += 2;
  counts[reference_fnv("login") % 256] += 1;
  double norm = 0;
  for (auto& [b, c] : counts) norm += c * c;
  norm = std::sqrt(norm);
  for (std::size_t i = 0; i < 256; ++i) {
    double expected = counts.count(i) ? counts[i] / norm : 0.0;
    EXPECT_NEAR(v.components[i], expected, 1e-12) << "bucket " << i;
  }
  EXPECT_NEAR(v.norm(), 1.0, 1e-12);
}

TEST(Embedding, PunctuationOnlyTextStillGetsAUnitVector) {
  model::HashingEmbedder e;
  auto v = e.embed("?!");
  EXPECT_NEAR(v.norm(), 1.0, 1e-12);
  EXPECT_EQ(v.components[reference_fnv("?!") % 256], 1.0);
}

TEST(Embedding, CosineAndDimensionChecks) {
  model::EmbeddingVector a{{1, 0, 0}};
  model::EmbeddingVector b{{1, 1, 0}};
  EXPECT_NEAR(model::cosine(a, b), 1 / std::sqrt(2.0), 1e-12);
  EXPECT_THROW(model::dot(a, model::EmbeddingVector{{1, 0}}), ValidationError);
}
