#include "docflow/app/http_service.hpp"
#include "docflow/app/jobs.hpp"
#include "docflow/common/errors.hpp"
#include "docflow/model/http_backend.hpp"
#include "docflow/retrieval/agents.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>
#include <httplib.h>
#include <json.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <thread>

using namespace docflow;
using namespace docflow::app;
using docflow::testing::always;
using nlohmann::json;

namespace {

std::string encode_base64(const std::string& bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3) + 1, '\0');
  int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                          reinterpret_cast<const unsigned char*>(bytes.data()), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<model::ScriptRule> service_rules() {
  auto rules = model::ScriptedBackend::load_file(docflow::testing::data_dir() / "scripts/scenario_demo.jsonl");
  auto retrieval = model::ScriptedBackend::load_file(docflow::testing::data_dir() / "scripts/retrieval_demo.jsonl");
  rules.insert(rules.end(), retrieval.begin(), retrieval.end());
  return rules;
}

class Service {
 public:
  explicit Service(std::optional<std::filesystem::path> jobs_dir = std::nullopt)
      : gateway_(docflow::testing::scripted(service_rules())),
        store_(std::make_shared<model::HashingEmbedder>()),
        artifacts_(jobs_dir ? std::make_unique<core::ArtifactStore>(*jobs_dir / "artifacts")
                            : std::make_unique<core::ArtifactStore>()),
        jobs_(*gateway_, *artifacts_, jobs_dir),
        http_(*gateway_, store_, *artifacts_, jobs_) {
    port_ = http_.bind("127.0.0.1", 0);
    http_.start();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    client_->set_read_timeout(30, 0);
  }

  ~Service() {
    jobs_.wait_idle();
    http_.stop();
  }

  httplib::Client& client() { return *client_; }
  store::DocumentStore& store() { return store_; }
  JobManager& jobs() { return jobs_; }
  model::Gateway& gateway() { return *gateway_; }

  httplib::Result post(const std::string& path, const json& body) {
    return client_->Post(path, body.dump(), "application/json");
  }

  json wait_for_job(const std::string& id) {
    for (int i = 0; i < 500; ++i) {
      auto res = client_->Get("/api/v1/scenario-jobs/" + id);
      auto j = json::parse(res->body);
      if (j["status"] == "done" || j["status"] == "aborted") return j;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    return nullptr;
  }

 private:
  docflow::testing::ScriptedGateway gateway_;
  store::DocumentStore store_;
  std::unique_ptr<core::ArtifactStore> artifacts_;
  JobManager jobs_;
  HttpService http_;
  int port_ = 0;
  std::unique_ptr<httplib::Client> client_;
};

void expect_error_body(const httplib::Result& res, int status, const std::string& code) {
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, status);
  EXPECT_NE(res->get_header_value("Content-Type").find("application/json"), std::string::npos);
  auto j = json::parse(res->body);
  EXPECT_EQ(j["code"], code) << res->body;
  EXPECT_TRUE(j["message"].is_string());
  EXPECT_FALSE(j["message"].get<std::string>().empty());
}

json scenario_body() {
  return {{"fsd_text", docflow::testing::read_file(docflow::testing::data_dir() / "sample_fsd.md")},
          {"section", "Password"},
          {"images",
           {{"images/login_form.png",
             encode_base64(docflow::testing::read_file(docflow::testing::data_dir() / "images/login_form.png"))}}}};
}

}  // namespace

TEST(HttpService, HealthAndUnknownRoutes) {
  Service s;
  auto res = s.client().Get("/api/v1/health");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(json::parse(res->body)["status"], "ok");
  expect_error_body(s.client().Get("/api/v1/nothing-here"), 404, "not_found");
  expect_error_body(s.client().Get("/"), 404, "not_found");
}

TEST(HttpService, IngestListAndVersions) {
  Service s;
  json body = {{"doc_id", "login"},
               {"title", "Login"},
               {"body", "The password must have at least 8 characters."},
               {"metadata", {{"doc_type", "spec"}}},
               {"timestamp", "2024-01-01T00:00:00Z"}};
  auto res = s.post("/api/v1/documents", body);
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 201);
  auto j = json::parse(res->body);
  EXPECT_EQ(j["version_no"], 1);
  EXPECT_EQ(j["created"], true);

  res = s.post("/api/v1/documents", body);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(json::parse(res->body)["created"], false);
  EXPECT_FALSE(json::parse(res->body)["notice"].get<std::string>().empty());

  body["body"] = "The password must have at least 12 characters.";
  body["timestamp"] = "2024-02-01T00:00:00Z";
  EXPECT_EQ(json::parse(s.post("/api/v1/documents", body)->body)["version_no"], 2);

  auto docs = json::parse(s.client().Get("/api/v1/documents")->body);
  EXPECT_EQ(docs["documents"][0]["version_count"], 2);

  auto versions = json::parse(s.client().Get("/api/v1/documents/login/versions")->body);
  ASSERT_EQ(versions["versions"].size(), 2u);
  EXPECT_EQ(versions["versions"][1]["timestamp"], "2024-02-01T00:00:00Z");
  auto v1 = json::parse(s.client().Get("/api/v1/documents/login/versions/1")->body);
  EXPECT_EQ(v1["body"], "The password must have at least 8 characters.");

  auto missing = s.client().Get("/api/v1/documents/logout/versions");
  expect_error_body(missing, 404, "not_found");
  EXPECT_EQ(json::parse(missing->body)["candidates"], json::array({"login"}));
  expect_error_body(s.client().Get("/api/v1/documents/login/versions/9"), 404, "not_found");
}

TEST(HttpService, ValidationErrors) {
  Service s;
  expect_error_body(s.client().Post("/api/v1/documents", "{not json", "application/json"), 400, "validation_error");
  expect_error_body(s.client().Post("/api/v1/documents", "[1,2]", "application/json"), 400, "validation_error");
  expect_error_body(s.post("/api/v1/documents", {{"doc_id", "x"}}), 400, "validation_error");
  expect_error_body(s.post("/api/v1/documents", {{"doc_id", "x"}, {"body", 5}}), 400, "validation_error");
  expect_error_body(s.post("/api/v1/documents", {{"doc_id", "x"}, {"body", "b"}, {"timestamp", "yesterday"}}), 400,
                    "validation_error");
  expect_error_body(s.post("/api/v1/query", {{"text", ""}, {"mode", "qa"}}), 400, "validation_error");
  expect_error_body(s.post("/api/v1/query", {{"text", "x"}, {"mode", "poetry"}}), 400, "validation_error");
  expect_error_body(s.post("/api/v1/scenario-jobs", {{"section", "Password"}}), 400, "validation_error");
  expect_error_body(s.post("/api/v1/scenario-jobs", {{"fsd_text", "# A\ntext"}, {"section", "A"}, {"images", {{"a.png", "%%"}}}}),
                    400, "validation_error");
  expect_error_body(s.post("/api/v1/scenario-jobs", {{"upload_id", "ffff"}, {"section", "A"}}), 404, "not_found");
  expect_error_body(s.client().Get("/api/v1/scenario-jobs/job-424242"), 404, "not_found");
  expect_error_body(s.client().Get("/api/v1/artifacts/abcdef"), 404, "not_found");
}

TEST(HttpService, QaOnEmptyStoreIsUnanswerable) {
  Service s;
  auto res = s.post("/api/v1/query", {{"text", "What is the minimum password length?"}, {"mode", "qa"}});
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  auto j = json::parse(res->body);
  EXPECT_EQ(j["qa"]["answerable"], false);
  EXPECT_EQ(j["qa"]["answer"], retrieval::kCannotAnswer);
  EXPECT_EQ(j["plan"]["use_cases"], json::array({"qa"}));
}

TEST(HttpService, QueryModesReturnReports) {
  Service s;
  ingest_corpus(s.store(), docflow::testing::data_dir() / "corpus");

  auto trace = json::parse(s.post("/api/v1/query", {{"text", "password requirement"}, {"mode", "trace"}})->body);
  ASSERT_TRUE(trace.contains("trace"));
  ASSERT_EQ(trace["trace"]["groups"].size(), 2u);
  EXPECT_EQ(trace["trace"]["groups"][0]["doc_id"], "login-spec");
  EXPECT_EQ(trace["trace"]["groups"][0]["entries"][1]["change_note"], "removed");

  auto qa = json::parse(s.post("/api/v1/query", {{"text", "What is the minimum password length?"}})->body);
  EXPECT_EQ(qa["plan"]["use_cases"], json::array({"qa"}));
  EXPECT_EQ(qa["qa"]["answerable"], true);
  EXPECT_FALSE(qa["qa"]["quotations"].empty());

  auto search = json::parse(s.post("/api/v1/query", {{"text", "find documents about payments"}})->body);
  EXPECT_EQ(search["plan"]["use_cases"], json::array({"search"}));
  ASSERT_FALSE(search["search"]["primary"].empty());
  EXPECT_EQ(search["search"]["primary"][0]["reference"]["doc_id"], "payments");

  auto reading =
      json::parse(s.post("/api/v1/query", {{"text", "read the Login specification"}, {"mode", "read"}})->body);
  EXPECT_EQ(reading["reading"]["doc_id"], "login-spec");
  EXPECT_EQ(reading["reading"]["notes"]["blocks_consumed"], 1);
}

TEST(HttpService, ScriptExhaustionIsABackendError) {
  docflow::testing::ScriptedGateway g = docflow::testing::scripted({});
  store::DocumentStore st(std::make_shared<model::HashingEmbedder>());
  core::ArtifactStore artifacts;
  JobManager jobs(*g, artifacts);
  HttpService http(*g, st, artifacts, jobs);
  int port = http.bind("127.0.0.1", 0);
  http.start();
  httplib::Client c("127.0.0.1", port);
  expect_error_body(c.Post("/api/v1/query", json{{"text", "anything"}}.dump(), "application/json"), 502,
                    "backend_error");
  http.stop();
}

TEST(HttpService, ScenarioJobIsDownloadableAndDeterministic) {
  Service s;
  std::vector<std::string> csvs;
  for (int run = 0; run < 2; ++run) {
    auto res = s.post("/api/v1/scenario-jobs", scenario_body());
    ASSERT_TRUE(res);
    ASSERT_EQ(res->status, 202) << res->body;
    auto submitted = json::parse(res->body);
    EXPECT_EQ(submitted["status"], "queued");
    auto job = s.wait_for_job(submitted["job_id"]);
    ASSERT_FALSE(job.is_null());
    ASSERT_EQ(job["status"], "done") << job.dump();
    ASSERT_EQ(job["downloads"].size(), 2u);
    EXPECT_NE(job["final_text"].get<std::string>().find("Excel file"), std::string::npos);

    auto csv = s.client().Get(job["downloads"][0]["url"].get<std::string>());
    ASSERT_TRUE(csv);
    EXPECT_EQ(csv->status, 200);
    EXPECT_NE(csv->get_header_value("Content-Type").find("text/csv"), std::string::npos);
    EXPECT_NE(csv->get_header_value("Content-Disposition").find("scenario.csv"), std::string::npos);
    csvs.push_back(csv->body);

    auto xlsx = s.client().Get(job["downloads"][1]["url"].get<std::string>());
    EXPECT_EQ(xlsx->body.substr(0, 2), "PK");
  }
  EXPECT_EQ(csvs[0], csvs[1]);
  EXPECT_NE(csvs[0].find("Step No."), std::string::npos);

  auto list = json::parse(s.client().Get("/api/v1/scenario-jobs")->body);
  EXPECT_EQ(list["jobs"].size(), 2u);
}

TEST(HttpService, ScenarioJobFromUploadAndAbortedDiagnostics) {
  Service s;
  auto up = s.post("/api/v1/uploads",
                   {{"name", "sample_fsd.md"},
                    {"content", docflow::testing::read_file(docflow::testing::data_dir() / "sample_fsd.md")}});
  ASSERT_EQ(up->status, 201);
  std::string upload_id = json::parse(up->body)["upload_id"];

  auto body = scenario_body();
  body.erase("fsd_text");
  body["upload_id"] = upload_id;
  auto job = s.wait_for_job(json::parse(s.post("/api/v1/scenario-jobs", body)->body)["job_id"]);
  EXPECT_EQ(job["status"], "done");
  EXPECT_EQ(job["inputs"]["source_name"], "sample_fsd.md");

  body["section"] = "Refunds";
  auto aborted = s.wait_for_job(json::parse(s.post("/api/v1/scenario-jobs", body)->body)["job_id"]);
  EXPECT_EQ(aborted["status"], "aborted");
  EXPECT_TRUE(aborted["downloads"].empty());
  ASSERT_FALSE(aborted["diagnostics"].empty());
}

TEST(HttpService, JobRecordsPersistAcrossRestart) {
  docflow::testing::TempDir dir;
  std::string job_id;
  std::string url;
  {
    Service s(dir.path());
    job_id = json::parse(s.post("/api/v1/scenario-jobs", scenario_body())->body)["job_id"];
    auto job = s.wait_for_job(job_id);
    ASSERT_EQ(job["status"], "done");
    url = job["downloads"][0]["url"];
  }
  Service s(dir.path());
  auto job = json::parse(s.client().Get("/api/v1/scenario-jobs/" + job_id)->body);
  EXPECT_EQ(job["status"], "done");
  auto csv = s.client().Get(url);
  EXPECT_EQ(csv->status, 200);
  EXPECT_NE(csv->body.find("Step No."), std::string::npos);
}

TEST(HttpService, ServesStaticConsoleAssets) {
  docflow::testing::TempDir dir;
  {
    std::ofstream out(dir / "index.html");
    out << "<html>console</html>";
  }
  auto g = docflow::testing::scripted({});
  store::DocumentStore st(std::make_shared<model::HashingEmbedder>());
  core::ArtifactStore artifacts;
  JobManager jobs(*g, artifacts);
  HttpService http(*g, st, artifacts, jobs, {}, dir.path());
  int port = http.bind("127.0.0.1", 0);
  http.start();
  httplib::Client c("127.0.0.1", port);
  auto res = c.Get("/index.html");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->body, "<html>console</html>");
  EXPECT_EQ(c.Get("/api/v1/health")->status, 200);
  http.stop();
  EXPECT_THROW(HttpService(*g, st, artifacts, jobs, {}, dir / "missing"), ValidationError);
}

TEST(HttpChatBackend, TalksToAChatCompletionEndpoint) {
  httplib::Server fake;
  std::atomic<int> calls{0};
  json last_request;
  std::mutex mu;
  fake.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    int n = ++calls;
    {
      std::lock_guard lock(mu);
      last_request = json::parse(req.body);
    }
    if (req.get_header_value("Authorization") != "Bearer secret") {
      res.status = 401;
      return;
    }
    if (n == 1) {
      res.status = 503;
      return;
    }
    res.set_content(json{{"choices", {{{"message", {{"role", "assistant"}, {"content", "pong"}}}}}}}.dump(),
                    "application/json");
  });
  fake.Post("/v1/embeddings", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content(json{{"data", {{{"embedding", {3.0, 4.0}}}}}}.dump(), "application/json");
  });
  int port = fake.bind_to_any_port("127.0.0.1");
  std::thread t([&] { fake.listen_after_bind(); });
  fake.wait_until_ready();

  model::RemoteConfig cfg;
  cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  cfg.api_key = "secret";
  cfg.model = "test-model";
  model::Gateway gw(std::make_shared<model::HttpChatBackend>(cfg), std::make_shared<model::StubCaptioner>(),
                    std::make_shared<model::HashingEmbedder>());
  gw.set_sleeper([](std::chrono::milliseconds) {});
  EXPECT_EQ(gw.complete(model::single_turn("writer", "Be brief.", "ping")), "pong");
  EXPECT_EQ(calls.load(), 2);
  {
    std::lock_guard lock(mu);
    EXPECT_EQ(last_request["model"], "test-model");
    ASSERT_EQ(last_request["messages"].size(), 2u);
    EXPECT_EQ(last_request["messages"][0]["role"], "system");
    EXPECT_EQ(last_request["messages"][1]["content"], "ping");
  }

  cfg.api_key = "wrong";
  model::HttpChatBackend bad(cfg);
  EXPECT_THROW(bad.complete(model::single_turn("writer", "p", "ping")), ProtocolError);

  model::RemoteConfig ecfg = cfg;
  ecfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/embeddings";
  model::HttpEmbedder embedder(ecfg);
  auto v = embedder.embed("anything");
  ASSERT_EQ(v.dimension(), 2u);
  EXPECT_NEAR(v.components[0], 0.6, 1e-12);
  EXPECT_NEAR(v.components[1], 0.8, 1e-12);

  fake.stop();
  t.join();

  model::HttpChatBackend unreachable(cfg);
  EXPECT_THROW(unreachable.complete(model::single_turn("writer", "p", "ping")), TransportError);
}
