#include "docflow/app/http_service.hpp"

#include "docflow/app/error_mapping.hpp"
#include "docflow/app/views.hpp"
#include "docflow/common/errors.hpp"
#include "docflow/common/text.hpp"
#include "docflow/model/gateway.hpp"

#include <httplib.h>
#include <json.hpp>
#include <openssl/evp.h>

#include <cctype>
#include <functional>
#include <thread>

namespace docflow::app {

using nlohmann::json;

namespace {

const core::ArtifactKind kUploadKind{"upload"};
constexpr const char* kJson = "application/json";

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) throw ValidationError("request body must be a JSON object");
  json j = json::parse(req.body);
  if (!j.is_object()) throw ValidationError("request body must be a JSON object");
  return j;
}

std::string required_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) throw ValidationError(std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

std::string optional_string(const json& j, const char* key, std::string fallback = {}) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  if (!it->is_string()) throw ValidationError(std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

std::map<std::string, std::string> string_map(const json& j, const char* key) {
  std::map<std::string, std::string> out;
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return out;
  if (!it->is_object()) throw ValidationError(std::string("field '") + key + "' must be an object of strings");
  for (const auto& [k, v] : it->items()) {
    if (!v.is_string()) throw ValidationError(std::string("field '") + key + "." + k + "' must be a string");
    out[k] = v.get<std::string>();
  }
  return out;
}

std::string content_type_for(const std::string& name) {
  auto ends_with = [&](std::string_view suffix) {
    return name.size() >= suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  if (ends_with(".csv")) return "text/csv; charset=utf-8";
  if (ends_with(".xlsx")) return "application/vnd.openxmlformats-officedocument.spreadsheetml.sheet";
  if (ends_with(".md")) return "text/markdown; charset=utf-8";
  if (ends_with(".json")) return "application/json";
  return "application/octet-stream";
}

void send_error(httplib::Response& res, const ErrorInfo& info) {
  res.status = info.http_status;
  res.set_content(info.to_json(), kJson);
}

}  // namespace

std::string decode_base64(std::string_view encoded) {
  std::string clean;
  clean.reserve(encoded.size());
  for (char c : encoded) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '+' && c != '/' && c != '=') {
      throw ValidationError("invalid base64 character");
    }
    clean += c;
  }
  if (clean.size() % 4 != 0) throw ValidationError("base64 length must be a multiple of 4");
  std::size_t pad = 0;
  while (pad < clean.size() && pad < 2 && clean[clean.size() - 1 - pad] == '=') ++pad;
  if (clean.find('=') < clean.size() - pad) throw ValidationError("misplaced base64 padding");
  std::string out(clean.size() / 4 * 3, '\0');
  int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                          reinterpret_cast<const unsigned char*>(clean.data()), static_cast<int>(clean.size()));
  if (n < 0) throw ValidationError("invalid base64");
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

struct HttpService::Impl {
  model::Gateway& gateway;
  store::DocumentStore& store;
  core::ArtifactStore& artifacts;
  JobManager& jobs;
  retrieval::RetrievalOptions options;
  httplib::Server server;
  std::thread thread;
  bool bound = false;

  Impl(model::Gateway& g, store::DocumentStore& s, core::ArtifactStore& a, JobManager& j,
       retrieval::RetrievalOptions o)
      : gateway(g), store(s), artifacts(a), jobs(j), options(o) {}

  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  static httplib::Server::Handler guard(Handler h) {
    return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
      try {
        h(req, res);
      } catch (const std::exception& e) {
        send_error(res, classify(e));
      }
    };
  }

  void routes() {
    server.Get("/api/v1/health", guard([this](const httplib::Request&, httplib::Response& res) {
                 json j = {{"status", "ok"},
                           {"documents", store.document_count()},
                           {"chunks", store.chunk_count()},
                           {"jobs", jobs.list().size()}};
                 res.set_content(j.dump(), kJson);
               }));

    server.Post("/api/v1/documents", guard([this](const httplib::Request& req, httplib::Response& res) {
                  json j = parse_body(req);
                  std::string ts = optional_string(j, "timestamp");
                  auto outcome = store.ingest_version(required_string(j, "doc_id"), optional_string(j, "title"),
                                                      required_string(j, "body"), string_map(j, "metadata"),
                                                      ts.empty() ? text::now_utc() : text::parse_utc(ts));
                  res.status = outcome.created ? 201 : 200;
                  res.set_content(ingest_json(outcome), kJson);
                }));

    server.Get("/api/v1/documents", guard([this](const httplib::Request&, httplib::Response& res) {
                 res.set_content(documents_json(*store.snapshot()), kJson);
               }));

    server.Get(R"(/api/v1/documents/([^/]+)/versions)",
               guard([this](const httplib::Request& req, httplib::Response& res) {
                 res.set_content(versions_json(*store.snapshot(), req.matches[1]), kJson);
               }));

    server.Get(R"(/api/v1/documents/([^/]+)/versions/(\d+))",
               guard([this](const httplib::Request& req, httplib::Response& res) {
                 int n = 0;
                 try {
                   n = std::stoi(req.matches[2]);
                 } catch (const std::exception&) {
                   throw ValidationError("version number out of range");
                 }
                 res.set_content(version_json(*store.snapshot(), req.matches[1], n), kJson);
               }));

    server.Post("/api/v1/query", guard([this](const httplib::Request& req, httplib::Response& res) {
                  json j = parse_body(req);
                  std::string mode = text::to_lower(optional_string(j, "mode", "auto"));
                  std::optional<retrieval::UseCase> forced;
                  if (mode != "auto") forced = retrieval::parse_use_case(mode);
                  auto outcome =
                      retrieval::answer_query(gateway, store, required_string(j, "text"), forced, options);
                  res.set_content(outcome.to_json(), kJson);
                }));

    server.Post("/api/v1/uploads", guard([this](const httplib::Request& req, httplib::Response& res) {
                  json j = parse_body(req);
                  std::string name = optional_string(j, "name", "upload.md");
                  auto h = artifacts.put(kUploadKind, required_string(j, "content"), "http", name);
                  res.status = 201;
                  res.set_content(json{{"upload_id", h.id}, {"name", h.name}, {"url", artifact_url(h.id)}}.dump(),
                                  kJson);
                }));

    server.Post("/api/v1/scenario-jobs", guard([this](const httplib::Request& req, httplib::Response& res) {
                  json j = parse_body(req);
                  ScenarioJobRequest r;
                  std::string upload = optional_string(j, "upload_id");
                  if (!upload.empty()) {
                    auto h = artifacts.find(upload);
                    if (!h || h->kind != kUploadKind) throw NotFoundError("no upload '" + upload + "'");
                    r.fsd_text = artifacts.get(*h);
                    if (!h->name.empty()) r.source_name = h->name;
                  } else {
                    r.fsd_text = required_string(j, "fsd_text");
                  }
                  r.prompt = optional_string(j, "prompt");
                  r.section = optional_string(j, "section");
                  r.target_language = optional_string(j, "target_language");
                  r.source_name = optional_string(j, "source_name", r.source_name);
                  for (auto& [ref, b64] : string_map(j, "images")) r.images[ref] = decode_base64(b64);
                  auto record = jobs.submit(std::move(r));
                  res.status = 202;
                  res.set_content(job_json(record), kJson);
                }));

    server.Get("/api/v1/scenario-jobs", guard([this](const httplib::Request&, httplib::Response& res) {
                 json list = json::array();
                 for (const auto& r : jobs.list()) list.push_back(json::parse(job_json(r)));
                 res.set_content(json{{"jobs", list}}.dump(), kJson);
               }));

    server.Get(R"(/api/v1/scenario-jobs/([^/]+))",
               guard([this](const httplib::Request& req, httplib::Response& res) {
                 res.set_content(job_json(jobs.get(req.matches[1].str())), kJson);
               }));

    server.Get(R"(/api/v1/artifacts/([0-9a-f]+))",
               guard([this](const httplib::Request& req, httplib::Response& res) {
                 std::string id = req.matches[1];
                 auto h = artifacts.find(id);
                 if (!h) throw NotFoundError("no artifact '" + id + "'");
                 std::string name = h->name.empty() ? id : h->name;
                 res.set_header("Content-Disposition", "attachment; filename=\"" + name + "\"");
                 res.set_content(artifacts.get(*h), content_type_for(name));
               }));

    server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
      if (!res.body.empty()) return;
      ErrorInfo info;
      info.http_status = res.status;
      if (res.status == 404) {
        info.code = "not_found";
        info.message = "no route for " + req.method + " " + req.path;
      } else if (res.status >= 400 && res.status < 500) {
        info.code = "validation_error";
        info.message = "bad request";
      } else {
        info.code = "internal_error";
        info.message = "internal error";
      }
      res.set_content(info.to_json(), kJson);
    });

    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        send_error(res, classify(e));
      } catch (...) {
        send_error(res, {500, "internal_error", "unknown failure", {}});
      }
    });
  }
};

HttpService::HttpService(model::Gateway& gateway, store::DocumentStore& store, core::ArtifactStore& artifacts,
                         JobManager& jobs, retrieval::RetrievalOptions options,
                         std::optional<std::filesystem::path> static_dir)
    : impl_(std::make_unique<Impl>(gateway, store, artifacts, jobs, options)) {
  impl_->routes();
  if (static_dir && !impl_->server.set_mount_point("/", static_dir->string())) {
    throw ValidationError("static directory '" + static_dir->string() + "' does not exist");
  }
}

HttpService::~HttpService() { stop(); }

int HttpService::bind(const std::string& host, int port) {
  int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
  impl_->bound = true;
  return bound;
}

void HttpService::listen() {
  if (!impl_->bound) throw Error("listen() before bind()");
  impl_->server.listen_after_bind();
}

void HttpService::start() {
  if (!impl_->bound) throw Error("start() before bind()");
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void HttpService::stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace docflow::app
