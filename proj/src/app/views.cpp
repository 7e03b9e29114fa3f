#include "docflow/app/views.hpp"

#include "docflow/common/errors.hpp"

#include <json.hpp>

namespace docflow::app {

using nlohmann::json;

namespace {

const store::DocumentRecord& find_document(const store::Snapshot& snapshot, const std::string& doc_id) {
  const auto* doc = snapshot.find(doc_id);
  if (!doc) {
    std::vector<std::string> ids;
    for (const auto& [id, d] : snapshot.documents) ids.push_back(id);
    throw NotFoundError("no document '" + doc_id + "'", std::move(ids));
  }
  return *doc;
}

json version_summary(const store::VersionRecord& v) {
  return {{"version_no", v.version_no},
          {"timestamp", text::format_utc(v.timestamp)},
          {"metadata", v.metadata},
          {"content_hash", v.content_hash()},
          {"length", v.body.size()}};
}

}  // namespace

std::string ingest_json(const store::IngestOutcome& outcome) {
  return json{{"doc_id", outcome.version->doc_id},
              {"version_no", outcome.version->version_no},
              {"created", outcome.created},
              {"notice", outcome.notice}}
      .dump();
}

std::string documents_json(const store::Snapshot& snapshot) {
  json docs = json::array();
  for (const auto& [id, d] : snapshot.documents) {
    docs.push_back({{"doc_id", id},
                    {"title", d.title},
                    {"version_count", d.versions.size()},
                    {"latest_version", d.latest().version_no},
                    {"latest_timestamp", text::format_utc(d.latest().timestamp)}});
  }
  return json{{"documents", docs}}.dump();
}

std::string versions_json(const store::Snapshot& snapshot, const std::string& doc_id) {
  const auto& doc = find_document(snapshot, doc_id);
  json versions = json::array();
  for (const auto& v : doc.versions) versions.push_back(version_summary(*v));
  return json{{"doc_id", doc.doc_id}, {"title", doc.title}, {"versions", versions}}.dump();
}

std::string version_json(const store::Snapshot& snapshot, const std::string& doc_id, int version_no) {
  const auto& doc = find_document(snapshot, doc_id);
  for (const auto& v : doc.versions) {
    if (v->version_no != version_no) continue;
    json j = version_summary(*v);
    j["doc_id"] = doc.doc_id;
    j["title"] = doc.title;
    j["body"] = v->body;
    return j.dump();
  }
  std::vector<std::string> known;
  for (const auto& v : doc.versions) known.push_back(std::to_string(v->version_no));
  throw NotFoundError("document '" + doc_id + "' has no version " + std::to_string(version_no), std::move(known));
}

std::string artifact_url(const std::string& artifact_id) { return "/api/v1/artifacts/" + artifact_id; }

std::string job_json(const JobRecord& record) {
  json j = json::parse(record.to_json());
  json downloads = json::array();
  for (const auto& o : record.outputs) {
    downloads.push_back({{"artifact_id", o.artifact_id}, {"name", o.name}, {"kind", o.kind}, {"url", artifact_url(o.artifact_id)}});
  }
  j["downloads"] = downloads;
  return j.dump();
}

}  // namespace docflow::app
