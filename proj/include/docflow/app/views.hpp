#pragma once

#include "docflow/app/jobs.hpp"
#include "docflow/store/document_store.hpp"

#include <string>

namespace docflow::app {

// JSON bodies shared by the HTTP API and the CLI's --json output.

// {doc_id, version_no, created, notice}
std::string ingest_json(const store::IngestOutcome& outcome);

// {documents: [{doc_id, title, version_count, latest_version, latest_timestamp}]}
std::string documents_json(const store::Snapshot& snapshot);

// {doc_id, title, versions: [{version_no, timestamp, metadata, content_hash, length}]}
// Throws NotFoundError with the known ids as candidates.
std::string versions_json(const store::Snapshot& snapshot, const std::string& doc_id);

// One version including its body. Throws NotFoundError.
std::string version_json(const store::Snapshot& snapshot, const std::string& doc_id, int version_no);

// JobRecord fields plus downloads: [{artifact_id, name, kind, url}].
std::string job_json(const JobRecord& record);

std::string artifact_url(const std::string& artifact_id);

}  // namespace docflow::app
