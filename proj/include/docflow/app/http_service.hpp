#pragma once

#include "docflow/app/jobs.hpp"
#include "docflow/core/artifact.hpp"
#include "docflow/retrieval/agents.hpp"
#include "docflow/store/document_store.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace docflow::model {
class Gateway;
}

namespace docflow::app {

// JSON API under /api/v1. Every response body is JSON except artifact
// downloads; errors are {code, message, candidates?}.
//
//   GET  /api/v1/health
//   POST /api/v1/documents                      {doc_id, title?, body, metadata?, timestamp?}
//   GET  /api/v1/documents
//   GET  /api/v1/documents/{id}/versions
//   GET  /api/v1/documents/{id}/versions/{n}
//   POST /api/v1/query                          {text, mode?: auto|search|qa|trace|read}
//   POST /api/v1/uploads                        {content, name?}
//   POST /api/v1/scenario-jobs                  {fsd_text | upload_id, prompt?, section?,
//                                                target_language?, source_name?, images?: {ref: base64}}
//   GET  /api/v1/scenario-jobs
//   GET  /api/v1/scenario-jobs/{id}
//   GET  /api/v1/artifacts/{id}                 raw bytes
class HttpService {
 public:
  HttpService(model::Gateway& gateway, store::DocumentStore& store, core::ArtifactStore& artifacts, JobManager& jobs,
              retrieval::RetrievalOptions options = {}, std::optional<std::filesystem::path> static_dir = std::nullopt);
  ~HttpService();

  HttpService(const HttpService&) = delete;
  HttpService& operator=(const HttpService&) = delete;

  // Port 0 picks a free port. Returns the bound port; throws Error on failure.
  int bind(const std::string& host, int port);

  // Serves until stop(). Requires bind().
  void listen();

  // listen() on a background thread.
  void start();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Standard alphabet, padding required, whitespace ignored. Throws ValidationError.
std::string decode_base64(std::string_view encoded);

}  // namespace docflow::app
