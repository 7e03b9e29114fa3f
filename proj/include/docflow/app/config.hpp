#pragma once

#include "docflow/core/artifact.hpp"
#include "docflow/model/gateway.hpp"
#include "docflow/retrieval/agents.hpp"
#include "docflow/store/document_store.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>

namespace docflow::app {

// Settings shared by the CLI and the HTTP service. The file format is one
// "key = value" per line; '#' starts a comment.
//
//   store.dir              document store directory (unset: in memory)
//   jobs.dir               job records and artifacts (unset: in memory)
//   backend                scripted | http
//   backend.script         JSONL script for the scripted backend
//   embedder               hashing | http
//   embedding.dim          hashing embedder dimension
//   chunk.budget           document store chunk budget
//   search.top_k, qa.top_k, trace.top_k
//   reading.block_budget, reading.notes_budget
//   jobs.workers           scenario job worker threads
//   http.bind, http.port, http.static_dir
struct AppConfig {
  std::optional<std::filesystem::path> store_dir;
  std::optional<std::filesystem::path> jobs_dir;
  std::string backend = "scripted";
  std::optional<std::filesystem::path> script;
  std::string embedder = "hashing";
  std::size_t embedding_dim = model::HashingEmbedder::kDefaultDimension;
  std::size_t chunk_budget = store::kDefaultChunkBudget;
  retrieval::RetrievalOptions retrieval;
  std::size_t job_workers = 2;
  std::string bind = "127.0.0.1";
  int port = 8080;
  std::optional<std::filesystem::path> static_dir;

  // Throws ValidationError for unknown keys or malformed values.
  void set(const std::string& key, const std::string& value);

  static AppConfig parse(std::istream& in, const std::string& source_name = "config");
  static AppConfig load(const std::filesystem::path& path);
};

// Long-lived objects built from a config.
struct Services {
  std::shared_ptr<model::Gateway> gateway;
  std::unique_ptr<store::DocumentStore> store;
  std::unique_ptr<core::ArtifactStore> artifacts;
  retrieval::RetrievalOptions retrieval;
};

// Relative paths in the config are taken as given (relative to the working
// directory). The http backend reads MODEL_ENDPOINT, MODEL_API_KEY and
// MODEL_NAME; the http embedder reads EMBED_ENDPOINT.
Services make_services(const AppConfig& config);

}  // namespace docflow::app
