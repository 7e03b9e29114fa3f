#include "docflow/app/config.hpp"

#include "docflow/common/errors.hpp"
#include "docflow/common/text.hpp"
#include "docflow/model/http_backend.hpp"
#include "docflow/model/scripted_backend.hpp"

#include <charconv>
#include <fstream>

namespace docflow::app {

namespace {

std::size_t parse_size(const std::string& key, const std::string& value, std::size_t min) {
  std::size_t out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || out < min) {
    throw ValidationError("config '" + key + "': expected an integer >= " + std::to_string(min) + ", got '" + value +
                          "'");
  }
  return out;
}

}  // namespace

void AppConfig::set(const std::string& key, const std::string& value) {
  if (key == "store.dir") {
    store_dir = value;
  } else if (key == "jobs.dir") {
    jobs_dir = value;
  } else if (key == "backend") {
    if (value != "scripted" && value != "http") {
      throw ValidationError("config 'backend': expected scripted or http, got '" + value + "'");
    }
    backend = value;
  } else if (key == "backend.script") {
    script = value;
  } else if (key == "embedder") {
    if (value != "hashing" && value != "http") {
      throw ValidationError("config 'embedder': expected hashing or http, got '" + value + "'");
    }
    embedder = value;
  } else if (key == "embedding.dim") {
    embedding_dim = parse_size(key, value, 1);
  } else if (key == "chunk.budget") {
    chunk_budget = parse_size(key, value, store::kMinChunkBudget);
  } else if (key == "search.top_k") {
    retrieval.search_top_k = parse_size(key, value, 1);
  } else if (key == "qa.top_k") {
    retrieval.qa_top_k = parse_size(key, value, 1);
  } else if (key == "trace.top_k") {
    retrieval.trace_top_k = parse_size(key, value, 1);
  } else if (key == "reading.block_budget") {
    retrieval.reading_block_budget = parse_size(key, value, store::kMinChunkBudget);
  } else if (key == "reading.notes_budget") {
    retrieval.notes_budget = parse_size(key, value, 100);
  } else if (key == "jobs.workers") {
    job_workers = parse_size(key, value, 1);
  } else if (key == "http.bind") {
    bind = value;
  } else if (key == "http.port") {
    port = static_cast<int>(parse_size(key, value, 0));
    if (port > 65535) throw ValidationError("config 'http.port': out of range");
  } else if (key == "http.static_dir") {
    static_dir = value;
  } else {
    throw ValidationError("unknown config key '" + key + "'");
  }
}

AppConfig AppConfig::parse(std::istream& in, const std::string& source_name) {
  AppConfig c;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    std::string_view body = text::trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw ValidationError(source_name + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    std::string key = text::trim_copy(body.substr(0, eq));
    std::string value = text::trim_copy(body.substr(eq + 1));
    try {
      c.set(key, value);
    } catch (const ValidationError& e) {
      throw ValidationError(source_name + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return c;
}

AppConfig AppConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config file '" + path.string() + "'");
  return parse(in, path.string());
}

Services make_services(const AppConfig& config) {
  std::shared_ptr<model::ChatBackend> chat;
  if (config.backend == "http") {
    chat = std::make_shared<model::HttpChatBackend>(model::RemoteConfig::from_env());
  } else {
    std::vector<model::ScriptRule> rules;
    if (config.script) rules = model::ScriptedBackend::load_file(*config.script);
    chat = std::make_shared<model::ScriptedBackend>(std::move(rules));
  }

  std::shared_ptr<model::Embedder> embedder;
  if (config.embedder == "http") {
    auto remote = model::HttpEmbedder::config_from_env();
    if (!remote) throw ValidationError("embedder 'http' needs EMBED_ENDPOINT");
    embedder = std::make_shared<model::HttpEmbedder>(*remote);
  } else {
    embedder = std::make_shared<model::HashingEmbedder>(config.embedding_dim);
  }

  Services s;
  s.gateway = std::make_shared<model::Gateway>(chat, std::make_shared<model::StubCaptioner>(), embedder);
  store::StoreOptions store_options;
  store_options.chunk_budget = config.chunk_budget;
  store_options.directory = config.store_dir;
  s.store = std::make_unique<store::DocumentStore>(embedder, store_options);
  s.artifacts = config.jobs_dir ? std::make_unique<core::ArtifactStore>(*config.jobs_dir / "artifacts")
                                : std::make_unique<core::ArtifactStore>();
  s.retrieval = config.retrieval;
  return s;
}

}  // namespace docflow::app
