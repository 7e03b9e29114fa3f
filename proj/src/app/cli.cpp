#include "docflow/app/cli.hpp"

#include "docflow/app/config.hpp"
#include "docflow/app/error_mapping.hpp"
#include "docflow/app/http_service.hpp"
#include "docflow/app/jobs.hpp"
#include "docflow/app/views.hpp"
#include "docflow/common/errors.hpp"
#include "docflow/common/text.hpp"
#include "docflow/scenario/job.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace docflow::app {

namespace {

std::string read_text_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ValidationError("cannot read '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << bytes;
  out.flush();
  if (!out) throw Error("cannot write '" + p.string() + "'");
}

struct Globals {
  std::string config_file;
  std::string store_dir;
  std::string script;
  std::string backend;
  bool json = false;

  AppConfig resolve() const {
    AppConfig c = config_file.empty() ? AppConfig{} : AppConfig::load(config_file);
    if (!store_dir.empty()) c.store_dir = store_dir;
    if (!c.store_dir) c.store_dir = kDefaultStoreDir;
    if (!script.empty()) c.script = script;
    if (!backend.empty()) c.set("backend", backend);
    return c;
  }
};

struct IngestArgs {
  std::string file;
  std::string corpus;
  std::string doc_id;
  std::string title;
  std::vector<std::string> meta;
  std::string timestamp;
};

struct ScenarioArgs {
  std::string fsd;
  std::string section;
  std::string lang;
  std::string prompt;
  std::string out_dir = ".";
  bool no_xlsx = false;
};

struct ServeArgs {
  std::string bind;
  int port = -1;
  std::string jobs_dir;
  std::string static_dir;
};

int do_ingest(const Globals& g, const IngestArgs& a, std::ostream& out) {
  if (a.file.empty() == a.corpus.empty()) throw ValidationError("ingest needs either a file or --corpus");
  auto services = make_services(g.resolve());
  if (!a.corpus.empty()) {
    std::size_t n = ingest_corpus(*services.store, a.corpus);
    if (g.json) {
      out << nlohmann::json{{"created", n}, {"documents", services.store->document_count()}}.dump() << "\n";
    } else {
      out << "ingested " << n << " version(s); store holds " << services.store->document_count()
          << " document(s)\n";
    }
    return kExitOk;
  }
  store::Metadata metadata;
  for (const auto& kv : a.meta) {
    auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw ValidationError("--meta expects key=value, got '" + kv + "'");
    metadata[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  std::string doc_id = a.doc_id.empty() ? std::filesystem::path(a.file).stem().string() : a.doc_id;
  auto outcome = services.store->ingest_version(doc_id, a.title, read_text_file(a.file), std::move(metadata),
                                                a.timestamp.empty() ? text::now_utc() : text::parse_utc(a.timestamp));
  if (g.json) {
    out << ingest_json(outcome) << "\n";
  } else if (outcome.created) {
    out << "ingested " << doc_id << " version " << outcome.version->version_no << "\n";
  } else {
    out << outcome.notice << "\n";
  }
  return kExitOk;
}

int do_query(const Globals& g, const std::string& mode, const std::string& query_text, std::ostream& out) {
  auto config = g.resolve();
  auto services = make_services(config);
  std::optional<retrieval::UseCase> forced;
  if (text::to_lower(mode) != "auto") forced = retrieval::parse_use_case(mode);
  auto outcome = retrieval::answer_query(*services.gateway, *services.store, query_text, forced, services.retrieval);
  if (!g.json) {
    out << outcome.response << "\n";
  } else if (forced == retrieval::UseCase::trace) {
    out << outcome.trace->to_json() << "\n";
  } else if (forced == retrieval::UseCase::reading) {
    out << outcome.reading->to_json() << "\n";
  } else {
    out << outcome.to_json() << "\n";
  }
  return kExitOk;
}

int do_versions(const Globals& g, const std::string& doc_id, std::ostream& out) {
  auto services = make_services(g.resolve());
  auto snapshot = services.store->snapshot();
  if (g.json) {
    out << versions_json(*snapshot, doc_id) << "\n";
    return kExitOk;
  }
  auto j = nlohmann::json::parse(versions_json(*snapshot, doc_id));
  out << j["title"].get<std::string>() << " (" << doc_id << ")\n";
  for (const auto& v : j["versions"]) {
    out << "  version " << v["version_no"].get<int>() << "  " << v["timestamp"].get<std::string>() << "  "
        << v["length"].get<std::size_t>() << " bytes  " << v["content_hash"].get<std::string>().substr(0, 12) << "\n";
  }
  return kExitOk;
}

int do_scenario(const Globals& g, const ScenarioArgs& a, std::ostream& out, std::ostream& err) {
  AppConfig config = g.resolve();
  config.store_dir.reset();
  auto services = make_services(config);
  std::filesystem::path fsd_path = a.fsd;
  std::string fsd = read_text_file(fsd_path);

  scenario::ScenarioJobOptions options;
  options.section = a.section;
  options.target_language = a.lang;
  options.source_name = fsd_path.filename().string();
  options.emit_xlsx = !a.no_xlsx;
  for (const auto& ref : scenario::image_references(fsd)) {
    auto p = fsd_path.parent_path() / ref;
    if (std::filesystem::is_regular_file(p)) options.images[ref] = read_text_file(p);
  }
  std::string prompt = a.prompt;
  if (prompt.empty()) {
    if (a.section.empty()) throw ValidationError("scenario needs --section or --prompt");
    prompt = "Please create a test scenario based on section " + a.section + ".";
  }

  core::ArtifactStore artifacts;
  auto result = scenario::run_scenario_job(*services.gateway, artifacts, fsd, prompt, options);
  std::filesystem::create_directories(a.out_dir);
  std::vector<std::string> written;
  for (const auto* h : {&result.csv, &result.xlsx}) {
    if (!*h) continue;
    auto p = std::filesystem::path(a.out_dir) / (*h)->name;
    write_file(p, artifacts.get(**h));
    written.push_back(p.string());
  }
  bool done = result.status == core::SessionStatus::done;
  if (g.json) {
    out << nlohmann::json{{"status", core::to_string(result.status)},
                          {"section", result.section},
                          {"target_language", result.target_language},
                          {"final_text", result.final_text},
                          {"warnings", result.warnings},
                          {"files", written}}
               .dump()
        << "\n";
  } else {
    out << result.final_text << "\n";
    for (const auto& w : written) out << "wrote " << w << "\n";
  }
  for (const auto& w : result.warnings) err << "warning: " << w << "\n";
  return done ? kExitOk : kExitDomainError;
}

int do_serve(const Globals& g, const ServeArgs& a, std::ostream& out) {
  AppConfig config = g.resolve();
  if (!a.bind.empty()) config.bind = a.bind;
  if (a.port >= 0) config.port = a.port;
  if (!a.jobs_dir.empty()) config.jobs_dir = a.jobs_dir;
  if (!a.static_dir.empty()) config.static_dir = a.static_dir;
  auto services = make_services(config);
  JobManager jobs(*services.gateway, *services.artifacts, config.jobs_dir, config.job_workers);
  HttpService http(*services.gateway, *services.store, *services.artifacts, jobs, services.retrieval,
                   config.static_dir);
  int port = http.bind(config.bind, config.port);
  out << "listening on http://" << config.bind << ":" << port << "\n" << std::flush;
  http.listen();
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Document processing agents: ingestion, retrieval and test scenario generation", "docflow"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config_file, "Config file (key = value lines)")->check(CLI::ExistingFile);
  app.add_option("--store", g.store_dir, std::string("Document store directory (default ") + kDefaultStoreDir + ")");
  app.add_option("--script", g.script, "JSONL reply script for the scripted backend")->check(CLI::ExistingFile);
  app.add_option("--backend", g.backend, "Model backend")->check(CLI::IsMember({"scripted", "http"}));
  app.add_flag("--json", g.json, "Print JSON instead of text");

  IngestArgs ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Add a document version, or a whole corpus directory");
  ingest_cmd->add_option("file", ingest.file, "UTF-8 text file")->check(CLI::ExistingFile);
  ingest_cmd->add_option("--corpus", ingest.corpus, "Directory with manifest.jsonl")->check(CLI::ExistingDirectory);
  ingest_cmd->add_option("--doc-id", ingest.doc_id, "Document id (default: file stem)");
  ingest_cmd->add_option("--title", ingest.title, "Document title");
  ingest_cmd->add_option("--meta", ingest.meta, "Metadata key=value (repeatable)");
  ingest_cmd->add_option("--timestamp", ingest.timestamp, "Version time, YYYY-MM-DDTHH:MM:SSZ (default: now)");

  std::string mode = "auto";
  std::string query_text;
  auto* query_cmd = app.add_subcommand("query", "Answer a query from the document store");
  query_cmd->add_option("--mode", mode, "auto, search, qa, trace or read")
      ->check(CLI::IsMember({"auto", "search", "qa", "trace", "read", "reading"}));
  query_cmd->add_option("text", query_text, "Query text")->required();

  std::string trace_text;
  auto* trace_cmd = app.add_subcommand("trace", "History of a requirement across document versions");
  trace_cmd->add_option("text", trace_text, "Requirement description")->required();

  std::string read_text;
  auto* read_cmd = app.add_subcommand("read", "Work through one named document block by block");
  read_cmd->add_option("text", read_text, "Request naming the document")->required();

  std::string versions_doc;
  auto* versions_cmd = app.add_subcommand("versions", "List the versions of a document");
  versions_cmd->add_option("doc_id", versions_doc, "Document id")->required();

  ScenarioArgs scen;
  auto* scenario_cmd = app.add_subcommand("scenario", "Generate a test scenario spreadsheet from an FSD");
  scenario_cmd->add_option("--fsd", scen.fsd, "FSD markdown file")->required()->check(CLI::ExistingFile);
  scenario_cmd->add_option("--section", scen.section, "Section heading or number");
  scenario_cmd->add_option("--lang", scen.lang, "Target language code or name");
  scenario_cmd->add_option("--prompt", scen.prompt, "Free-form request (default built from --section)");
  scenario_cmd->add_option("--out", scen.out_dir, "Output directory for scenario.csv / scenario.xlsx");
  scenario_cmd->add_flag("--no-xlsx", scen.no_xlsx, "Write only the CSV");

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API");
  serve_cmd->add_option("--bind", serve.bind, "Bind address (default 127.0.0.1)");
  serve_cmd->add_option("--port", serve.port, "Port (default 8080, 0 picks one)")->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--jobs-dir", serve.jobs_dir, "Directory for job records and artifacts");
  serve_cmd->add_option("--static-dir", serve.static_dir, "Console assets served at /");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*ingest_cmd) return do_ingest(g, ingest, out);
    if (*query_cmd) return do_query(g, mode, query_text, out);
    if (*trace_cmd) return do_query(g, "trace", trace_text, out);
    if (*read_cmd) return do_query(g, "read", read_text, out);
    if (*versions_cmd) return do_versions(g, versions_doc, out);
    if (*scenario_cmd) return do_scenario(g, scen, out, err);
    if (*serve_cmd) return do_serve(g, serve, out);
  } catch (const std::exception& e) {
    auto info = classify(e);
    err << "error (" << info.code << "): " << info.message << "\n";
    if (!info.candidates.empty()) err << "candidates: " << text::join(info.candidates, ", ") << "\n";
    return kExitDomainError;
  }
  return kExitUsage;
}

}  // namespace docflow::app
