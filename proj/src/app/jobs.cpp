#include "docflow/app/jobs.hpp"

#include "docflow/app/error_mapping.hpp"
#include "docflow/common/errors.hpp"
#include "docflow/scenario/job.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>

namespace docflow::app {

using nlohmann::json;

namespace {

const core::ArtifactKind kUploadKind{"upload"};

std::string format_job_id(std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "job-%06zu", n);
  return buf;
}

std::size_t job_number(const std::string& id) {
  if (id.rfind("job-", 0) != 0) return 0;
  try {
    return static_cast<std::size_t>(std::stoull(id.substr(4)));
  } catch (const std::exception&) {
    return 0;
  }
}

}  // namespace

const char* to_string(JobStatus s) {
  switch (s) {
    case JobStatus::queued: return "queued";
    case JobStatus::running: return "running";
    case JobStatus::done: return "done";
    case JobStatus::aborted: return "aborted";
  }
  return "aborted";
}

JobStatus parse_job_status(std::string_view s) {
  if (s == "queued") return JobStatus::queued;
  if (s == "running") return JobStatus::running;
  if (s == "done") return JobStatus::done;
  if (s == "aborted") return JobStatus::aborted;
  throw ValidationError("unknown job status '" + std::string(s) + "'");
}

bool is_forward(JobStatus from, JobStatus to) {
  switch (from) {
    case JobStatus::queued: return to != JobStatus::queued;
    case JobStatus::running: return to == JobStatus::done || to == JobStatus::aborted;
    case JobStatus::done:
    case JobStatus::aborted: return false;
  }
  return false;
}

std::string JobRecord::to_json() const {
  json outs = json::array();
  for (const auto& o : outputs) outs.push_back({{"artifact_id", o.artifact_id}, {"kind", o.kind}, {"name", o.name}});
  return json{{"job_id", job_id},
              {"kind", kind},
              {"status", app::to_string(status)},
              {"inputs", inputs},
              {"outputs", outs},
              {"diagnostics", diagnostics},
              {"final_text", final_text},
              {"created_at", text::format_utc(created_at)},
              {"updated_at", text::format_utc(updated_at)}}
      .dump();
}

JobRecord JobRecord::from_json(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed job record: ") + e.what());
  }
  JobRecord r;
  try {
    r.job_id = j.at("job_id").get<std::string>();
    r.kind = j.value("kind", "scenario");
    r.status = parse_job_status(j.at("status").get<std::string>());
    r.inputs = j.value("inputs", std::map<std::string, std::string>{});
    for (const auto& o : j.value("outputs", json::array())) {
      r.outputs.push_back({o.at("artifact_id").get<std::string>(), o.value("kind", ""), o.value("name", "")});
    }
    r.diagnostics = j.value("diagnostics", std::vector<std::string>{});
    r.final_text = j.value("final_text", "");
    r.created_at = text::parse_utc(j.at("created_at").get<std::string>());
    r.updated_at = text::parse_utc(j.at("updated_at").get<std::string>());
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed job record: ") + e.what());
  }
  return r;
}

JobManager::JobManager(model::Gateway& gateway, core::ArtifactStore& artifacts,
                       std::optional<std::filesystem::path> directory, std::size_t workers)
    : gateway_(gateway), artifacts_(artifacts), dir_(std::move(directory)) {
  if (workers == 0) throw ValidationError("job manager needs at least one worker");
  if (dir_) {
    std::filesystem::create_directories(*dir_);
    load();
  }
  for (std::size_t i = 0; i < workers; ++i) threads_.emplace_back([this] { worker_loop(); });
}

JobManager::~JobManager() {
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
  }
  work_cv_.notify_all();
  for (auto& t : threads_) t.join();
}

JobRecord JobManager::submit(ScenarioJobRequest request) {
  if (text::trim(request.fsd_text).empty()) throw ValidationError("fsd_text must not be empty");
  if (text::trim(request.prompt).empty() && text::trim(request.section).empty()) {
    throw ValidationError("a scenario job needs a prompt or a section");
  }
  auto fsd = artifacts_.put(kUploadKind, request.fsd_text, "job-manager", request.source_name);

  std::lock_guard lock(mu_);
  JobRecord r;
  r.job_id = format_job_id(next_id_++);
  r.status = JobStatus::queued;
  r.inputs["prompt"] = request.prompt;
  r.inputs["section"] = request.section;
  r.inputs["target_language"] = request.target_language;
  r.inputs["source_name"] = request.source_name;
  r.inputs["fsd_artifact"] = fsd.id;
  std::string refs;
  for (const auto& [ref, bytes] : request.images) refs += (refs.empty() ? "" : ",") + ref;
  r.inputs["images"] = refs;
  r.created_at = r.updated_at = text::now_utc();
  records_[r.job_id] = r;
  order_.push_back(r.job_id);
  append_locked(r);
  queue_.push_back({r.job_id, std::move(request)});
  work_cv_.notify_one();
  return r;
}

JobRecord JobManager::get(std::string_view job_id) const {
  std::lock_guard lock(mu_);
  auto it = records_.find(job_id);
  if (it == records_.end()) throw NotFoundError("no scenario job '" + std::string(job_id) + "'");
  return it->second;
}

std::vector<JobRecord> JobManager::list() const {
  std::lock_guard lock(mu_);
  std::vector<JobRecord> out;
  out.reserve(order_.size());
  for (const auto& id : order_) out.push_back(records_.at(id));
  return out;
}

void JobManager::wait_idle() {
  std::unique_lock lock(mu_);
  idle_cv_.wait(lock, [this] { return queue_.empty() && active_ == 0; });
}

void JobManager::worker_loop() {
  for (;;) {
    Pending pending;
    {
      std::unique_lock lock(mu_);
      work_cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
      if (stopping_) return;
      pending = std::move(queue_.front());
      queue_.pop_front();
      ++active_;
    }
    run(pending);
    {
      std::lock_guard lock(mu_);
      --active_;
    }
    idle_cv_.notify_all();
  }
}

void JobManager::run(Pending& pending) {
  transition(pending.job_id, JobStatus::running, [](JobRecord&) {});
  const auto& req = pending.request;
  scenario::ScenarioJobOptions options;
  options.section = req.section;
  options.target_language = req.target_language;
  options.source_name = req.source_name;
  options.images = req.images;
  options.emit_xlsx = req.emit_xlsx;
  options.session_id = pending.job_id;
  std::string prompt = req.prompt;
  if (text::trim(prompt).empty()) prompt = "Please create a test scenario based on section " + req.section + ".";

  try {
    auto result = scenario::run_scenario_job(gateway_, artifacts_, req.fsd_text, prompt, options);
    bool done = result.status == core::SessionStatus::done && (result.csv || result.xlsx);
    transition(pending.job_id, done ? JobStatus::done : JobStatus::aborted, [&](JobRecord& r) {
      r.final_text = result.final_text;
      r.diagnostics = result.warnings;
      r.inputs["section"] = result.section;
      r.inputs["target_language"] = result.target_language;
      if (done) {
        for (const auto* h : {&result.csv, &result.xlsx}) {
          if (*h) r.outputs.push_back({(*h)->id, (*h)->kind.tag(), (*h)->name});
        }
      } else if (result.status == core::SessionStatus::done) {
        r.diagnostics.push_back("session finished without a spreadsheet");
      } else {
        r.diagnostics.push_back("session aborted: " + result.final_text);
      }
    });
  } catch (const std::exception& e) {
    auto info = classify(e);
    transition(pending.job_id, JobStatus::aborted,
               [&](JobRecord& r) { r.diagnostics.push_back(info.code + ": " + info.message); });
  }
}

void JobManager::transition(const std::string& job_id, JobStatus to, const std::function<void(JobRecord&)>& update) {
  std::lock_guard lock(mu_);
  auto& r = records_.at(job_id);
  if (!is_forward(r.status, to)) {
    throw Error(std::string("job ") + job_id + ": illegal transition " + app::to_string(r.status) + " -> " +
                app::to_string(to));
  }
  r.status = to;
  update(r);
  r.updated_at = text::now_utc();
  append_locked(r);
}

void JobManager::append_locked(const JobRecord& record) {
  if (!dir_) return;
  std::ofstream out(*dir_ / "jobs.jsonl", std::ios::app | std::ios::binary);
  out << record.to_json() << '\n';
  out.flush();
  if (!out) throw Error("cannot append to " + (*dir_ / "jobs.jsonl").string());
}

void JobManager::load() {
  std::ifstream in(*dir_ / "jobs.jsonl", std::ios::binary);
  if (!in) return;
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    JobRecord r = JobRecord::from_json(line);
    if (records_.find(r.job_id) == records_.end()) order_.push_back(r.job_id);
    next_id_ = std::max(next_id_, job_number(r.job_id) + 1);
    records_[r.job_id] = std::move(r);
  }
  for (const auto& id : order_) {
    auto& r = records_.at(id);
    if (r.status == JobStatus::queued || r.status == JobStatus::running) {
      r.status = JobStatus::aborted;
      r.diagnostics.push_back(kInterruptedNotice);
      r.updated_at = text::now_utc();
      append_locked(r);
    }
  }
}

}  // namespace docflow::app
