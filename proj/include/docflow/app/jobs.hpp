#pragma once

#include "docflow/common/text.hpp"
#include "docflow/core/artifact.hpp"
#include "docflow/scenario/fsd.hpp"

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <functional>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace docflow::model {
class Gateway;
}

namespace docflow::app {

enum class JobStatus { queued, running, done, aborted };

const char* to_string(JobStatus s);
JobStatus parse_job_status(std::string_view s);

// Forward-only: queued -> running -> done | aborted, or queued -> aborted.
bool is_forward(JobStatus from, JobStatus to);

struct ScenarioJobRequest {
  std::string fsd_text;
  std::string prompt;  // empty: built from section
  std::string section;
  std::string target_language;
  std::string source_name = "fsd.md";
  scenario::ImageMap images;
  bool emit_xlsx = true;
};

struct JobOutput {
  std::string artifact_id;
  std::string kind;
  std::string name;
};

struct JobRecord {
  std::string job_id;
  std::string kind = "scenario";
  JobStatus status = JobStatus::queued;
  // prompt, section, target_language, source_name, fsd_artifact, images (comma separated refs)
  std::map<std::string, std::string> inputs;
  std::vector<JobOutput> outputs;  // non-empty iff done
  std::vector<std::string> diagnostics;
  std::string final_text;
  text::Timestamp created_at{};
  text::Timestamp updated_at{};

  std::string to_json() const;
  static JobRecord from_json(std::string_view line);
};

// Runs scenario jobs on a bounded worker pool. With a directory, every state
// change is appended to <dir>/jobs.jsonl (last line per job wins on load) and
// jobs found queued or running at load time are marked aborted.
class JobManager {
 public:
  JobManager(model::Gateway& gateway, core::ArtifactStore& artifacts,
             std::optional<std::filesystem::path> directory = std::nullopt, std::size_t workers = 2);
  ~JobManager();

  JobManager(const JobManager&) = delete;
  JobManager& operator=(const JobManager&) = delete;

  // Throws ValidationError for an empty FSD or a request with neither
  // prompt nor section.
  JobRecord submit(ScenarioJobRequest request);

  // Throws NotFoundError.
  JobRecord get(std::string_view job_id) const;

  // Creation order.
  std::vector<JobRecord> list() const;

  // Blocks until no job is queued or running.
  void wait_idle();

  static constexpr const char* kInterruptedNotice = "interrupted by service restart";

 private:
  struct Pending {
    std::string job_id;
    ScenarioJobRequest request;
  };

  void worker_loop();
  void run(Pending& pending);
  void transition(const std::string& job_id, JobStatus to, const std::function<void(JobRecord&)>& update);
  void append_locked(const JobRecord& record);
  void load();

  model::Gateway& gateway_;
  core::ArtifactStore& artifacts_;
  std::optional<std::filesystem::path> dir_;

  mutable std::mutex mu_;
  std::condition_variable work_cv_;
  std::condition_variable idle_cv_;
  std::map<std::string, JobRecord, std::less<>> records_;
  std::vector<std::string> order_;
  std::deque<Pending> queue_;
  std::size_t active_ = 0;
  std::size_t next_id_ = 1;
  bool stopping_ = false;
  std::vector<std::thread> threads_;
};

}  // namespace docflow::app
