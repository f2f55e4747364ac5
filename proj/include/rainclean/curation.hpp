#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "rainclean/metrics.hpp"
#include "rainclean/parallel.hpp"

namespace rainclean::curation {

enum class Density { Sparse, Normal, Dense };

/// Frame-count schedule of a density class: start at initial_n, grow by
/// increment on every rejection.
struct DensitySchedule {
    std::size_t initial_n;
    std::size_t increment;
};

constexpr DensitySchedule schedule(Density d) noexcept {
    switch (d) {
    case Density::Sparse: return {20, 10};
    case Density::Normal: return {100, 20};
    case Density::Dense: return {200, 50};
    }
    return {0, 0};
}

std::string_view to_string(Density d);
/// Throws Parameter for anything but "sparse", "normal" or "dense".
Density parse_density(std::string_view text);

enum class JobState { Generating, NeedsReview, Accepted, Exhausted };
std::string_view to_string(JobState s);
JobState parse_state(std::string_view text);

enum class Decision { Accept, Reject };
std::string_view to_string(Decision d);
Decision parse_decision(std::string_view text);

struct HistoryEntry {
    std::size_t n = 0;
    Decision decision = Decision::Reject;
    std::string timestamp;
};

struct CandidateInfo {
    int p_hat = 0;
    double coverage = 0.0;
    std::size_t n_used = 0;
};

struct CurationJob {
    std::string id;
    std::string sequence_ref;
    Density density = Density::Normal;
    std::size_t current_n = 0;
    std::size_t available_frames = 0;
    JobState state = JobState::Generating;
    std::vector<HistoryEntry> history;
    std::optional<CandidateInfo> candidate;
    std::string created_at;
    std::string error; // set when generation failed and the job was exhausted
};

nlohmann::json to_json(const CurationJob& job);
CurationJob job_from_json(const nlohmann::json& j);

struct ServiceOptions {
    std::filesystem::path state_dir;
    int mask_threshold = kDefaultMaskThreshold;
    unsigned threads = default_thread_count();
};

/// The human-in-the-loop frame-count loop. Jobs persist as one JSON document
/// each under <state_dir>/jobs/<id>/; accepted pairs go to
/// <state_dir>/dataset/<id>/. Candidate generation runs on a worker thread;
/// operations on one job are serialized by that job's mutex and never block
/// other jobs.
class CurationService {
public:
    explicit CurationService(ServiceOptions options);
    ~CurationService();
    CurationService(const CurationService&) = delete;
    CurationService& operator=(const CurationService&) = delete;

    /// Throws InsufficientFrames when the directory holds fewer than the
    /// class's initial frame count, Io when it does not exist.
    CurationJob create_job(const std::string& sequence_ref, Density density);

    /// Throws NotFound for unknown ids and State unless the job awaits review.
    CurationJob decide(const std::string& id, Decision decision);

    std::vector<CurationJob> list_jobs() const;
    CurationJob get_job(const std::string& id) const;

    /// PNG bytes; State unless the job is in NeedsReview or Accepted.
    std::vector<std::uint8_t> get_candidate(const std::string& id) const;
    /// PNG bytes of frame k of the job's sequence; Bounds when k is past the
    /// available frames.
    std::vector<std::uint8_t> get_frame_sample(const std::string& id, std::size_t k) const;

    /// Blocks until the job leaves Generating or the timeout passes.
    CurationJob wait_until_settled(const std::string& id,
                                   std::chrono::milliseconds timeout = std::chrono::minutes(5));

    const ServiceOptions& options() const noexcept { return options_; }
    std::filesystem::path job_dir(const std::string& id) const;
    std::filesystem::path dataset_dir(const std::string& id) const;

private:
    struct Slot {
        mutable std::mutex mutex;
        std::condition_variable settled;
        CurationJob job;
    };
    struct Task {
        std::string id;
        std::size_t n;
    };

    std::shared_ptr<Slot> find(const std::string& id) const;
    void persist(const CurationJob& job) const;
    void enqueue(const std::string& id, std::size_t n);
    void worker_loop();
    void generate(const Task& task);
    void finalize(const CurationJob& job) const;
    void recover();

    ServiceOptions options_;
    mutable std::mutex registry_mutex_;
    std::map<std::string, std::shared_ptr<Slot>> jobs_;
    std::uint64_t next_id_ = 1;

    std::mutex queue_mutex_;
    std::condition_variable queue_cv_;
    std::deque<Task> queue_;
    bool stopping_ = false;
    std::thread worker_;
};

/// Re-runs a persisted job's creation and decision history against `service`
/// and returns the resulting job.
CurationJob replay_history(CurationService& service, const CurationJob& persisted);

} // namespace rainclean::curation
