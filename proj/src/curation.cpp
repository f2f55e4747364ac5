#include "rainclean/curation.hpp"

#include <algorithm>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iterator>
#include <regex>

#include "rainclean/background.hpp"
#include "rainclean/error.hpp"
#include "rainclean/frame_store.hpp"
#include "rainclean/png_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace rainclean::curation {

namespace {

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    const auto ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[40];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%S", &tm);
    char out[48];
    std::snprintf(out, sizeof(out), "%s.%03lldZ", buf, static_cast<long long>(ms));
    return out;
}

void write_text_atomic(const fs::path& path, const std::string& text) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error(ErrorKind::Io, "cannot write " + tmp.string());
        }
        out << text;
        if (!out) {
            throw Error(ErrorKind::Io, "write failed for " + tmp.string());
        }
    }
    fs::rename(tmp, path);
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot read " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string format_id(std::uint64_t n) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "job-%06llu", static_cast<unsigned long long>(n));
    return buf;
}

// Lower median of the window [0, n).
std::size_t rain_frame_index(std::size_t n) { return (n - 1) / 2; }

} // namespace

std::string_view to_string(Density d) {
    switch (d) {
    case Density::Sparse: return "sparse";
    case Density::Normal: return "normal";
    case Density::Dense: return "dense";
    }
    return "normal";
}

Density parse_density(std::string_view text) {
    if (text == "sparse") return Density::Sparse;
    if (text == "normal") return Density::Normal;
    if (text == "dense") return Density::Dense;
    throw Error(ErrorKind::Parameter, "unknown density class '" + std::string(text) + "'");
}

std::string_view to_string(JobState s) {
    switch (s) {
    case JobState::Generating: return "Generating";
    case JobState::NeedsReview: return "NeedsReview";
    case JobState::Accepted: return "Accepted";
    case JobState::Exhausted: return "Exhausted";
    }
    return "Generating";
}

JobState parse_state(std::string_view text) {
    if (text == "Generating") return JobState::Generating;
    if (text == "NeedsReview") return JobState::NeedsReview;
    if (text == "Accepted") return JobState::Accepted;
    if (text == "Exhausted") return JobState::Exhausted;
    throw Error(ErrorKind::Parameter, "unknown job state '" + std::string(text) + "'");
}

std::string_view to_string(Decision d) { return d == Decision::Accept ? "accept" : "reject"; }

Decision parse_decision(std::string_view text) {
    if (text == "accept") return Decision::Accept;
    if (text == "reject") return Decision::Reject;
    throw Error(ErrorKind::Parameter, "decision must be 'accept' or 'reject'");
}

json to_json(const CurationJob& job) {
    const DensitySchedule sched = schedule(job.density);
    json history = json::array();
    for (const auto& h : job.history) {
        history.push_back({{"n", h.n}, {"decision", to_string(h.decision)}, {"timestamp", h.timestamp}});
    }
    json j = {
        {"id", job.id},
        {"sequence_ref", job.sequence_ref},
        {"density", to_string(job.density)},
        {"initial_n", sched.initial_n},
        {"increment", sched.increment},
        {"current_n", job.current_n},
        {"available_frames", job.available_frames},
        {"state", to_string(job.state)},
        {"history", history},
        {"created_at", job.created_at},
        {"candidate", nullptr},
    };
    if (job.candidate) {
        j["candidate"] = {{"p_hat", job.candidate->p_hat},
                          {"coverage", job.candidate->coverage},
                          {"n_used", job.candidate->n_used}};
    }
    if (!job.error.empty()) {
        j["error"] = job.error;
    }
    return j;
}

CurationJob job_from_json(const json& j) {
    try {
        CurationJob job;
        job.id = j.at("id").get<std::string>();
        job.sequence_ref = j.at("sequence_ref").get<std::string>();
        job.density = parse_density(j.at("density").get<std::string>());
        job.current_n = j.at("current_n").get<std::size_t>();
        job.available_frames = j.at("available_frames").get<std::size_t>();
        job.state = parse_state(j.at("state").get<std::string>());
        job.created_at = j.value("created_at", std::string{});
        job.error = j.value("error", std::string{});
        for (const auto& h : j.at("history")) {
            job.history.push_back({h.at("n").get<std::size_t>(),
                                   parse_decision(h.at("decision").get<std::string>()),
                                   h.at("timestamp").get<std::string>()});
        }
        if (j.contains("candidate") && !j["candidate"].is_null()) {
            const auto& c = j["candidate"];
            job.candidate = CandidateInfo{c.at("p_hat").get<int>(), c.at("coverage").get<double>(),
                                          c.at("n_used").get<std::size_t>()};
        }
        return job;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Parameter, std::string("malformed job document: ") + e.what());
    }
}

CurationService::CurationService(ServiceOptions options) : options_(std::move(options)) {
    if (options_.mask_threshold < 0 || options_.mask_threshold > 255) {
        throw Error(ErrorKind::Parameter, "mask threshold must lie in [0, 255]");
    }
    fs::create_directories(options_.state_dir / "jobs");
    fs::create_directories(options_.state_dir / "dataset");
    recover();
    worker_ = std::thread([this] { worker_loop(); });
}

CurationService::~CurationService() {
    {
        std::lock_guard lock(queue_mutex_);
        stopping_ = true;
    }
    queue_cv_.notify_all();
    if (worker_.joinable()) {
        worker_.join();
    }
}

fs::path CurationService::job_dir(const std::string& id) const {
    return options_.state_dir / "jobs" / id;
}

fs::path CurationService::dataset_dir(const std::string& id) const {
    return options_.state_dir / "dataset" / id;
}

void CurationService::recover() {
    static const std::regex id_pattern(R"(job-(\d+))");
    std::vector<std::string> pending;
    for (const auto& entry : fs::directory_iterator(options_.state_dir / "jobs")) {
        const fs::path doc = entry.path() / "job.json";
        if (!entry.is_directory() || !fs::exists(doc)) {
            continue;
        }
        std::ifstream in(doc);
        CurationJob job = job_from_json(json::parse(in));
        std::smatch m;
        if (std::regex_match(job.id, m, id_pattern)) {
            next_id_ = std::max<std::uint64_t>(next_id_, std::stoull(m[1].str()) + 1);
        }
        if (job.state == JobState::Generating) {
            pending.push_back(job.id);
        }
        auto slot = std::make_shared<Slot>();
        slot->job = std::move(job);
        jobs_.emplace(slot->job.id, std::move(slot));
    }
    for (const auto& id : pending) {
        enqueue(id, jobs_.at(id)->job.current_n);
    }
}

std::shared_ptr<CurationService::Slot> CurationService::find(const std::string& id) const {
    std::lock_guard lock(registry_mutex_);
    const auto it = jobs_.find(id);
    if (it == jobs_.end()) {
        throw Error(ErrorKind::NotFound, "no job with id '" + id + "'");
    }
    return it->second;
}

void CurationService::persist(const CurationJob& job) const {
    const fs::path dir = job_dir(job.id);
    fs::create_directories(dir);
    write_text_atomic(dir / "job.json", to_json(job).dump(2) + "\n");
}

void CurationService::enqueue(const std::string& id, std::size_t n) {
    {
        std::lock_guard lock(queue_mutex_);
        queue_.push_back({id, n});
    }
    queue_cv_.notify_one();
}

void CurationService::worker_loop() {
    for (;;) {
        Task task;
        {
            std::unique_lock lock(queue_mutex_);
            queue_cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
            if (stopping_) {
                return;
            }
            task = std::move(queue_.front());
            queue_.pop_front();
        }
        generate(task);
    }
}

void CurationService::generate(const Task& task) {
    const auto slot = find(task.id);
    std::string sequence_ref;
    {
        std::lock_guard lock(slot->mutex);
        if (slot->job.state != JobState::Generating || slot->job.current_n != task.n) {
            return;
        }
        sequence_ref = slot->job.sequence_ref;
    }

    // Estimation runs without holding the job lock so reads stay responsive.
    std::optional<CandidateClean> result;
    std::string failure;
    try {
        const Sequence seq = load_sequence(sequence_ref, task.n);
        result = estimate_background(seq, EstimateOptions{options_.threads});
        png::write(job_dir(task.id) / "candidate.png", result->image);
    } catch (const std::exception& e) {
        failure = e.what();
    }

    std::lock_guard lock(slot->mutex);
    CurationJob& job = slot->job;
    if (job.state != JobState::Generating || job.current_n != task.n) {
        return;
    }
    if (result) {
        job.candidate = CandidateInfo{result->p_hat, result->coverage, result->n_used};
        job.state = JobState::NeedsReview;
    } else {
        job.error = failure;
        job.state = JobState::Exhausted;
    }
    persist(job);
    slot->settled.notify_all();
}

CurationJob CurationService::create_job(const std::string& sequence_ref, Density density) {
    const DensitySchedule sched = schedule(density);
    const std::size_t available = count_frames(sequence_ref);
    if (available < sched.initial_n) {
        throw Error(ErrorKind::InsufficientFrames,
                    std::string(to_string(density)) + " jobs need " +
                        std::to_string(sched.initial_n) + " frames, " + sequence_ref + " has " +
                        std::to_string(available));
    }
    auto slot = std::make_shared<Slot>();
    CurationJob snapshot;
    {
        std::lock_guard lock(registry_mutex_);
        CurationJob& job = slot->job;
        job.id = format_id(next_id_++);
        job.sequence_ref = sequence_ref;
        job.density = density;
        job.current_n = sched.initial_n;
        job.available_frames = available;
        job.state = JobState::Generating;
        job.created_at = utc_timestamp();
        persist(job);
        snapshot = job;
        jobs_.emplace(job.id, slot);
    }
    enqueue(snapshot.id, snapshot.current_n);
    return snapshot;
}

void CurationService::finalize(const CurationJob& job) const {
    const fs::path out = dataset_dir(job.id);
    fs::create_directories(out);
    const std::size_t rain_index = rain_frame_index(job.current_n);
    const Frame rain = png::read(fs::path(job.sequence_ref) / frame_filename(rain_index));
    const Frame clean = png::read(job_dir(job.id) / "candidate.png");
    const RainMask mask = rain_mask(rain, clean, options_.mask_threshold);
    png::write(out / "rain.png", rain);
    png::write(out / "clean.png", clean);
    png::write(out / "mask.png", mask.to_frame());
    const json meta = {
        {"p_hat", job.candidate->p_hat},
        {"coverage", job.candidate->coverage},
        {"n_used", job.candidate->n_used},
        {"rain_frame_index", rain_index},
        {"density", to_string(job.density)},
        {"mask_threshold", options_.mask_threshold},
    };
    write_text_atomic(out / "meta.json", meta.dump(2) + "\n");
}

CurationJob CurationService::decide(const std::string& id, Decision decision) {
    const auto slot = find(id);
    std::lock_guard lock(slot->mutex);
    CurationJob& job = slot->job;
    if (job.state != JobState::NeedsReview) {
        throw Error(ErrorKind::State, "job " + id + " is " + std::string(to_string(job.state)) +
                                          ", decisions need NeedsReview");
    }
    job.history.push_back({job.current_n, decision, utc_timestamp()});
    if (decision == Decision::Accept) {
        finalize(job);
        job.state = JobState::Accepted;
    } else {
        const std::size_t next = job.current_n + schedule(job.density).increment;
        job.available_frames = count_frames(job.sequence_ref);
        if (next <= job.available_frames) {
            job.current_n = next;
            job.candidate.reset();
            job.state = JobState::Generating;
        } else {
            job.state = JobState::Exhausted;
        }
    }
    persist(job);
    if (job.state == JobState::Generating) {
        enqueue(job.id, job.current_n);
    } else {
        slot->settled.notify_all();
    }
    return job;
}

std::vector<CurationJob> CurationService::list_jobs() const {
    std::vector<std::shared_ptr<Slot>> slots;
    {
        std::lock_guard lock(registry_mutex_);
        for (const auto& [id, slot] : jobs_) {
            slots.push_back(slot);
        }
    }
    std::vector<CurationJob> out;
    out.reserve(slots.size());
    for (const auto& slot : slots) {
        std::lock_guard lock(slot->mutex);
        out.push_back(slot->job);
    }
    return out;
}

CurationJob CurationService::get_job(const std::string& id) const {
    const auto slot = find(id);
    std::lock_guard lock(slot->mutex);
    return slot->job;
}

std::vector<std::uint8_t> CurationService::get_candidate(const std::string& id) const {
    const auto slot = find(id);
    std::lock_guard lock(slot->mutex);
    const JobState s = slot->job.state;
    if (s != JobState::NeedsReview && s != JobState::Accepted) {
        throw Error(ErrorKind::State, "job " + id + " has no candidate while " +
                                          std::string(to_string(s)));
    }
    return read_bytes(job_dir(id) / "candidate.png");
}

std::vector<std::uint8_t> CurationService::get_frame_sample(const std::string& id,
                                                            std::size_t k) const {
    const CurationJob job = get_job(id);
    if (k >= job.available_frames) {
        throw Error(ErrorKind::Bounds, "frame " + std::to_string(k) + " is past the " +
                                           std::to_string(job.available_frames) +
                                           " available frames");
    }
    return read_bytes(fs::path(job.sequence_ref) / frame_filename(k));
}

CurationJob CurationService::wait_until_settled(const std::string& id,
                                                std::chrono::milliseconds timeout) {
    const auto slot = find(id);
    std::unique_lock lock(slot->mutex);
    slot->settled.wait_for(lock, timeout,
                           [&] { return slot->job.state != JobState::Generating; });
    return slot->job;
}

CurationJob replay_history(CurationService& service, const CurationJob& persisted) {
    CurationJob job = service.create_job(persisted.sequence_ref, persisted.density);
    job = service.wait_until_settled(job.id);
    for (const HistoryEntry& h : persisted.history) {
        if (job.state != JobState::NeedsReview || job.current_n != h.n) {
            throw Error(ErrorKind::State, "replay of " + persisted.id + " diverged at n=" +
                                              std::to_string(h.n));
        }
        service.decide(job.id, h.decision);
        job = service.wait_until_settled(job.id);
    }
    return job;
}

} // namespace rainclean::curation
