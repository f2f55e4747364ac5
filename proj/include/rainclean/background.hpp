#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rainclean/frame.hpp"
#include "rainclean/parallel.hpp"

namespace rainclean {

inline constexpr int kMaxPercentile = 100;

/// Mode of one temporal trace and how many samples fall either side of it.
/// Counts are kept as integers so percentile containment is exact; the
/// percent views are derived from them.
struct ModeStats {
    std::uint8_t mode = 0;
    std::uint32_t mode_count = 0;
    std::uint32_t below = 0; // samples strictly darker than the mode
    std::uint32_t above = 0; // samples strictly brighter than the mode
    std::uint32_t n = 0;

    double r_min() const noexcept { return 100.0 * below / n; }
    double r_max() const noexcept { return 100.0 * above / n; }

    friend bool operator==(const ModeStats&, const ModeStats&) = default;
};

/// Half-open percentile interval (low, high].
struct PercentSpan {
    double low = 0.0;
    double high = 0.0;
};

struct PercentileVote {
    std::array<std::uint64_t, kMaxPercentile + 1> counts{};

    friend bool operator==(const PercentileVote&, const PercentileVote&) = default;
};

struct GlobalPercentile {
    int p_hat = 0;
    PercentileVote vote;
};

struct CandidateClean {
    Frame image;
    int p_hat = 0;
    double coverage = 0.0; // fraction of sites whose mode span contains p_hat
    std::size_t n_used = 0;
    PercentileVote vote;
};

struct EstimateOptions {
    unsigned threads = default_thread_count();
};

/// Most frequent value (ties to the darker value) plus the strict
/// below/above counts. Throws EmptyInput on an empty trace.
ModeStats compute_mode(std::span<const std::uint8_t> trace);

/// (r_min, 100 - r_max]: the percentile ranks whose nearest-rank sample is
/// the mode.
PercentSpan mode_span(const ModeStats& stats) noexcept;

/// Exact integer test of low < p <= high for the span of `stats`.
bool span_contains(const ModeStats& stats, int p) noexcept;

/// Tallies, for every integer percentile 0..100, how many sites' spans
/// contain it and picks the most-voted rank (smallest on ties).
GlobalPercentile select_global_percentile(std::span<const ModeStats> field);

/// Nearest-rank percentile: sorted element at rank max(1, ceil(p*N/100)).
/// Throws EmptyInput on an empty trace, Parameter when p is outside 0..100.
std::uint8_t value_at_percentile(std::span<const std::uint8_t> trace, int p);

/// Per-site mode statistics in Frame::offset order.
std::vector<ModeStats> compute_mode_field(const Sequence& seq, const EstimateOptions& opts = {});

/// Mode -> global percentile vote -> per-site p_hat-rank value. The output is
/// bitwise independent of opts.threads.
CandidateClean estimate_background(const Sequence& seq, const EstimateOptions& opts = {});

/// Per-site temporal mode without global smoothing.
Frame mode_filter_baseline(const Sequence& seq, const EstimateOptions& opts = {});

} // namespace rainclean
