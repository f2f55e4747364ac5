#include "rainclean/background.hpp"

#include <algorithm>
#include <string>

#include "rainclean/error.hpp"

namespace rainclean {

namespace {

// Sites are processed in blocks: samples of a block are gathered
// frame-by-frame into a site-major scratch buffer so each trace is contiguous.
constexpr std::size_t kBlockSites = 512;

class BlockGather {
public:
    explicit BlockGather(const Sequence& seq)
        : seq_(seq), n_(seq.size()), buffer_(kBlockSites * seq.size()) {}

    // Fills traces for sites [begin, end); returns the number gathered.
    std::size_t load(std::size_t begin, std::size_t end) {
        const std::size_t count = end - begin;
        for (std::size_t k = 0; k < n_; ++k) {
            const std::uint8_t* src = seq_[k].data.data() + begin;
            for (std::size_t s = 0; s < count; ++s) {
                buffer_[s * n_ + k] = src[s];
            }
        }
        return count;
    }

    std::span<std::uint8_t> trace(std::size_t s) { return {buffer_.data() + s * n_, n_}; }

private:
    const Sequence& seq_;
    std::size_t n_;
    std::vector<std::uint8_t> buffer_;
};

// Histogram-backed mode; the histogram is returned to all-zero on exit.
ModeStats mode_with_histogram(std::span<const std::uint8_t> trace,
                              std::array<std::uint32_t, 256>& hist) {
    for (std::uint8_t v : trace) {
        ++hist[v];
    }
    std::uint8_t best = trace.front();
    std::uint32_t best_count = 0;
    for (std::uint8_t v : trace) {
        const std::uint32_t c = hist[v];
        if (c > best_count || (c == best_count && v < best)) {
            best = v;
            best_count = c;
        }
    }
    std::uint32_t below = 0;
    for (std::uint8_t v : trace) {
        below += v < best;
        hist[v] = 0;
    }
    ModeStats stats;
    stats.mode = best;
    stats.mode_count = best_count;
    stats.below = below;
    stats.n = static_cast<std::uint32_t>(trace.size());
    stats.above = stats.n - below - best_count;
    return stats;
}

// rank-th smallest sample (1-indexed); the histogram is returned all-zero.
std::uint8_t select_with_histogram(std::span<const std::uint8_t> trace, std::uint32_t rank,
                                   std::array<std::uint32_t, 256>& hist) {
    std::uint8_t lo = 255;
    for (std::uint8_t v : trace) {
        ++hist[v];
        lo = std::min(lo, v);
    }
    std::uint32_t seen = 0;
    int v = lo;
    for (;; ++v) {
        seen += hist[v];
        if (seen >= rank) {
            break;
        }
    }
    for (std::uint8_t t : trace) {
        hist[t] = 0;
    }
    return static_cast<std::uint8_t>(v);
}

std::size_t nearest_rank(std::size_t n, int p) {
    // ceil(p * n / 100), clamped to 1
    const std::size_t rank = (static_cast<std::size_t>(p) * n + 99) / 100;
    return std::max<std::size_t>(rank, 1);
}

void check_percentile(int p) {
    if (p < 0 || p > kMaxPercentile) {
        throw Error(ErrorKind::Parameter, "percentile " + std::to_string(p) + " outside 0..100");
    }
}

void require_frames(const Sequence& seq) {
    if (seq.empty()) {
        throw Error(ErrorKind::EmptyInput, "sequence has no frames");
    }
}

// Integer percentile ranks [first, last] inside the span; empty when first > last.
std::pair<int, int> span_ranks(const ModeStats& s) noexcept {
    const auto n = static_cast<std::uint64_t>(s.n);
    const int first = static_cast<int>(100ull * s.below / n) + 1;
    const int last = static_cast<int>(100ull * (s.below + s.mode_count) / n);
    return {first, last};
}

} // namespace

ModeStats compute_mode(std::span<const std::uint8_t> trace) {
    if (trace.empty()) {
        throw Error(ErrorKind::EmptyInput, "cannot take the mode of an empty trace");
    }
    std::array<std::uint32_t, 256> hist{};
    return mode_with_histogram(trace, hist);
}

PercentSpan mode_span(const ModeStats& stats) noexcept {
    return {stats.r_min(), 100.0 - stats.r_max()};
}

bool span_contains(const ModeStats& stats, int p) noexcept {
    if (stats.n == 0 || p < 0) {
        return false;
    }
    const auto scaled = static_cast<std::uint64_t>(p) * stats.n;
    return scaled > 100ull * stats.below && scaled <= 100ull * (stats.below + stats.mode_count);
}

GlobalPercentile select_global_percentile(std::span<const ModeStats> field) {
    if (field.empty()) {
        throw Error(ErrorKind::EmptyInput, "percentile vote needs at least one site");
    }
    // Difference array over ranks; each span adds +1 on [first, last].
    std::array<std::int64_t, kMaxPercentile + 2> diff{};
    for (const ModeStats& s : field) {
        const auto [first, last] = span_ranks(s);
        if (first <= last) {
            ++diff[first];
            --diff[last + 1];
        }
    }
    GlobalPercentile out;
    std::int64_t running = 0;
    for (int p = 0; p <= kMaxPercentile; ++p) {
        running += diff[p];
        out.vote.counts[p] = static_cast<std::uint64_t>(running);
        if (out.vote.counts[p] > out.vote.counts[out.p_hat]) {
            out.p_hat = p;
        }
    }
    return out;
}

std::uint8_t value_at_percentile(std::span<const std::uint8_t> trace, int p) {
    if (trace.empty()) {
        throw Error(ErrorKind::EmptyInput, "cannot take a percentile of an empty trace");
    }
    check_percentile(p);
    std::vector<std::uint8_t> sorted(trace.begin(), trace.end());
    const std::size_t rank = nearest_rank(sorted.size(), p);
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(rank - 1), sorted.end());
    return sorted[rank - 1];
}

std::vector<ModeStats> compute_mode_field(const Sequence& seq, const EstimateOptions& opts) {
    require_frames(seq);
    const std::size_t sites = seq.site_count();
    std::vector<ModeStats> field(sites);
    parallel_chunks(sites, opts.threads, [&](std::size_t, std::size_t begin, std::size_t end) {
        BlockGather gather(seq);
        std::array<std::uint32_t, 256> hist{};
        for (std::size_t b = begin; b < end; b += kBlockSites) {
            const std::size_t count = gather.load(b, std::min(end, b + kBlockSites));
            for (std::size_t s = 0; s < count; ++s) {
                field[b + s] = mode_with_histogram(gather.trace(s), hist);
            }
        }
    });
    return field;
}

CandidateClean estimate_background(const Sequence& seq, const EstimateOptions& opts) {
    const std::vector<ModeStats> field = compute_mode_field(seq, opts);
    const GlobalPercentile global = select_global_percentile(field);

    CandidateClean out;
    out.p_hat = global.p_hat;
    out.vote = global.vote;
    out.n_used = seq.size();
    out.coverage =
        static_cast<double>(global.vote.counts[global.p_hat]) / static_cast<double>(field.size());
    out.image = Frame(seq.width(), seq.height(), seq.channels());

    const auto rank = static_cast<std::uint32_t>(nearest_rank(seq.size(), global.p_hat));
    const std::size_t sites = seq.site_count();
    parallel_chunks(sites, opts.threads, [&](std::size_t, std::size_t begin, std::size_t end) {
        BlockGather gather(seq);
        std::array<std::uint32_t, 256> hist{};
        for (std::size_t b = begin; b < end; b += kBlockSites) {
            const std::size_t count = gather.load(b, std::min(end, b + kBlockSites));
            for (std::size_t s = 0; s < count; ++s) {
                out.image.data[b + s] = select_with_histogram(gather.trace(s), rank, hist);
            }
        }
    });
    return out;
}

Frame mode_filter_baseline(const Sequence& seq, const EstimateOptions& opts) {
    const std::vector<ModeStats> field = compute_mode_field(seq, opts);
    Frame out(seq.width(), seq.height(), seq.channels());
    for (std::size_t s = 0; s < field.size(); ++s) {
        out.data[s] = field[s].mode;
    }
    return out;
}

} // namespace rainclean
