#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "rainclean/frame.hpp"
#include "rainclean/parallel.hpp"

namespace rainclean {

/// Geometry and photometry of the synthetic rain.
struct RainStreakParams {
    double direction = 0.0;      // degrees from vertical, -45..45
    double length = 12.0;        // pixels
    double width = 1.0;          // pixels
    double intensity_gain = 80.0; // additive brightness at the streak core
    int streaks_per_frame = 100;
    double coverage_cap = 0.4;   // max fraction of frames covering any site
    double noise_sigma = 0.0;    // Gaussian sensor noise, 0 disables
    std::uint64_t seed = 0;

    friend bool operator==(const RainStreakParams&, const RainStreakParams&) = default;
};

/// Throws Parameter for out-of-range fields.
void validate(const RainStreakParams& params);

/// Strict conversion: unknown keys and wrong types raise Parameter.
/// Missing keys keep their defaults.
RainStreakParams params_from_json(const nlohmann::json& j);
nlohmann::json params_to_json(const RainStreakParams& params);

struct StreakLayer {
    Frame layer; // single channel, added to every image channel
    BinaryMap mask; // layer > 0
};

/// Unconstrained rain layer for one frame, a pure function of
/// (params, frame_index, width, height).
StreakLayer synth_streak_layer(const RainStreakParams& params, std::size_t frame_index,
                               int width, int height);

struct SynthGroundTruth {
    Frame clean;
    std::vector<BinaryMap> masks; // pre-noise coverage per frame
    Sequence sequence;
};

/// Rain over a static clean plate. Streak placements that would push any site
/// above coverage_cap * n covered frames are re-rolled; a streak that cannot
/// be placed within a bounded number of attempts raises Feasibility.
SynthGroundTruth synth_sequence(const Frame& clean, const RainStreakParams& params,
                                std::size_t n, unsigned threads = default_thread_count());

/// Largest per-site covered-frame fraction across `masks`.
double max_coverage_fraction(const std::vector<BinaryMap>& masks);

} // namespace rainclean
