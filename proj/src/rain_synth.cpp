#include "rainclean/rain_synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "rainclean/error.hpp"
#include "rainclean/random.hpp"

namespace rainclean {

namespace {

constexpr std::uint64_t kPlacementSalt = 0x5354524b; // "STRK"
constexpr std::uint64_t kNoiseSalt = 0x4e4f4953;     // "NOIS"
constexpr int kMaxPlacementAttempts = 64;

struct StreakPixel {
    std::size_t index; // y * width + x
    std::uint8_t value;
};

// Rasterizes one streak centred on pixel (cx, cy). Coverage is a separable
// tent: full inside the segment core, linear falloff over half a pixel past
// its ends and sides.
std::vector<StreakPixel> rasterize(const RainStreakParams& p, int cx, int cy, int width,
                                   int height) {
    const double theta = p.direction * std::numbers::pi / 180.0;
    const double ux = std::sin(theta), uy = std::cos(theta);  // along the streak
    const double vx = std::cos(theta), vy = -std::sin(theta); // across
    const double half_len = p.length / 2.0 + 0.5;
    const double half_wid = p.width / 2.0 + 0.5;

    const int ext_x = static_cast<int>(std::ceil(std::abs(ux) * half_len + std::abs(vx) * half_wid));
    const int ext_y = static_cast<int>(std::ceil(std::abs(uy) * half_len + std::abs(vy) * half_wid));

    std::vector<StreakPixel> pixels;
    for (int y = std::max(0, cy - ext_y); y <= std::min(height - 1, cy + ext_y); ++y) {
        for (int x = std::max(0, cx - ext_x); x <= std::min(width - 1, cx + ext_x); ++x) {
            const double dx = x - cx, dy = y - cy;
            const double along = std::clamp(half_len - std::abs(dx * ux + dy * uy), 0.0, 1.0);
            const double across = std::clamp(half_wid - std::abs(dx * vx + dy * vy), 0.0, 1.0);
            const double v = std::floor(p.intensity_gain * along * across + 0.5);
            if (v > 0.0) {
                pixels.push_back({static_cast<std::size_t>(y) * width + x,
                                  static_cast<std::uint8_t>(std::min(v, 255.0))});
            }
        }
    }
    return pixels;
}

std::vector<StreakPixel> draw_streak(const RainStreakParams& p, RandomStream& rng, int width,
                                     int height) {
    const int cx = static_cast<int>(rng.below(static_cast<std::uint64_t>(width)));
    const int cy = static_cast<int>(rng.below(static_cast<std::uint64_t>(height)));
    return rasterize(p, cx, cy, width, height);
}

// Rounded Gaussian offsets: frames hold integers, so floor(v + sigma*g + 0.5)
// equals v + floor(sigma*g + 0.5). The offset is drawn by inverting its exact
// CDF, P(offset <= k) = Phi((k + 0.5) / sigma), truncated at 10 sigma.
class RoundedGaussian {
public:
    explicit RoundedGaussian(double sigma) {
        const int reach = static_cast<int>(std::ceil(10.0 * sigma)) + 1;
        first_ = -reach;
        for (int k = -reach; k < reach; ++k) {
            cdf_.push_back(0.5 * std::erfc(-(k + 0.5) / (sigma * std::numbers::sqrt2)));
        }
        cdf_.push_back(1.0);
        // guide_[b] is the first index whose cdf exceeds b / kBuckets.
        for (std::size_t b = 0, i = 0; b < kBuckets; ++b) {
            while (cdf_[i] <= static_cast<double>(b) / kBuckets) {
                ++i;
            }
            guide_[b] = static_cast<std::uint32_t>(i);
        }
    }

    int sample(RandomStream& rng) const {
        const double u = rng.uniform();
        std::size_t i = guide_[static_cast<std::size_t>(u * kBuckets)];
        while (cdf_[i] <= u) {
            ++i;
        }
        return first_ + static_cast<int>(i);
    }

private:
    static constexpr std::size_t kBuckets = 4096;
    int first_ = 0;
    std::vector<double> cdf_; // cdf_[i] = P(offset <= first_ + i)
    std::array<std::uint32_t, kBuckets> guide_{};
};

void stamp(StreakLayer& out, const std::vector<StreakPixel>& pixels) {
    for (const auto& px : pixels) {
        out.layer.data[px.index] = std::max(out.layer.data[px.index], px.value);
        out.mask.bits[px.index] = 1;
    }
}

void require_number(const nlohmann::json& j, const char* key) {
    if (!j.at(key).is_number()) {
        throw Error(ErrorKind::Parameter, std::string("params field '") + key + "' must be a number");
    }
}

} // namespace

void validate(const RainStreakParams& p) {
    auto fail = [](const std::string& what) { throw Error(ErrorKind::Parameter, what); };
    if (!std::isfinite(p.direction) || p.direction < -45.0 || p.direction > 45.0) {
        fail("direction must lie in [-45, 45] degrees");
    }
    if (!std::isfinite(p.length) || p.length <= 0.0) {
        fail("streak length must be positive");
    }
    if (!std::isfinite(p.width) || p.width <= 0.0) {
        fail("streak width must be positive");
    }
    if (!std::isfinite(p.intensity_gain) || p.intensity_gain < 0.0 || p.intensity_gain > 255.0) {
        fail("intensity_gain must lie in [0, 255]");
    }
    if (p.streaks_per_frame < 0) {
        fail("streaks_per_frame must be non-negative");
    }
    if (!std::isfinite(p.coverage_cap) || p.coverage_cap < 0.0 || p.coverage_cap >= 1.0) {
        fail("coverage_cap must lie in [0, 1)");
    }
    if (!std::isfinite(p.noise_sigma) || p.noise_sigma < 0.0) {
        fail("noise_sigma must be non-negative");
    }
}

RainStreakParams params_from_json(const nlohmann::json& j) {
    if (!j.is_object()) {
        throw Error(ErrorKind::Parameter, "params must be a JSON object");
    }
    RainStreakParams p;
    for (const auto& [key, value] : j.items()) {
        if (key == "direction") {
            require_number(j, "direction");
            p.direction = value.get<double>();
        } else if (key == "length") {
            require_number(j, "length");
            p.length = value.get<double>();
        } else if (key == "width") {
            require_number(j, "width");
            p.width = value.get<double>();
        } else if (key == "intensity_gain") {
            require_number(j, "intensity_gain");
            p.intensity_gain = value.get<double>();
        } else if (key == "streaks_per_frame") {
            if (!value.is_number_integer()) {
                throw Error(ErrorKind::Parameter, "streaks_per_frame must be an integer");
            }
            p.streaks_per_frame = value.get<int>();
        } else if (key == "coverage_cap") {
            require_number(j, "coverage_cap");
            p.coverage_cap = value.get<double>();
        } else if (key == "noise_sigma") {
            require_number(j, "noise_sigma");
            p.noise_sigma = value.get<double>();
        } else if (key == "seed") {
            if (!value.is_number_unsigned()) {
                throw Error(ErrorKind::Parameter, "seed must be a non-negative integer");
            }
            p.seed = value.get<std::uint64_t>();
        } else {
            throw Error(ErrorKind::Parameter, "unknown params key '" + key + "'");
        }
    }
    validate(p);
    return p;
}

nlohmann::json params_to_json(const RainStreakParams& p) {
    return {
        {"direction", p.direction},
        {"length", p.length},
        {"width", p.width},
        {"intensity_gain", p.intensity_gain},
        {"streaks_per_frame", p.streaks_per_frame},
        {"coverage_cap", p.coverage_cap},
        {"noise_sigma", p.noise_sigma},
        {"seed", p.seed},
    };
}

StreakLayer synth_streak_layer(const RainStreakParams& params, std::size_t frame_index,
                               int width, int height) {
    validate(params);
    StreakLayer out{Frame(width, height, 1), BinaryMap(width, height)};
    RandomStream rng(params.seed, frame_index, kPlacementSalt);
    for (int s = 0; s < params.streaks_per_frame; ++s) {
        stamp(out, draw_streak(params, rng, width, height));
    }
    return out;
}

SynthGroundTruth synth_sequence(const Frame& clean, const RainStreakParams& params,
                                std::size_t n, unsigned threads) {
    validate(params);
    validate_frame(clean);
    if (n < 1) {
        throw Error(ErrorKind::Parameter, "sequence length must be at least 1");
    }
    const int w = clean.width, h = clean.height;
    const std::size_t pixels = static_cast<std::size_t>(w) * h;
    // Tolerance absorbs representation error in cap * n (0.4 * 100 etc).
    const auto cap_frames = static_cast<std::uint32_t>(std::floor(params.coverage_cap * n + 1e-9));

    // Placement runs in frame order because the cap couples frames; each
    // frame still draws from its own stream.
    std::vector<std::uint32_t> covered(pixels, 0);
    std::vector<StreakLayer> layers;
    layers.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        StreakLayer layer{Frame(w, h, 1), BinaryMap(w, h)};
        RandomStream rng(params.seed, k, kPlacementSalt);
        for (int s = 0; s < params.streaks_per_frame; ++s) {
            bool placed = false;
            for (int attempt = 0; attempt < kMaxPlacementAttempts && !placed; ++attempt) {
                const auto streak = draw_streak(params, rng, w, h);
                placed = std::all_of(streak.begin(), streak.end(), [&](const StreakPixel& px) {
                    return layer.mask.bits[px.index] || covered[px.index] < cap_frames;
                });
                if (placed) {
                    for (const auto& px : streak) {
                        covered[px.index] += !layer.mask.bits[px.index];
                    }
                    stamp(layer, streak);
                }
            }
            if (!placed) {
                throw Error(ErrorKind::Feasibility,
                            "cannot place streak " + std::to_string(s) + " of frame " +
                                std::to_string(k) + " within coverage_cap " +
                                std::to_string(params.coverage_cap) + " after " +
                                std::to_string(kMaxPlacementAttempts) + " attempts");
            }
        }
        layers.push_back(std::move(layer));
    }

    std::vector<Frame> frames(n);
    const int channels = clean.channels;
    const RoundedGaussian noise_offsets(params.noise_sigma > 0.0 ? params.noise_sigma : 1.0);
    parallel_chunks(n, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k) {
            Frame f(w, h, channels);
            RandomStream noise(params.seed, k, kNoiseSalt);
            for (std::size_t px = 0; px < pixels; ++px) {
                const int add = layers[k].layer.data[px];
                for (int c = 0; c < channels; ++c) {
                    const std::size_t i = px * channels + c;
                    int v = std::min(255, clean.data[i] + add);
                    if (params.noise_sigma > 0.0) {
                        v = std::clamp(v + noise_offsets.sample(noise), 0, 255);
                    }
                    f.data[i] = static_cast<std::uint8_t>(v);
                }
            }
            frames[k] = std::move(f);
        }
    });

    SynthGroundTruth truth;
    truth.clean = clean;
    truth.clean.index = 0;
    truth.masks.reserve(n);
    for (auto& layer : layers) {
        truth.masks.push_back(std::move(layer.mask));
    }
    truth.sequence = Sequence(std::move(frames), "synthetic");
    return truth;
}

double max_coverage_fraction(const std::vector<BinaryMap>& masks) {
    if (masks.empty()) {
        return 0.0;
    }
    std::vector<std::uint32_t> counts(masks.front().bits.size(), 0);
    for (const auto& m : masks) {
        for (std::size_t i = 0; i < counts.size(); ++i) {
            counts[i] += m.bits[i];
        }
    }
    return static_cast<double>(*std::max_element(counts.begin(), counts.end())) /
           static_cast<double>(masks.size());
}

} // namespace rainclean
