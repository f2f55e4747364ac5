#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "rainclean/frame.hpp"

namespace rainclean {

inline constexpr double kInfinitePsnr = std::numeric_limits<double>::infinity();
inline constexpr int kDefaultMaskThreshold = 10;

struct SsimParams {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 255.0;
};

/// Single-channel real map with values in [0, 1].
struct AttentionMap {
    int width = 0;
    int height = 0;
    std::vector<double> values;

    AttentionMap() = default;
    AttentionMap(int w, int h, double fill = 0.0)
        : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}
};

/// Real-valued residual with the same shape as the frame it is applied to.
struct ResidualMap {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<double> values;

    ResidualMap() = default;
    ResidualMap(int w, int h, int c, double fill = 0.0)
        : width(w), height(h), channels(c), values(static_cast<std::size_t>(w) * h * c, fill) {}
};

struct LossBreakdown {
    double total = 0.0;
    double l1 = 0.0;
    double l_ssim = 0.0;
    double l_att = 0.0;
};

/// 10 log10(255^2 / MSE); identical images give kInfinitePsnr.
double psnr(const Frame& a, const Frame& b);

/// Mean SSIM over all valid (unpadded) Gaussian windows, averaged over
/// channels. Throws Size when the image is smaller than the window.
double ssim(const Frame& a, const Frame& b, const SsimParams& params = {});

/// 1 where the largest per-channel increase of `rain` over `clean` exceeds
/// `threshold`.
RainMask rain_mask(const Frame& rain, const Frame& clean, int threshold = kDefaultMaskThreshold);

/// Mean squared difference between attention and mask.
double attention_loss(const AttentionMap& attention, const RainMask& mask);

/// L1 on [0,1]-scaled intensities + (1 - SSIM) + attention loss, unweighted.
LossBreakdown total_loss(const Frame& pred, const Frame& clean, const AttentionMap& attention,
                         const RainMask& mask, const SsimParams& params = {});

/// clamp(O - R, 0, 255), rounded to the nearest intensity.
Frame apply_residual(const Frame& observed, const ResidualMap& residual);

/// Pairwise (cascade) summation; fixed order for any input length.
double pairwise_sum(const double* values, std::size_t count);

} // namespace rainclean
