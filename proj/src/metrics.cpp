#include "rainclean/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rainclean/error.hpp"

namespace rainclean {

namespace {

void require_same_shape(const Frame& a, const Frame& b, const char* what) {
    validate_frame(a);
    validate_frame(b);
    if (!a.same_shape(b)) {
        throw Error(ErrorKind::Dimension,
                    std::string(what) + ": image shapes differ (" + std::to_string(a.width) +
                        "x" + std::to_string(a.height) + "x" + std::to_string(a.channels) +
                        " vs " + std::to_string(b.width) + "x" + std::to_string(b.height) + "x" +
                        std::to_string(b.channels) + ")");
    }
}

std::vector<double> gaussian_taps(int size, double sigma) {
    std::vector<double> taps(static_cast<std::size_t>(size));
    const double centre = (size - 1) / 2.0;
    double sum = 0.0;
    for (int i = 0; i < size; ++i) {
        const double d = i - centre;
        taps[i] = std::exp(-(d * d) / (2.0 * sigma * sigma));
        sum += taps[i];
    }
    for (double& t : taps) {
        t /= sum;
    }
    return taps;
}

// Valid-mode separable filter of one plane: out is (w - k + 1) x (h - k + 1).
std::vector<double> filter_valid(const std::vector<double>& plane, int w, int h,
                                 const std::vector<double>& taps) {
    const int k = static_cast<int>(taps.size());
    const int ow = w - k + 1, oh = h - k + 1;
    std::vector<double> rows(static_cast<std::size_t>(ow) * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int t = 0; t < k; ++t) {
                acc += taps[t] * plane[static_cast<std::size_t>(y) * w + x + t];
            }
            rows[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    }
    std::vector<double> out(static_cast<std::size_t>(ow) * oh);
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int t = 0; t < k; ++t) {
                acc += taps[t] * rows[static_cast<std::size_t>(y + t) * ow + x];
            }
            out[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    }
    return out;
}

} // namespace

double pairwise_sum(const double* values, std::size_t count) {
    if (count <= 8) {
        double acc = 0.0;
        for (std::size_t i = 0; i < count; ++i) {
            acc += values[i];
        }
        return acc;
    }
    const std::size_t half = count / 2;
    return pairwise_sum(values, half) + pairwise_sum(values + half, count - half);
}

double psnr(const Frame& a, const Frame& b) {
    require_same_shape(a, b, "psnr");
    std::vector<double> sq(a.data.size());
    for (std::size_t i = 0; i < sq.size(); ++i) {
        const double d = static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]);
        sq[i] = d * d;
    }
    const double mse = pairwise_sum(sq.data(), sq.size()) / static_cast<double>(sq.size());
    if (mse == 0.0) {
        return kInfinitePsnr;
    }
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double ssim(const Frame& a, const Frame& b, const SsimParams& params) {
    require_same_shape(a, b, "ssim");
    if (params.k1 <= 0.0 || params.k2 <= 0.0 || params.window < 1 || params.sigma <= 0.0) {
        throw Error(ErrorKind::Parameter, "invalid SSIM parameters");
    }
    if (a.width < params.window || a.height < params.window) {
        throw Error(ErrorKind::Size, "ssim needs images of at least " +
                                         std::to_string(params.window) + "x" +
                                         std::to_string(params.window));
    }
    const int w = a.width, h = a.height;
    const std::size_t pixels = static_cast<std::size_t>(w) * h;
    const auto taps = gaussian_taps(params.window, params.sigma);
    const double c1 = (params.k1 * params.dynamic_range) * (params.k1 * params.dynamic_range);
    const double c2 = (params.k2 * params.dynamic_range) * (params.k2 * params.dynamic_range);

    std::vector<double> channel_means;
    for (int c = 0; c < a.channels; ++c) {
        std::vector<double> pa(pixels), pb(pixels), paa(pixels), pbb(pixels), pab(pixels);
        for (std::size_t i = 0; i < pixels; ++i) {
            const double va = a.data[i * a.channels + c];
            const double vb = b.data[i * b.channels + c];
            pa[i] = va;
            pb[i] = vb;
            paa[i] = va * va;
            pbb[i] = vb * vb;
            pab[i] = va * vb;
        }
        const auto mu_a = filter_valid(pa, w, h, taps);
        const auto mu_b = filter_valid(pb, w, h, taps);
        const auto e_aa = filter_valid(paa, w, h, taps);
        const auto e_bb = filter_valid(pbb, w, h, taps);
        const auto e_ab = filter_valid(pab, w, h, taps);

        std::vector<double> map(mu_a.size());
        for (std::size_t i = 0; i < map.size(); ++i) {
            const double ma = mu_a[i], mb = mu_b[i];
            const double var_a = e_aa[i] - ma * ma;
            const double var_b = e_bb[i] - mb * mb;
            const double cov = e_ab[i] - ma * mb;
            const double num = (2.0 * ma * mb + c1) * (2.0 * cov + c2);
            const double den = (ma * ma + mb * mb + c1) * (var_a + var_b + c2);
            map[i] = num / den;
        }
        channel_means.push_back(pairwise_sum(map.data(), map.size()) /
                                static_cast<double>(map.size()));
    }
    return pairwise_sum(channel_means.data(), channel_means.size()) /
           static_cast<double>(channel_means.size());
}

RainMask rain_mask(const Frame& rain, const Frame& clean, int threshold) {
    require_same_shape(rain, clean, "rain_mask");
    if (threshold < 0 || threshold > 255) {
        throw Error(ErrorKind::Parameter, "mask threshold must lie in [0, 255]");
    }
    RainMask mask(rain.width, rain.height);
    const std::size_t pixels = mask.bits.size();
    for (std::size_t px = 0; px < pixels; ++px) {
        int largest = -256;
        for (int c = 0; c < rain.channels; ++c) {
            const std::size_t i = px * rain.channels + c;
            largest = std::max(largest, static_cast<int>(rain.data[i]) - clean.data[i]);
        }
        mask.bits[px] = largest > threshold;
    }
    return mask;
}

double attention_loss(const AttentionMap& attention, const RainMask& mask) {
    if (attention.width != mask.width || attention.height != mask.height ||
        attention.values.size() != mask.bits.size()) {
        throw Error(ErrorKind::Dimension, "attention_loss: attention and mask shapes differ");
    }
    if (attention.values.empty()) {
        throw Error(ErrorKind::EmptyInput, "attention_loss: empty maps");
    }
    std::vector<double> sq(attention.values.size());
    for (std::size_t i = 0; i < sq.size(); ++i) {
        const double d = attention.values[i] - mask.bits[i];
        sq[i] = d * d;
    }
    return pairwise_sum(sq.data(), sq.size()) / static_cast<double>(sq.size());
}

LossBreakdown total_loss(const Frame& pred, const Frame& clean, const AttentionMap& attention,
                         const RainMask& mask, const SsimParams& params) {
    require_same_shape(pred, clean, "total_loss");
    if (mask.width != pred.width || mask.height != pred.height) {
        throw Error(ErrorKind::Dimension, "total_loss: mask shape differs from images");
    }
    LossBreakdown out;
    std::vector<double> abs_err(pred.data.size());
    for (std::size_t i = 0; i < abs_err.size(); ++i) {
        abs_err[i] = std::abs(static_cast<double>(pred.data[i]) - clean.data[i]) / 255.0;
    }
    out.l1 = pairwise_sum(abs_err.data(), abs_err.size()) / static_cast<double>(abs_err.size());
    out.l_ssim = 1.0 - ssim(pred, clean, params);
    out.l_att = attention_loss(attention, mask);
    out.total = out.l1 + out.l_ssim + out.l_att;
    return out;
}

Frame apply_residual(const Frame& observed, const ResidualMap& residual) {
    validate_frame(observed);
    if (residual.width != observed.width || residual.height != observed.height ||
        residual.channels != observed.channels ||
        residual.values.size() != observed.data.size()) {
        throw Error(ErrorKind::Dimension, "apply_residual: residual shape differs from image");
    }
    Frame out(observed.width, observed.height, observed.channels);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        const double v = std::floor(observed.data[i] - residual.values[i] + 0.5);
        out.data[i] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
    }
    return out;
}

} // namespace rainclean
