#pragma once

// Direct-window SSIM used only as a test oracle: for every valid window it
// builds the full 2-D Gaussian, then takes weighted means and centred
// second moments explicitly. Independent of the separable filtering in the
// library.

#include <cmath>
#include <cstdint>
#include <vector>

namespace oracle {

inline double reference_ssim(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b,
                             int width, int height, int channels) {
    constexpr int win = 11;
    constexpr double sigma = 1.5;
    const double c1 = std::pow(0.01 * 255.0, 2);
    const double c2 = std::pow(0.03 * 255.0, 2);

    std::vector<double> kernel(win * win);
    double total = 0.0;
    for (int dy = 0; dy < win; ++dy) {
        for (int dx = 0; dx < win; ++dx) {
            const double ry = dy - 5.0, rx = dx - 5.0;
            kernel[dy * win + dx] = std::exp(-(rx * rx + ry * ry) / (2.0 * sigma * sigma));
            total += kernel[dy * win + dx];
        }
    }
    for (double& k : kernel) {
        k /= total;
    }

    double sum_channels = 0.0;
    for (int c = 0; c < channels; ++c) {
        long double sum_map = 0.0L;
        long long windows = 0;
        for (int y0 = 0; y0 + win <= height; ++y0) {
            for (int x0 = 0; x0 + win <= width; ++x0) {
                double mu_a = 0.0, mu_b = 0.0;
                for (int dy = 0; dy < win; ++dy) {
                    for (int dx = 0; dx < win; ++dx) {
                        const std::size_t i =
                            (static_cast<std::size_t>(y0 + dy) * width + (x0 + dx)) * channels + c;
                        mu_a += kernel[dy * win + dx] * a[i];
                        mu_b += kernel[dy * win + dx] * b[i];
                    }
                }
                double var_a = 0.0, var_b = 0.0, cov = 0.0;
                for (int dy = 0; dy < win; ++dy) {
                    for (int dx = 0; dx < win; ++dx) {
                        const std::size_t i =
                            (static_cast<std::size_t>(y0 + dy) * width + (x0 + dx)) * channels + c;
                        const double da = a[i] - mu_a, db = b[i] - mu_b;
                        const double wgt = kernel[dy * win + dx];
                        var_a += wgt * da * da;
                        var_b += wgt * db * db;
                        cov += wgt * da * db;
                    }
                }
                sum_map += ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) /
                           ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
                ++windows;
            }
        }
        sum_channels += static_cast<double>(sum_map / windows);
    }
    return sum_channels / channels;
}

inline double reference_psnr(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
    long double se = 0.0L;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const long double d = static_cast<long double>(a[i]) - b[i];
        se += d * d;
    }
    if (se == 0.0L) {
        return INFINITY;
    }
    const long double mse = se / a.size();
    return static_cast<double>(10.0L * std::log10(255.0L * 255.0L / mse));
}

} // namespace oracle
