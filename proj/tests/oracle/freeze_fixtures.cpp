// Records the frozen expectations used by the acceptance suite:
//   * noisy-regression p_hat, image digest, PSNR and SSIM per scenario,
//     computed by the naive oracle estimator and the reference metrics (no
//     library estimator involved);
//   * the single-thread wall time of the library estimator on the reference
//     1280x720x100 input, used as the performance-regression baseline.
//
// Usage: freeze_fixtures <noisy_regression.json> [<bench_baseline.json>]

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "../acceptance/scenarios.hpp"
#include "digest.hpp"
#include "naive_estimator.hpp"
#include "rainclean/background.hpp"
#include "reference_ssim.hpp"

using nlohmann::json;

namespace {

oracle::Field to_field(const rainclean::Sequence& seq) {
    oracle::Field f{seq.width(), seq.height(), seq.channels(), {}};
    for (const auto& frame : seq.frames()) {
        f.frames.push_back(frame.data);
    }
    return f;
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: freeze_fixtures <noisy_regression.json> [<bench_baseline.json>]\n";
        return 2;
    }
    json entries = json::array();
    for (std::uint64_t seed : scenarios::kSeeds) {
        const auto clean = scenarios::clean_plate(seed, scenarios::kSize, scenarios::kSize);
        const auto truth = rainclean::synth_sequence(
            clean, scenarios::rain_params(seed, scenarios::kNoiseSigma), scenarios::kFrames, 1);
        const auto result = oracle::naive_estimate(to_field(truth.sequence));
        const double p = oracle::reference_psnr(result.image, clean.data);
        const double s = oracle::reference_ssim(result.image, clean.data, clean.width, clean.height, 3);
        const double p_mode = oracle::reference_psnr(result.mode_image, clean.data);
        entries.push_back({{"seed", seed},
                           {"p_hat", result.p_hat},
                           {"image_fnv1a64", oracle::fnv1a64_hex(result.image)},
                           {"psnr_db", p},
                           {"ssim", s},
                           {"mode_filter_psnr_db", p_mode},
                           {"max_coverage", rainclean::max_coverage_fraction(truth.masks)}});
        std::cerr << entries.back().dump() << "\n";
    }
    std::ofstream(argv[1]) << json{{"noise_sigma", scenarios::kNoiseSigma},
                                   {"frames", scenarios::kFrames},
                                   {"size", scenarios::kSize},
                                   {"sequences", entries}}
                                  .dump(2)
                           << "\n";

    if (argc >= 3) {
        const auto clean =
            scenarios::clean_plate(scenarios::kBenchSeed, scenarios::kBenchWidth, scenarios::kBenchHeight);
        const auto truth = rainclean::synth_sequence(
            clean, scenarios::rain_params(scenarios::kBenchSeed, scenarios::kNoiseSigma),
            scenarios::kFrames, 1);
        double best = 1e30;
        for (int run = 0; run < 3; ++run) {
            const auto t0 = std::chrono::steady_clock::now();
            const auto r = rainclean::estimate_background(truth.sequence, {1});
            const auto t1 = std::chrono::steady_clock::now();
            best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
            (void)r;
        }
        std::ofstream(argv[2]) << json{{"width", scenarios::kBenchWidth},
                                       {"height", scenarios::kBenchHeight},
                                       {"frames", scenarios::kFrames},
                                       {"single_thread_seconds", best}}
                                      .dump(2)
                               << "\n";
        std::cerr << "bench baseline " << best << " s\n";
    }
    return 0;
}
