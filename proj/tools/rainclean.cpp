// rainclean: command-line entry point for background estimation, synthetic
// rain generation, evaluation, benchmarking, the curation service and the
// IRNN gradient check.
//
// Diagnostics go to stderr as one JSON object per line. Exit codes:
//   0 ok, 2 input error, 3 parameter/feasibility error, 4 environment error.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <regex>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "rainclean/background.hpp"
#include "rainclean/curation.hpp"
#include "rainclean/curation_http.hpp"
#include "rainclean/error.hpp"
#include "rainclean/frame_store.hpp"
#include "rainclean/metrics.hpp"
#include "rainclean/png_io.hpp"
#include "rainclean/rain_synth.hpp"
#include "rainclean/sam_kernel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rainclean;

namespace {

enum ExitCode { kOk = 0, kInputError = 2, kParameterError = 3, kEnvironmentError = 4 };

int exit_code_for(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::Parameter:
    case ErrorKind::Feasibility:
    case ErrorKind::Numeric:
    case ErrorKind::Shape:
    case ErrorKind::State: return kParameterError;
    default: return kInputError;
    }
}

void report_error(std::string_view kind, const std::string& message) {
    std::cerr << json{{"error", kind}, {"message", message}}.dump() << std::endl;
}

json psnr_value(double db) {
    if (db == kInfinitePsnr) {
        return "inf";
    }
    return db;
}

json vote_json(const PercentileVote& vote) {
    return json(std::vector<std::uint64_t>(vote.counts.begin(), vote.counts.end()));
}

json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open " + path.string());
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::Parameter, path.string() + ": " + e.what());
    }
}

void write_json_file(const fs::path& path, const json& j) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw Error(ErrorKind::Io, "cannot write " + path.string());
    }
    out << j.dump(2) << "\n";
}

struct Options {
    std::string input;
    std::string output;
    std::optional<std::size_t> n;
    unsigned threads = default_thread_count();
    std::optional<std::uint64_t> seed;
    std::string params;
    int threshold = kDefaultMaskThreshold;
    int port = 8080;
    std::string state_dir;
    std::string shape = "5x4x2";
    double step = 1e-5;
    std::vector<std::string> positional;
};

int cmd_estimate(const Options& o) {
    const Sequence seq = load_sequence(o.input, o.n);
    const CandidateClean result = estimate_background(seq, EstimateOptions{o.threads});
    fs::create_directories(o.output);
    png::write(fs::path(o.output) / "clean.png", result.image);
    const json sidecar = {{"p_hat", result.p_hat},
                          {"coverage", result.coverage},
                          {"n_used", result.n_used},
                          {"vote", vote_json(result.vote)}};
    write_json_file(fs::path(o.output) / "clean.json", sidecar);
    std::cout << sidecar.dump() << std::endl;
    return kOk;
}

int cmd_synth(const Options& o) {
    const Frame clean = png::read(o.input);
    RainStreakParams params = params_from_json(read_json_file(o.params));
    if (o.seed) {
        params.seed = *o.seed;
    }
    const std::size_t n = o.n.value_or(100);
    const SynthGroundTruth truth = synth_sequence(clean, params, n, o.threads);

    const fs::path out(o.output);
    write_sequence(out, truth.sequence);
    png::write(out / "clean.png", truth.clean);
    for (std::size_t k = 0; k < truth.masks.size(); ++k) {
        char name[32];
        std::snprintf(name, sizeof(name), "mask_%06zu.png", k);
        png::write(out / name, truth.masks[k].to_frame());
    }
    write_json_file(out / "params.json", params_to_json(params));
    std::cout << json{{"frames", n},
                      {"max_coverage", max_coverage_fraction(truth.masks)},
                      {"output", out.string()}}
                     .dump()
              << std::endl;
    return kOk;
}

int cmd_evaluate(const Options& o) {
    if (o.positional.size() != 2) {
        throw Error(ErrorKind::Parameter, "evaluate takes exactly two image paths");
    }
    const Frame a = png::read(o.positional[0]);
    const Frame b = png::read(o.positional[1]);
    const double p = psnr(a, b);
    const double s = ssim(a, b);
    std::cout << json{{"psnr_db", psnr_value(p)}, {"ssim", s}, {"n_sites", a.site_count()}}.dump()
              << std::endl;
    return kOk;
}

int cmd_bench(const Options& o) {
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    const Sequence seq = load_sequence(o.input, o.n);
    const auto t1 = clock::now();
    const CandidateClean result = estimate_background(seq, EstimateOptions{o.threads});
    const auto t2 = clock::now();
    const double load_s = std::chrono::duration<double>(t1 - t0).count();
    const double est_s = std::chrono::duration<double>(t2 - t1).count();
    if (!o.output.empty()) {
        fs::create_directories(o.output);
        png::write(fs::path(o.output) / "clean.png", result.image);
    }
    const double sites = static_cast<double>(seq.site_count());
    std::cout << json{{"sites", seq.site_count()},
                      {"frames", seq.size()},
                      {"threads", o.threads},
                      {"load_seconds", load_s},
                      {"estimate_seconds", est_s},
                      {"sites_per_second", est_s > 0 ? sites / est_s : 0.0},
                      {"p_hat", result.p_hat}}
                     .dump()
              << std::endl;
    return kOk;
}

int cmd_serve(const Options& o) {
    curation::ServiceOptions so;
    so.state_dir = o.state_dir;
    so.mask_threshold = o.threshold;
    so.threads = o.threads;
    curation::CurationService service(so);
    std::optional<fs::path> ui;
    if (!o.input.empty()) {
        ui = fs::path(o.input);
    }
    curation::HttpFrontend http(service, ui);
    const auto port = http.bind("127.0.0.1", o.port);
    if (!port) {
        report_error("environment", "cannot bind 127.0.0.1:" + std::to_string(o.port));
        return kEnvironmentError;
    }
    std::cerr << json{{"event", "listening"}, {"port", *port}}.dump() << std::endl;
    http.listen();
    return kOk;
}

int cmd_gradcheck(const Options& o) {
    static const std::regex shape_re(R"((\d+)x(\d+)x(\d+))");
    std::smatch m;
    if (!std::regex_match(o.shape, m, shape_re)) {
        throw Error(ErrorKind::Parameter, "shape must look like HxWxC");
    }
    const sam::GradcheckShape shape{std::stoi(m[1]), std::stoi(m[2]), std::stoi(m[3])};
    const sam::GradcheckReport report = sam::gradcheck(o.seed.value_or(0), shape, o.step);
    json j = sam::to_json(report);
    j["seed"] = o.seed.value_or(0);
    j["shape"] = o.shape;
    j["within_tolerance"] = report.max_rel_err < 1e-3;
    std::cout << j.dump() << std::endl;
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rain-free background estimation toolkit"};
    app.require_subcommand(1);
    Options o;

    auto* estimate = app.add_subcommand("estimate", "estimate a clean background from a frame directory");
    estimate->add_option("--input", o.input, "frame directory")->required();
    estimate->add_option("--output", o.output, "output directory")->required();
    estimate->add_option("--n", o.n, "use only the first n frames")->check(CLI::PositiveNumber);
    estimate->add_option("--threads", o.threads)->check(CLI::PositiveNumber);

    auto* synth = app.add_subcommand("synth", "render a synthetic rain sequence over a clean plate");
    synth->add_option("--input", o.input, "clean plate PNG")->required();
    synth->add_option("--params", o.params, "rain parameters JSON")->required();
    synth->add_option("--output", o.output, "output directory")->required();
    synth->add_option("--n", o.n, "frame count (default 100)")->check(CLI::PositiveNumber);
    synth->add_option("--seed", o.seed, "override the params seed");
    synth->add_option("--threads", o.threads)->check(CLI::PositiveNumber);

    auto* evaluate = app.add_subcommand("evaluate", "PSNR/SSIM between two images");
    evaluate->add_option("images", o.positional, "two PNG paths")->expected(2)->required();

    auto* bench = app.add_subcommand("bench", "time background estimation");
    bench->add_option("--input", o.input, "frame directory")->required();
    bench->add_option("--threads", o.threads)->check(CLI::PositiveNumber);
    bench->add_option("--n", o.n)->check(CLI::PositiveNumber);
    bench->add_option("--output", o.output, "optional directory for clean.png");

    auto* serve = app.add_subcommand("serve", "run the curation HTTP service");
    serve->add_option("--state-dir", o.state_dir)->required();
    serve->add_option("--port", o.port)->check(CLI::Range(0, 65535));
    serve->add_option("--threshold", o.threshold, "rain mask threshold")->check(CLI::Range(0, 255));
    serve->add_option("--threads", o.threads)->check(CLI::PositiveNumber);
    serve->add_option("--input", o.input, "static UI asset directory");

    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of the IRNN kernel");
    gradcheck->add_option("--seed", o.seed);
    gradcheck->add_option("--shape", o.shape, "HxWxC, at most 8x8x4");
    gradcheck->add_option("--step", o.step)->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        report_error("usage", e.what());
        return kInputError;
    }

    try {
        if (*estimate) return cmd_estimate(o);
        if (*synth) return cmd_synth(o);
        if (*evaluate) return cmd_evaluate(o);
        if (*bench) return cmd_bench(o);
        if (*serve) return cmd_serve(o);
        if (*gradcheck) return cmd_gradcheck(o);
    } catch (const Error& e) {
        report_error(to_string(e.kind()), e.what());
        return exit_code_for(e.kind());
    } catch (const fs::filesystem_error& e) {
        report_error("io", e.what());
        return kEnvironmentError;
    } catch (const std::exception& e) {
        report_error("internal", e.what());
        return kEnvironmentError;
    }
    return kInputError;
}
