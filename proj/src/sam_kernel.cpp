#include "rainclean/sam_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "rainclean/error.hpp"
#include "rainclean/random.hpp"

namespace rainclean::sam {

namespace {

// Records the ReLU activation pattern of a forward pass so the gradient
// checker can tell when a finite-difference step crosses a kink.
struct KinkRecorder {
    std::vector<std::uint8_t> active;
};

template <typename T>
void require_finite(const TensorMap<T>& x, const char* what) {
    for (T v : x.data) {
        if (!std::isfinite(static_cast<double>(v))) {
            throw Error(ErrorKind::Numeric, std::string(what) + ": non-finite value");
        }
    }
}

template <typename T>
void require_shape(const TensorMap<T>& x) {
    if (x.height < 1 || x.width < 1 || x.channels < 1 ||
        x.data.size() != static_cast<std::size_t>(x.height) * x.width * x.channels) {
        throw Error(ErrorKind::Shape, "tensor map data does not match its shape");
    }
}

template <typename T>
void require_alpha(const DirectionalWeights<T>& w, int channels) {
    for (const auto& a : w.alpha) {
        if (static_cast<int>(a.size()) != channels) {
            throw Error(ErrorKind::Shape, "directional weights need one alpha per channel");
        }
        for (T v : a) {
            if (!std::isfinite(static_cast<double>(v))) {
                throw Error(ErrorKind::Numeric, "non-finite recurrence weight");
            }
        }
    }
}

template <typename T>
void require_mix(const MixWeights<T>& mix, int channels) {
    if (mix.in_channels != 4 * channels || mix.out_channels < 1 ||
        mix.matrix.size() != static_cast<std::size_t>(mix.in_channels) * mix.out_channels) {
        throw Error(ErrorKind::Shape, "mix weights must map " + std::to_string(4 * channels) +
                                          " channels");
    }
}

// Geometry of a scan: `lines` independent lines of `length` steps.
struct ScanGeometry {
    Direction dir;
    int height;
    int width;

    int lines() const { return (dir == Direction::Right || dir == Direction::Left) ? height : width; }
    int length() const { return (dir == Direction::Right || dir == Direction::Left) ? width : height; }
    std::pair<int, int> cell(int line, int t) const {
        switch (dir) {
        case Direction::Right: return {line, t};
        case Direction::Left: return {line, width - 1 - t};
        case Direction::Down: return {t, line};
        case Direction::Up: return {height - 1 - t, line};
        }
        return {0, 0};
    }
};

template <typename T>
TensorMap<T> scan_impl(const TensorMap<T>& x, Direction dir, const std::vector<T>& alpha,
                       KinkRecorder* rec) {
    TensorMap<T> h(x.height, x.width, x.channels);
    const ScanGeometry g{dir, x.height, x.width};
    for (int line = 0; line < g.lines(); ++line) {
        for (int c = 0; c < x.channels; ++c) {
            T prev = T(0);
            for (int t = 0; t < g.length(); ++t) {
                const auto [i, j] = g.cell(line, t);
                const T pre = alpha[c] * prev + x.at(i, j, c);
                if (rec) {
                    rec->active.push_back(pre > T(0));
                }
                prev = std::max(pre, T(0));
                h.at(i, j, c) = prev;
            }
        }
    }
    return h;
}

template <typename T>
ScanGrad<T> scan_grad_impl(const TensorMap<T>& x, Direction dir, const std::vector<T>& alpha,
                           const TensorMap<T>& upstream) {
    const TensorMap<T> h = scan_impl(x, dir, alpha, nullptr);
    ScanGrad<T> out{TensorMap<T>(x.height, x.width, x.channels),
                    std::vector<T>(static_cast<std::size_t>(x.channels), T(0))};
    const ScanGeometry g{dir, x.height, x.width};
    for (int line = 0; line < g.lines(); ++line) {
        for (int c = 0; c < x.channels; ++c) {
            T d_pre_next = T(0); // dL/dpre at step t + 1
            for (int t = g.length() - 1; t >= 0; --t) {
                const auto [i, j] = g.cell(line, t);
                const T d_h = upstream.at(i, j, c) + alpha[c] * d_pre_next;
                const T d_pre = h.at(i, j, c) > T(0) ? d_h : T(0);
                out.dx.at(i, j, c) = d_pre;
                if (t > 0) {
                    const auto [pi, pj] = g.cell(line, t - 1);
                    out.dalpha[c] += d_pre * h.at(pi, pj, c);
                }
                d_pre_next = d_pre;
            }
        }
    }
    return out;
}

template <typename T>
struct RoundCache {
    std::array<TensorMap<T>, 4> scans; // in kDirections order
    TensorMap<T> out;
};

template <typename T>
RoundCache<T> round_forward(const TensorMap<T>& x, const DirectionalWeights<T>& w,
                            const MixWeights<T>& mix, KinkRecorder* rec) {
    require_shape(x);
    require_finite(x, "irnn");
    require_alpha(w, x.channels);
    require_mix(mix, x.channels);
    RoundCache<T> cache;
    for (int s = 0; s < 4; ++s) {
        cache.scans[s] = scan_impl(x, kDirections[s], w[kDirections[s]], rec);
    }
    const int c_in = x.channels;
    cache.out = TensorMap<T>(x.height, x.width, mix.out_channels);
    for (int i = 0; i < x.height; ++i) {
        for (int j = 0; j < x.width; ++j) {
            for (int o = 0; o < mix.out_channels; ++o) {
                T acc = T(0);
                for (int s = 0; s < 4; ++s) {
                    for (int c = 0; c < c_in; ++c) {
                        acc += mix.at(o, s * c_in + c) * cache.scans[s].at(i, j, c);
                    }
                }
                cache.out.at(i, j, o) = acc;
            }
        }
    }
    return cache;
}

// Returns dL/dx of the round; accumulates weight gradients into dw and dmix.
template <typename T>
TensorMap<T> round_backward(const TensorMap<T>& x, const DirectionalWeights<T>& w,
                            const MixWeights<T>& mix, const RoundCache<T>& cache,
                            const TensorMap<T>& d_out, DirectionalWeights<T>& dw,
                            MixWeights<T>& dmix) {
    const int c_in = x.channels;
    TensorMap<T> dx(x.height, x.width, c_in);
    for (int s = 0; s < 4; ++s) {
        TensorMap<T> d_scan(x.height, x.width, c_in);
        for (int i = 0; i < x.height; ++i) {
            for (int j = 0; j < x.width; ++j) {
                for (int c = 0; c < c_in; ++c) {
                    T acc = T(0);
                    for (int o = 0; o < mix.out_channels; ++o) {
                        acc += mix.at(o, s * c_in + c) * d_out.at(i, j, o);
                        dmix.at(o, s * c_in + c) += d_out.at(i, j, o) * cache.scans[s].at(i, j, c);
                    }
                    d_scan.at(i, j, c) = acc;
                }
            }
        }
        const Direction d = kDirections[s];
        ScanGrad<T> g = scan_grad_impl(x, d, w[d], d_scan);
        for (std::size_t k = 0; k < dx.data.size(); ++k) {
            dx.data[k] += g.dx.data[k];
        }
        for (int c = 0; c < c_in; ++c) {
            dw[d][c] += g.dalpha[c];
        }
    }
    return dx;
}

// Clamped so the result stays strictly inside (0, 1) in type T.
template <typename T>
T sigmoid(T v) {
    const T a = T(1) / (T(1) + std::exp(-v));
    return std::clamp(a, std::numeric_limits<T>::min(),
                      T(1) - std::numeric_limits<T>::epsilon() / T(2));
}

template <typename T>
GateOutput<T> gate_impl(const TensorMap<T>& features, const TensorMap<T>& context,
                        const AttentionWeights<T>& w) {
    require_shape(features);
    require_shape(context);
    if (features.height != context.height || features.width != context.width) {
        throw Error(ErrorKind::Shape, "features and context differ spatially");
    }
    if (static_cast<int>(w.projection.size()) != context.channels) {
        throw Error(ErrorKind::Shape, "attention projection needs one weight per context channel");
    }
    require_finite(features, "attention_gate");
    require_finite(context, "attention_gate");
    GateOutput<T> out{TensorMap<T>(features.height, features.width, features.channels),
                      TensorMap<T>(features.height, features.width, 1)};
    for (int i = 0; i < features.height; ++i) {
        for (int j = 0; j < features.width; ++j) {
            T s = w.bias;
            for (int c = 0; c < context.channels; ++c) {
                s += w.projection[c] * context.at(i, j, c);
            }
            const T a = sigmoid(s);
            out.attention.at(i, j, 0) = a;
            for (int c = 0; c < features.channels; ++c) {
                out.gated.at(i, j, c) = features.at(i, j, c) * a;
            }
        }
    }
    return out;
}

template <typename T>
DirectionalWeights<T> zeros_like(const DirectionalWeights<T>& w) {
    DirectionalWeights<T> z;
    for (int d = 0; d < 4; ++d) {
        z.alpha[d].assign(w.alpha[d].size(), T(0));
    }
    return z;
}

template <typename T>
MixWeights<T> zeros_like(const MixWeights<T>& m) {
    return {m.out_channels, m.in_channels, std::vector<T>(m.matrix.size(), T(0))};
}

} // namespace

template <typename T>
DirectionalWeights<T> DirectionalWeights<T>::filled(int channels, T value) {
    DirectionalWeights<T> w;
    for (auto& a : w.alpha) {
        a.assign(static_cast<std::size_t>(channels), value);
    }
    return w;
}

template <typename T>
MixWeights<T> MixWeights<T>::identity_sum(int channels) {
    MixWeights<T> m{channels, 4 * channels,
                    std::vector<T>(static_cast<std::size_t>(channels) * 4 * channels, T(0))};
    for (int c = 0; c < channels; ++c) {
        for (int s = 0; s < 4; ++s) {
            m.at(c, s * channels + c) = T(1);
        }
    }
    return m;
}

template <typename T>
SamParams<T> SamParams<T>::initialize(int channels, std::uint64_t seed, T scale) {
    RandomStream rng(seed);
    auto uniform_mix = [&] {
        MixWeights<T> m{channels, 4 * channels,
                        std::vector<T>(static_cast<std::size_t>(channels) * 4 * channels)};
        for (T& v : m.matrix) {
            v = static_cast<T>(rng.uniform(-1.0, 1.0)) * scale;
        }
        return m;
    };
    SamParams<T> p;
    p.w1 = DirectionalWeights<T>::filled(channels, T(1));
    p.w2 = DirectionalWeights<T>::filled(channels, T(1));
    p.mix1 = uniform_mix();
    p.mix2 = uniform_mix();
    p.attention.projection.resize(static_cast<std::size_t>(channels));
    for (T& v : p.attention.projection) {
        v = static_cast<T>(rng.uniform(-1.0, 1.0)) * scale;
    }
    return p;
}

template <typename T>
TensorMap<T> directional_scan(const TensorMap<T>& x, Direction dir,
                              const DirectionalWeights<T>& w) {
    require_shape(x);
    require_finite(x, "directional_scan");
    require_alpha(w, x.channels);
    return scan_impl(x, dir, w[dir], nullptr);
}

template <typename T>
ScanGrad<T> directional_scan_grad(const TensorMap<T>& x, Direction dir,
                                  const DirectionalWeights<T>& w, const TensorMap<T>& upstream) {
    require_shape(x);
    require_finite(x, "directional_scan_grad");
    require_alpha(w, x.channels);
    if (!upstream.same_shape(x) || upstream.data.size() != x.data.size()) {
        throw Error(ErrorKind::Shape, "upstream gradient shape differs from the scan input");
    }
    return scan_grad_impl(x, dir, w[dir], upstream);
}

template <typename T>
TensorMap<T> irnn_round(const TensorMap<T>& x, const DirectionalWeights<T>& w,
                        const MixWeights<T>& mix) {
    return round_forward(x, w, mix, nullptr).out;
}

template <typename T>
TensorMap<T> two_round_irnn(const TensorMap<T>& x, const DirectionalWeights<T>& w1,
                            const DirectionalWeights<T>& w2, const MixWeights<T>& mix1,
                            const MixWeights<T>& mix2) {
    return irnn_round(irnn_round(x, w1, mix1), w2, mix2);
}

template <typename T>
GateOutput<T> attention_gate(const TensorMap<T>& features, const TensorMap<T>& context,
                             const AttentionWeights<T>& w) {
    return gate_impl(features, context, w);
}

template <typename T>
GateOutput<T> sam_forward(const TensorMap<T>& features, const TensorMap<T>& x,
                          const SamParams<T>& p) {
    return attention_gate(features, two_round_irnn(x, p.w1, p.w2, p.mix1, p.mix2), p.attention);
}

template <typename T>
SamGrads<T> sam_backward(const TensorMap<T>& features, const TensorMap<T>& x,
                         const SamParams<T>& p, const TensorMap<T>& d_gated,
                         const TensorMap<T>& d_attention) {
    const RoundCache<T> r1 = round_forward(x, p.w1, p.mix1, nullptr);
    const RoundCache<T> r2 = round_forward(r1.out, p.w2, p.mix2, nullptr);
    const TensorMap<T>& context = r2.out;
    const GateOutput<T> gate = gate_impl(features, context, p.attention);
    if (!d_gated.same_shape(gate.gated) || !d_attention.same_shape(gate.attention)) {
        throw Error(ErrorKind::Shape, "upstream gradient shapes differ from the module outputs");
    }

    SamGrads<T> g;
    g.dfeatures = TensorMap<T>(features.height, features.width, features.channels);
    g.dattention.projection.assign(p.attention.projection.size(), T(0));
    TensorMap<T> d_context(context.height, context.width, context.channels);
    for (int i = 0; i < features.height; ++i) {
        for (int j = 0; j < features.width; ++j) {
            const T a = gate.attention.at(i, j, 0);
            T d_a = d_attention.at(i, j, 0);
            for (int c = 0; c < features.channels; ++c) {
                d_a += d_gated.at(i, j, c) * features.at(i, j, c);
                g.dfeatures.at(i, j, c) = d_gated.at(i, j, c) * a;
            }
            const T d_s = d_a * a * (T(1) - a);
            g.dattention.bias += d_s;
            for (int c = 0; c < context.channels; ++c) {
                g.dattention.projection[c] += d_s * context.at(i, j, c);
                d_context.at(i, j, c) = d_s * p.attention.projection[c];
            }
        }
    }

    g.dw1 = zeros_like(p.w1);
    g.dw2 = zeros_like(p.w2);
    g.dmix1 = zeros_like(p.mix1);
    g.dmix2 = zeros_like(p.mix2);
    const TensorMap<T> d_mid = round_backward(r1.out, p.w2, p.mix2, r2, d_context, g.dw2, g.dmix2);
    g.dx = round_backward(x, p.w1, p.mix1, r1, d_mid, g.dw1, g.dmix1);
    return g;
}

// ---------------------------------------------------------------------------
// Gradient checking

namespace {

using LossFn = std::function<double(KinkRecorder*)>;

struct Checked {
    double* value;
    double analytic;
};

void check_partials(const LossFn& loss, const std::vector<Checked>& partials, double step,
                    GradcheckReport& report) {
    KinkRecorder base;
    loss(&base);
    for (const Checked& p : partials) {
        const double saved = *p.value;
        KinkRecorder plus, minus;
        *p.value = saved + step;
        const double lp = loss(&plus);
        *p.value = saved - step;
        const double lm = loss(&minus);
        *p.value = saved;
        if (plus.active != base.active || minus.active != base.active) {
            ++report.num_skipped_kinks;
            continue;
        }
        const double numeric = (lp - lm) / (2.0 * step);
        const double denom = std::max({std::abs(p.analytic), std::abs(numeric), kGradcheckFloor});
        report.max_rel_err = std::max(report.max_rel_err, std::abs(p.analytic - numeric) / denom);
        ++report.num_checked;
    }
}

TensorMap<double> random_map(RandomStream& rng, int h, int w, int c, double lo, double hi) {
    TensorMap<double> m(h, w, c);
    for (double& v : m.data) {
        v = rng.uniform(lo, hi);
    }
    return m;
}

DirectionalWeights<double> random_alpha(RandomStream& rng, int c) {
    DirectionalWeights<double> w;
    for (auto& a : w.alpha) {
        a.resize(static_cast<std::size_t>(c));
        for (double& v : a) {
            v = rng.uniform(0.2, 1.2);
        }
    }
    return w;
}

MixWeights<double> random_mix(RandomStream& rng, int c) {
    MixWeights<double> m{c, 4 * c, std::vector<double>(static_cast<std::size_t>(c) * 4 * c)};
    for (double& v : m.matrix) {
        v = rng.uniform(-0.5, 0.5);
    }
    return m;
}

double dot(const TensorMap<double>& a, const TensorMap<double>& b) {
    double acc = 0.0;
    for (std::size_t k = 0; k < a.data.size(); ++k) {
        acc += a.data[k] * b.data[k];
    }
    return acc;
}

void add_map(std::vector<Checked>& out, TensorMap<double>& values, const TensorMap<double>& grad) {
    for (std::size_t k = 0; k < values.data.size(); ++k) {
        out.push_back({&values.data[k], grad.data[k]});
    }
}

void add_alpha(std::vector<Checked>& out, DirectionalWeights<double>& w,
               const DirectionalWeights<double>& g) {
    for (int d = 0; d < 4; ++d) {
        for (std::size_t c = 0; c < w.alpha[d].size(); ++c) {
            out.push_back({&w.alpha[d][c], g.alpha[d][c]});
        }
    }
}

void add_mix(std::vector<Checked>& out, MixWeights<double>& m, const MixWeights<double>& g) {
    for (std::size_t k = 0; k < m.matrix.size(); ++k) {
        out.push_back({&m.matrix[k], g.matrix[k]});
    }
}

} // namespace

GradcheckReport gradcheck(std::uint64_t seed, const GradcheckShape& shape, double step) {
    if (shape.height < 1 || shape.width < 1 || shape.channels < 1 || shape.height > 8 ||
        shape.width > 8 || shape.channels > 4) {
        throw Error(ErrorKind::Shape, "gradcheck shapes are limited to 8x8x4");
    }
    if (!(step > 0.0)) {
        throw Error(ErrorKind::Parameter, "finite-difference step must be positive");
    }
    const int h = shape.height, w = shape.width, c = shape.channels;
    RandomStream rng(seed, 0, 0x47524144); // "GRAD"
    GradcheckReport report;
    report.step = step;

    // Single scans, every direction.
    for (Direction dir : kDirections) {
        TensorMap<double> x = random_map(rng, h, w, c, -1.0, 1.0);
        DirectionalWeights<double> alpha = random_alpha(rng, c);
        const TensorMap<double> up = random_map(rng, h, w, c, -1.0, 1.0);
        const ScanGrad<double> g = directional_scan_grad(x, dir, alpha, up);
        std::vector<Checked> partials;
        add_map(partials, x, g.dx);
        for (int k = 0; k < c; ++k) {
            partials.push_back({&alpha[dir][k], g.dalpha[k]});
        }
        const LossFn loss = [&](KinkRecorder* rec) {
            return dot(scan_impl(x, dir, alpha[dir], rec), up);
        };
        check_partials(loss, partials, step, report);
    }

    // Full module; the two-round context is covered through every IRNN
    // parameter, and a second pass isolates it with a zero attention path.
    for (int pass = 0; pass < 2; ++pass) {
        TensorMap<double> x = random_map(rng, h, w, c, -1.0, 1.0);
        TensorMap<double> features = random_map(rng, h, w, c, -1.0, 1.0);
        SamParams<double> p;
        p.w1 = random_alpha(rng, c);
        p.w2 = random_alpha(rng, c);
        p.mix1 = random_mix(rng, c);
        p.mix2 = random_mix(rng, c);
        p.attention.projection.resize(static_cast<std::size_t>(c));
        for (double& v : p.attention.projection) {
            v = rng.uniform(-0.5, 0.5);
        }
        p.attention.bias = rng.uniform(-0.5, 0.5);
        const TensorMap<double> d_gated = random_map(rng, h, w, c, -1.0, 1.0);
        const TensorMap<double> d_attention =
            pass == 0 ? random_map(rng, h, w, 1, -1.0, 1.0) : TensorMap<double>(h, w, 1);

        const SamGrads<double> g = sam_backward(features, x, p, d_gated, d_attention);
        std::vector<Checked> partials;
        add_map(partials, x, g.dx);
        add_map(partials, features, g.dfeatures);
        add_alpha(partials, p.w1, g.dw1);
        add_alpha(partials, p.w2, g.dw2);
        add_mix(partials, p.mix1, g.dmix1);
        add_mix(partials, p.mix2, g.dmix2);
        for (std::size_t k = 0; k < p.attention.projection.size(); ++k) {
            partials.push_back({&p.attention.projection[k], g.dattention.projection[k]});
        }
        partials.push_back({&p.attention.bias, g.dattention.bias});

        const LossFn loss = [&](KinkRecorder* rec) {
            const RoundCache<double> r1 = round_forward(x, p.w1, p.mix1, rec);
            const RoundCache<double> r2 = round_forward(r1.out, p.w2, p.mix2, rec);
            const GateOutput<double> out = gate_impl(features, r2.out, p.attention);
            return dot(out.gated, d_gated) + dot(out.attention, d_attention);
        };
        check_partials(loss, partials, step, report);
    }

    // Bare two-round IRNN with a linear read-out.
    {
        TensorMap<double> x = random_map(rng, h, w, c, -1.0, 1.0);
        DirectionalWeights<double> w1 = random_alpha(rng, c), w2 = random_alpha(rng, c);
        MixWeights<double> mix1 = random_mix(rng, c), mix2 = random_mix(rng, c);
        const TensorMap<double> up = random_map(rng, h, w, c, -1.0, 1.0);
        const RoundCache<double> r1 = round_forward(x, w1, mix1, nullptr);
        const RoundCache<double> r2 = round_forward(r1.out, w2, mix2, nullptr);
        DirectionalWeights<double> dw1 = zeros_like(w1), dw2 = zeros_like(w2);
        MixWeights<double> dmix1 = zeros_like(mix1), dmix2 = zeros_like(mix2);
        const TensorMap<double> d_mid = round_backward(r1.out, w2, mix2, r2, up, dw2, dmix2);
        const TensorMap<double> dx = round_backward(x, w1, mix1, r1, d_mid, dw1, dmix1);
        std::vector<Checked> partials;
        add_map(partials, x, dx);
        add_alpha(partials, w1, dw1);
        add_alpha(partials, w2, dw2);
        add_mix(partials, mix1, dmix1);
        add_mix(partials, mix2, dmix2);
        const LossFn loss = [&](KinkRecorder* rec) {
            const RoundCache<double> a = round_forward(x, w1, mix1, rec);
            return dot(round_forward(a.out, w2, mix2, rec).out, up);
        };
        check_partials(loss, partials, step, report);
    }
    return report;
}

nlohmann::json to_json(const GradcheckReport& report) {
    return {{"max_rel_err", report.max_rel_err},
            {"num_checked", report.num_checked},
            {"num_skipped_kinks", report.num_skipped_kinks},
            {"step", report.step}};
}

#define RAINCLEAN_SAM_INSTANTIATE(T)                                                               \
    template struct DirectionalWeights<T>;                                                         \
    template struct MixWeights<T>;                                                                 \
    template struct SamParams<T>;                                                                  \
    template TensorMap<T> directional_scan(const TensorMap<T>&, Direction,                         \
                                           const DirectionalWeights<T>&);                          \
    template ScanGrad<T> directional_scan_grad(const TensorMap<T>&, Direction,                     \
                                               const DirectionalWeights<T>&, const TensorMap<T>&); \
    template TensorMap<T> irnn_round(const TensorMap<T>&, const DirectionalWeights<T>&,            \
                                     const MixWeights<T>&);                                        \
    template TensorMap<T> two_round_irnn(const TensorMap<T>&, const DirectionalWeights<T>&,        \
                                         const DirectionalWeights<T>&, const MixWeights<T>&,       \
                                         const MixWeights<T>&);                                    \
    template GateOutput<T> attention_gate(const TensorMap<T>&, const TensorMap<T>&,                \
                                          const AttentionWeights<T>&);                             \
    template GateOutput<T> sam_forward(const TensorMap<T>&, const TensorMap<T>&,                   \
                                       const SamParams<T>&);                                       \
    template SamGrads<T> sam_backward(const TensorMap<T>&, const TensorMap<T>&,                    \
                                      const SamParams<T>&, const TensorMap<T>&,                    \
                                      const TensorMap<T>&);

RAINCLEAN_SAM_INSTANTIATE(float)
RAINCLEAN_SAM_INSTANTIATE(double)

} // namespace rainclean::sam
