#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include <json.hpp>

namespace rainclean::sam {

/// Dense h x w x c feature map, channels innermost.
template <typename T>
struct TensorMap {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<T> data;

    TensorMap() = default;
    TensorMap(int h, int w, int c, T fill = T(0))
        : height(h), width(w), channels(c), data(static_cast<std::size_t>(h) * w * c, fill) {}

    std::size_t offset(int i, int j, int c) const noexcept {
        return (static_cast<std::size_t>(i) * width + j) * channels + c;
    }
    T& at(int i, int j, int c) { return data[offset(i, j, c)]; }
    const T& at(int i, int j, int c) const { return data[offset(i, j, c)]; }

    bool same_shape(const TensorMap& o) const noexcept {
        return height == o.height && width == o.width && channels == o.channels;
    }

    friend bool operator==(const TensorMap&, const TensorMap&) = default;
};

/// Scan direction, named by where the recurrence moves.
enum class Direction { Right, Left, Down, Up };
inline constexpr std::array<Direction, 4> kDirections{Direction::Up, Direction::Down,
                                                      Direction::Left, Direction::Right};

/// Per-direction, per-channel recurrence weights, indexed alpha[dir][c].
template <typename T>
struct DirectionalWeights {
    std::array<std::vector<T>, 4> alpha;

    static DirectionalWeights filled(int channels, T value);
    const std::vector<T>& operator[](Direction d) const { return alpha[static_cast<int>(d)]; }
    std::vector<T>& operator[](Direction d) { return alpha[static_cast<int>(d)]; }
};

/// 1x1 convolution from the four concatenated scans (4c) back to c.
/// Input channel k = dir_slot * c + channel, with dir_slot the position of
/// the direction in kDirections.
template <typename T>
struct MixWeights {
    int out_channels = 0;
    int in_channels = 0;
    std::vector<T> matrix; // out x in, row-major

    T& at(int o, int k) { return matrix[static_cast<std::size_t>(o) * in_channels + k]; }
    const T& at(int o, int k) const {
        return matrix[static_cast<std::size_t>(o) * in_channels + k];
    }

    /// Output channel c is the sum of the four scans of channel c.
    static MixWeights identity_sum(int channels);
};

/// 1x1 projection of the context map to one channel, before the sigmoid.
template <typename T>
struct AttentionWeights {
    std::vector<T> projection;
    T bias = T(0);
};

template <typename T>
struct ScanGrad {
    TensorMap<T> dx;
    std::vector<T> dalpha;
};

template <typename T>
struct GateOutput {
    TensorMap<T> gated;
    TensorMap<T> attention; // single channel, strictly inside (0, 1)
};

/// h <- max(alpha * h_prev + x, 0) along `dir`, zero state before the first
/// element of every line. Throws Numeric on non-finite input.
template <typename T>
TensorMap<T> directional_scan(const TensorMap<T>& x, Direction dir,
                              const DirectionalWeights<T>& w);

/// Reverse-mode adjoint of directional_scan; ReLU subgradient at 0 is 0.
template <typename T>
ScanGrad<T> directional_scan_grad(const TensorMap<T>& x, Direction dir,
                                  const DirectionalWeights<T>& w, const TensorMap<T>& upstream);

/// One round: four scans, concatenated, mixed back to c channels.
template <typename T>
TensorMap<T> irnn_round(const TensorMap<T>& x, const DirectionalWeights<T>& w,
                        const MixWeights<T>& mix);

template <typename T>
TensorMap<T> two_round_irnn(const TensorMap<T>& x, const DirectionalWeights<T>& w1,
                            const DirectionalWeights<T>& w2, const MixWeights<T>& mix1,
                            const MixWeights<T>& mix2);

/// attention = sigmoid(projection . context + bias); gated = features * attention.
template <typename T>
GateOutput<T> attention_gate(const TensorMap<T>& features, const TensorMap<T>& context,
                             const AttentionWeights<T>& w);

// Full attentive module: context = two_round_irnn(x), then attention_gate.

template <typename T>
struct SamParams {
    DirectionalWeights<T> w1, w2;
    MixWeights<T> mix1, mix2;
    AttentionWeights<T> attention;

    /// IRNN-style initialization: alpha = 1, mix and projection uniform in
    /// [-scale, scale].
    static SamParams initialize(int channels, std::uint64_t seed, T scale = T(0.1));
};

template <typename T>
struct SamGrads {
    TensorMap<T> dx;
    TensorMap<T> dfeatures;
    DirectionalWeights<T> dw1, dw2;
    MixWeights<T> dmix1, dmix2;
    AttentionWeights<T> dattention;
};

template <typename T>
GateOutput<T> sam_forward(const TensorMap<T>& features, const TensorMap<T>& x,
                          const SamParams<T>& params);

template <typename T>
SamGrads<T> sam_backward(const TensorMap<T>& features, const TensorMap<T>& x,
                         const SamParams<T>& params, const TensorMap<T>& d_gated,
                         const TensorMap<T>& d_attention);

struct GradcheckShape {
    int height = 5;
    int width = 4;
    int channels = 2;
};

struct GradcheckReport {
    double max_rel_err = 0.0;
    std::size_t num_checked = 0;
    std::size_t num_skipped_kinks = 0;
    double step = 0.0;
};

/// Compares every analytic partial of the scan, two-round and full
/// attentive-module composites with central differences in double
/// precision. Relative error is |a - n| / max(|a|, |n|, kGradcheckFloor).
inline constexpr double kGradcheckFloor = 1e-3;
inline constexpr double kKinkTolerance = 1e-6;

GradcheckReport gradcheck(std::uint64_t seed, const GradcheckShape& shape, double step = 1e-5);

nlohmann::json to_json(const GradcheckReport& report);

} // namespace rainclean::sam
