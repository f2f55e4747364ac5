#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace rainclean {

/// One 8-bit image, row-major with channels interleaved (gray or RGB).
struct Frame {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<std::uint8_t> data;
    std::size_t index = 0;

    Frame() = default;
    /// Allocates a zero-filled frame; throws on invalid dimensions.
    Frame(int width, int height, int channels, std::uint8_t fill = 0);

    std::size_t site_count() const noexcept {
        return static_cast<std::size_t>(width) * height * channels;
    }
    std::size_t offset(int x, int y, int c) const noexcept {
        return (static_cast<std::size_t>(y) * width + x) * channels + c;
    }
    std::uint8_t at(int x, int y, int c) const { return data[offset(x, y, c)]; }
    std::uint8_t& at(int x, int y, int c) { return data[offset(x, y, c)]; }

    bool same_shape(const Frame& other) const noexcept {
        return width == other.width && height == other.height && channels == other.channels;
    }
};

/// Pixel equality; the sequence index is ignored.
bool same_pixels(const Frame& a, const Frame& b) noexcept;

/// Throws Dimension unless data length and dimensions are consistent.
void validate_frame(const Frame& frame);

/// Per-pixel 0/1 map sharing a frame's spatial grid.
struct BinaryMap {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;

    BinaryMap() = default;
    BinaryMap(int w, int h) : width(w), height(h), bits(static_cast<std::size_t>(w) * h, 0) {}

    std::uint8_t at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t& at(int x, int y) { return bits[static_cast<std::size_t>(y) * width + x]; }
    std::size_t count() const noexcept;

    /// Gray frame with 255 where set.
    Frame to_frame() const;
    /// Inverse of to_frame(): nonzero gray pixels become 1.
    static BinaryMap from_frame(const Frame& frame);

    friend bool operator==(const BinaryMap&, const BinaryMap&) = default;
};

using RainMask = BinaryMap;

/// Temporal samples at one (x, y, channel) site, in frame order.
using PixelTrace = std::vector<std::uint8_t>;

/// Frames of a static scene sharing one shape. Immutable once built.
class Sequence {
public:
    Sequence() = default;
    /// Validates shapes and renumbers frame indices 0..N-1.
    Sequence(std::vector<Frame> frames, std::string source_id = {});

    std::size_t size() const noexcept { return frames_.size(); }
    bool empty() const noexcept { return frames_.empty(); }
    const Frame& operator[](std::size_t k) const { return frames_[k]; }
    std::span<const Frame> frames() const noexcept { return frames_; }
    const std::string& source_id() const noexcept { return source_id_; }

    int width() const noexcept { return frames_.empty() ? 0 : frames_.front().width; }
    int height() const noexcept { return frames_.empty() ? 0 : frames_.front().height; }
    int channels() const noexcept { return frames_.empty() ? 0 : frames_.front().channels; }
    std::size_t site_count() const noexcept {
        return frames_.empty() ? 0 : frames_.front().site_count();
    }

    /// First `n` frames as a new sequence.
    Sequence prefix(std::size_t n) const;

private:
    std::vector<Frame> frames_;
    std::string source_id_;
};

} // namespace rainclean
