#include "rainclean/frame.hpp"

#include <algorithm>
#include <string>

#include "rainclean/error.hpp"

namespace rainclean {

Frame::Frame(int w, int h, int c, std::uint8_t fill) : width(w), height(h), channels(c) {
    if (w < 1 || h < 1 || (c != 1 && c != 3)) {
        throw Error(ErrorKind::Dimension,
                    "invalid frame shape " + std::to_string(w) + "x" + std::to_string(h) +
                        "x" + std::to_string(c));
    }
    data.assign(site_count(), fill);
}

bool same_pixels(const Frame& a, const Frame& b) noexcept {
    return a.same_shape(b) && a.data == b.data;
}

void validate_frame(const Frame& frame) {
    if (frame.width < 1 || frame.height < 1 || (frame.channels != 1 && frame.channels != 3)) {
        throw Error(ErrorKind::Dimension, "frame " + std::to_string(frame.index) +
                                              " has invalid shape");
    }
    if (frame.data.size() != frame.site_count()) {
        throw Error(ErrorKind::Dimension, "frame " + std::to_string(frame.index) +
                                              " data length does not match its shape");
    }
}

std::size_t BinaryMap::count() const noexcept {
    return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

Frame BinaryMap::to_frame() const {
    Frame f(width, height, 1);
    for (std::size_t i = 0; i < bits.size(); ++i) {
        f.data[i] = bits[i] ? 255 : 0;
    }
    return f;
}

BinaryMap BinaryMap::from_frame(const Frame& frame) {
    if (frame.channels != 1) {
        throw Error(ErrorKind::Dimension, "binary map must be a single-channel image");
    }
    BinaryMap m(frame.width, frame.height);
    for (std::size_t i = 0; i < m.bits.size(); ++i) {
        m.bits[i] = frame.data[i] != 0;
    }
    return m;
}

Sequence::Sequence(std::vector<Frame> frames, std::string source_id)
    : frames_(std::move(frames)), source_id_(std::move(source_id)) {
    for (std::size_t k = 0; k < frames_.size(); ++k) {
        frames_[k].index = k;
        validate_frame(frames_[k]);
        if (!frames_[k].same_shape(frames_.front())) {
            throw Error(ErrorKind::Dimension,
                        "frame " + std::to_string(k) + " shape differs from frame 0");
        }
    }
}

Sequence Sequence::prefix(std::size_t n) const {
    n = std::min(n, frames_.size());
    return Sequence(std::vector<Frame>(frames_.begin(), frames_.begin() + static_cast<long>(n)),
                    source_id_);
}

} // namespace rainclean
