#include "rainclean/frame_store.hpp"

#include <algorithm>
#include <cstdio>
#include <regex>
#include <set>
#include <vector>

#include "rainclean/error.hpp"
#include "rainclean/png_io.hpp"

namespace fs = std::filesystem;

namespace rainclean {

std::string frame_filename(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%06zu.png", index);
    return buf;
}

namespace {

void require_directory(const fs::path& directory) {
    std::error_code ec;
    if (!fs::is_directory(directory, ec)) {
        throw Error(ErrorKind::Io, "not a directory: " + directory.string());
    }
}

std::set<std::size_t> frame_indices(const fs::path& directory) {
    static const std::regex pattern(R"(frame_(\d{6})\.png)");
    std::set<std::size_t> indices;
    for (const auto& entry : fs::directory_iterator(directory)) {
        std::smatch m;
        const std::string name = entry.path().filename().string();
        if (std::regex_match(name, m, pattern)) {
            indices.insert(std::stoul(m[1].str()));
        }
    }
    return indices;
}

} // namespace

std::size_t count_frames(const fs::path& directory) {
    require_directory(directory);
    const auto indices = frame_indices(directory);
    std::size_t n = 0;
    while (indices.count(n)) {
        ++n;
    }
    return n;
}

Sequence load_sequence(const fs::path& directory, std::optional<std::size_t> frame_limit) {
    require_directory(directory);
    const auto indices = frame_indices(directory);

    std::size_t n = 0;
    if (frame_limit) {
        if (*frame_limit == 0) {
            throw Error(ErrorKind::Parameter, "frame limit must be at least 1");
        }
        n = *frame_limit;
    } else if (!indices.empty()) {
        n = *indices.rbegin() + 1;
    }
    for (std::size_t k = 0; k < std::max<std::size_t>(n, 1); ++k) {
        if (!indices.count(k)) {
            throw Error(ErrorKind::SequenceGap,
                        "missing frame index " + std::to_string(k) + " (" + frame_filename(k) +
                            ") in " + directory.string());
        }
    }

    std::vector<Frame> frames;
    frames.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        Frame f = png::read(directory / frame_filename(k));
        f.index = k;
        if (!frames.empty() && !f.same_shape(frames.front())) {
            throw Error(ErrorKind::Dimension,
                        "frame " + std::to_string(k) + " (" + frame_filename(k) + ") is " +
                            std::to_string(f.width) + "x" + std::to_string(f.height) + "x" + std::to_string(f.channels) +
                            ", expected " + std::to_string(frames.front().width) + "x" +
                            std::to_string(frames.front().height) + "x" +
                            std::to_string(frames.front().channels));
        }
        frames.push_back(std::move(f));
    }
    return Sequence(std::move(frames), directory.string());
}

void write_sequence(const fs::path& directory, const Sequence& seq) {
    fs::create_directories(directory);
    for (const Frame& f : seq.frames()) {
        png::write(directory / frame_filename(f.index), f);
    }
}

PixelTrace pixel_trace(const Sequence& seq, int x, int y, int c) {
    if (seq.empty() || x < 0 || y < 0 || c < 0 || x >= seq.width() || y >= seq.height() ||
        c >= seq.channels()) {
        throw Error(ErrorKind::Bounds, "site (" + std::to_string(x) + ", " + std::to_string(y) +
                                           ", " + std::to_string(c) + ") is outside the frame");
    }
    const std::size_t off = seq[0].offset(x, y, c);
    PixelTrace trace;
    trace.reserve(seq.size());
    for (const Frame& f : seq.frames()) {
        trace.push_back(f.data[off]);
    }
    return trace;
}

} // namespace rainclean
