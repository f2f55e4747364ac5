#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>

#include "rainclean/frame.hpp"

namespace rainclean {

/// `frame_000042.png` for index 42.
std::string frame_filename(std::size_t index);

/// Number of consecutively numbered frames present from index 0.
std::size_t count_frames(const std::filesystem::path& directory);

/// Loads frame_%06d.png files starting at 000000. With `frame_limit`, only
/// that many leading frames are read. Gaps inside the loaded window raise
/// SequenceGap naming the first missing index; shape disagreement raises
/// Dimension naming the frame.
Sequence load_sequence(const std::filesystem::path& directory,
                       std::optional<std::size_t> frame_limit = std::nullopt);

/// Writes every frame as frame_%06d.png, creating the directory if needed.
void write_sequence(const std::filesystem::path& directory, const Sequence& seq);

/// Samples of site (x, y, c) across the sequence. Throws Bounds.
PixelTrace pixel_trace(const Sequence& seq, int x, int y, int c);

} // namespace rainclean
