#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "rainclean/frame.hpp"

namespace rainclean::png {

// Only 8-bit gray and 8-bit RGB are accepted. Palette images are expanded to
// RGB; alpha, 16-bit and gray+alpha inputs are rejected with a Decode error.
Frame decode(std::span<const std::uint8_t> bytes);
Frame read(const std::filesystem::path& path);

std::vector<std::uint8_t> encode(const Frame& frame);
void write(const std::filesystem::path& path, const Frame& frame);

} // namespace rainclean::png
