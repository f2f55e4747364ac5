#include "rainclean/png_io.hpp"

#include <png.h>

#include <fstream>
#include <iterator>
#include <string>

#include "rainclean/error.hpp"

namespace rainclean::png {

namespace {

struct ImageGuard {
    png_image image{};
    ImageGuard() {
        image.version = PNG_IMAGE_VERSION;
    }
    ~ImageGuard() { png_image_free(&image); }
    ImageGuard(const ImageGuard&) = delete;
    ImageGuard& operator=(const ImageGuard&) = delete;
};

} // namespace

Frame decode(std::span<const std::uint8_t> bytes) {
    ImageGuard guard;
    png_image& image = guard.image;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
        throw Error(ErrorKind::Decode, std::string("png decode failed: ") + image.message);
    }
    if (image.format & PNG_FORMAT_FLAG_LINEAR) {
        throw Error(ErrorKind::Decode, "16-bit PNG input is not supported");
    }
    if (image.format & PNG_FORMAT_FLAG_ALPHA) {
        throw Error(ErrorKind::Decode, "PNG with alpha channel is not supported");
    }
    const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;

    Frame frame(static_cast<int>(image.width), static_cast<int>(image.height), color ? 3 : 1);
    if (!png_image_finish_read(&image, nullptr, frame.data.data(), 0, nullptr)) {
        throw Error(ErrorKind::Decode, std::string("png decode failed: ") + image.message);
    }
    return frame;
}

Frame read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open " + path.string());
    }
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                          std::istreambuf_iterator<char>());
    try {
        return decode(bytes);
    } catch (const Error& e) {
        throw Error(e.kind(), path.string() + ": " + e.what());
    }
}

std::vector<std::uint8_t> encode(const Frame& frame) {
    validate_frame(frame);
    ImageGuard guard;
    png_image& image = guard.image;
    image.width = static_cast<png_uint_32>(frame.width);
    image.height = static_cast<png_uint_32>(frame.height);
    image.format = frame.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;

    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, frame.data.data(), 0, nullptr)) {
        throw Error(ErrorKind::Io, std::string("png encode failed: ") + image.message);
    }
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, frame.data.data(), 0,
                                   nullptr)) {
        throw Error(ErrorKind::Io, std::string("png encode failed: ") + image.message);
    }
    out.resize(size);
    return out;
}

void write(const std::filesystem::path& path, const Frame& frame) {
    const auto bytes = encode(frame);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorKind::Io, "cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw Error(ErrorKind::Io, "write failed for " + path.string());
    }
}

} // namespace rainclean::png
