#include <doctest.h>

#include <fstream>
#include <png.h>

#include "rainclean/error.hpp"
#include "rainclean/frame_store.hpp"
#include "rainclean/png_io.hpp"
#include "support.hpp"

using namespace rainclean;
using test_support::TempDir;

namespace {

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::Io;
}

std::string message_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

} // namespace

TEST_SUITE("frame_store") {

TEST_CASE("png round trip keeps every byte") {
    std::mt19937_64 rng(3);
    TempDir dir;
    for (int c : {1, 3}) {
        const Frame f = test_support::random_frame(rng, 13, 7, c);
        png::write(dir / "f.png", f);
        const Frame back = png::read(dir / "f.png");
        CHECK(back.same_shape(f));
        CHECK(back.data == f.data);
    }
}

TEST_CASE("three identical gray frames give constant traces") {
    TempDir dir;
    const Frame f(2, 2, 1, 77);
    for (int k = 0; k < 3; ++k) {
        png::write(dir / frame_filename(k), f);
    }
    const Sequence seq = load_sequence(dir.path());
    REQUIRE(seq.size() == 3);
    CHECK(seq.site_count() == 4);
    for (int y = 0; y < 2; ++y) {
        for (int x = 0; x < 2; ++x) {
            CHECK(pixel_trace(seq, x, y, 0) == PixelTrace{77, 77, 77});
        }
    }
}

TEST_CASE("missing frame is reported by index") {
    TempDir dir;
    const Frame f(2, 2, 1);
    for (int k : {0, 1, 3}) {
        png::write(dir / frame_filename(k), f);
    }
    CHECK(kind_of([&] { load_sequence(dir.path()); }) == ErrorKind::SequenceGap);
    CHECK(message_of([&] { load_sequence(dir.path()); }).find("2") != std::string::npos);
    // A limit that stops before the gap is fine.
    CHECK(load_sequence(dir.path(), 2).size() == 2);
    CHECK(count_frames(dir.path()) == 2);
}

TEST_CASE("frame limit beyond the directory is a gap") {
    TempDir dir;
    png::write(dir / frame_filename(0), Frame(2, 2, 1));
    CHECK(kind_of([&] { load_sequence(dir.path(), 5); }) == ErrorKind::SequenceGap);
    CHECK(kind_of([&] { load_sequence(dir.path(), 0); }) == ErrorKind::Parameter);
}

TEST_CASE("dimension mismatch names the frame") {
    TempDir dir;
    png::write(dir / frame_filename(0), Frame(4, 4, 3));
    png::write(dir / frame_filename(1), Frame(4, 4, 3));
    png::write(dir / frame_filename(2), Frame(5, 4, 3));
    CHECK(kind_of([&] { load_sequence(dir.path()); }) == ErrorKind::Dimension);
    CHECK(message_of([&] { load_sequence(dir.path()); }).find(frame_filename(2)) !=
          std::string::npos);

    TempDir gray;
    png::write(gray / frame_filename(0), Frame(4, 4, 3));
    png::write(gray / frame_filename(1), Frame(4, 4, 1));
    CHECK(kind_of([&] { load_sequence(gray.path()); }) == ErrorKind::Dimension);
}

TEST_CASE("undecodable and unsupported files") {
    TempDir dir;
    std::ofstream(dir / frame_filename(0)) << "definitely not a png";
    CHECK(kind_of([&] { load_sequence(dir.path()); }) == ErrorKind::Decode);

    // 16-bit and alpha inputs are rejected rather than silently converted.
    png_image img{};
    img.version = PNG_IMAGE_VERSION;
    img.width = 2;
    img.height = 2;
    img.format = PNG_FORMAT_LINEAR_Y;
    std::vector<std::uint16_t> deep(4, 1000);
    const auto deep_path = (dir / "deep.png").string();
    REQUIRE(png_image_write_to_file(&img, deep_path.c_str(), 0, deep.data(), 0, nullptr));
    CHECK(kind_of([&] { png::read(deep_path); }) == ErrorKind::Decode);

    png_image rgba{};
    rgba.version = PNG_IMAGE_VERSION;
    rgba.width = 2;
    rgba.height = 2;
    rgba.format = PNG_FORMAT_RGBA;
    std::vector<std::uint8_t> px(16, 200);
    const auto rgba_path = (dir / "rgba.png").string();
    REQUIRE(png_image_write_to_file(&rgba, rgba_path.c_str(), 0, px.data(), 0, nullptr));
    CHECK(kind_of([&] { png::read(rgba_path); }) == ErrorKind::Decode);
}

TEST_CASE("missing directory is an io error") {
    CHECK(kind_of([] { load_sequence("/nonexistent/rainclean/frames"); }) == ErrorKind::Io);
}

TEST_CASE("pixel_trace follows constructed frames") {
    Frame a(3, 2, 3, 40);
    Frame b = a;
    b.at(0, 0, 0) = 90;
    const Sequence seq({a, b});
    CHECK(pixel_trace(seq, 0, 0, 0) == PixelTrace{40, 90});
    CHECK(pixel_trace(seq, 0, 0, 1) == PixelTrace{40, 40});

    const Sequence white({Frame(3, 2, 3, 255), Frame(3, 2, 3, 255), Frame(3, 2, 3, 255)});
    for (int y = 0; y < 2; ++y) {
        for (int x = 0; x < 3; ++x) {
            for (int c = 0; c < 3; ++c) {
                CHECK(pixel_trace(white, x, y, c) == PixelTrace(3, 255));
            }
        }
    }
}

TEST_CASE("pixel_trace bounds") {
    const Sequence seq({Frame(3, 2, 3)});
    CHECK(kind_of([&] { pixel_trace(seq, 3, 0, 0); }) == ErrorKind::Bounds);
    CHECK(kind_of([&] { pixel_trace(seq, 0, 2, 0); }) == ErrorKind::Bounds);
    CHECK(kind_of([&] { pixel_trace(seq, 0, 0, 3); }) == ErrorKind::Bounds);
    CHECK(kind_of([&] { pixel_trace(seq, -1, 0, 0); }) == ErrorKind::Bounds);
}

TEST_CASE("write_sequence then load_sequence is lossless") {
    std::mt19937_64 rng(9);
    std::vector<Frame> frames;
    for (int k = 0; k < 5; ++k) {
        frames.push_back(test_support::random_frame(rng, 6, 5, 3));
    }
    const Sequence seq(frames);
    TempDir dir;
    write_sequence(dir.path(), seq);
    const Sequence back = load_sequence(dir.path());
    REQUIRE(back.size() == seq.size());
    for (std::size_t k = 0; k < seq.size(); ++k) {
        CHECK(back[k].data == seq[k].data);
        CHECK(back[k].index == k);
    }
}

TEST_CASE("sequence rejects mixed shapes") {
    CHECK(kind_of([] { Sequence({Frame(2, 2, 1), Frame(2, 3, 1)}); }) == ErrorKind::Dimension);
}

} // TEST_SUITE
