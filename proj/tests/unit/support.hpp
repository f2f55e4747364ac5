#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "rainclean/frame.hpp"

namespace test_support {

// Scratch directory removed on scope exit.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("rainclean-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline rainclean::Frame random_frame(std::mt19937_64& rng, int w, int h, int c, int lo = 0,
                                     int hi = 255) {
    rainclean::Frame f(w, h, c);
    std::uniform_int_distribution<int> dist(lo, hi);
    for (auto& v : f.data) {
        v = static_cast<std::uint8_t>(dist(rng));
    }
    return f;
}

} // namespace test_support
