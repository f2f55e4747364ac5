#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace rainclean {

/// Hardware concurrency, never less than one.
inline unsigned default_thread_count() {
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Splits [0, count) into `threads` contiguous chunks and runs
/// fn(chunk_index, begin, end) for each. Chunk boundaries depend only on
/// (count, threads), so callers that reduce per-chunk results in chunk order
/// get schedule-independent output. The first exception is rethrown.
template <typename Fn>
void parallel_chunks(std::size_t count, unsigned threads, Fn&& fn) {
    threads = std::max(1u, threads);
    const std::size_t chunks = std::min<std::size_t>(threads, std::max<std::size_t>(count, 1));
    if (chunks == 1) {
        fn(std::size_t{0}, std::size_t{0}, count);
        return;
    }
    std::vector<std::exception_ptr> errors(chunks);
    std::vector<std::thread> workers;
    workers.reserve(chunks);
    for (std::size_t i = 0; i < chunks; ++i) {
        const std::size_t begin = count * i / chunks;
        const std::size_t end = count * (i + 1) / chunks;
        workers.emplace_back([&, i, begin, end] {
            try {
                fn(i, begin, end);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        });
    }
    for (auto& w : workers) {
        w.join();
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

} // namespace rainclean
