#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace augmt {

/// Runs fn(begin, end) over contiguous chunks of [0, n) on up to `threads` threads.
/// Chunk boundaries depend only on n and threads; callers write results by index so
/// output never depends on scheduling. When chunks fail, the exception from the lowest
/// chunk is rethrown, i.e. the one a sequential run would have hit first.
template <typename Fn>
void parallel_chunks(std::size_t n, unsigned threads, Fn &&fn) {
    threads = std::max(1u, threads);
    if (threads == 1 || n < 2) {
        fn(std::size_t{0}, n);
        return;
    }
    const std::size_t workers = std::min<std::size_t>(threads, n);
    const std::size_t chunk = (n + workers - 1) / workers;
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t begin = w * chunk;
            const std::size_t end = std::min(n, begin + chunk);
            if (begin >= end)
                break;
            pool.emplace_back([&, w, begin, end] {
                try {
                    fn(begin, end);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (const auto &e : errors)
        if (e)
            std::rethrow_exception(e);
}

template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn &&fn) {
    parallel_chunks(n, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
            fn(i);
    });
}

} // namespace augmt
