#pragma once

#include <cstddef>
#include <mutex>
#include <thread>
#include <vector>

namespace trajex {

// Static block partition across `threads` workers (0 = hardware concurrency).
// Each index is processed exactly once; results must be written to
// per-index slots so output is independent of the thread count.
template <typename Fn>
void parallel_for(size_t n, int threads, Fn&& fn) {
    if (threads <= 0) {
        unsigned hc = std::thread::hardware_concurrency();
        threads = hc > 0 ? static_cast<int>(hc) : 1;
    }
    size_t workers = std::min<size_t>(threads, n);
    if (workers <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    size_t chunk = (n + workers - 1) / workers;
    for (size_t w = 0; w < workers; ++w) {
        size_t lo = w * chunk;
        size_t hi = std::min(n, lo + chunk);
        pool.emplace_back([&fn, lo, hi] {
            for (size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace trajex
