#pragma once

#include "gridmdp/common.hpp"

#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace gridmdp {

/// Resolves a requested worker count: 0 means hardware concurrency.
inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Runs fn(begin, end) over a static contiguous partition of [0, n).
/// Workers write disjoint output ranges, so results are identical for any
/// thread count; with one thread the body runs inline (the serial path).
/// The first exception thrown by any worker is rethrown.
inline void parallel_for(Index n, int threads, const std::function<void(Index, Index)>& fn) {
    threads = resolve_threads(threads);
    if (n <= 0) return;
    if (threads == 1 || n == 1) {
        fn(0, n);
        return;
    }
    if (static_cast<Index>(threads) > n) threads = static_cast<int>(n);

    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    const Index chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const Index begin = static_cast<Index>(t) * chunk;
        const Index end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&, t, begin, end] {
            try {
                fn(begin, end);
            } catch (...) {
                errors[static_cast<std::size_t>(t)] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& err : errors)
        if (err) std::rethrow_exception(err);
}

} // namespace gridmdp
