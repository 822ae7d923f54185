#pragma once

#include <algorithm>
#include <thread>
#include <vector>

namespace ulamcert {

// Chunked parallel loop over [0, n).  Workers write to disjoint slots and
// reductions happen after the join, so results never depend on the thread
// count or scheduling.
template <typename F>
void parallel_for(std::size_t n, int threads, F&& body) {
    const int hw = static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, hw > 0 ? hw : 1));
    if (threads == 1 || n < 2) {
        body(std::size_t{0}, n);
        return;
    }
    const std::size_t chunk = (n + static_cast<std::size_t>(threads) - 1) /
                              static_cast<std::size_t>(threads);
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
        const std::size_t begin = std::min(n, static_cast<std::size_t>(t) * chunk);
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&body, begin, end] { body(begin, end); });
    }
    for (auto& th : pool) th.join();
}

} // namespace ulamcert
