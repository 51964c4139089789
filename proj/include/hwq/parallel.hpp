#pragma once

#include <functional>
#include <thread>
#include <vector>

namespace hwq {

/// Static partition of [0, n) over worker threads.  Work items must be
/// independent; replication loops seed each item by index.
inline void parallel_for(int n, const std::function<void(int)>& fn, int threads = 0) {
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;
    threads = std::min(threads, n);
    if (threads <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
            for (int i = w; i < n; i += threads) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace hwq
