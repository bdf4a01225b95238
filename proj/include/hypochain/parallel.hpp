#pragma once

#include <functional>
#include <thread>
#include <vector>

namespace hypochain {

inline int resolve_workers(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Static contiguous partition of [0, total) over `workers` threads.
/// fn(begin, end, worker_index); writes must target disjoint slots so the
/// result is independent of scheduling.
inline void parallel_for(long total, int workers,
                         const std::function<void(long, long, int)>& fn) {
    workers = resolve_workers(workers);
    if (workers <= 1 || total < 2 * workers) {
        fn(0, total, 0);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const long chunk = (total + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const long begin = w * chunk;
        const long end = std::min(total, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([=, &fn] { fn(begin, end, w); });
    }
    for (auto& th : pool) th.join();
}

}  // namespace hypochain
