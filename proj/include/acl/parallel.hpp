#pragma once

#include <atomic>
#include <thread>
#include <vector>

namespace acl {

// Worker-thread budget: ANALYTIC_CONV_THREADS if set, else hardware count.
int worker_threads();

// Runs fn(0..n-1) on up to worker_threads() threads. Results land in a
// slot-per-index vector so callers can reduce in a fixed order regardless
// of how many workers actually ran.
template <typename T, typename Fn>
std::vector<T> run_indexed(int n, Fn&& fn) {
    std::vector<T> out(static_cast<size_t>(n));
    const int threads = std::min(worker_threads(), n);
    if (threads <= 1) {
        for (int i = 0; i < n; ++i) out[static_cast<size_t>(i)] = fn(i);
        return out;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(threads));
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= n) return;
                out[static_cast<size_t>(i)] = fn(i);
            }
        });
    }
    for (std::thread& th : pool) th.join();
    return out;
}

}  // namespace acl
