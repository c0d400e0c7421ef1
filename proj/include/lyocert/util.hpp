#ifndef LYOCERT_UTIL_HPP
#define LYOCERT_UTIL_HPP

#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace lyocert {

// Worker count for sample fan-out: LYOCERT_THREADS when set (clamped to
// [1, 64]), otherwise 1. Reductions stay deterministic because results are
// indexed by sample id and merged in order.
inline int worker_count() {
    const char* env = std::getenv("LYOCERT_THREADS");
    if (!env) return 1;
    int n = std::atoi(env);
    if (n < 1) return 1;
    return n > 64 ? 64 : n;
}

// Runs fn(i) for i in [0, n), fanning out across workers. fn must only
// write to its own index.
inline void parallel_for(size_t n, const std::function<void(size_t)>& fn) {
    int workers = worker_count();
    if (workers <= 1 || n <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<size_t> next{0};
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&]() {
            for (size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    for (auto& t : pool) t.join();
}

}  // namespace lyocert

#endif
