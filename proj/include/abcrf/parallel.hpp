#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace abcrf {

inline unsigned resolve_workers(unsigned requested) {
    if (requested > 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

/// Runs body(i) for i in [0, n) on a transient worker pool. Work is handed
/// out in blocks via an atomic cursor; each index is processed exactly once,
/// so any result written to slot i is independent of the worker count.
/// The first exception thrown by a body is rethrown on the caller's thread.
template <typename F>
void parallel_for(std::size_t n, unsigned workers, F&& body) {
    workers = resolve_workers(workers);
    if (n == 0) return;
    if (workers == 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    const std::size_t block = n / (workers * 8) > 0 ? n / (workers * 8) : 1;
    std::atomic<std::size_t> cursor{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto run = [&] {
        for (;;) {
            const std::size_t begin = cursor.fetch_add(block);
            if (begin >= n) return;
            const std::size_t end = begin + block < n ? begin + block : n;
            try {
                for (std::size_t i = begin; i < end; ++i) body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace abcrf
