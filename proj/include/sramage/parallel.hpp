#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace sramage {

inline size_t resolve_jobs(size_t jobs) {
    if (jobs != 0) return jobs;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

// Runs fn(0..n-1) on up to `jobs` worker threads. Results must be written
// into pre-sized per-index slots so the outcome is independent of the worker
// count. The first exception is rethrown after all workers join.
inline void parallel_for(size_t n, size_t jobs, const std::function<void(size_t)>& fn) {
    jobs = std::min(resolve_jobs(jobs), n);
    if (n == 0) return;
    if (jobs <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }

    std::atomic<size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto worker = [&] {
        while (true) {
            const size_t i = next.fetch_add(1);
            if (i >= n || failed.load()) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                failed.store(true);
                return;
            }
        }
    };

    std::vector<std::thread> threads;
    threads.reserve(jobs);
    for (size_t t = 0; t < jobs; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}
