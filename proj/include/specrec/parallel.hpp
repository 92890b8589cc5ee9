#ifndef SPECREC_PARALLEL_HPP
#define SPECREC_PARALLEL_HPP

#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

namespace specrec {

/// Run body(i) for i in [0, count) across n_threads workers (0 = hardware
/// default). Iterations are assigned in contiguous blocks and results must be
/// written to index-addressed storage by the caller, so the outcome does not
/// depend on the thread count. The first exception thrown by any worker is
/// rethrown on the calling thread.
template <typename Body>
void parallel_for(int count, int n_threads, Body&& body) {
    if (count < 0) throw std::invalid_argument("parallel_for: negative iteration count");
    if (n_threads < 0) throw std::invalid_argument("parallel_for: negative thread count");
    if (count == 0) return;
    if (n_threads == 0) {
        unsigned hw = std::thread::hardware_concurrency();
        n_threads = hw == 0 ? 1 : static_cast<int>(hw);
    }
    if (n_threads > count) n_threads = count;
    if (n_threads == 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }

    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(n_threads));
    int base = count / n_threads, rem = count % n_threads;
    int start = 0;
    for (int t = 0; t < n_threads; ++t) {
        int len = base + (t < rem ? 1 : 0);
        int stop = start + len;
        workers.emplace_back([&, start, stop] {
            try {
                for (int i = start; i < stop; ++i) body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
        start = stop;
    }
    for (auto& worker : workers) worker.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace specrec

#endif
