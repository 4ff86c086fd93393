#include "lal/threads.hpp"

#include <cstdlib>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "lal/common.hpp"

namespace lal {

int worker_count() {
    const char* env = std::getenv("LAL_THREADS");
    if (!env || !*env) return 1;
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || n < 1)
        throw ValueError("LAL_THREADS must be a positive integer, got '" + std::string(env) + "'");
    return static_cast<int>(n);
}

void parallel_for(int n, const std::function<void(int)>& fn) {
    if (n <= 0) return;
    const int workers = std::min(worker_count(), n);
    if (workers == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    std::mutex err_mu;
    std::exception_ptr err;
    for (int t = 0; t < workers; ++t) {
        pool.emplace_back([&, t] {
            const int lo = static_cast<int>(static_cast<long>(n) * t / workers);
            const int hi = static_cast<int>(static_cast<long>(n) * (t + 1) / workers);
            try {
                for (int i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lk(err_mu);
                if (!err) err = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

} // namespace lal
