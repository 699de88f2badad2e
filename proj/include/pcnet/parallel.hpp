#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace pcnet {

inline int &thread_cap() {
    static int cap = 1;
    return cap;
}

inline void set_threads(int n) { thread_cap() = std::max(1, n); }

// Calls f(i) for i in [0, n). Work items are claimed dynamically but results must be
// written by index, which keeps outputs identical for every thread count.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)> &f) {
    const int workers = int(std::min<std::size_t>(std::size_t(thread_cap()), n));
    if(workers <= 1) {
        for(std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex m;
    auto run = [&] {
        for(std::size_t i; (i = next.fetch_add(1)) < n;) {
            try {
                f(i);
            } catch(...) {
                std::lock_guard<std::mutex> lk(m);
                if(!err) err = std::current_exception();
                next = n;
            }
        }
    };
    std::vector<std::thread> pool;
    for(int w = 0; w < workers; ++w) pool.emplace_back(run);
    for(auto &t : pool) t.join();
    if(err) std::rethrow_exception(err);
}

} // namespace pcnet
