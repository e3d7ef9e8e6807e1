#pragma once

#include "gfmr/types.hpp"

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace gfmr {

// Runs fn(i) for i in [0, count) on up to `threads` workers with static
// contiguous chunks. fn must only write state owned by index i.
template <class Fn>
void parallel_for(Index count, int threads, Fn&& fn) {
    const Index workers = std::min<Index>(std::max(threads, 1), count);
    if (workers <= 1) {
        for (Index i = 0; i < count; ++i) fn(i);
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (Index w = 0; w < workers; ++w) {
        const Index begin = count * w / workers;
        const Index end = count * (w + 1) / workers;
        pool.emplace_back([&, begin, end] {
            try {
                for (Index i = begin; i < end; ++i) fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace gfmr
