#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace pbvp {

/// Calls body(i) for i in [0, n) on `workers` threads over contiguous index
/// blocks. Results must be written to per-index slots so the outcome does
/// not depend on the worker count. The exception of the lowest failing
/// block is rethrown after all threads join.
template <class Body>
void parallel_for(std::size_t n, unsigned workers, const Body& body) {
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t blocks = std::min<std::size_t>(workers, n);
    if (blocks <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::exception_ptr> errors(blocks);
    std::vector<std::thread> threads;
    threads.reserve(blocks);
    for (std::size_t b = 0; b < blocks; ++b) {
        const std::size_t lo = n * b / blocks;
        const std::size_t hi = n * (b + 1) / blocks;
        threads.emplace_back([&, b, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) body(i);
            } catch (...) {
                errors[b] = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

} // namespace pbvp
