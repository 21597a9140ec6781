// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <thread>
#include <vector>

namespace raygrid::nn {

/// Worker count used by parallel_for. 0 means hardware concurrency.
void set_num_threads(int n);
int num_threads();

/// Runs fn(i) for i in [0, n). Iterations must write disjoint outputs; the
/// static partition below then makes results independent of the worker count.
template <typename Fn>
void parallel_for(int64_t n, Fn&& fn) {
    const int workers = std::min<int64_t>(num_threads(), n);
    if (workers <= 1 || n < 2) {
        for (int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> threads;
    threads.reserve(static_cast<size_t>(workers) - 1);
    const int64_t chunk = (n + workers - 1) / workers;
    for (int w = 1; w < workers; ++w) {
        const int64_t lo = w * chunk;
        const int64_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        threads.emplace_back([&fn, lo, hi] {
            for (int64_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (int64_t i = 0; i < std::min(n, chunk); ++i) fn(i);
    for (auto& t : threads) t.join();
}

}  // namespace raygrid::nn
