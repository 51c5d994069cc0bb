// Copyright (c) 2026 sgfit contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <functional>
#include <thread>
#include <vector>

namespace sgfit {

// Static row partitioning. Each index is processed exactly once and writes
// only its own outputs, so results do not depend on the thread count.
inline void parallel_for(int begin, int end, int threads, const std::function<void(int)>& body) {
    int n = end - begin;
    if (n <= 0) return;
    if (threads <= 0) threads = int(std::thread::hardware_concurrency());
    threads = std::clamp(threads, 1, n);
    if (threads == 1) {
        for (int i = begin; i < end; ++i) body(i);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(size_t(threads));
    int chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        int lo = begin + t * chunk;
        int hi = std::min(end, lo + chunk);
        if (lo >= hi) break;
        workers.emplace_back([&body, lo, hi] {
            for (int i = lo; i < hi; ++i) body(i);
        });
    }
    for (auto& w : workers) w.join();
}

}  // namespace sgfit
