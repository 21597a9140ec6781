// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#include "raygrid/nn/parallel.hpp"

namespace raygrid::nn {

namespace {
int g_num_threads = 0;
}

void set_num_threads(int n) { g_num_threads = n < 0 ? 0 : n; }

int num_threads() {
    if (g_num_threads > 0) return g_num_threads;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace raygrid::nn
