// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#include "raygrid/heads/hungarian.hpp"

#include <limits>

namespace raygrid::heads {

std::vector<int> hungarian_match(const nn::Tensor<double>& cost) {
    detail::check(cost.rank() == 2, "hungarian_match: cost must be [n, m]");
    const int n = static_cast<int>(cost.dim(0));
    const int m = static_cast<int>(cost.dim(1));
    detail::check(n <= m, "hungarian_match: more rows than columns");
    detail::check(cost.all_finite(), "hungarian_match: non-finite costs");
    if (n == 0) return {};

    constexpr double kInf = std::numeric_limits<double>::infinity();
    // 1-indexed potentials; p[j] is the row matched to column j (0 = none).
    std::vector<double> u(static_cast<size_t>(n) + 1, 0.0);
    std::vector<double> v(static_cast<size_t>(m) + 1, 0.0);
    std::vector<int> p(static_cast<size_t>(m) + 1, 0);
    std::vector<int> way(static_cast<size_t>(m) + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<size_t>(m) + 1, kInf);
        std::vector<char> used(static_cast<size_t>(m) + 1, 0);
        do {
            used[static_cast<size_t>(j0)] = 1;
            const int i0 = p[static_cast<size_t>(j0)];
            double delta = kInf;
            int j1 = 0;
            for (int j = 1; j <= m; ++j) {
                if (used[static_cast<size_t>(j)]) continue;
                const double cur = cost[static_cast<int64_t>(i0 - 1) * m + (j - 1)] -
                                   u[static_cast<size_t>(i0)] - v[static_cast<size_t>(j)];
                if (cur < minv[static_cast<size_t>(j)]) {
                    minv[static_cast<size_t>(j)] = cur;
                    way[static_cast<size_t>(j)] = j0;
                }
                if (minv[static_cast<size_t>(j)] < delta) {
                    delta = minv[static_cast<size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
                if (used[static_cast<size_t>(j)]) {
                    u[static_cast<size_t>(p[static_cast<size_t>(j)])] += delta;
                    v[static_cast<size_t>(j)] -= delta;
                } else {
                    minv[static_cast<size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[static_cast<size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<size_t>(j0)];
            p[static_cast<size_t>(j0)] = p[static_cast<size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> row_to_col(static_cast<size_t>(n), -1);
    for (int j = 1; j <= m; ++j)
        if (p[static_cast<size_t>(j)] != 0) row_to_col[static_cast<size_t>(p[static_cast<size_t>(j)] - 1)] = j - 1;
    return row_to_col;
}

}  // namespace raygrid::heads
