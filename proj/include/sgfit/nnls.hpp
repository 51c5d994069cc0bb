// Copyright (c) 2026 sgfit contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <vector>

#include "sgfit/math.hpp"

namespace sgfit {

// Non-negative least squares min ||A x - b||^2, x >= 0, given the normal
// equations G = A^T A (n x n, SPD, row-major) and c = A^T b. Cyclic projected
// coordinate descent: monotone, deterministic, and exact enough at the fixed
// sweep budget for the small systems used here (n = 24).
inline std::vector<double> nnls_from_normal_equations(const std::vector<double>& gram,
                                                      const std::vector<double>& rhs, int n,
                                                      int max_sweeps = 4000, double tol = 1e-14) {
    std::vector<double> x(size_t(n), 0.0);
    std::vector<double> gx(size_t(n), 0.0);  // G x, maintained incrementally
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double max_change = 0.0;
        for (int i = 0; i < n; ++i) {
            double gii = gram[size_t(i) * n + i];
            if (gii <= 0.0) continue;
            double xi = std::max(0.0, x[size_t(i)] + (rhs[size_t(i)] - gx[size_t(i)]) / gii);
            double delta = xi - x[size_t(i)];
            if (delta == 0.0) continue;
            x[size_t(i)] = xi;
            for (int j = 0; j < n; ++j) gx[size_t(j)] += gram[size_t(j) * n + i] * delta;
            max_change = std::max(max_change, std::abs(delta));
        }
        if (max_change < tol) break;
    }
    return x;
}

}  // namespace sgfit
