// Copyright (c) 2026 sgfit contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "sgfit/math.hpp"

namespace sgfit {

struct AdamConfig {
    double learning_rate = 2e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// First/second-moment state for one parameter array.
class AdamState {
public:
    void init(size_t n) {
        m_.assign(n, 0.0);
        v_.assign(n, 0.0);
    }

    size_t size() const { return m_.size(); }

    // One update with bias correction; `step` is 1-based.
    void update(std::span<double> params, std::span<const double> grads, const AdamConfig& cfg,
                double lr, int step) {
        double bc1 = 1.0 - std::pow(cfg.beta1, step);
        double bc2 = 1.0 - std::pow(cfg.beta2, step);
        for (size_t i = 0; i < params.size(); ++i) {
            double g = grads[i];
            m_[i] = cfg.beta1 * m_[i] + (1.0 - cfg.beta1) * g;
            v_[i] = cfg.beta2 * v_[i] + (1.0 - cfg.beta2) * g * g;
            double mhat = m_[i] / bc1;
            double vhat = v_[i] / bc2;
            params[i] -= lr * mhat / (std::sqrt(vhat) + cfg.epsilon);
        }
    }

private:
    std::vector<double> m_, v_;
};

// Learning-rate schedule: halve once at half the iteration budget.
inline double scheduled_lr(double base_lr, int step, int total_iterations) {
    return step >= total_iterations / 2 ? 0.5 * base_lr : base_lr;
}

}  // namespace sgfit
