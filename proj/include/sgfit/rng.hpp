// Copyright (c) 2026 sgfit contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>

#include "sgfit/math.hpp"

namespace sgfit {

// mt19937_64 with explicit value mappings. std:: distributions are
// implementation-defined, so everything downstream of a seed goes through
// these helpers to keep generated data reproducible across toolchains.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // uniform in [0, 1)
    double uniform() {
        return double(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n)
    uint64_t uniform_index(uint64_t n) {
        // Rejection-free modulo bias is negligible for the small n used here,
        // but keep it exact anyway.
        uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    bool coin_flip() { return (engine_() & 1u) != 0; }

    vec3 unit_vector() {
        double z = uniform(-1.0, 1.0);
        double phi = uniform(0.0, kTwoPi);
        double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        return {r * std::cos(phi), r * std::sin(phi), z};
    }

    // Derive an independent stream; distinct salts give distinct streams.
    Rng fork(uint64_t salt) {
        return Rng(engine_() ^ (salt * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull));
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace sgfit
