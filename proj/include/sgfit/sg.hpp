// Copyright (c) 2026 sgfit contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sgfit/math.hpp"

namespace sgfit {

// Spherical Gaussian g(v) = amplitude * exp(sharpness * (dot(v, axis) - 1)).
// Closed under products; the sphere integral has a closed form. Axis is unit,
// sharpness and amplitudes are non-negative.
template <typename T>
struct SphericalGaussianT {
    Vec3<T> axis{T(0), T(0), T(1)};
    T sharpness{T(0)};
    Vec3<T> amplitude{T(0), T(0), T(0)};
};

using SphericalGaussian = SphericalGaussianT<double>;

inline bool sg_valid(const SphericalGaussian& g) {
    return is_unit(g.axis) && g.sharpness >= 0.0 && g.amplitude.x >= 0.0 &&
           g.amplitude.y >= 0.0 && g.amplitude.z >= 0.0;
}

template <typename T>
Vec3<T> sg_eval(const SphericalGaussianT<T>& g, const Vec3<T>& v) {
    using std::exp;
    T e = exp(g.sharpness * (dot(v, g.axis) - T(1)));
    return g.amplitude * e;
}

inline vec3 sg_eval_checked(const SphericalGaussian& g, const vec3& v) {
    if (!is_unit(v)) throw std::invalid_argument("sg_eval: direction must be unit length");
    return sg_eval(g, v);
}

// Product of two SGs is an SG: the merged axis is the normalized sum of the
// sharpness-weighted axes. When the weighted axes cancel exactly the result
// is a constant lobe; its axis is +z by convention and callers must not
// depend on it.
template <typename T>
SphericalGaussianT<T> sg_product(const SphericalGaussianT<T>& a, const SphericalGaussianT<T>& b) {
    using std::exp;
    Vec3<T> m = a.axis * a.sharpness + b.axis * b.sharpness;
    T lm = length(m);
    SphericalGaussianT<T> r;
    if (value_of(lm) > 0.0) {
        r.axis = m / lm;
        r.sharpness = lm;
    } else {
        r.axis = Vec3<T>(T(0), T(0), T(1));
        r.sharpness = T(0);
    }
    r.amplitude = a.amplitude * b.amplitude * exp(r.sharpness - a.sharpness - b.sharpness);
    return r;
}

// Scalar sphere integral of a unit-amplitude lobe:
// 2*pi/lambda * (1 - exp(-2*lambda)), with a series branch below 1e-6 where
// the ratio is 0/0. expm1 keeps the closed form accurate near the branch.
template <typename T>
T sg_integral_scalar(T sharpness) {
    using std::expm1;
    if (value_of(sharpness) < 1e-6) {
        // 4*pi*(1 - l + 2/3 l^2), exact to O(l^3)
        return T(kFourPi) * (T(1) - sharpness + sharpness * sharpness * T(2.0 / 3.0));
    }
    return T(kTwoPi) / sharpness * (-expm1(T(-2) * sharpness));
}

template <typename T>
Vec3<T> sg_integral(const SphericalGaussianT<T>& g) {
    return g.amplitude * sg_integral_scalar(g.sharpness);
}

template <typename T>
Vec3<T> sg_inner_product(const SphericalGaussianT<T>& a, const SphericalGaussianT<T>& b) {
    return sg_integral(sg_product(a, b));
}

// ---------------------------------------------------------------------------
// Fixed 24-lobe environment bank
// ---------------------------------------------------------------------------

inline constexpr int kBankLobeCount = 24;

// Deterministic Fibonacci lattice on the unit sphere. Same count always
// yields bit-identical axes.
inline std::vector<vec3> bank_axes(int count) {
    if (count < 1) throw std::invalid_argument("bank_axes: count must be >= 1");
    const double golden_angle = kPi * (3.0 - std::sqrt(5.0));
    std::vector<vec3> axes;
    axes.reserve(size_t(count));
    for (int i = 0; i < count; ++i) {
        double z = 1.0 - (2.0 * i + 1.0) / count;
        double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        double phi = golden_angle * i;
        axes.push_back({r * std::cos(phi), r * std::sin(phi), z});
    }
    return axes;
}

// Shared lobe sharpness from the mean nearest-neighbor angle: each lobe falls
// to half amplitude at the mean distance to its closest neighbor.
inline double bank_sharpness(const std::vector<vec3>& axes) {
    if (axes.size() < 2) throw std::invalid_argument("bank_sharpness: need at least 2 axes");
    double sum_cos = 0.0;
    for (size_t i = 0; i < axes.size(); ++i) {
        double best = -1.0;
        for (size_t j = 0; j < axes.size(); ++j) {
            if (i == j) continue;
            best = std::max(best, dot(axes[i], axes[j]));
        }
        sum_cos += best;
    }
    double mean_cos = sum_cos / double(axes.size());
    double denom = 1.0 - mean_cos;
    if (denom <= 0.0) throw std::invalid_argument("bank_sharpness: duplicate axes");
    return std::log(2.0) / denom;
}

// 24 lobes with a fixed shared axis layout and sharpness; only the RGB
// amplitudes vary. Banks produced by fitting or dataset projection keep
// every amplitude channel in [0, 2].
struct SgBank {
    std::array<vec3, kBankLobeCount> axes;
    double sharpness = 0.0;
    std::array<vec3, kBankLobeCount> amplitudes;

    static SgBank make() {
        SgBank bank;
        std::vector<vec3> ax = bank_axes(kBankLobeCount);
        for (int i = 0; i < kBankLobeCount; ++i) bank.axes[size_t(i)] = ax[size_t(i)];
        bank.sharpness = bank_sharpness(ax);
        for (auto& a : bank.amplitudes) a = vec3(0.0, 0.0, 0.0);
        return bank;
    }

    SphericalGaussian lobe(int i) const {
        return {axes[size_t(i)], sharpness, amplitudes[size_t(i)]};
    }
};

inline vec3 bank_eval(const SgBank& bank, const vec3& v) {
    if (!is_unit(v)) throw std::invalid_argument("bank_eval: direction must be unit length");
    vec3 sum(0.0, 0.0, 0.0);
    for (int i = 0; i < kBankLobeCount; ++i) sum += sg_eval(bank.lobe(i), v);
    return sum;
}

inline bool bank_amplitudes_in_range(const SgBank& bank, double lo = 0.0, double hi = 2.0) {
    for (const vec3& a : bank.amplitudes)
        for (int c = 0; c < 3; ++c)
            if (a[c] < lo || a[c] > hi) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Bank text format: 24 lines of "ax ay az sharpness ar ag ab"
// ---------------------------------------------------------------------------

inline std::string bank_to_text(const SgBank& bank) {
    std::string out;
    char line[256];
    for (int i = 0; i < kBankLobeCount; ++i) {
        const vec3& ax = bank.axes[size_t(i)];
        const vec3& am = bank.amplitudes[size_t(i)];
        std::snprintf(line, sizeof line, "%.17g %.17g %.17g %.17g %.17g %.17g %.17g\n",
                      ax.x, ax.y, ax.z, bank.sharpness, am.x, am.y, am.z);
        out += line;
    }
    return out;
}

inline SgBank bank_from_text(const std::string& text) {
    SgBank bank;
    std::istringstream in(text);
    std::string line;
    int i = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (i >= kBankLobeCount)
            throw std::runtime_error("SG bank parse: more than 24 lobe lines");
        std::istringstream ls(line);
        vec3 ax, am;
        double sharp;
        if (!(ls >> ax.x >> ax.y >> ax.z >> sharp >> am.x >> am.y >> am.z))
            throw std::runtime_error("SG bank parse: bad lobe line " + std::to_string(i + 1));
        bank.axes[size_t(i)] = ax;
        bank.sharpness = sharp;
        bank.amplitudes[size_t(i)] = am;
        ++i;
    }
    if (i != kBankLobeCount)
        throw std::runtime_error("SG bank parse: expected 24 lobe lines, got " + std::to_string(i));
    return bank;
}

inline void save_bank(const SgBank& bank, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << bank_to_text(bank);
}

inline SgBank load_bank(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open SG bank file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return bank_from_text(ss.str());
    } catch (const std::runtime_error& e) {
        throw std::runtime_error(std::string(e.what()) + " in " + path);
    }
}

}  // namespace sgfit
