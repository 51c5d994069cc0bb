// Copyright (c) 2026 sgfit contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace sgfit {

// Forward-mode dual number carrying N derivative slots. Shading code is
// templated on the scalar type; instantiating it with Dual<N> yields exact
// partial derivatives of the output with respect to the seeded inputs.
//
// Branches (clamps, horizon tests) compare value parts, so derivatives of
// clamped quantities are zero outside the active range.
template <size_t N>
struct Dual {
    double v = 0.0;
    std::array<double, N> d{};

    Dual() = default;
    Dual(double value) : v(value) {}  // NOLINT: implicit from constants

    static Dual seeded(double value, size_t slot) {
        Dual r(value);
        r.d[slot] = 1.0;
        return r;
    }

    Dual operator-() const {
        Dual r(-v);
        for (size_t i = 0; i < N; ++i) r.d[i] = -d[i];
        return r;
    }

    Dual& operator+=(const Dual& o) {
        v += o.v;
        for (size_t i = 0; i < N; ++i) d[i] += o.d[i];
        return *this;
    }
    Dual& operator-=(const Dual& o) {
        v -= o.v;
        for (size_t i = 0; i < N; ++i) d[i] -= o.d[i];
        return *this;
    }
    Dual& operator*=(const Dual& o) {
        for (size_t i = 0; i < N; ++i) d[i] = d[i] * o.v + v * o.d[i];
        v *= o.v;
        return *this;
    }

    friend Dual operator+(Dual a, const Dual& b) { return a += b; }
    friend Dual operator-(Dual a, const Dual& b) { return a -= b; }
    friend Dual operator*(Dual a, const Dual& b) { return a *= b; }
    friend Dual operator/(const Dual& a, const Dual& b) {
        Dual r(a.v / b.v);
        double inv = 1.0 / (b.v * b.v);
        for (size_t i = 0; i < N; ++i) r.d[i] = (a.d[i] * b.v - a.v * b.d[i]) * inv;
        return r;
    }

    friend bool operator<(const Dual& a, const Dual& b) { return a.v < b.v; }
    friend bool operator>(const Dual& a, const Dual& b) { return a.v > b.v; }
    friend bool operator<=(const Dual& a, const Dual& b) { return a.v <= b.v; }
    friend bool operator>=(const Dual& a, const Dual& b) { return a.v >= b.v; }
};

template <size_t N>
Dual<N> exp(const Dual<N>& a) {
    Dual<N> r(std::exp(a.v));
    for (size_t i = 0; i < N; ++i) r.d[i] = r.v * a.d[i];
    return r;
}

template <size_t N>
Dual<N> expm1(const Dual<N>& a) {
    Dual<N> r(std::expm1(a.v));
    double e = std::exp(a.v);
    for (size_t i = 0; i < N; ++i) r.d[i] = e * a.d[i];
    return r;
}

template <size_t N>
Dual<N> log(const Dual<N>& a) {
    Dual<N> r(std::log(a.v));
    double inv = 1.0 / a.v;
    for (size_t i = 0; i < N; ++i) r.d[i] = a.d[i] * inv;
    return r;
}

template <size_t N>
Dual<N> log1p(const Dual<N>& a) {
    Dual<N> r(std::log1p(a.v));
    double inv = 1.0 / (1.0 + a.v);
    for (size_t i = 0; i < N; ++i) r.d[i] = a.d[i] * inv;
    return r;
}

template <size_t N>
Dual<N> sqrt(const Dual<N>& a) {
    Dual<N> r(std::sqrt(a.v));
    double inv = r.v > 0.0 ? 0.5 / r.v : 0.0;
    for (size_t i = 0; i < N; ++i) r.d[i] = a.d[i] * inv;
    return r;
}

template <size_t N>
Dual<N> max(const Dual<N>& a, const Dual<N>& b) {
    return a.v >= b.v ? a : b;
}

template <size_t N>
Dual<N> min(const Dual<N>& a, const Dual<N>& b) {
    return a.v <= b.v ? a : b;
}

template <size_t N>
double value_of(const Dual<N>& a) {
    return a.v;
}

}  // namespace sgfit
