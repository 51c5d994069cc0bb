// Copyright (c) 2026 sgfit contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace sgfit {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;
inline constexpr double kFourPi = 4.0 * kPi;

// Thrown when an optimizer or solver produces non-finite values. Input
// contract violations use std::invalid_argument instead; the CLI maps the
// two to distinct exit codes.
class numerical_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

template <typename T>
T clamp01(T x) {
    if (x < T(0)) return T(0);
    if (x > T(1)) return T(1);
    return x;
}

// Scalar extraction: the identity on plain doubles, overloaded for dual
// numbers so templated numeric code can branch on value parts.
inline double value_of(double a) { return a; }

// ---------------------------------------------------------------------------
// Small fixed-size vectors, templated on the scalar so the shading path can
// run on dual numbers.
// ---------------------------------------------------------------------------

template <typename T>
struct Vec2 {
    T x{}, y{};

    Vec2() = default;
    Vec2(T x_, T y_) : x(x_), y(y_) {}

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(T s) const { return {x * s, y * s}; }
};

template <typename T>
struct Vec3 {
    T x{}, y{}, z{};

    Vec3() = default;
    Vec3(T x_, T y_, T z_) : x(x_), y(y_), z(z_) {}
    explicit Vec3(T s) : x(s), y(s), z(s) {}

    template <typename U>
    explicit Vec3(const Vec3<U>& o) : x(T(o.x)), y(T(o.y)), z(T(o.z)) {}

    T operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    T& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

    Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(const Vec3& o) const { return {x * o.x, y * o.y, z * o.z}; }
    Vec3 operator/(const Vec3& o) const { return {x / o.x, y / o.y, z / o.z}; }
    Vec3 operator*(T s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(T s) const { return {x / s, y / s, z / s}; }

    Vec3& operator+=(const Vec3& o) {
        x += o.x; y += o.y; z += o.z;
        return *this;
    }
    Vec3& operator-=(const Vec3& o) {
        x -= o.x; y -= o.y; z -= o.z;
        return *this;
    }
    Vec3& operator*=(T s) {
        x *= s; y *= s; z *= s;
        return *this;
    }
};

template <typename T>
Vec3<T> operator*(T s, const Vec3<T>& v) {
    return v * s;
}

template <typename T>
T dot(const Vec3<T>& a, const Vec3<T>& b) {
    return a.x * b.x + a.y * b.y + a.z * b.z;
}

template <typename T>
Vec3<T> cross(const Vec3<T>& a, const Vec3<T>& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

template <typename T>
T length_squared(const Vec3<T>& v) {
    return dot(v, v);
}

template <typename T>
T length(const Vec3<T>& v) {
    using std::sqrt;
    return sqrt(dot(v, v));
}

template <typename T>
Vec3<T> normalize(const Vec3<T>& v) {
    return v / length(v);
}

template <typename T>
Vec3<T> reflect(const Vec3<T>& v, const Vec3<T>& n) {
    return n * (T(2) * dot(v, n)) - v;
}

template <typename T>
Vec3<T> min(const Vec3<T>& a, const Vec3<T>& b) {
    using std::min;
    return {min(a.x, b.x), min(a.y, b.y), min(a.z, b.z)};
}

template <typename T>
Vec3<T> max(const Vec3<T>& a, const Vec3<T>& b) {
    using std::max;
    return {max(a.x, b.x), max(a.y, b.y), max(a.z, b.z)};
}

using vec2 = Vec2<double>;
using vec3 = Vec3<double>;

inline bool is_unit(const vec3& v, double tol = 1e-6) {
    return std::abs(length(v) - 1.0) <= tol;
}

inline bool all_finite(const vec3& v) {
    return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

// Any unit vector orthogonal to n; branch avoids cancellation near the poles.
inline vec3 any_orthonormal(const vec3& n) {
    if (std::abs(n.z) < 0.9)
        return normalize(cross(n, vec3(0.0, 0.0, 1.0)));
    return normalize(cross(n, vec3(1.0, 0.0, 0.0)));
}

struct OrthonormalBasis {
    vec3 tangent;
    vec3 bitangent;
};

inline OrthonormalBasis orthonormal_basis(const vec3& n) {
    vec3 t = any_orthonormal(n);
    return {t, cross(n, t)};
}

// ---------------------------------------------------------------------------
// Quaternion / rigid transform
// ---------------------------------------------------------------------------

struct Quat {
    double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

    static Quat axis_angle(const vec3& axis, double radians) {
        double h = 0.5 * radians;
        double s = std::sin(h);
        return {std::cos(h), axis.x * s, axis.y * s, axis.z * s};
    }

    Quat operator*(const Quat& o) const {
        return {w * o.w - x * o.x - y * o.y - z * o.z,
                w * o.x + x * o.w + y * o.z - z * o.y,
                w * o.y - x * o.z + y * o.w + z * o.x,
                w * o.z + x * o.y - y * o.x + z * o.w};
    }

    Quat normalized() const {
        double n = std::sqrt(w * w + x * x + y * y + z * z);
        return {w / n, x / n, y / n, z / n};
    }

    Quat conjugate() const { return {w, -x, -y, -z}; }

    vec3 rotate(const vec3& v) const {
        // q v q*
        vec3 u(x, y, z);
        return u * (2.0 * dot(u, v)) + v * (w * w - dot(u, u)) + cross(u, v) * (2.0 * w);
    }
};

struct RigidTransform {
    Quat rotation;
    vec3 translation{0.0, 0.0, 0.0};

    vec3 apply(const vec3& p) const { return rotation.rotate(p) + translation; }
    vec3 apply_dir(const vec3& d) const { return rotation.rotate(d); }

    RigidTransform inverse() const {
        Quat r = rotation.conjugate();
        return {r, -r.rotate(translation)};
    }
};

// ---------------------------------------------------------------------------
// Deterministic reductions
// ---------------------------------------------------------------------------

// Fixed-order pairwise (cascade) summation. Bit-identical for a given input
// order regardless of how the values were produced.
inline double pairwise_sum(std::span<const double> values) {
    size_t n = values.size();
    if (n == 0) return 0.0;
    if (n <= 8) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    size_t half = n / 2;
    return pairwise_sum(values.subspan(0, half)) + pairwise_sum(values.subspan(half));
}

inline double pairwise_sum(const std::vector<double>& values) {
    return pairwise_sum(std::span<const double>(values));
}

}  // namespace sgfit
