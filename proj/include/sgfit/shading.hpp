// Copyright (c) 2026 sgfit contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>

#include "sgfit/brdf.hpp"
#include "sgfit/image.hpp"
#include "sgfit/math.hpp"
#include "sgfit/parallel.hpp"
#include "sgfit/sg.hpp"

namespace sgfit {

// Point light colocated with the camera, quadratic falloff.
struct FlashLight {
    vec3 intensity{1.0, 1.0, 1.0};
    vec3 position{0.0, 0.0, 0.0};
};

struct ShadingPoint {
    vec3 position;  // camera space, meters
    vec3 normal;    // unit, camera space
    vec3 view;      // unit, toward the camera
};

// ---------------------------------------------------------------------------
// Term decomposition. Rendered radiance is affine in diffuse albedo, specular
// albedo (through Schlick), and the SG bank amplitudes; only roughness and
// the normal enter nonlinearly. The scalar-templated terms below carry that
// structure so the same code yields values (double) and derivatives (Dual).
//
//   x_c = flash_c * (diffuse_c/pi + spec_geo * (f0_c*(1-qf) + qf))
//       + diffuse_c/pi * sum_i amp_ic * diff_coeff_i
//       + spec_peak * (f0_c*(1-qe) + qe) * sum_i amp_ic * spec_coeff_i
// ---------------------------------------------------------------------------

template <typename T>
struct FlashTerms {
    Vec3<T> irradiance{T(0), T(0), T(0)};  // intensity/r^2 * max(0, n.l)
    T spec_geo{T(0)};                      // D*G / (4 (n.l)(n.v))
    T one_minus_qf{T(0)}, qf{T(0)};        // Schlick split at h
};

template <typename T>
struct EnvTerms {
    std::array<T, kBankLobeCount> diff_coeff{};  // cosine-lobe inner products
    std::array<T, kBankLobeCount> spec_coeff{};  // warped-lobe inner products * axis cosine
    T spec_peak{T(0)};                           // NDF peak * G / (4 (n.v)^2)
    T one_minus_qe{T(0)}, qe{T(0)};              // Schlick split at lobe center
};

// Integral of the product of two unit-amplitude SGs, stable for large
// sharpness (the exponent dm - la - lb is always <= 0).
template <typename T>
T sg_product_integral_unit(T la, T lb, T cos_axes, T* dm_out = nullptr) {
    using std::exp;
    using std::sqrt;
    T dm = sqrt(la * la + lb * lb + T(2) * la * lb * cos_axes);
    if (dm_out) *dm_out = dm;
    return exp(dm - la - lb) * sg_integral_scalar(dm);
}

template <typename T>
FlashTerms<T> flash_terms(const vec3& position, const Vec3<T>& n, const Vec3<T>& v,
                          const FlashLight& flash, T roughness) {
    using std::max;
    FlashTerms<T> out;
    vec3 to_light = flash.position - position;
    double r2 = length_squared(to_light);
    if (r2 < 1e-12) throw std::invalid_argument("shade_flash: light coincides with surface point");
    Vec3<T> l = Vec3<T>(normalize(to_light));
    T cos_l = dot(n, l);
    T cos_v = dot(n, v);
    if (value_of(cos_l) <= 0.0 || value_of(cos_v) <= 0.0) return out;
    out.irradiance = Vec3<T>(flash.intensity) * (cos_l / T(r2));
    Vec3<T> h = normalize(l + v);
    T alpha = roughness * roughness;
    T d = ggx_ndf(alpha, dot(n, h));
    T g = smith_g2(alpha, cos_l, cos_v);
    out.spec_geo = d * g / (T(4) * cos_l * cos_v);
    T cos_hv = dot(h, v);
    out.qf = pow5(T(1) - cos_hv);
    out.one_minus_qf = T(1) - out.qf;
    return out;
}

template <typename T>
EnvTerms<T> env_terms(const SgBank& bank, const Vec3<T>& n, const Vec3<T>& v, T roughness) {
    using std::max;
    EnvTerms<T> out;
    const T bank_sharp = T(bank.sharpness);

    // Diffuse: inner product of each unit lobe with the cosine lobe about n.
    const T cos_sharp = T(kCosineLobeSharpness);
    const T cos_amp = T(cosine_lobe_amplitude());
    for (int i = 0; i < kBankLobeCount; ++i) {
        T c = dot(Vec3<T>(bank.axes[size_t(i)]), n);
        out.diff_coeff[size_t(i)] = cos_amp * sg_product_integral_unit(bank_sharp, cos_sharp, c);
    }

    // Specular: warped GGX lobe about the reflection direction, evaluated
    // against each bank lobe; the cosine factor is taken at the product axis.
    T cos_nv = dot(n, v);
    if (value_of(cos_nv) <= 0.0) return out;
    cos_nv = max(cos_nv, T(kGrazingCosFloor));
    T alpha = roughness * roughness;
    T lambda_w = T(2) / (alpha * alpha) / (T(4) * cos_nv);
    Vec3<T> refl = reflect(v, n);
    out.spec_peak = (T(1) / (T(kPi) * alpha * alpha)) * smith_g2(alpha, cos_nv, cos_nv) /
                    (T(4) * cos_nv * cos_nv);
    out.qe = pow5(T(1) - cos_nv);
    out.one_minus_qe = T(1) - out.qe;
    for (int i = 0; i < kBankLobeCount; ++i) {
        Vec3<T> axis = Vec3<T>(bank.axes[size_t(i)]);
        T c = dot(axis, refl);
        T dm;
        T inner = sg_product_integral_unit(bank_sharp, lambda_w, c, &dm);
        // dot(n, product axis) = (la*dot(n,axis) + lw*dot(n,refl)) / dm
        T cos_prod = (bank_sharp * dot(n, axis) + lambda_w * cos_nv) / max(dm, T(1e-12));
        out.spec_coeff[size_t(i)] = inner * max(cos_prod, T(0));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Public shading operations
// ---------------------------------------------------------------------------

inline vec3 shade_flash(const ShadingPoint& p, const BrdfSample& s, const FlashLight& flash) {
    vec3 to_light = flash.position - p.position;
    double r2 = length_squared(to_light);
    if (r2 < 1e-12) throw std::invalid_argument("shade_flash: light coincides with surface point");
    vec3 l = normalize(to_light);
    double cos_l = std::max(0.0, dot(p.normal, l));
    return flash.intensity * (cos_l / r2) * brdf_eval(s, p.normal, l, p.view);
}

inline vec3 shade_env(const ShadingPoint& p, const BrdfSample& s, const SgBank& bank) {
    EnvTerms<double> terms = env_terms<double>(bank, p.normal, p.view, s.roughness);
    vec3 diff_sum(0.0, 0.0, 0.0), spec_sum(0.0, 0.0, 0.0);
    for (int i = 0; i < kBankLobeCount; ++i) {
        diff_sum += bank.amplitudes[size_t(i)] * terms.diff_coeff[size_t(i)];
        spec_sum += bank.amplitudes[size_t(i)] * terms.spec_coeff[size_t(i)];
    }
    vec3 fresnel;
    for (int c = 0; c < 3; ++c)
        fresnel[c] = s.specular[c] * terms.one_minus_qe + fresnel_f90(s.specular[c]) * terms.qe;
    return s.diffuse * diff_sum * (1.0 / kPi) + fresnel * spec_sum * terms.spec_peak;
}

// Brute-force quadrature oracle for shade_env: deterministic Fibonacci
// direction set over the sphere; the horizon clamp discards the lower half.
inline vec3 shade_env_reference(const ShadingPoint& p, const BrdfSample& s, const SgBank& bank,
                                int samples) {
    if (samples < 1) throw std::invalid_argument("shade_env_reference: samples must be >= 1");
    std::vector<vec3> dirs = bank_axes(samples);
    vec3 sum(0.0, 0.0, 0.0);
    for (const vec3& l : dirs) {
        double cos_l = dot(p.normal, l);
        if (cos_l <= 0.0) continue;
        sum += bank_eval(bank, l) * brdf_eval(s, p.normal, l, p.view) * cos_l;
    }
    return sum * (kFourPi / double(samples));
}

// ---------------------------------------------------------------------------
// Image-level forward renderer
// ---------------------------------------------------------------------------

struct SvbrdfMaps {
    ImageD diffuse;   // 3 channels
    ImageD specular;  // 3 channels
    ImageD roughness;  // 1 channel

    SvbrdfMaps() = default;
    SvbrdfMaps(int w, int h) : diffuse(w, h, 3), specular(w, h, 3), roughness(w, h, 1) {}

    BrdfSample sample_at(int x, int y) const {
        BrdfSample s;
        s.diffuse = get_rgb(diffuse, x, y);
        s.specular = get_rgb(specular, x, y);
        s.roughness = roughness.at(x, y);
        return clamp_brdf(s);
    }
};

struct RenderOptions {
    bool flash = true;
    bool environment = true;
    bool reference_env = false;  // quadrature instead of the fast SG path
    int reference_samples = 4096;
    int threads = 1;
};

// forward declaration; GBuffer lives in geometry.hpp
struct GBuffer;

}  // namespace sgfit
