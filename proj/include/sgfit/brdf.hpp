// Copyright (c) 2026 sgfit contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>

#include "sgfit/math.hpp"
#include "sgfit/sg.hpp"

namespace sgfit {

// Roughness floor; keeps the GGX lobe width finite.
inline constexpr double kMinRoughness = 0.01;

// Per-point Cook-Torrance parameters: Lambertian diffuse plus a GGX
// microfacet specular term with Schlick Fresnel and height-correlated Smith
// shadowing. alpha = roughness^2 (Disney-style remap).
struct BrdfSample {
    vec3 diffuse{0.0, 0.0, 0.0};
    vec3 specular{0.0, 0.0, 0.0};
    double roughness = kMinRoughness;
};

inline BrdfSample clamp_brdf(const BrdfSample& s) {
    BrdfSample r;
    r.diffuse = {clamp01(s.diffuse.x), clamp01(s.diffuse.y), clamp01(s.diffuse.z)};
    r.specular = {clamp01(s.specular.x), clamp01(s.specular.y), clamp01(s.specular.z)};
    r.roughness = std::clamp(s.roughness, kMinRoughness, 1.0);
    return r;
}

template <typename T>
T pow5(T x) {
    T x2 = x * x;
    return x2 * x2 * x;
}

// GGX normal distribution, cos_h = dot(n, h).
template <typename T>
T ggx_ndf(T alpha, T cos_h) {
    T a2 = alpha * alpha;
    T d = cos_h * cos_h * (a2 - T(1)) + T(1);
    return a2 / (T(kPi) * d * d);
}

// Height-correlated Smith masking-shadowing for GGX.
template <typename T>
T smith_lambda(T alpha, T cos_theta) {
    using std::sqrt;
    T c2 = cos_theta * cos_theta;
    T a2 = alpha * alpha;
    return (sqrt(c2 + a2 * (T(1) - c2)) / cos_theta - T(1)) * T(0.5);
}

template <typename T>
T smith_g2(T alpha, T cos_l, T cos_v) {
    return T(1) / (T(1) + smith_lambda(alpha, cos_l) + smith_lambda(alpha, cos_v));
}

// Schlick Fresnel with f90 = saturate(50 * f0): any realistic specular color
// keeps the full grazing response, while a zero specular albedo kills the
// microfacet term entirely (pure Lambertian surfaces stay exactly diffuse/pi).
template <typename T>
T fresnel_f90(T f0) {
    return clamp01(T(50) * f0);
}

template <typename T>
Vec3<T> fresnel_schlick(const Vec3<T>& f0, T cos_hv) {
    T q = pow5(T(1) - cos_hv);
    Vec3<T> f;
    f.x = f0.x * (T(1) - q) + fresnel_f90(f0.x) * q;
    f.y = f0.y * (T(1) - q) + fresnel_f90(f0.y) * q;
    f.z = f0.z * (T(1) - q) + fresnel_f90(f0.z) * q;
    return f;
}

// d fresnel / d f0 for one channel; piecewise from the f90 clamp.
inline double fresnel_f0_slope(double f0, double q) {
    return (1.0 - q) + (f0 < 0.02 ? 50.0 * q : 0.0);
}

// Pointwise Cook-Torrance BRDF, no SG approximation. Zero below the horizon.
inline vec3 brdf_eval(const BrdfSample& s, const vec3& n, const vec3& l, const vec3& v) {
    double cos_l = dot(n, l);
    double cos_v = dot(n, v);
    if (cos_l <= 0.0 || cos_v <= 0.0) return vec3(0.0, 0.0, 0.0);
    vec3 h = normalize(l + v);
    double alpha = s.roughness * s.roughness;
    double d = ggx_ndf(alpha, dot(n, h));
    double g = smith_g2(alpha, cos_l, cos_v);
    vec3 f = fresnel_schlick(s.specular, std::clamp(dot(h, v), 0.0, 1.0));
    return s.diffuse * (1.0 / kPi) + f * (d * g / (4.0 * cos_l * cos_v));
}

// ---------------------------------------------------------------------------
// SG approximations of the BRDF lobes (Wang et al. style)
// ---------------------------------------------------------------------------

// Clamped-cosine lobe as an SG about the normal. Sharpness is the standard
// 2.133 fit; the amplitude is normalized so the lobe integrates to pi, which
// keeps a unit-radiance uniform environment at unit diffuse response.
inline constexpr double kCosineLobeSharpness = 2.133;

inline double cosine_lobe_amplitude() {
    static const double amp = kPi / sg_integral_scalar(kCosineLobeSharpness);
    return amp;
}

template <typename T>
SphericalGaussianT<T> cosine_lobe_sg(const Vec3<T>& n) {
    T a = T(cosine_lobe_amplitude());
    return {n, T(kCosineLobeSharpness), Vec3<T>(a, a, a)};
}

// Warp denominator floor for grazing views; bounds the warped sharpness.
inline constexpr double kGrazingCosFloor = 1e-4;

// SG in the light-direction domain approximating the specular term
// D*F*G / (4 (n.l)(n.v)). The GGX NDF maps to a half-vector SG with
// sharpness 2/alpha^2 and peak 1/(pi alpha^2); the spherical warp about the
// reflection direction divides the sharpness by 4 (h.v) at h = n. F and G are
// folded into the amplitude at the lobe center, where h = n and n.l = n.v.
template <typename T>
SphericalGaussianT<T> specular_sg_lobe(const Vec3<T>& f0, T roughness, const Vec3<T>& n,
                                       const Vec3<T>& v) {
    using std::max;
    T cos_nv = max(dot(n, v), T(kGrazingCosFloor));
    T alpha = roughness * roughness;
    T lambda_h = T(2) / (alpha * alpha);
    SphericalGaussianT<T> lobe;
    lobe.axis = reflect(v, n);
    lobe.sharpness = lambda_h / (T(4) * cos_nv);
    T peak = T(1) / (T(kPi) * alpha * alpha);
    T scale = peak * smith_g2(alpha, cos_nv, cos_nv) / (T(4) * cos_nv * cos_nv);
    lobe.amplitude = fresnel_schlick(f0, cos_nv) * scale;
    return lobe;
}

inline SphericalGaussian specular_sg_lobe(const BrdfSample& s, const vec3& n, const vec3& v) {
    return specular_sg_lobe<double>(s.specular, s.roughness, n, v);
}

}  // namespace sgfit
