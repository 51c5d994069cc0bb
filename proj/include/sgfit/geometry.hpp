// Copyright (c) 2026 sgfit contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sgfit/image.hpp"
#include "sgfit/math.hpp"
#include "sgfit/parallel.hpp"
#include "sgfit/rng.hpp"

namespace sgfit {

// ---------------------------------------------------------------------------
// Camera: right-handed, looks along -z in its local frame, +x right, +y up.
// Pose maps camera space to world space. Depth written to G-buffers is planar
// (distance along the forward axis), normalized by [near, far].
// ---------------------------------------------------------------------------

struct Camera {
    int width = 256;
    int height = 256;
    double fov_y_deg = 50.0;
    RigidTransform pose;
    double near_plane = 0.1;
    double far_plane = 10.0;

    void validate() const {
        if (!(fov_y_deg > 10.0 && fov_y_deg < 120.0))
            throw std::invalid_argument("camera: vertical FOV must be in (10, 120) degrees");
        if (!(near_plane > 0.0 && far_plane > near_plane))
            throw std::invalid_argument("camera: require 0 < near < far");
        if (width < 1 || height < 1) throw std::invalid_argument("camera: empty resolution");
    }

    double tan_half_fov() const { return std::tan(0.5 * fov_y_deg * kPi / 180.0); }
    double aspect() const { return double(width) / double(height); }

    // Unit direction through the pixel center, in camera space.
    vec3 pixel_direction(int px, int py) const {
        double th = tan_half_fov();
        double ndc_x = (2.0 * (px + 0.5) / width - 1.0) * th * aspect();
        double ndc_y = (1.0 - 2.0 * (py + 0.5) / height) * th;
        return normalize(vec3(ndc_x, ndc_y, -1.0));
    }
};

// Deterministic pose jitter mimicking handheld camera shake between the two
// shots. Rotation angle and translation magnitude are uniform in their caps.
inline Camera perturb_camera(const Camera& camera, uint64_t seed, double max_rotation_deg,
                             double max_translation) {
    if (max_rotation_deg < 0.0 || max_translation < 0.0)
        throw std::invalid_argument("perturb_camera: magnitudes must be >= 0");
    Camera out = camera;
    Rng rng(seed);
    vec3 rot_axis = rng.unit_vector();
    double angle = rng.uniform(0.0, max_rotation_deg * kPi / 180.0);
    vec3 trans_dir = rng.unit_vector();
    double dist = rng.uniform(0.0, max_translation);
    out.pose.rotation = (Quat::axis_angle(rot_axis, angle) * camera.pose.rotation).normalized();
    out.pose.translation = camera.pose.translation + trans_dir * dist;
    return out;
}

// ---------------------------------------------------------------------------
// Primitives. Canonical shapes live in a local frame spanning roughly
// [-1, 1]^3; pose and per-axis scale place them in the world.
// ---------------------------------------------------------------------------

enum class PrimitiveKind : int {
    Sphere = 0,
    Box,
    Cylinder,
    Cone,
    Torus,
    Ellipsoid,
    Capsule,
    Disk,
    RoundedBox,
};

inline constexpr int kPrimitiveKindCount = 9;

inline const char* primitive_kind_name(PrimitiveKind k) {
    switch (k) {
        case PrimitiveKind::Sphere: return "sphere";
        case PrimitiveKind::Box: return "box";
        case PrimitiveKind::Cylinder: return "cylinder";
        case PrimitiveKind::Cone: return "cone";
        case PrimitiveKind::Torus: return "torus";
        case PrimitiveKind::Ellipsoid: return "ellipsoid";
        case PrimitiveKind::Capsule: return "capsule";
        case PrimitiveKind::Disk: return "disk";
        case PrimitiveKind::RoundedBox: return "rounded-box";
    }
    return "unknown";
}

inline PrimitiveKind primitive_kind_from_name(const std::string& name) {
    for (int i = 0; i < kPrimitiveKindCount; ++i) {
        auto k = PrimitiveKind(i);
        if (name == primitive_kind_name(k)) return k;
    }
    throw std::invalid_argument("unknown primitive kind: " + name);
}

struct Primitive {
    PrimitiveKind kind = PrimitiveKind::Sphere;
    RigidTransform pose;
    vec3 scale{1.0, 1.0, 1.0};
    int material_id = 0;
    double uv_scale = 1.0;
};

struct RayHit {
    double t = 0.0;
    vec3 normal;  // unit, outward, world space
    vec2 uv;      // canonical parameterization, [0,1)-ish per kind
};

// Canonical torus proportions (major radius 1); nonuniform scale stretches it.
inline constexpr double kTorusMinorRadius = 0.35;
inline constexpr double kRoundedBoxRadius = 0.25;

namespace detail {

struct LocalHit {
    double t;
    vec3 normal;
    vec2 uv;
};

inline constexpr double kRayEps = 1e-9;

inline double azimuth01(double x, double y) {
    double a = std::atan2(y, x) * (0.5 / kPi);
    return a < 0.0 ? a + 1.0 : a;
}

// --- ray vs |p|^2 = 1 with non-unit direction ---
inline bool unit_sphere_roots(const vec3& o, const vec3& d, double& t0, double& t1) {
    double a = dot(d, d);
    double b = 2.0 * dot(o, d);
    double c = dot(o, o) - 1.0;
    double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) return false;
    double s = std::sqrt(disc);
    double q = b > 0.0 ? -0.5 * (b + s) : -0.5 * (b - s);
    t0 = q / a;
    t1 = c / q;
    if (t0 > t1) std::swap(t0, t1);
    return true;
}

inline std::optional<LocalHit> intersect_sphere(const vec3& o, const vec3& d) {
    double t0, t1;
    if (!unit_sphere_roots(o, d, t0, t1)) return std::nullopt;
    double t = t0 >= kRayEps ? t0 : t1;
    if (t < kRayEps) return std::nullopt;
    vec3 p = o + d * t;
    return LocalHit{t, p, {azimuth01(p.x, p.y), std::acos(std::clamp(p.z, -1.0, 1.0)) / kPi}};
}

inline std::optional<LocalHit> intersect_box(const vec3& o, const vec3& d) {
    double t_lo = -1e300, t_hi = 1e300;
    int axis_lo = -1;
    for (int a = 0; a < 3; ++a) {
        if (std::abs(d[a]) < 1e-15) {
            if (std::abs(o[a]) > 1.0) return std::nullopt;
            continue;
        }
        double inv = 1.0 / d[a];
        double ta = (-1.0 - o[a]) * inv;
        double tb = (1.0 - o[a]) * inv;
        if (ta > tb) std::swap(ta, tb);
        if (ta > t_lo) {
            t_lo = ta;
            axis_lo = a;
        }
        t_hi = std::min(t_hi, tb);
        if (t_lo > t_hi) return std::nullopt;
    }
    if (t_lo < kRayEps || axis_lo < 0) return std::nullopt;  // origin inside: skip
    vec3 p = o + d * t_lo;
    vec3 n(0.0, 0.0, 0.0);
    n[axis_lo] = p[axis_lo] > 0.0 ? 1.0 : -1.0;
    int u_axis = (axis_lo + 1) % 3, v_axis = (axis_lo + 2) % 3;
    return LocalHit{t_lo, n, {0.5 * (p[u_axis] + 1.0), 0.5 * (p[v_axis] + 1.0)}};
}

inline std::optional<LocalHit> intersect_disk_plane(const vec3& o, const vec3& d, double z,
                                                    double radius, vec2* xy = nullptr) {
    if (std::abs(d.z) < 1e-15) return std::nullopt;
    double t = (z - o.z) / d.z;
    if (t < kRayEps) return std::nullopt;
    vec3 p = o + d * t;
    if (p.x * p.x + p.y * p.y > radius * radius) return std::nullopt;
    if (xy) *xy = {p.x, p.y};
    vec3 n(0.0, 0.0, o.z > z ? 1.0 : -1.0);
    return LocalHit{t, n, {0.5 * (p.x / radius + 1.0), 0.5 * (p.y / radius + 1.0)}};
}

inline std::optional<LocalHit> intersect_cylinder(const vec3& o, const vec3& d) {
    std::optional<LocalHit> best;
    auto consider = [&best](const std::optional<LocalHit>& h) {
        if (h && (!best || h->t < best->t)) best = h;
    };
    // side x^2 + y^2 = 1, |z| <= 1
    double a = d.x * d.x + d.y * d.y;
    if (a > 1e-15) {
        double b = 2.0 * (o.x * d.x + o.y * d.y);
        double c = o.x * o.x + o.y * o.y - 1.0;
        double disc = b * b - 4.0 * a * c;
        if (disc >= 0.0) {
            double s = std::sqrt(disc);
            for (double t : {(-b - s) / (2.0 * a), (-b + s) / (2.0 * a)}) {
                if (t < kRayEps) continue;
                vec3 p = o + d * t;
                if (std::abs(p.z) > 1.0) continue;
                consider(LocalHit{t, vec3(p.x, p.y, 0.0), {azimuth01(p.x, p.y), 0.5 * (p.z + 1.0)}});
                break;  // nearest valid side hit only
            }
        }
    }
    consider(intersect_disk_plane(o, d, 1.0, 1.0));
    consider(intersect_disk_plane(o, d, -1.0, 1.0));
    return best;
}

inline std::optional<LocalHit> intersect_cone(const vec3& o, const vec3& d) {
    std::optional<LocalHit> best;
    auto consider = [&best](const std::optional<LocalHit>& h) {
        if (h && (!best || h->t < best->t)) best = h;
    };
    // side: x^2 + y^2 = (k (1 - z))^2 with k = 1/2, apex at z = 1
    const double k2 = 0.25;
    double a = d.x * d.x + d.y * d.y - k2 * d.z * d.z;
    double b = 2.0 * (o.x * d.x + o.y * d.y) + 2.0 * k2 * (1.0 - o.z) * d.z;
    double c = o.x * o.x + o.y * o.y - k2 * (1.0 - o.z) * (1.0 - o.z);
    double roots[2];
    int nroots = 0;
    if (std::abs(a) < 1e-15) {
        if (std::abs(b) > 1e-15) roots[nroots++] = -c / b;
    } else {
        double disc = b * b - 4.0 * a * c;
        if (disc >= 0.0) {
            double s = std::sqrt(disc);
            roots[nroots++] = (-b - s) / (2.0 * a);
            roots[nroots++] = (-b + s) / (2.0 * a);
            if (roots[0] > roots[1]) std::swap(roots[0], roots[1]);
        }
    }
    for (int i = 0; i < nroots; ++i) {
        double t = roots[i];
        if (t < kRayEps) continue;
        vec3 p = o + d * t;
        if (p.z < -1.0 || p.z > 1.0) continue;
        vec3 n = normalize(vec3(p.x, p.y, k2 * (1.0 - p.z)));
        consider(LocalHit{t, n, {azimuth01(p.x, p.y), 0.5 * (p.z + 1.0)}});
        break;
    }
    consider(intersect_disk_plane(o, d, -1.0, 1.0));
    return best;
}

// --- polynomial root isolation for the torus quartic ---

// Ascending real roots of a polynomial inside [lo, hi] by recursive
// monotone-interval bisection: the critical points come from the derivative's
// roots, and the polynomial is monotone between them, so every root is
// bracketed and bisected. Accurate to ~1e-12 and free of quartic-formula
// instabilities.
template <int Degree>
int poly_roots_in_interval(const double* coeffs, double lo, double hi, double* out) {
    if constexpr (Degree == 1) {
        if (std::abs(coeffs[0]) < 1e-300) return 0;
        double r = -coeffs[1] / coeffs[0];
        if (r < lo || r > hi) return 0;
        out[0] = r;
        return 1;
    } else {
        auto eval = [coeffs](double x) {
            double r = coeffs[0];
            for (int i = 1; i <= Degree; ++i) r = r * x + coeffs[i];
            return r;
        };
        double deriv[Degree];
        for (int i = 0; i < Degree; ++i) deriv[i] = coeffs[i] * double(Degree - i);
        double crit[Degree - 1];
        int ncrit = poly_roots_in_interval<Degree - 1>(deriv, lo, hi, crit);
        double pts[Degree + 1];
        int npts = 0;
        pts[npts++] = lo;
        for (int i = 0; i < ncrit; ++i)
            if (crit[i] > lo && crit[i] < hi) pts[npts++] = crit[i];
        pts[npts++] = hi;
        int nroots = 0;
        for (int i = 0; i + 1 < npts; ++i) {
            double a = pts[i], b = pts[i + 1];
            double fa = eval(a), fb = eval(b);
            if (fa == 0.0) {
                if (nroots == 0 || out[nroots - 1] != a) out[nroots++] = a;
                continue;
            }
            if (fb == 0.0 || fa * fb > 0.0) continue;  // exact-zero b handled as next lo
            for (int it = 0; it < 90; ++it) {
                double m = 0.5 * (a + b);
                double fm = eval(m);
                if (fm == 0.0) {
                    a = b = m;
                    break;
                }
                if (fa * fm < 0.0) {
                    b = m;
                } else {
                    a = m;
                    fa = fm;
                }
            }
            out[nroots++] = 0.5 * (a + b);
        }
        return nroots;
    }
}

inline std::optional<LocalHit> intersect_torus(const vec3& o, const vec3& d) {
    const double R = 1.0, r = kTorusMinorRadius;
    // clip to the bounding sphere
    double t_lo, t_hi;
    {
        double bound = R + r + 1e-6;
        double a = dot(d, d);
        double b = 2.0 * dot(o, d);
        double c = dot(o, o) - bound * bound;
        double disc = b * b - 4.0 * a * c;
        if (disc < 0.0) return std::nullopt;
        double s = std::sqrt(disc);
        t_lo = (-b - s) / (2.0 * a);
        t_hi = (-b + s) / (2.0 * a);
        if (t_hi < kRayEps) return std::nullopt;
        t_lo = std::max(t_lo, kRayEps);
    }
    // (|p|^2 + R^2 - r^2)^2 = 4 R^2 (px^2 + py^2)
    double A = dot(d, d);
    double B = 2.0 * dot(o, d);
    double C = dot(o, o);
    double K = C + R * R - r * r;
    double a2 = d.x * d.x + d.y * d.y;
    double a1 = 2.0 * (o.x * d.x + o.y * d.y);
    double a0 = o.x * o.x + o.y * o.y;
    double q[5] = {
        A * A,
        2.0 * A * B,
        B * B + 2.0 * A * K - 4.0 * R * R * a2,
        2.0 * B * K - 4.0 * R * R * a1,
        K * K - 4.0 * R * R * a0,
    };
    double roots[4];
    int n = poly_roots_in_interval<4>(q, t_lo, t_hi, roots);
    for (int i = 0; i < n; ++i) {
        double t = roots[i];
        if (t < kRayEps) continue;
        vec3 p = o + d * t;
        double plen2 = dot(p, p);
        vec3 grad = p * (plen2 + R * R - r * r) - vec3(p.x, p.y, 0.0) * (2.0 * R * R);
        double ring = std::sqrt(p.x * p.x + p.y * p.y);
        vec2 uv{azimuth01(p.x, p.y),
                azimuth01(ring - R, p.z)};  // minor angle around the tube
        return LocalHit{t, normalize(grad), uv};
    }
    return std::nullopt;
}

inline std::optional<LocalHit> intersect_capsule(const vec3& o, const vec3& d) {
    const double half = 0.5, rad = 0.5;
    std::optional<LocalHit> best;
    auto consider = [&best](const std::optional<LocalHit>& h) {
        if (h && (!best || h->t < best->t)) best = h;
    };
    double a = d.x * d.x + d.y * d.y;
    if (a > 1e-15) {
        double b = 2.0 * (o.x * d.x + o.y * d.y);
        double c = o.x * o.x + o.y * o.y - rad * rad;
        double disc = b * b - 4.0 * a * c;
        if (disc >= 0.0) {
            double s = std::sqrt(disc);
            for (double t : {(-b - s) / (2.0 * a), (-b + s) / (2.0 * a)}) {
                if (t < kRayEps) continue;
                vec3 p = o + d * t;
                if (std::abs(p.z) > half) continue;
                consider(LocalHit{t, vec3(p.x / rad, p.y / rad, 0.0),
                                  {azimuth01(p.x, p.y), 0.5 * (p.z / (half + rad) + 1.0)}});
                break;
            }
        }
    }
    for (double cz : {half, -half}) {
        vec3 oc = o - vec3(0.0, 0.0, cz);
        double sa = dot(d, d);
        double sb = 2.0 * dot(oc, d);
        double sc = dot(oc, oc) - rad * rad;
        double disc = sb * sb - 4.0 * sa * sc;
        if (disc < 0.0) continue;
        double s = std::sqrt(disc);
        for (double t : {(-sb - s) / (2.0 * sa), (-sb + s) / (2.0 * sa)}) {
            if (t < kRayEps) continue;
            vec3 p = o + d * t;
            if ((cz > 0.0 && p.z < half) || (cz < 0.0 && p.z > -half)) continue;
            vec3 n = (p - vec3(0.0, 0.0, cz)) / rad;
            consider(LocalHit{t, n, {azimuth01(p.x, p.y), 0.5 * (p.z / (half + rad) + 1.0)}});
            break;
        }
    }
    return best;
}

inline std::optional<LocalHit> intersect_disk(const vec3& o, const vec3& d) {
    return intersect_disk_plane(o, d, 0.0, 1.0);
}

inline double rounded_box_sdf(const vec3& p, const vec3& core, double radius) {
    vec3 q(std::abs(p.x) - core.x, std::abs(p.y) - core.y, std::abs(p.z) - core.z);
    vec3 qpos = max(q, vec3(0.0, 0.0, 0.0));
    double outside = length(qpos);
    double inside = std::min(std::max(q.x, std::max(q.y, q.z)), 0.0);
    return outside + inside - radius;
}

inline std::optional<LocalHit> intersect_rounded_box(const vec3& o, const vec3& d) {
    const vec3 core(0.75, 0.75, 0.75);
    const double radius = kRoundedBoxRadius;
    // entry/exit of the enclosing [-1,1] box
    double t_lo = kRayEps, t_hi = 1e300;
    for (int a = 0; a < 3; ++a) {
        if (std::abs(d[a]) < 1e-15) {
            if (std::abs(o[a]) > 1.0) return std::nullopt;
            continue;
        }
        double inv = 1.0 / d[a];
        double ta = (-1.0 - o[a]) * inv;
        double tb = (1.0 - o[a]) * inv;
        if (ta > tb) std::swap(ta, tb);
        t_lo = std::max(t_lo, ta);
        t_hi = std::min(t_hi, tb);
        if (t_lo > t_hi) return std::nullopt;
    }
    double dlen = length(d);
    double t = std::max(t_lo, kRayEps);
    double prev = t;
    bool hit = false;
    for (int i = 0; i < 256 && t <= t_hi; ++i) {
        double s = rounded_box_sdf(o + d * t, core, radius);
        if (s < 1e-7) {
            hit = true;
            break;
        }
        prev = t;
        t += s / dlen;
    }
    if (!hit) return std::nullopt;
    // bisect [prev, t'] across the surface for a tight root
    double a = prev, b = t + 1e-7 / dlen;
    for (int i = 0; i < 60; ++i) {
        double m = 0.5 * (a + b);
        if (rounded_box_sdf(o + d * m, core, radius) > 0.0)
            a = m;
        else
            b = m;
    }
    t = 0.5 * (a + b);
    vec3 p = o + d * t;
    vec3 q(std::abs(p.x) - core.x, std::abs(p.y) - core.y, std::abs(p.z) - core.z);
    vec3 n;
    if (q.x > 0.0 || q.y > 0.0 || q.z > 0.0) {
        vec3 qpos = max(q, vec3(0.0, 0.0, 0.0));
        n = normalize(vec3(std::copysign(qpos.x, p.x), std::copysign(qpos.y, p.y),
                           std::copysign(qpos.z, p.z)));
    } else {
        int axis = q.x > q.y ? (q.x > q.z ? 0 : 2) : (q.y > q.z ? 1 : 2);
        n = vec3(0.0, 0.0, 0.0);
        n[axis] = std::copysign(1.0, p[axis]);
    }
    int axis = std::abs(n.x) > std::abs(n.y) ? (std::abs(n.x) > std::abs(n.z) ? 0 : 2)
                                             : (std::abs(n.y) > std::abs(n.z) ? 1 : 2);
    int u_axis = (axis + 1) % 3, v_axis = (axis + 2) % 3;
    return LocalHit{t, n, {0.5 * (p[u_axis] + 1.0), 0.5 * (p[v_axis] + 1.0)}};
}

inline std::optional<LocalHit> intersect_canonical(PrimitiveKind kind, const vec3& o,
                                                   const vec3& d) {
    switch (kind) {
        case PrimitiveKind::Sphere:
        case PrimitiveKind::Ellipsoid: return intersect_sphere(o, d);
        case PrimitiveKind::Box: return intersect_box(o, d);
        case PrimitiveKind::Cylinder: return intersect_cylinder(o, d);
        case PrimitiveKind::Cone: return intersect_cone(o, d);
        case PrimitiveKind::Torus: return intersect_torus(o, d);
        case PrimitiveKind::Capsule: return intersect_capsule(o, d);
        case PrimitiveKind::Disk: return intersect_disk(o, d);
        case PrimitiveKind::RoundedBox: return intersect_rounded_box(o, d);
    }
    return std::nullopt;
}

}  // namespace detail

// Nearest positive hit of a world-space ray against one primitive. The ray is
// taken to the primitive's local frame; because the local direction keeps its
// (anisotropically scaled) length, the returned t is the world-space distance
// when `direction` is unit length.
inline std::optional<RayHit> ray_intersect(const Primitive& prim, const vec3& origin,
                                           const vec3& direction) {
    if (!is_unit(direction))
        throw std::invalid_argument("ray_intersect: direction must be unit length");
    if (!(prim.scale.x > 0.0 && prim.scale.y > 0.0 && prim.scale.z > 0.0))
        throw std::invalid_argument("ray_intersect: primitive scale must be positive");
    RigidTransform inv = prim.pose.inverse();
    vec3 o = inv.apply(origin) / prim.scale;
    vec3 d = inv.apply_dir(direction) / prim.scale;
    auto local = detail::intersect_canonical(prim.kind, o, d);
    if (!local) return std::nullopt;
    vec3 n_world = normalize(prim.pose.apply_dir(local->normal / prim.scale));
    return RayHit{local->t, n_world, local->uv};
}

// ---------------------------------------------------------------------------
// G-buffer
// ---------------------------------------------------------------------------

struct GBuffer {
    int width = 0;
    int height = 0;
    std::vector<double> depth;     // normalized planar depth, 1 where miss
    std::vector<vec3> normal;      // camera space, unit inside mask, zero outside
    std::vector<vec3> position;    // camera space, meters
    std::vector<uint8_t> mask;     // 1 = hit
    std::vector<vec2> uv;          // material uv (uv_scale applied)
    std::vector<int> material_id;  // -1 outside mask

    size_t pixel_count() const { return size_t(width) * height; }
    size_t index(int x, int y) const { return size_t(y) * width + x; }
    bool empty_mask() const {
        for (uint8_t m : mask)
            if (m) return false;
        return true;
    }
};

inline ImageU8 gbuffer_mask(const GBuffer& g) {
    ImageU8 m(g.width, g.height, 1);
    for (size_t i = 0; i < g.mask.size(); ++i) m.data[i] = g.mask[i];
    return m;
}

inline ImageD gbuffer_depth_image(const GBuffer& g) {
    ImageD d(g.width, g.height, 1);
    for (size_t i = 0; i < g.depth.size(); ++i) d.data[i] = g.depth[i];
    return d;
}

inline ImageD gbuffer_normal_image(const GBuffer& g) {
    ImageD n(g.width, g.height, 3);
    for (size_t i = 0; i < g.normal.size(); ++i) {
        n.data[3 * i + 0] = g.normal[i].x;
        n.data[3 * i + 1] = g.normal[i].y;
        n.data[3 * i + 2] = g.normal[i].z;
    }
    return n;
}

inline GBuffer trace_gbuffer(const std::vector<Primitive>& scene, const Camera& camera,
                             int threads = 1) {
    camera.validate();
    GBuffer g;
    g.width = camera.width;
    g.height = camera.height;
    size_t n = g.pixel_count();
    g.depth.assign(n, 1.0);
    g.normal.assign(n, vec3(0.0, 0.0, 0.0));
    g.position.assign(n, vec3(0.0, 0.0, 0.0));
    g.mask.assign(n, 0);
    g.uv.assign(n, vec2{0.0, 0.0});
    g.material_id.assign(n, -1);

    RigidTransform cam_to_world = camera.pose;
    RigidTransform world_to_cam = camera.pose.inverse();
    double inv_range = 1.0 / (camera.far_plane - camera.near_plane);

    parallel_for(0, camera.height, threads, [&](int py) {
        for (int px = 0; px < camera.width; ++px) {
            vec3 dir_cam = camera.pixel_direction(px, py);
            vec3 dir_world = cam_to_world.apply_dir(dir_cam);
            vec3 org_world = cam_to_world.translation;
            double best_t = 1e300;
            const Primitive* best_prim = nullptr;
            RayHit best_hit;
            for (const Primitive& prim : scene) {
                auto hit = ray_intersect(prim, org_world, dir_world);
                if (hit && hit->t < best_t) {
                    best_t = hit->t;
                    best_hit = *hit;
                    best_prim = &prim;
                }
            }
            if (!best_prim) continue;
            size_t i = g.index(px, py);
            vec3 p_cam = dir_cam * best_t;
            double forward = -dir_cam.z;  // camera looks along -z
            g.depth[i] = clamp01((best_t * forward - camera.near_plane) * inv_range);
            g.normal[i] = normalize(world_to_cam.apply_dir(best_hit.normal));
            g.position[i] = p_cam;
            g.mask[i] = 1;
            g.uv[i] = {best_hit.uv.x * best_prim->uv_scale, best_hit.uv.y * best_prim->uv_scale};
            g.material_id[i] = best_prim->material_id;
        }
    });
    return g;
}

// ---------------------------------------------------------------------------
// Depth-derived normals: n* = (dd/dx, dd/dy, 2/width), normalized. Gradients
// are central differences in per-pixel steps (one-sided at borders); the
// vertical gradient runs along +y of camera space, i.e. up the image.
// ---------------------------------------------------------------------------

inline ImageD normals_from_depth(const ImageD& depth) {
    if (depth.channels != 1) throw std::invalid_argument("normals_from_depth: depth must be 1ch");
    for (double v : depth.data)
        if (!std::isfinite(v)) throw std::invalid_argument("normals_from_depth: non-finite depth");
    int w = depth.width, h = depth.height;
    ImageD out(w, h, 3);
    double z = 2.0 / double(w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double gx, gy;
            if (x == 0)
                gx = depth.at(1, y) - depth.at(0, y);
            else if (x == w - 1)
                gx = depth.at(w - 1, y) - depth.at(w - 2, y);
            else
                gx = 0.5 * (depth.at(x + 1, y) - depth.at(x - 1, y));
            if (y == 0)
                gy = depth.at(x, 0) - depth.at(x, 1);
            else if (y == h - 1)
                gy = depth.at(x, h - 2) - depth.at(x, h - 1);
            else
                gy = 0.5 * (depth.at(x, y - 1) - depth.at(x, y + 1));
            vec3 n = normalize(vec3(gx, gy, z));
            out.at(x, y, 0) = n.x;
            out.at(x, y, 1) = n.y;
            out.at(x, y, 2) = n.z;
        }
    }
    return out;
}

}  // namespace sgfit
