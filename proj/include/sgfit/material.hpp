// Copyright (c) 2026 sgfit contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "sgfit/image.hpp"
#include "sgfit/rng.hpp"

namespace sgfit {

// Cook-Torrance texture maps; the augmented tile size is fixed at 768.
struct MaterialMaps {
    ImageF diffuse;    // 3ch
    ImageF specular;   // 3ch
    ImageF roughness;  // 1ch
};

inline constexpr int kMaterialTileSize = 768;

namespace detail {

// integer lattice hash -> [0, 1); stable across platforms
inline double lattice_hash(int64_t x, int64_t y, uint64_t salt) {
    uint64_t h = uint64_t(x) * 0x9e3779b97f4a7c15ull ^ uint64_t(y) * 0xc2b2ae3d27d4eb4full ^ salt;
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdull;
    h ^= h >> 33;
    return double(h >> 11) * 0x1.0p-53;
}

inline double smooth01(double t) { return t * t * (3.0 - 2.0 * t); }

// single-octave value noise on a unit lattice
inline double value_noise(double x, double y, uint64_t salt) {
    double fx = std::floor(x), fy = std::floor(y);
    int64_t ix = int64_t(fx), iy = int64_t(fy);
    double tx = smooth01(x - fx), ty = smooth01(y - fy);
    double a = lattice_hash(ix, iy, salt);
    double b = lattice_hash(ix + 1, iy, salt);
    double c = lattice_hash(ix, iy + 1, salt);
    double d = lattice_hash(ix + 1, iy + 1, salt);
    return (a * (1.0 - tx) + b * tx) * (1.0 - ty) + (c * (1.0 - tx) + d * tx) * ty;
}

inline double fbm_noise(double x, double y, uint64_t salt, int octaves) {
    double sum = 0.0, amp = 0.5, freq = 1.0;
    for (int o = 0; o < octaves; ++o) {
        sum += amp * value_noise(x * freq, y * freq, salt + uint64_t(o) * 1013ull);
        freq *= 2.0;
        amp *= 0.5;
    }
    return sum;
}

inline void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) {
    double mx = std::max({r, g, b}), mn = std::min({r, g, b});
    v = mx;
    double d = mx - mn;
    s = mx > 0.0 ? d / mx : 0.0;
    if (d <= 0.0) {
        h = 0.0;
    } else if (mx == r) {
        h = std::fmod((g - b) / d, 6.0);
    } else if (mx == g) {
        h = (b - r) / d + 2.0;
    } else {
        h = (r - g) / d + 4.0;
    }
    h *= 60.0;
    if (h < 0.0) h += 360.0;
}

inline void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
    double c = v * s;
    double hp = std::fmod(h, 360.0) / 60.0;
    if (hp < 0.0) hp += 6.0;
    double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
    double rr = 0.0, gg = 0.0, bb = 0.0;
    switch (int(hp)) {
        case 0: rr = c; gg = x; break;
        case 1: rr = x; gg = c; break;
        case 2: gg = c; bb = x; break;
        case 3: gg = x; bb = c; break;
        case 4: rr = x; bb = c; break;
        default: rr = c; bb = x; break;
    }
    double m = v - c;
    r = rr + m;
    g = gg + m;
    b = bb + m;
}

// bilinear fetch with wrap addressing
inline void sample_wrap(const ImageF& img, double u, double v, float* out) {
    double x = u - std::floor(u);
    double y = v - std::floor(v);
    double px = x * img.width - 0.5;
    double py = y * img.height - 0.5;
    int x0 = int(std::floor(px)), y0 = int(std::floor(py));
    double tx = px - x0, ty = py - y0;
    auto wrap = [](int a, int n) {
        int m = a % n;
        return m < 0 ? m + n : m;
    };
    int x1 = wrap(x0 + 1, img.width), y1 = wrap(y0 + 1, img.height);
    x0 = wrap(x0, img.width);
    y0 = wrap(y0, img.height);
    for (int c = 0; c < img.channels; ++c) {
        double a = img.at(x0, y0, c) * (1.0 - tx) + img.at(x1, y0, c) * tx;
        double b = img.at(x0, y1, c) * (1.0 - tx) + img.at(x1, y1, c) * tx;
        out[c] = float(a * (1.0 - ty) + b * ty);
    }
}

// bilinear fetch with clamp addressing, in pixel coordinates
inline float sample_clamp_px(const ImageF& img, double px, double py, int c) {
    int x0 = int(std::floor(px)), y0 = int(std::floor(py));
    double tx = px - x0, ty = py - y0;
    auto cl = [](int a, int n) { return std::clamp(a, 0, n - 1); };
    int x1 = cl(x0 + 1, img.width), y1 = cl(y0 + 1, img.height);
    x0 = cl(x0, img.width);
    y0 = cl(y0, img.height);
    double a = img.at(x0, y0, c) * (1.0 - tx) + img.at(x1, y0, c) * tx;
    double b = img.at(x0, y1, c) * (1.0 - tx) + img.at(x1, y1, c) * tx;
    return float(a * (1.0 - ty) + b * ty);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Built-in procedural materials. Placeholder stand-ins for a scanned SVBRDF
// collection: deterministic, tileable-ish, with varied diffuse structure and
// correlated roughness.
// ---------------------------------------------------------------------------

inline MaterialMaps make_procedural_material(int kind, int size) {
    MaterialMaps m;
    m.diffuse = ImageF(size, size, 3);
    m.specular = ImageF(size, size, 3);
    m.roughness = ImageF(size, size, 1);
    uint64_t salt = uint64_t(kind + 1) * 0xabcdef123ull;
    Rng rng(salt);
    vec3 color_a(rng.uniform(0.15, 0.85), rng.uniform(0.15, 0.85), rng.uniform(0.15, 0.85));
    vec3 color_b(rng.uniform(0.15, 0.85), rng.uniform(0.15, 0.85), rng.uniform(0.15, 0.85));
    double spec_base = rng.uniform(0.03, 0.08);
    double rough_a = rng.uniform(0.3, 0.6), rough_b = rng.uniform(0.5, 0.95);

    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            double u = double(x) / size, v = double(y) / size;
            double t;  // blend between the two colorways
            switch (kind % 5) {
                case 0: {  // checker
                    int cx = int(u * 8.0), cy = int(v * 8.0);
                    t = double((cx + cy) & 1);
                    break;
                }
                case 1:  // marble-ish fbm
                    t = detail::fbm_noise(u * 6.0, v * 6.0, salt, 4);
                    break;
                case 2:  // stripes with wobble
                    t = 0.5 + 0.5 * std::sin((u + 0.15 * detail::value_noise(u * 4.0, v * 4.0,
                                                                             salt)) *
                                             24.0 * kPi);
                    break;
                case 3: {  // voronoi-like cells
                    double best = 1e9;
                    int gx = int(u * 6.0), gy = int(v * 6.0);
                    for (int dy = -1; dy <= 1; ++dy)
                        for (int dx = -1; dx <= 1; ++dx) {
                            int cx = gx + dx, cy = gy + dy;
                            double jx = detail::lattice_hash(cx, cy, salt);
                            double jy = detail::lattice_hash(cx, cy, salt ^ 0x77ull);
                            double px = (cx + jx) / 6.0, py = (cy + jy) / 6.0;
                            best = std::min(best,
                                            (u - px) * (u - px) + (v - py) * (v - py));
                        }
                    t = clamp01(std::sqrt(best) * 6.0);
                    break;
                }
                default: {  // dots
                    double cu = u * 10.0 - std::floor(u * 10.0) - 0.5;
                    double cv = v * 10.0 - std::floor(v * 10.0) - 0.5;
                    double r = detail::lattice_hash(int64_t(u * 10.0), int64_t(v * 10.0), salt) *
                                   0.2 + 0.15;
                    t = std::sqrt(cu * cu + cv * cv) < r ? 1.0 : 0.0;
                    break;
                }
            }
            double grain = 0.12 * (detail::fbm_noise(u * 40.0, v * 40.0, salt ^ 0x9, 2) - 0.5);
            for (int c = 0; c < 3; ++c) {
                double base = color_a[c] * (1.0 - t) + color_b[c] * t + grain;
                m.diffuse.at(x, y, c) = float(clamp01(base));
                m.specular.at(x, y, c) = float(clamp01(spec_base + 0.02 * t));
            }
            double rough = rough_a * (1.0 - t) + rough_b * t +
                           0.08 * (detail::value_noise(u * 20.0, v * 20.0, salt ^ 0x5) - 0.5);
            m.roughness.at(x, y) = float(std::clamp(rough, 0.05, 1.0));
        }
    }
    return m;
}

// Five generated source materials at twice the tile size, so every resize in
// [0.5, 1.5] still covers a 768 crop.
inline std::vector<MaterialMaps> builtin_material_pool(int source_size = 2 * kMaterialTileSize) {
    std::vector<MaterialMaps> pool;
    pool.reserve(5);
    for (int kind = 0; kind < 5; ++kind) pool.push_back(make_procedural_material(kind, source_size));
    return pool;
}

// ---------------------------------------------------------------------------
// Augmentation: random resize + crop to 768, optional overlay of a second
// pool material through a smooth mask, then hue/contrast/brightness jitter on
// the diffuse map. Deterministic for a given seed.
// ---------------------------------------------------------------------------

struct AugmentOptions {
    double min_scale = 0.5, max_scale = 1.5;
    double overlay_probability = 0.5;
    double hue_jitter_deg = 15.0;
    double contrast_jitter = 0.2;
    double brightness_jitter = 0.2;
};

namespace detail {

// resize-then-crop composed into one clamped bilinear pass
inline void resized_crop(const MaterialMaps& src, double scale, int ox, int oy, MaterialMaps& dst) {
    const int n = kMaterialTileSize;
    auto run = [&](const ImageF& in, ImageF& out) {
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                double px = (ox + x + 0.5) / scale - 0.5;
                double py = (oy + y + 0.5) / scale - 0.5;
                for (int c = 0; c < in.channels; ++c)
                    out.at(x, y, c) = sample_clamp_px(in, px, py, c);
            }
    };
    dst.diffuse = ImageF(n, n, 3);
    dst.specular = ImageF(n, n, 3);
    dst.roughness = ImageF(n, n, 1);
    run(src.diffuse, dst.diffuse);
    run(src.specular, dst.specular);
    run(src.roughness, dst.roughness);
}

}  // namespace detail

inline MaterialMaps augment_material(const MaterialMaps& source,
                                     const std::vector<MaterialMaps>& pool, uint64_t seed,
                                     const AugmentOptions& options = {}) {
    Rng rng(seed);
    const int n = kMaterialTileSize;

    auto draw_crop = [&](const MaterialMaps& maps, double& scale, int& ox, int& oy) {
        scale = rng.uniform(options.min_scale, options.max_scale);
        int rw = int(std::lround(maps.diffuse.width * scale));
        int rh = int(std::lround(maps.diffuse.height * scale));
        if (rw < n || rh < n)
            throw std::invalid_argument("augment_material: source too small to crop after resize");
        ox = int(rng.uniform_index(uint64_t(rw - n + 1)));
        oy = int(rng.uniform_index(uint64_t(rh - n + 1)));
    };

    double scale;
    int ox, oy;
    draw_crop(source, scale, ox, oy);
    MaterialMaps out;
    detail::resized_crop(source, scale, ox, oy, out);

    if (rng.uniform() < options.overlay_probability && !pool.empty()) {
        const MaterialMaps& partner = pool[rng.uniform_index(pool.size())];
        double pscale;
        int pox, poy;
        draw_crop(partner, pscale, pox, poy);
        MaterialMaps over;
        detail::resized_crop(partner, pscale, pox, poy, over);
        uint64_t mask_salt = rng.next_u64();
        double freq = rng.uniform(2.0, 6.0);
        auto lerp = [](float& a, float b, double t) {
            a = float(double(a) * (1.0 - t) + double(b) * t);
        };
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                double alpha = detail::smooth01(clamp01(
                    (detail::fbm_noise(freq * x / n, freq * y / n, mask_salt, 3) - 0.35) /
                    0.3));
                for (int c = 0; c < 3; ++c) {
                    lerp(out.diffuse.at(x, y, c), over.diffuse.at(x, y, c), alpha);
                    lerp(out.specular.at(x, y, c), over.specular.at(x, y, c), alpha);
                }
                lerp(out.roughness.at(x, y), over.roughness.at(x, y), alpha);
            }
    }

    double hue = rng.uniform(-options.hue_jitter_deg, options.hue_jitter_deg);
    double contrast = 1.0 + rng.uniform(-options.contrast_jitter, options.contrast_jitter);
    double brightness = 1.0 + rng.uniform(-options.brightness_jitter, options.brightness_jitter);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            double r = out.diffuse.at(x, y, 0), g = out.diffuse.at(x, y, 1),
                   b = out.diffuse.at(x, y, 2);
            double h, s, v;
            detail::rgb_to_hsv(r, g, b, h, s, v);
            detail::hsv_to_rgb(h + hue, s, v, r, g, b);
            out.diffuse.at(x, y, 0) = float(clamp01(((r - 0.5) * contrast + 0.5) * brightness));
            out.diffuse.at(x, y, 1) = float(clamp01(((g - 0.5) * contrast + 0.5) * brightness));
            out.diffuse.at(x, y, 2) = float(clamp01(((b - 0.5) * contrast + 0.5) * brightness));
        }
    for (auto& v : out.specular.data) v = float(clamp01(double(v)));
    for (auto& v : out.roughness.data) v = float(clamp01(double(v)));
    return out;
}

}  // namespace sgfit
