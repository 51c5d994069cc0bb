// Copyright (c) 2026 sgfit contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "sgfit/image.hpp"
#include "sgfit/nnls.hpp"
#include "sgfit/rng.hpp"
#include "sgfit/sg.hpp"

namespace sgfit {

// Equirectangular mapping with +y up: v walks the polar angle from the top
// row, u the azimuth. Directions are unit.
inline vec3 equirect_direction(double u, double v) {
    double theta = kPi * v;
    double phi = kTwoPi * u;
    double st = std::sin(theta);
    return {st * std::cos(phi), std::cos(theta), st * std::sin(phi)};
}

inline vec2 equirect_uv(const vec3& dir) {
    double theta = std::acos(std::clamp(dir.y, -1.0, 1.0));
    double phi = std::atan2(dir.z, dir.x);
    if (phi < 0.0) phi += kTwoPi;
    return {phi / kTwoPi, theta / kPi};
}

// ---------------------------------------------------------------------------
// Synthetic HDR environments (placeholders for a captured panorama library)
// ---------------------------------------------------------------------------

inline ImageF make_sky_environment(int height = 128) {
    int w = 2 * height;
    ImageF img(w, height, 3);
    vec3 zenith(0.35, 0.55, 1.1), horizon(0.9, 0.75, 0.6), ground(0.25, 0.2, 0.16);
    vec3 sun_dir = normalize(vec3(0.5, 0.55, -0.3));
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < w; ++x) {
            vec3 d = equirect_direction((x + 0.5) / w, (y + 0.5) / height);
            vec3 c;
            if (d.y >= 0.0) {
                double t = std::pow(d.y, 0.6);
                c = horizon * (1.0 - t) + zenith * t;
            } else {
                c = ground * (0.4 - 0.3 * d.y);
            }
            double sun = std::exp(120.0 * (dot(d, sun_dir) - 1.0));
            c += vec3(14.0, 12.0, 9.0) * sun;
            img.at(x, y, 0) = float(c.x);
            img.at(x, y, 1) = float(c.y);
            img.at(x, y, 2) = float(c.z);
        }
    return img;
}

inline ImageF make_studio_environment(int height = 128) {
    int w = 2 * height;
    ImageF img(w, height, 3);
    struct Blob {
        vec3 dir;
        vec3 color;
        double sharpness;
    };
    const Blob blobs[] = {
        {normalize(vec3(0.8, 0.5, 0.1)), {6.0, 5.5, 5.0}, 40.0},
        {normalize(vec3(-0.6, 0.3, 0.6)), {1.5, 2.5, 4.0}, 25.0},
        {normalize(vec3(0.1, 0.1, -0.9)), {3.5, 1.8, 1.0}, 30.0},
        {normalize(vec3(-0.2, -0.7, -0.4)), {0.8, 0.9, 1.1}, 15.0},
    };
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < w; ++x) {
            vec3 d = equirect_direction((x + 0.5) / w, (y + 0.5) / height);
            vec3 c(0.12, 0.11, 0.1);
            for (const Blob& b : blobs) c += b.color * std::exp(b.sharpness * (dot(d, b.dir) - 1.0));
            img.at(x, y, 0) = float(c.x);
            img.at(x, y, 1) = float(c.y);
            img.at(x, y, 2) = float(c.z);
        }
    return img;
}

inline std::vector<ImageF> builtin_environment_pool() {
    return {make_sky_environment(), make_studio_environment()};
}

// ---------------------------------------------------------------------------
// Projection of a lat-long map onto the 24-lobe bank
// ---------------------------------------------------------------------------

// Solid-angle-weighted non-negative least squares over a deterministic texel
// grid, then an exposure normalization (99th-percentile reconstruction <= 2)
// and the [0, 2] amplitude clamp.
inline SgBank project_env_to_sg(const ImageF& latlong, double percentile_cap = 2.0) {
    if (latlong.channels != 3 || latlong.width < 2 || latlong.height < 2)
        throw std::invalid_argument("project_env_to_sg: need a 3-channel lat-long map");
    for (float v : latlong.data)
        if (!std::isfinite(v)) throw std::invalid_argument("project_env_to_sg: non-finite input");

    SgBank bank = SgBank::make();
    const int n = kBankLobeCount;
    const int w = latlong.width, h = latlong.height;

    // downsample the direction grid for very large maps; 24 lobes cannot use
    // more than ~10^5 constraints anyway
    int step_x = std::max(1, w / 256), step_y = std::max(1, h / 128);

    std::vector<double> gram(size_t(n) * n, 0.0);
    std::vector<double> rhs[3];
    for (auto& r : rhs) r.assign(size_t(n), 0.0);
    double dphi = kTwoPi / w * step_x, dtheta = kPi / h * step_y;
    std::vector<double> phi(size_t(n), 0.0);
    for (int y = 0; y < h; y += step_y) {
        double theta = kPi * (y + 0.5) / h;
        double weight = std::sin(theta) * dphi * dtheta;
        for (int x = 0; x < w; x += step_x) {
            vec3 d = equirect_direction((x + 0.5) / w, (y + 0.5) / h);
            for (int k = 0; k < n; ++k)
                phi[size_t(k)] = std::exp(bank.sharpness * (dot(d, bank.axes[size_t(k)]) - 1.0));
            const float* texel = latlong.pixel(x, y);
            for (int k = 0; k < n; ++k) {
                double wk = weight * phi[size_t(k)];
                for (int c = 0; c < 3; ++c) rhs[c][size_t(k)] += wk * texel[c];
                for (int j = k; j < n; ++j) gram[size_t(k) * n + size_t(j)] += wk * phi[size_t(j)];
            }
        }
    }
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < k; ++j) gram[size_t(k) * n + size_t(j)] = gram[size_t(j) * n + size_t(k)];

    for (int c = 0; c < 3; ++c) {
        std::vector<double> amps = nnls_from_normal_equations(gram, rhs[c], n);
        for (int k = 0; k < n; ++k) bank.amplitudes[size_t(k)][c] = amps[size_t(k)];
    }

    // exposure normalization on the reconstruction
    std::vector<double> recon;
    recon.reserve(size_t((h / step_y + 1)) * size_t(w / step_x + 1) * 3);
    for (int y = 0; y < h; y += step_y)
        for (int x = 0; x < w; x += step_x) {
            vec3 d = equirect_direction((x + 0.5) / w, (y + 0.5) / h);
            vec3 r = bank_eval(bank, d);
            recon.push_back(r.x);
            recon.push_back(r.y);
            recon.push_back(r.z);
        }
    size_t idx = size_t(0.99 * double(recon.size() - 1));
    std::nth_element(recon.begin(), recon.begin() + std::ptrdiff_t(idx), recon.end());
    double p99 = recon[idx];
    if (p99 > percentile_cap) {
        double s = percentile_cap / p99;
        for (auto& a : bank.amplitudes) a *= s;
    }
    for (auto& a : bank.amplitudes)
        for (int c = 0; c < 3; ++c) a[c] = std::clamp(a[c], 0.0, 2.0);
    return bank;
}

}  // namespace sgfit
