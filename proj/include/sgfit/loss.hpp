// Copyright (c) 2026 sgfit contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <vector>

#include "sgfit/geometry.hpp"
#include "sgfit/image.hpp"
#include "sgfit/math.hpp"
#include "sgfit/sg.hpp"

namespace sgfit {

// Losses and metrics over masked maps. Every reduction collects per-pixel
// terms in scan order and folds them with fixed-order pairwise summation, so
// values are bit-identical regardless of how the maps were produced.

namespace detail {

inline void require_pair(const ImageD& pred, const ImageD& ref, const ImageU8& mask) {
    if (!pred.same_shape(ref))
        throw std::invalid_argument("masked pair: predicted/reference shapes differ");
    if (mask.width != pred.width || mask.height != pred.height || mask.channels != 1)
        throw std::invalid_argument("masked pair: mask shape mismatch");
}

inline size_t mask_count(const ImageU8& mask) {
    size_t n = 0;
    for (uint8_t m : mask.data)
        if (m) ++n;
    return n;
}

}  // namespace detail

inline ImageU8 full_mask(int w, int h) {
    ImageU8 m(w, h, 1);
    for (auto& v : m.data) v = 1;
    return m;
}

// Mean over masked pixels and channels of the squared difference.
inline double metric_mse(const ImageD& pred, const ImageD& ref, const ImageU8& mask) {
    detail::require_pair(pred, ref, mask);
    std::vector<double> terms;
    terms.reserve(pred.data.size());
    for (int y = 0; y < pred.height; ++y)
        for (int x = 0; x < pred.width; ++x) {
            if (!mask.at(x, y)) continue;
            for (int c = 0; c < pred.channels; ++c) {
                double d = pred.at(x, y, c) - ref.at(x, y, c);
                terms.push_back(d * d);
            }
        }
    if (terms.empty()) throw std::invalid_argument("metric_mse: empty mask");
    return pairwise_sum(terms) / double(terms.size());
}

inline double loss_depth_l2(const ImageD& pred, const ImageD& ref, const ImageU8& mask) {
    if (pred.channels != 1) throw std::invalid_argument("loss_depth_l2: depth must be 1ch");
    return metric_mse(pred, ref, mask);
}

// Mean angular distance in radians between unit normal maps.
inline double loss_normal_angular(const ImageD& pred, const ImageD& ref, const ImageU8& mask) {
    detail::require_pair(pred, ref, mask);
    if (pred.channels != 3) throw std::invalid_argument("loss_normal_angular: need 3 channels");
    std::vector<double> terms;
    terms.reserve(pred.pixel_count());
    for (int y = 0; y < pred.height; ++y)
        for (int x = 0; x < pred.width; ++x) {
            if (!mask.at(x, y)) continue;
            double d = pred.at(x, y, 0) * ref.at(x, y, 0) + pred.at(x, y, 1) * ref.at(x, y, 1) +
                       pred.at(x, y, 2) * ref.at(x, y, 2);
            terms.push_back(std::acos(std::clamp(d, -1.0, 1.0)));
        }
    if (terms.empty()) throw std::invalid_argument("loss_normal_angular: empty mask");
    return pairwise_sum(terms) / double(terms.size());
}

// Mean squared norm of n/|n| - n*/|n*| with n* derived from the depth map.
inline double loss_consistency(const ImageD& normal, const ImageD& depth, const ImageU8& mask) {
    if (normal.channels != 3 || depth.channels != 1 || normal.width != depth.width ||
        normal.height != depth.height)
        throw std::invalid_argument("loss_consistency: map shapes disagree");
    ImageD derived = normals_from_depth(depth);
    std::vector<double> terms;
    terms.reserve(normal.pixel_count());
    for (int y = 0; y < normal.height; ++y)
        for (int x = 0; x < normal.width; ++x) {
            if (!mask.at(x, y)) continue;
            vec3 n(normal.at(x, y, 0), normal.at(x, y, 1), normal.at(x, y, 2));
            double len = length(n);
            if (len < 1e-12)
                throw std::invalid_argument("loss_consistency: zero-length normal inside mask");
            vec3 d = n / len - vec3(derived.at(x, y, 0), derived.at(x, y, 1), derived.at(x, y, 2));
            terms.push_back(length_squared(d));
        }
    if (terms.empty()) throw std::invalid_argument("loss_consistency: empty mask");
    return pairwise_sum(terms) / double(terms.size());
}

struct ShapeLossWeights {
    double depth = 1.0;
    double angular = 1.0;
    double consistency = 0.5;
};

inline double loss_shape_total(const ImageD& depth_pred, const ImageD& depth_ref,
                               const ImageD& normal_pred, const ImageD& normal_ref,
                               const ImageU8& mask, const ShapeLossWeights& w = {}) {
    if (w.depth < 0.0 || w.angular < 0.0 || w.consistency < 0.0)
        throw std::invalid_argument("loss_shape_total: weights must be >= 0");
    double total = 0.0;
    if (w.depth > 0.0) total += w.depth * loss_depth_l2(depth_pred, depth_ref, mask);
    if (w.angular > 0.0) total += w.angular * loss_normal_angular(normal_pred, normal_ref, mask);
    if (w.consistency > 0.0) total += w.consistency * loss_consistency(normal_pred, depth_ref, mask);
    return total;
}

// MAE on log(1+x); robust to large specular highlights.
inline double loss_render_log(const ImageD& pred, const ImageD& ref, const ImageU8& mask) {
    detail::require_pair(pred, ref, mask);
    std::vector<double> terms;
    terms.reserve(pred.data.size());
    for (int y = 0; y < pred.height; ++y)
        for (int x = 0; x < pred.width; ++x) {
            if (!mask.at(x, y)) continue;
            for (int c = 0; c < pred.channels; ++c) {
                double a = pred.at(x, y, c), b = ref.at(x, y, c);
                if (a < 0.0 || b < 0.0)
                    throw std::invalid_argument("loss_render_log: negative radiance");
                terms.push_back(std::abs(std::log1p(a) - std::log1p(b)));
            }
        }
    if (terms.empty()) throw std::invalid_argument("loss_render_log: empty mask");
    return pairwise_sum(terms) / double(terms.size());
}

// Mean squared amplitude difference over the 24x3 channels; banks must share
// the axis layout.
inline double loss_sg_l2(const SgBank& pred, const SgBank& ref) {
    for (int i = 0; i < kBankLobeCount; ++i)
        if (length(pred.axes[size_t(i)] - ref.axes[size_t(i)]) > 1e-9)
            throw std::invalid_argument("loss_sg_l2: banks have different axis layouts");
    std::vector<double> terms;
    terms.reserve(kBankLobeCount * 3);
    for (int i = 0; i < kBankLobeCount; ++i)
        for (int c = 0; c < 3; ++c) {
            double d = pred.amplitudes[size_t(i)][c] - ref.amplitudes[size_t(i)][c];
            terms.push_back(d * d);
        }
    return pairwise_sum(terms) / double(terms.size());
}

// ---------------------------------------------------------------------------
// Alignment-invariant metrics
// ---------------------------------------------------------------------------

// MSE after closed-form affine (scale + shift) alignment of the prediction.
// A constant prediction leaves scale unconstrained; falls back to shift-only.
inline double metric_mse_scale_shift(const ImageD& pred, const ImageD& ref, const ImageU8& mask) {
    detail::require_pair(pred, ref, mask);
    if (pred.channels != 1)
        throw std::invalid_argument("metric_mse_scale_shift: depth maps must be 1ch");
    std::vector<double> ps, rs;
    for (int y = 0; y < pred.height; ++y)
        for (int x = 0; x < pred.width; ++x) {
            if (!mask.at(x, y)) continue;
            ps.push_back(pred.at(x, y));
            rs.push_back(ref.at(x, y));
        }
    size_t n = ps.size();
    if (n == 0) throw std::invalid_argument("metric_mse_scale_shift: empty mask");
    double sp = pairwise_sum(ps);
    double sr = pairwise_sum(rs);
    std::vector<double> pp(n), pr(n);
    for (size_t i = 0; i < n; ++i) {
        pp[i] = ps[i] * ps[i];
        pr[i] = ps[i] * rs[i];
    }
    double spp = pairwise_sum(pp);
    double spr = pairwise_sum(pr);
    double denom = double(n) * spp - sp * sp;
    double s, t;
    if (denom <= 1e-12 * std::max(1.0, spp * double(n))) {
        s = 1.0;  // constant prediction: shift-only alignment
        t = (sr - sp) / double(n);
    } else {
        s = (double(n) * spr - sp * sr) / denom;
        t = (sr - s * sp) / double(n);
    }
    std::vector<double> terms(n);
    for (size_t i = 0; i < n; ++i) {
        double d = s * ps[i] + t - rs[i];
        terms[i] = d * d;
    }
    return pairwise_sum(terms) / double(n);
}

// MSE after least-squares scale alignment (shift fixed at zero), across all
// masked pixels and channels. An all-zero prediction yields s = 0.
inline double metric_mse_scale(const ImageD& pred, const ImageD& ref, const ImageU8& mask) {
    detail::require_pair(pred, ref, mask);
    std::vector<double> pp, pr;
    for (int y = 0; y < pred.height; ++y)
        for (int x = 0; x < pred.width; ++x) {
            if (!mask.at(x, y)) continue;
            for (int c = 0; c < pred.channels; ++c) {
                double p = pred.at(x, y, c), r = ref.at(x, y, c);
                pp.push_back(p * p);
                pr.push_back(p * r);
            }
        }
    if (pp.empty()) throw std::invalid_argument("metric_mse_scale: empty mask");
    double spp = pairwise_sum(pp);
    double s = spp > 0.0 ? pairwise_sum(pr) / spp : 0.0;
    std::vector<double> terms;
    terms.reserve(pp.size());
    for (int y = 0; y < pred.height; ++y)
        for (int x = 0; x < pred.width; ++x) {
            if (!mask.at(x, y)) continue;
            for (int c = 0; c < pred.channels; ++c) {
                double d = s * pred.at(x, y, c) - ref.at(x, y, c);
                terms.push_back(d * d);
            }
        }
    return pairwise_sum(terms) / double(terms.size());
}

}  // namespace sgfit
