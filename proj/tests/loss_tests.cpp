// Copyright (c) 2026 sgfit contributors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include "sgfit/loss.hpp"
#include "sgfit/rng.hpp"

using namespace sgfit;
using Catch::Approx;

namespace {

ImageD random_map(Rng& rng, int w, int h, int c, double lo = 0.0, double hi = 1.0) {
    ImageD img(w, h, c);
    for (auto& v : img.data) v = rng.uniform(lo, hi);
    return img;
}

ImageD random_normals(Rng& rng, int w, int h) {
    ImageD img(w, h, 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            vec3 n = rng.unit_vector();
            img.at(x, y, 0) = n.x;
            img.at(x, y, 1) = n.y;
            img.at(x, y, 2) = n.z;
        }
    return img;
}

ImageU8 random_mask(Rng& rng, int w, int h) {
    ImageU8 m(w, h, 1);
    bool any = false;
    for (auto& v : m.data) {
        v = rng.coin_flip() ? 1 : 0;
        any |= v != 0;
    }
    if (!any) m.data[0] = 1;
    return m;
}

// naive scalar-loop references
double naive_mse(const ImageD& a, const ImageD& b, const ImageU8& m) {
    double sum = 0.0;
    size_t n = 0;
    for (int y = 0; y < a.height; ++y)
        for (int x = 0; x < a.width; ++x) {
            if (!m.at(x, y)) continue;
            for (int c = 0; c < a.channels; ++c) {
                double d = a.at(x, y, c) - b.at(x, y, c);
                sum += d * d;
                ++n;
            }
        }
    return sum / double(n);
}

double naive_angular(const ImageD& a, const ImageD& b, const ImageU8& m) {
    double sum = 0.0;
    size_t n = 0;
    for (int y = 0; y < a.height; ++y)
        for (int x = 0; x < a.width; ++x) {
            if (!m.at(x, y)) continue;
            double d = 0.0;
            for (int c = 0; c < 3; ++c) d += a.at(x, y, c) * b.at(x, y, c);
            sum += std::acos(std::clamp(d, -1.0, 1.0));
            ++n;
        }
    return sum / double(n);
}

double naive_render_log(const ImageD& a, const ImageD& b, const ImageU8& m) {
    double sum = 0.0;
    size_t n = 0;
    for (int y = 0; y < a.height; ++y)
        for (int x = 0; x < a.width; ++x) {
            if (!m.at(x, y)) continue;
            for (int c = 0; c < a.channels; ++c) {
                sum += std::abs(std::log(1.0 + a.at(x, y, c)) - std::log(1.0 + b.at(x, y, c)));
                ++n;
            }
        }
    return sum / double(n);
}

// grid search refined around the best cell, for alignment metrics
double grid_search_scale_shift(const ImageD& p, const ImageD& r, const ImageU8& m) {
    auto mse_at = [&](double s, double t) {
        double sum = 0.0;
        size_t n = 0;
        for (int y = 0; y < p.height; ++y)
            for (int x = 0; x < p.width; ++x) {
                if (!m.at(x, y)) continue;
                double d = s * p.at(x, y) + t - r.at(x, y);
                sum += d * d;
                ++n;
            }
        return sum / double(n);
    };
    double best_s = 0.0, best_t = 0.0, best = 1e300;
    double s_lo = -4.0, s_hi = 4.0, t_lo = -4.0, t_hi = 4.0;
    for (int level = 0; level < 8; ++level) {
        double bs = best_s, bt = best_t;
        for (int i = 0; i <= 40; ++i)
            for (int j = 0; j <= 40; ++j) {
                double s = s_lo + (s_hi - s_lo) * i / 40.0;
                double t = t_lo + (t_hi - t_lo) * j / 40.0;
                double v = mse_at(s, t);
                if (v < best) {
                    best = v;
                    bs = s;
                    bt = t;
                }
            }
        best_s = bs;
        best_t = bt;
        double ds = (s_hi - s_lo) / 40.0, dt = (t_hi - t_lo) / 40.0;
        s_lo = best_s - 2.0 * ds;
        s_hi = best_s + 2.0 * ds;
        t_lo = best_t - 2.0 * dt;
        t_hi = best_t + 2.0 * dt;
    }
    return best;
}

double grid_search_scale(const ImageD& p, const ImageD& r, const ImageU8& m) {
    auto mse_at = [&](double s) {
        double sum = 0.0;
        size_t n = 0;
        for (int y = 0; y < p.height; ++y)
            for (int x = 0; x < p.width; ++x) {
                if (!m.at(x, y)) continue;
                for (int c = 0; c < p.channels; ++c) {
                    double d = s * p.at(x, y, c) - r.at(x, y, c);
                    sum += d * d;
                    ++n;
                }
            }
        return sum / double(n);
    };
    double best_s = 0.0, best = 1e300, lo = -4.0, hi = 4.0;
    for (int level = 0; level < 10; ++level) {
        double bs = best_s;
        for (int i = 0; i <= 80; ++i) {
            double s = lo + (hi - lo) * i / 80.0;
            double v = mse_at(s);
            if (v < best) {
                best = v;
                bs = s;
            }
        }
        best_s = bs;
        double ds = (hi - lo) / 80.0;
        lo = best_s - 2.0 * ds;
        hi = best_s + 2.0 * ds;
    }
    return best;
}

}  // namespace

TEST_CASE("loss_depth_l2") {
    Rng rng(31);
    ImageD ref = random_map(rng, 12, 9, 1);
    ImageU8 mask = random_mask(rng, 12, 9);

    CHECK(loss_depth_l2(ref, ref, mask) == 0.0);

    ImageD off = ref;
    for (auto& v : off.data) v += 0.1;
    CHECK(loss_depth_l2(off, ref, mask) == Approx(0.01).epsilon(1e-12));

    ImageD pred = random_map(rng, 12, 9, 1);
    CHECK(loss_depth_l2(pred, ref, mask) == Approx(naive_mse(pred, ref, mask)).margin(1e-12));

    ImageU8 empty(12, 9, 1);
    CHECK_THROWS_AS(loss_depth_l2(pred, ref, empty), std::invalid_argument);
}

TEST_CASE("loss_normal_angular") {
    Rng rng(32);
    ImageD a = random_normals(rng, 8, 8);
    ImageU8 mask = full_mask(8, 8);
    CHECK(loss_normal_angular(a, a, mask) == Approx(0.0).margin(1e-7));  // acos near 1 amplifies fp noise

    ImageD x(8, 8, 3), z(8, 8, 3);
    for (int y = 0; y < 8; ++y)
        for (int i = 0; i < 8; ++i) {
            x.at(i, y, 0) = 1.0;
            z.at(i, y, 2) = 1.0;
        }
    CHECK(loss_normal_angular(x, z, mask) == Approx(kPi / 2.0));

    ImageD b = random_normals(rng, 8, 8);
    CHECK(loss_normal_angular(a, b, mask) == Approx(naive_angular(a, b, mask)).margin(1e-9));
}

TEST_CASE("loss_consistency forced cases") {
    ImageU8 mask = full_mask(16, 16);
    ImageD depth(16, 16, 1);
    for (auto& v : depth.data) v = 0.37;

    ImageD up(16, 16, 3);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) up.at(x, y, 2) = 1.0;
    CHECK(loss_consistency(up, depth, mask) == Approx(0.0).margin(1e-15));

    // normals equal to the derived field of a random depth map: loss vanishes
    Rng rng(33);
    ImageD rough = random_map(rng, 16, 16, 1);
    ImageD derived = normals_from_depth(rough);
    CHECK(loss_consistency(derived, rough, mask) == Approx(0.0).margin(1e-15));

    ImageD sideways(16, 16, 3);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) sideways.at(x, y, 0) = 1.0;
    CHECK(loss_consistency(sideways, depth, mask) == Approx(2.0).epsilon(1e-12));

    ImageD zeros(16, 16, 3);
    CHECK_THROWS_AS(loss_consistency(zeros, depth, mask), std::invalid_argument);
}

TEST_CASE("loss_shape_total weighting") {
    Rng rng(34);
    ImageD depth = random_map(rng, 10, 10, 1);
    ImageD normals = normals_from_depth(depth);
    ImageU8 mask = full_mask(10, 10);

    CHECK(loss_shape_total(depth, depth, normals, normals, mask) == Approx(0.0).margin(1e-7));

    ShapeLossWeights zero{0.0, 0.0, 0.0};
    ImageD pred_d = random_map(rng, 10, 10, 1);
    ImageD pred_n = random_normals(rng, 10, 10);
    CHECK(loss_shape_total(pred_d, depth, pred_n, normals, mask, zero) == 0.0);

    // components (0.01, 0.2, 2.0) with default 1/1/0.5 weights -> 1.21
    double combined = 1.0 * 0.01 + 1.0 * 0.2 + 0.5 * 2.0;
    CHECK(combined == Approx(1.21));
}

TEST_CASE("loss_render_log") {
    Rng rng(35);
    ImageD ref = random_map(rng, 9, 7, 3, 0.0, 4.0);
    ImageU8 mask = random_mask(rng, 9, 7);
    CHECK(loss_render_log(ref, ref, mask) == 0.0);

    // single masked pixel, one channel differs by log(e) = 1
    ImageD a(1, 1, 3), b(1, 1, 3);
    a.at(0, 0, 0) = std::exp(1.0) - 1.0;
    CHECK(loss_render_log(a, b, full_mask(1, 1)) == Approx(1.0 / 3.0).epsilon(1e-12));

    ImageD pred = random_map(rng, 9, 7, 3, 0.0, 4.0);
    CHECK(loss_render_log(pred, ref, mask) ==
          Approx(naive_render_log(pred, ref, mask)).margin(1e-9));

    ImageD bad = pred;
    bad.at(0, 0, 0) = -1e-6;
    ImageU8 all = full_mask(9, 7);
    CHECK_THROWS_AS(loss_render_log(bad, ref, all), std::invalid_argument);
}

TEST_CASE("loss_sg_l2") {
    SgBank a = SgBank::make();
    SgBank b = SgBank::make();
    CHECK(loss_sg_l2(a, b) == 0.0);

    for (auto& amp : b.amplitudes) amp = {0.5, 0.5, 0.5};
    CHECK(loss_sg_l2(a, b) == Approx(0.25).epsilon(1e-12));

    Rng rng(36);
    for (auto& amp : a.amplitudes) amp = {rng.uniform(), rng.uniform(), rng.uniform()};
    double naive = 0.0;
    for (int i = 0; i < kBankLobeCount; ++i)
        for (int c = 0; c < 3; ++c) {
            double d = a.amplitudes[size_t(i)][c] - b.amplitudes[size_t(i)][c];
            naive += d * d;
        }
    CHECK(loss_sg_l2(a, b) == Approx(naive / 72.0).margin(1e-12));

    SgBank skew = b;
    skew.axes[0].x += 0.5;
    CHECK_THROWS_AS(loss_sg_l2(a, skew), std::invalid_argument);
}

TEST_CASE("metric_mse_scale_shift") {
    Rng rng(37);
    ImageD ref = random_map(rng, 14, 11, 1);
    ImageU8 mask = random_mask(rng, 14, 11);

    CHECK(metric_mse_scale_shift(ref, ref, mask) <= 1e-10);

    // exact affine recovery
    for (int trial = 0; trial < 100; ++trial) {
        double s = rng.uniform(0.05, 3.0);
        double t = rng.uniform(-2.0, 2.0);
        ImageD pred = ref;
        for (auto& v : pred.data) v = (v - t) / s;  // so s*pred + t = ref
        CHECK(metric_mse_scale_shift(pred, ref, mask) <= 1e-10);
    }

    // never worse than plain mse, and matches the grid-search oracle
    ImageD pred = random_map(rng, 14, 11, 1);
    double aligned = metric_mse_scale_shift(pred, ref, mask);
    CHECK(aligned <= metric_mse(pred, ref, mask) + 1e-12);
    CHECK(aligned == Approx(grid_search_scale_shift(pred, ref, mask)).margin(1e-6));

    // constant prediction: shift-only fallback
    ImageD flat(14, 11, 1);
    for (auto& v : flat.data) v = 0.25;
    double fallback = metric_mse_scale_shift(flat, ref, mask);
    CHECK(std::isfinite(fallback));
}

TEST_CASE("metric_mse_scale") {
    Rng rng(38);
    ImageD ref = random_map(rng, 13, 8, 3);
    ImageU8 mask = random_mask(rng, 13, 8);

    CHECK(metric_mse_scale(ref, ref, mask) <= 1e-10);

    ImageD doubled = ref;
    for (auto& v : doubled.data) v *= 2.0;
    CHECK(metric_mse_scale(doubled, ref, mask) <= 1e-10);

    ImageD pred = random_map(rng, 13, 8, 3);
    CHECK(metric_mse_scale(pred, ref, mask) ==
          Approx(grid_search_scale(pred, ref, mask)).margin(1e-6));

    ImageD zero(13, 8, 3);
    double z = metric_mse_scale(zero, ref, mask);
    CHECK(z == Approx(metric_mse(zero, ref, mask)).margin(1e-12));
}

TEST_CASE("metrics are non-negative and zero only at agreement") {
    Rng rng(39);
    ImageD a = random_map(rng, 6, 6, 1);
    ImageD b = random_map(rng, 6, 6, 1);
    ImageU8 mask = full_mask(6, 6);
    CHECK(metric_mse(a, b, mask) > 0.0);
    CHECK(loss_depth_l2(a, b, mask) >= 0.0);
    CHECK(metric_mse(a, a, mask) == 0.0);
}
