// Copyright (c) 2026 sgfit contributors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>
#include <filesystem>

#include "oracle.hpp"
#include "sgfit/rng.hpp"
#include "sgfit/sg.hpp"

using namespace sgfit;
using Catch::Approx;

namespace {

SphericalGaussian random_lobe(Rng& rng, double max_sharpness = 20.0) {
    SphericalGaussian g;
    g.axis = rng.unit_vector();
    g.sharpness = rng.uniform(0.0, max_sharpness);
    g.amplitude = {rng.uniform(0.0, 2.0), rng.uniform(0.0, 2.0), rng.uniform(0.0, 2.0)};
    return g;
}

}  // namespace

TEST_CASE("sg_eval basics") {
    SphericalGaussian g;
    g.axis = normalize(vec3(0.2, -0.4, 0.9));
    g.sharpness = 7.0;
    g.amplitude = {0.5, 1.0, 1.5};

    vec3 on_axis = sg_eval(g, g.axis);
    CHECK(on_axis.x == Approx(0.5).margin(1e-12));
    CHECK(on_axis.y == Approx(1.0).margin(1e-12));
    CHECK(on_axis.z == Approx(1.5).margin(1e-12));

    g.sharpness = 0.0;
    vec3 anywhere = sg_eval(g, vec3(1.0, 0.0, 0.0));
    CHECK(anywhere.y == Approx(1.0).margin(1e-15));
}

TEST_CASE("sg_eval quarter turn from axis") {
    SphericalGaussian g{{0.0, 0.0, 1.0}, 4.0, {1.0, 1.0, 1.0}};
    vec3 v = sg_eval(g, vec3(1.0, 0.0, 0.0));
    // exp(-4), evaluated independently
    CHECK(v.x == Approx(0.01831563888873418).epsilon(1e-12));
}

TEST_CASE("sg_eval rejects non-unit directions") {
    SphericalGaussian g;
    CHECK_THROWS_AS(sg_eval_checked(g, vec3(0.0, 0.0, 2.0)), std::invalid_argument);
}

TEST_CASE("sg_product aligned and antipodal cases") {
    SphericalGaussian a{{0.0, 0.0, 1.0}, 2.0, {1.0, 1.0, 1.0}};
    SphericalGaussian b{{0.0, 0.0, 1.0}, 3.0, {2.0, 2.0, 2.0}};
    SphericalGaussian p = sg_product(a, b);
    CHECK(p.sharpness == Approx(5.0));
    CHECK(dot(p.axis, vec3(0.0, 0.0, 1.0)) == Approx(1.0));
    CHECK(p.amplitude.x == Approx(2.0));

    SphericalGaussian c{{0.0, 0.0, -1.0}, 2.0, {1.0, 1.0, 1.0}};
    SphericalGaussian q = sg_product(a, c);
    CHECK(q.sharpness == Approx(0.0).margin(1e-12));
    CHECK(q.amplitude.x == Approx(std::exp(-4.0)).epsilon(1e-12));
}

TEST_CASE("sg_product is pointwise exact") {
    Rng rng(42);
    for (int pair = 0; pair < 100; ++pair) {
        SphericalGaussian a = random_lobe(rng);
        SphericalGaussian b = random_lobe(rng);
        SphericalGaussian p = sg_product(a, b);
        for (int i = 0; i < 1000; ++i) {
            vec3 v = rng.unit_vector();
            vec3 expected = sg_eval(a, v) * sg_eval(b, v);
            vec3 got = sg_eval(p, v);
            for (int c = 0; c < 3; ++c) {
                double scale = std::max(1.0, std::abs(expected[c]));
                REQUIRE(std::abs(got[c] - expected[c]) <= 1e-6 * scale);
            }
        }
    }
}

TEST_CASE("sg_integral closed form") {
    SphericalGaussian flat{{0.0, 0.0, 1.0}, 0.0, {1.0, 1.0, 1.0}};
    CHECK(sg_integral(flat).x == Approx(kFourPi));

    SphericalGaussian dark{{0.0, 0.0, 1.0}, 3.0, {0.0, 0.0, 0.0}};
    CHECK(sg_integral(dark).x == 0.0);

    // lambda = 4: frozen from the 10^6-sample Monte-Carlo oracle
    SphericalGaussian g{{0.0, 0.0, 1.0}, 4.0, {1.0, 1.0, 1.0}};
    CHECK(sg_integral(g).x == Approx(1.57027).epsilon(1e-4));
}

TEST_CASE("sg_integral matches Monte-Carlo quadrature across sharpness range") {
    for (double lambda : {0.0, 0.01, 0.5, 1.0, 4.0, 15.0, 40.0, 100.0}) {
        SphericalGaussian g{normalize(vec3(0.3, 0.2, 0.93)), lambda, {1.3, 1.3, 1.3}};
        double mc = oracle::sphere_quadrature(
            [&g](const vec3& v) { return sg_eval(g, v).x; }, 1'000'000);
        double closed = sg_integral(g).x;
        INFO("lambda=" << lambda << " mc=" << mc << " closed=" << closed);
        CHECK(std::abs(closed - mc) <= 0.01 * std::max(std::abs(mc), 1e-12));
    }
}

TEST_CASE("sg_integral has a smooth small-lambda branch") {
    // the true slope is -4*pi, so the gap of 2e-9 in lambda accounts for a
    // relative difference of ~2e-9; anything much larger is a branch jump
    SphericalGaussian lo{{0.0, 0.0, 1.0}, 0.999e-6, {1.0, 1.0, 1.0}};
    SphericalGaussian hi{{0.0, 0.0, 1.0}, 1.001e-6, {1.0, 1.0, 1.0}};
    CHECK(std::abs(sg_integral(lo).x - sg_integral(hi).x) <= 3e-9 * kFourPi);
}

TEST_CASE("sg_inner_product identities") {
    Rng rng(7);
    SphericalGaussian g = random_lobe(rng);
    SphericalGaussian constant{{0.0, 0.0, 1.0}, 0.0, {1.0, 1.0, 1.0}};
    vec3 inner = sg_inner_product(g, constant);
    vec3 integral = sg_integral(g);
    for (int c = 0; c < 3; ++c) CHECK(inner[c] == Approx(integral[c]).epsilon(1e-9));

    SphericalGaussian zero = g;
    zero.amplitude = {0.0, 0.0, 0.0};
    CHECK(sg_inner_product(g, zero).x == 0.0);
}

TEST_CASE("sg_inner_product matches quadrature of the pointwise product") {
    Rng rng(11);
    for (int it = 0; it < 5; ++it) {
        SphericalGaussian a = random_lobe(rng, 10.0);
        SphericalGaussian b = random_lobe(rng, 10.0);
        vec3 closed = sg_inner_product(a, b);
        vec3 mc = oracle::sphere_quadrature_rgb(
            [&](const vec3& v) { return sg_eval(a, v) * sg_eval(b, v); }, 2'000'000);
        for (int c = 0; c < 3; ++c) {
            INFO("channel " << c << " closed=" << closed[c] << " mc=" << mc[c]);
            CHECK(std::abs(closed[c] - mc[c]) <= 0.01 * std::max(mc[c], 1e-9));
        }
    }
}

TEST_CASE("sg rotation equivariance") {
    Rng rng(13);
    SphericalGaussian g = random_lobe(rng);
    Quat rot = Quat::axis_angle(rng.unit_vector(), rng.uniform(0.0, kTwoPi)).normalized();
    for (int i = 0; i < 50; ++i) {
        vec3 v = rng.unit_vector();
        SphericalGaussian gr = g;
        gr.axis = rot.rotate(g.axis);
        vec3 a = sg_eval(g, v);
        vec3 b = sg_eval(gr, rot.rotate(v));
        for (int c = 0; c < 3; ++c) CHECK(a[c] == Approx(b[c]).margin(1e-6));
        // integral has no axis dependence at all
        CHECK(sg_integral(gr).x == sg_integral(g).x);
    }
}

TEST_CASE("bank_axes determinism and layout") {
    CHECK_THROWS_AS(bank_axes(0), std::invalid_argument);

    auto single = bank_axes(1);
    REQUIRE(single.size() == 1);
    CHECK(length(single[0]) == Approx(1.0).margin(1e-12));
    CHECK(single[0].x == Approx(1.0).margin(1e-12));  // lattice seed direction

    auto a = bank_axes(24);
    auto b = bank_axes(24);
    REQUIRE(a.size() == 24);
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].x == b[i].x);
        CHECK(a[i].y == b[i].y);
        CHECK(a[i].z == b[i].z);
        CHECK(length(a[i]) == Approx(1.0).margin(1e-12));
    }
    // all 276 pairs at least 25 degrees apart
    double min_angle = kPi;
    for (size_t i = 0; i < a.size(); ++i)
        for (size_t j = i + 1; j < a.size(); ++j)
            min_angle = std::min(min_angle, std::acos(std::clamp(dot(a[i], a[j]), -1.0, 1.0)));
    CHECK(min_angle >= 25.0 * kPi / 180.0);
}

TEST_CASE("bank_sharpness") {
    std::vector<vec3> antipodal = {{0.0, 0.0, 1.0}, {0.0, 0.0, -1.0}};
    CHECK(bank_sharpness(antipodal) == Approx(std::log(2.0) / 2.0).epsilon(1e-12));

    std::vector<vec3> dup = {{0.0, 0.0, 1.0}, {0.0, 0.0, 1.0}};
    CHECK_THROWS_AS(bank_sharpness(dup), std::invalid_argument);
    CHECK_THROWS_AS(bank_sharpness({{0.0, 0.0, 1.0}}), std::invalid_argument);

    // regression constant for the 24-axis lattice
    double lam = bank_sharpness(bank_axes(24));
    CHECK(lam == Approx(3.122706318419658).margin(1e-12));
    CHECK(bank_sharpness(bank_axes(24)) == lam);
}

TEST_CASE("bank_eval") {
    SgBank bank = SgBank::make();
    CHECK(bank_eval(bank, vec3(0.0, 0.0, 1.0)).x == 0.0);

    bank.amplitudes[5] = {0.3, 0.6, 0.9};
    vec3 v = normalize(vec3(0.5, -0.2, 0.6));
    vec3 single = bank_eval(bank, v);
    vec3 direct = sg_eval(bank.lobe(5), v);
    for (int c = 0; c < 3; ++c) CHECK(single[c] == Approx(direct[c]).margin(1e-15));
}

TEST_CASE("bank_eval of equal amplitudes is nearly direction independent") {
    SgBank bank = SgBank::make();
    for (auto& a : bank.amplitudes) a = {0.7, 0.7, 0.7};
    Rng rng(3);
    double lo = 1e300, hi = 0.0, sum = 0.0;
    const int n = 1000;
    for (int i = 0; i < n; ++i) {
        double f = bank_eval(bank, rng.unit_vector()).x;
        lo = std::min(lo, f);
        hi = std::max(hi, f);
        sum += f;
    }
    double mean = sum / n;
    CHECK((hi - mean) / mean <= 0.05);
    CHECK((mean - lo) / mean <= 0.05);
}

TEST_CASE("bank text round trip") {
    SgBank bank = SgBank::make();
    Rng rng(21);
    for (auto& a : bank.amplitudes)
        a = {rng.uniform(0.0, 2.0), rng.uniform(0.0, 2.0), rng.uniform(0.0, 2.0)};

    SgBank back = bank_from_text(bank_to_text(bank));
    for (int i = 0; i < kBankLobeCount; ++i) {
        CHECK(back.axes[size_t(i)].x == bank.axes[size_t(i)].x);
        CHECK(back.amplitudes[size_t(i)].y == bank.amplitudes[size_t(i)].y);
    }
    CHECK(back.sharpness == bank.sharpness);

    auto path = std::filesystem::temp_directory_path() / "sgfit_bank_test.txt";
    save_bank(bank, path.string());
    SgBank loaded = load_bank(path.string());
    CHECK(loaded.amplitudes[23].z == bank.amplitudes[23].z);
    std::filesystem::remove(path);

    CHECK_THROWS_AS(bank_from_text("1 2 3\n"), std::runtime_error);
}
