// Copyright (c) 2026 sgfit contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "sgfit/dual.hpp"
#include "sgfit/loss.hpp"
#include "sgfit/optim.hpp"
#include "sgfit/render.hpp"

namespace sgfit {

// ---------------------------------------------------------------------------
// Free variables of the inverse problem: SG amplitudes (box [0,2]), per-pixel
// SVBRDF (diffuse/specular in [0,1], roughness in [eps_r,1]) and normals in a
// 2-D tangent parameterization n = normalize(n0 + u*t1 + v*t2) about fixed
// per-pixel base frames.
// ---------------------------------------------------------------------------

struct FitParams {
    int width = 0, height = 0;
    SgBank bank;       // amplitudes are the free slots
    FlashLight flash;  // fixed
    ImageD diffuse;    // 3ch
    ImageD specular;   // 3ch
    ImageD roughness;  // 1ch
    std::vector<vec3> normal_base;
    std::vector<vec3> tangent_u, tangent_v;
    std::vector<double> offset_u, offset_v;

    static FitParams make(const GBuffer& g, const SgBank& bank, const FlashLight& flash) {
        FitParams p;
        p.width = g.width;
        p.height = g.height;
        p.bank = bank;
        p.flash = flash;
        p.diffuse = ImageD(g.width, g.height, 3);
        p.specular = ImageD(g.width, g.height, 3);
        p.roughness = ImageD(g.width, g.height, 1);
        for (auto& v : p.roughness.data) v = 0.5;
        size_t n = g.pixel_count();
        p.normal_base.assign(n, vec3(0.0, 0.0, 1.0));
        p.tangent_u.assign(n, vec3(1.0, 0.0, 0.0));
        p.tangent_v.assign(n, vec3(0.0, 1.0, 0.0));
        p.offset_u.assign(n, 0.0);
        p.offset_v.assign(n, 0.0);
        for (size_t i = 0; i < n; ++i) {
            if (!g.mask[i]) continue;
            p.normal_base[i] = g.normal[i];
            OrthonormalBasis basis = orthonormal_basis(g.normal[i]);
            p.tangent_u[i] = basis.tangent;
            p.tangent_v[i] = basis.bitangent;
        }
        return p;
    }

    vec3 normal_at(size_t i) const {
        return normalize(normal_base[i] + tangent_u[i] * offset_u[i] + tangent_v[i] * offset_v[i]);
    }

    SvbrdfMaps maps() const {
        SvbrdfMaps m(width, height);
        m.diffuse = diffuse;
        m.specular = specular;
        m.roughness = roughness;
        return m;
    }

    ImageD normal_image() const {
        ImageD img(width, height, 3);
        for (size_t i = 0; i < size_t(width) * height; ++i) {
            vec3 n = normal_at(i);
            img.data[3 * i + 0] = n.x;
            img.data[3 * i + 1] = n.y;
            img.data[3 * i + 2] = n.z;
        }
        return img;
    }

    void project() {
        for (auto& v : diffuse.data) v = clamp01(v);
        for (auto& v : specular.data) v = clamp01(v);
        for (auto& v : roughness.data) v = std::clamp(v, kMinRoughness, 1.0);
        for (auto& a : bank.amplitudes)
            for (int c = 0; c < 3; ++c) a[c] = std::clamp(a[c], 0.0, 2.0);
    }
};

struct FitGrads {
    std::array<vec3, kBankLobeCount> amps{};
    ImageD diffuse, specular, roughness;
    std::vector<double> offset_u, offset_v;

    void reset(int w, int h) {
        for (auto& a : amps) a = vec3(0.0, 0.0, 0.0);
        diffuse = ImageD(w, h, 3);
        specular = ImageD(w, h, 3);
        roughness = ImageD(w, h, 1);
        offset_u.assign(size_t(w) * h, 0.0);
        offset_v.assign(size_t(w) * h, 0.0);
    }
};

// Which renders are compared against which targets, plus the regularizers.
// Targets are linear-radiance images at the G-buffer resolution.
struct RenderLossSpec {
    const ImageD* flash_env_target = nullptr;  // loss_render_log vs render(flash+env)
    const ImageD* env_only_target = nullptr;   // loss_render_log vs render(env only)
    double consistency_weight = 0.0;           // ties normals to the depth map
    const ImageD* consistency_depth = nullptr;
    double smoothness_weight = 0.0;  // total variation on the SVBRDF maps
    bool free_amps = false;
    bool free_diffuse = false;
    bool free_specular = false;
    bool free_roughness = false;
    bool free_normals = false;
    int threads = 1;

    void validate() const {
        if (!flash_env_target && !env_only_target && consistency_weight == 0.0)
            throw std::invalid_argument("loss spec: no target selected");
        if (consistency_weight > 0.0 && !free_normals)
            throw std::invalid_argument("loss spec: consistency term references frozen normals");
        if (consistency_weight > 0.0 && !consistency_depth)
            throw std::invalid_argument("loss spec: consistency term needs a depth map");
        if (smoothness_weight > 0.0 && !(free_diffuse || free_specular || free_roughness))
            throw std::invalid_argument("loss spec: smoothness term references frozen maps");
        if (!(free_amps || free_diffuse || free_specular || free_roughness || free_normals))
            throw std::invalid_argument("loss spec: no free parameter class");
    }
};

namespace detail {

// Per-lobe diffuse cosine coefficients depend only on the normal; while
// normals are frozen they can be computed once and reused every iteration.
struct DiffuseCoeffCache {
    std::vector<std::array<double, kBankLobeCount>> coeffs;  // per pixel
};

inline DiffuseCoeffCache build_diffuse_cache(const GBuffer& g, const FitParams& params) {
    DiffuseCoeffCache cache;
    cache.coeffs.resize(g.pixel_count());
    const double cos_amp = cosine_lobe_amplitude();
    for (size_t i = 0; i < g.pixel_count(); ++i) {
        if (!g.mask[i]) continue;
        vec3 n = params.normal_at(i);
        for (int k = 0; k < kBankLobeCount; ++k) {
            double c = dot(params.bank.axes[size_t(k)], n);
            cache.coeffs[i][size_t(k)] =
                cos_amp * sg_product_integral_unit(params.bank.sharpness, kCosineLobeSharpness, c);
        }
    }
    return cache;
}

// Accumulators for one image row; rows are later folded in fixed order so the
// result does not depend on the thread count.
struct RowAccum {
    std::vector<double> loss_terms;
    std::array<double, kBankLobeCount * 3> amp{};
};

template <size_t NS>
double slot_or_zero(const Dual<NS>& x, int slot) {
    return slot >= 0 ? x.d[size_t(slot)] : 0.0;
}

inline double slot_or_zero(double, int) { return 0.0; }

// seeding helpers: plain doubles pass through untouched
template <size_t NS>
Dual<NS> Dual_seed(Dual<NS> x, int slot) {
    x.d[size_t(slot)] = 1.0;
    return x;
}

inline double Dual_seed(double x, int) { return x; }

// Everything the loss and its gradients need at one pixel. Shared with
// engine_radiance below so that loss targets produced there are bit-identical
// to the kernel's own radiance values.
template <typename T>
struct PixelTerms {
    FlashTerms<T> fl;
    EnvTerms<T> env;
    Vec3<T> sum_d{T(0), T(0), T(0)};  // per-channel amp-weighted diffuse coefficients
    Vec3<T> sum_s{T(0), T(0), T(0)};

    T radiance(int c, const vec3& diffuse, const vec3& f0, bool with_flash) const {
        T fresnel_env = T(f0[c]) * env.one_minus_qe + T(fresnel_f90(f0[c])) * env.qe;
        T value = T(diffuse[c]) * sum_d[c] * T(1.0 / kPi) +
                  env.spec_peak * fresnel_env * sum_s[c];
        if (with_flash) {
            T fresnel_fl = T(f0[c]) * fl.one_minus_qf + T(fresnel_f90(f0[c])) * fl.qf;
            value += fl.irradiance[c] * (T(diffuse[c] / kPi) + fl.spec_geo * fresnel_fl);
        }
        return value;
    }
};

template <typename T>
PixelTerms<T> pixel_terms(const GBuffer& g, const FitParams& params,
                          const DiffuseCoeffCache* diff_cache, size_t i, const Vec3<T>& n, T rough,
                          bool want_flash, bool want_env) {
    PixelTerms<T> terms;
    const vec3 position = g.position[i];
    const Vec3<T> view = Vec3<T>(normalize(-position));
    if (want_flash) terms.fl = flash_terms<T>(position, n, view, params.flash, rough);
    if (want_env) {
        terms.env = env_terms<T>(params.bank, n, view, rough);
        if (diff_cache)
            for (int k = 0; k < kBankLobeCount; ++k)
                terms.env.diff_coeff[size_t(k)] = T(diff_cache->coeffs[i][size_t(k)]);
        for (int k = 0; k < kBankLobeCount; ++k) {
            Vec3<T> amp(params.bank.amplitudes[size_t(k)]);
            terms.sum_d += amp * terms.env.diff_coeff[size_t(k)];
            terms.sum_s += amp * terms.env.spec_coeff[size_t(k)];
        }
    }
    return terms;
}

// The per-pixel loss kernel. T is double when neither roughness nor normals
// are free; otherwise a Dual whose slots are (roughness[, normal_u, normal_v])
// per `r_slot`/`u_slot`/`v_slot`.
template <typename T>
void accumulate_pixel(const GBuffer& g, const FitParams& params, const RenderLossSpec& spec,
                      const ImageD* consistency_normals, const uint8_t* consistency_mask,
                      const DiffuseCoeffCache* diff_cache, double inv_count_fe,
                      double inv_count_env, double inv_count_cons, int x, int y, int r_slot,
                      int u_slot, int v_slot, FitGrads* grads, RowAccum& row) {
    size_t i = g.index(x, y);
    vec3 diffuse = get_rgb(params.diffuse, x, y);
    vec3 f0 = get_rgb(params.specular, x, y);

    T rough = T(params.roughness.at(x, y));
    if (r_slot >= 0) rough = Dual_seed(rough, r_slot);

    Vec3<T> n;
    if (u_slot >= 0) {
        Vec3<T> base(params.normal_base[i]);
        Vec3<T> tu(params.tangent_u[i]);
        Vec3<T> tv(params.tangent_v[i]);
        T u = Dual_seed(T(params.offset_u[i]), u_slot);
        T v = Dual_seed(T(params.offset_v[i]), v_slot);
        n = normalize(base + tu * u + tv * v);
    } else {
        n = Vec3<T>(params.normal_at(i));
    }

    const bool want_flash = spec.flash_env_target != nullptr;
    const bool want_env = spec.flash_env_target != nullptr || spec.env_only_target != nullptr;
    PixelTerms<T> terms = pixel_terms<T>(g, params, diff_cache, i, n, rough, want_flash, want_env);
    const FlashTerms<T>& fl = terms.fl;
    const EnvTerms<T>& env = terms.env;
    const Vec3<T>& sum_d = terms.sum_d;
    const Vec3<T>& sum_s = terms.sum_s;

    auto channel_radiance = [&](int c, bool with_flash) -> T {
        return terms.radiance(c, diffuse, f0, with_flash);
    };

    // one rendering-loss target; dl_dx is the MAE outer derivative
    auto accumulate_target = [&](const ImageD* target, bool with_flash, double weight) {
        for (int c = 0; c < 3; ++c) {
            T xc = channel_radiance(c, with_flash);
            double xval = value_of(xc);
            double tval = target->at(x, y, c);
            double diff = std::log1p(xval) - std::log1p(tval);
            double sgn = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
            row.loss_terms.push_back(weight * std::abs(diff));
            if (!grads) continue;
            double dl_dx = weight * sgn / (1.0 + xval);
            if (dl_dx == 0.0) continue;

            if (r_slot >= 0)
                grads->roughness.at(x, y) += dl_dx * slot_or_zero(xc, r_slot);
            if (u_slot >= 0) {
                grads->offset_u[i] += dl_dx * slot_or_zero(xc, u_slot);
                grads->offset_v[i] += dl_dx * slot_or_zero(xc, v_slot);
            }
            if (spec.free_diffuse) {
                double coeff = value_of(sum_d[c]) / kPi;
                if (with_flash) coeff += value_of(fl.irradiance[c]) / kPi;
                grads->diffuse.at(x, y, c) += dl_dx * coeff;
            }
            if (spec.free_specular) {
                double coeff = value_of(env.spec_peak) * value_of(sum_s[c]) *
                               fresnel_f0_slope(f0[c], value_of(env.qe));
                if (with_flash)
                    coeff += value_of(fl.irradiance[c]) * value_of(fl.spec_geo) *
                             fresnel_f0_slope(f0[c], value_of(fl.qf));
                grads->specular.at(x, y, c) += dl_dx * coeff;
            }
            if (spec.free_amps) {
                double fresnel_env =
                    f0[c] * value_of(env.one_minus_qe) + fresnel_f90(f0[c]) * value_of(env.qe);
                double peak = value_of(env.spec_peak);
                for (int k = 0; k < kBankLobeCount; ++k) {
                    double coeff = diffuse[c] * value_of(env.diff_coeff[size_t(k)]) / kPi +
                                   peak * fresnel_env * value_of(env.spec_coeff[size_t(k)]);
                    row.amp[size_t(k) * 3 + size_t(c)] += dl_dx * coeff;
                }
            }
        }
    };

    if (spec.flash_env_target) accumulate_target(spec.flash_env_target, true, inv_count_fe);
    if (spec.env_only_target) accumulate_target(spec.env_only_target, false, inv_count_env);

    if (spec.consistency_weight > 0.0 && consistency_mask[i]) {
        Vec3<T> star(vec3(consistency_normals->at(x, y, 0), consistency_normals->at(x, y, 1),
                          consistency_normals->at(x, y, 2)));
        Vec3<T> d = n - star;
        T norm2 = dot(d, d);
        row.loss_terms.push_back(spec.consistency_weight * inv_count_cons * value_of(norm2));
        if (grads && u_slot >= 0) {
            grads->offset_u[i] +=
                spec.consistency_weight * inv_count_cons * slot_or_zero(norm2, u_slot);
            grads->offset_v[i] +=
                spec.consistency_weight * inv_count_cons * slot_or_zero(norm2, v_slot);
        }
    }
}

// Anisotropic total variation over masked 4-neighbor pairs, mean-normalized
// per map. Returns the loss term; accumulates subgradients when grads given.
inline double smoothness_term(const GBuffer& g, const ImageD& map, double weight,
                              ImageD* grad_map) {
    if (weight <= 0.0) return 0.0;
    std::vector<double> terms;
    terms.reserve(g.pixel_count() * 2);
    // first pass: count masked pairs
    size_t pairs = 0;
    for (int y = 0; y < map.height; ++y)
        for (int x = 0; x < map.width; ++x) {
            size_t i = g.index(x, y);
            if (!g.mask[i]) continue;
            if (x + 1 < map.width && g.mask[g.index(x + 1, y)]) ++pairs;
            if (y + 1 < map.height && g.mask[g.index(x, y + 1)]) ++pairs;
        }
    if (pairs == 0) return 0.0;
    double w = weight / (double(pairs) * map.channels);
    auto edge = [&](int x0, int y0, int x1, int y1) {
        for (int c = 0; c < map.channels; ++c) {
            double d = map.at(x0, y0, c) - map.at(x1, y1, c);
            terms.push_back(w * std::abs(d));
            if (grad_map && d != 0.0) {
                double s = d > 0.0 ? w : -w;
                grad_map->at(x0, y0, c) += s;
                grad_map->at(x1, y1, c) -= s;
            }
        }
    };
    for (int y = 0; y < map.height; ++y)
        for (int x = 0; x < map.width; ++x) {
            size_t i = g.index(x, y);
            if (!g.mask[i]) continue;
            if (x + 1 < map.width && g.mask[g.index(x + 1, y)]) edge(x, y, x + 1, y);
            if (y + 1 < map.height && g.mask[g.index(x, y + 1)]) edge(x, y, x, y + 1);
        }
    return pairwise_sum(terms);
}

template <typename T>
double run_loss_kernel(const GBuffer& g, const FitParams& params, const RenderLossSpec& spec,
                       const ImageD* consistency_normals, const std::vector<uint8_t>& cons_mask,
                       const DiffuseCoeffCache* diff_cache, int r_slot, int u_slot, int v_slot,
                       FitGrads* grads) {
    size_t mask_count = 0;
    for (uint8_t m : g.mask) mask_count += m;
    if (mask_count == 0) throw std::invalid_argument("grad_render_loss: empty mask");
    double inv_fe = 1.0 / (3.0 * double(mask_count));
    double inv_env = inv_fe;
    size_t cons_count = 0;
    for (uint8_t m : cons_mask) cons_count += m;
    double inv_cons = cons_count > 0 ? 1.0 / double(cons_count) : 0.0;

    std::vector<RowAccum> rows(size_t(g.height));
    parallel_for(0, g.height, spec.threads, [&](int y) {
        RowAccum& row = rows[size_t(y)];
        row.loss_terms.reserve(size_t(g.width) * 7);
        for (int x = 0; x < g.width; ++x) {
            if (!g.mask[g.index(x, y)]) continue;
            accumulate_pixel<T>(g, params, spec, consistency_normals,
                                cons_mask.empty() ? nullptr : cons_mask.data(), diff_cache,
                                inv_fe, inv_env, inv_cons, x, y, r_slot, u_slot, v_slot, grads,
                                row);
        }
    });

    // fold rows in fixed order
    std::vector<double> row_losses(rows.size());
    for (size_t r = 0; r < rows.size(); ++r) row_losses[r] = pairwise_sum(rows[r].loss_terms);
    double loss = pairwise_sum(row_losses);
    if (grads && spec.free_amps) {
        std::vector<double> comp(rows.size());
        for (int k = 0; k < kBankLobeCount; ++k)
            for (int c = 0; c < 3; ++c) {
                for (size_t r = 0; r < rows.size(); ++r)
                    comp[r] = rows[r].amp[size_t(k) * 3 + size_t(c)];
                grads->amps[size_t(k)][c] += pairwise_sum(comp);
            }
    }
    return loss;
}

}  // namespace detail

// Loss value and exact analytic gradients of the selected objective with
// respect to every free parameter class. Derivatives of clamped or gated
// quantities use subgradient 0 outside the active range. Pass grads = nullptr
// for a value-only evaluation (used by the finite-difference checks).
inline double grad_render_loss(const GBuffer& g, const FitParams& params,
                               const RenderLossSpec& spec, FitGrads* grads,
                               const detail::DiffuseCoeffCache* diff_cache = nullptr) {
    spec.validate();
    if (grads) grads->reset(params.width, params.height);

    // The consistency term only makes sense where the Eq.-2 stencil stays
    // inside the mask; at silhouette pixels the depth gradient mixes object
    // and background depth and the derived normal is meaningless.
    std::optional<ImageD> consistency_normals;
    std::vector<uint8_t> cons_mask;
    if (spec.consistency_weight > 0.0) {
        consistency_normals = normals_from_depth(*spec.consistency_depth);
        cons_mask.assign(g.pixel_count(), 0);
        for (int y = 0; y < g.height; ++y)
            for (int x = 0; x < g.width; ++x) {
                size_t i = g.index(x, y);
                if (!g.mask[i]) continue;
                bool interior = true;
                for (auto [dx, dy] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
                    int xx = std::clamp(x + dx, 0, g.width - 1);
                    int yy = std::clamp(y + dy, 0, g.height - 1);
                    if (!g.mask[g.index(xx, yy)]) interior = false;
                }
                cons_mask[i] = interior ? 1 : 0;
            }
    }
    const ImageD* cons = consistency_normals ? &*consistency_normals : nullptr;

    double loss;
    if (spec.free_roughness && spec.free_normals) {
        loss = detail::run_loss_kernel<Dual<3>>(g, params, spec, cons, cons_mask, diff_cache, 0, 1,
                                                2, grads);
    } else if (spec.free_roughness) {
        loss = detail::run_loss_kernel<Dual<1>>(g, params, spec, cons, cons_mask, diff_cache, 0,
                                                -1, -1, grads);
    } else if (spec.free_normals) {
        loss = detail::run_loss_kernel<Dual<2>>(g, params, spec, cons, cons_mask, diff_cache, -1,
                                                0, 1, grads);
    } else {
        loss = detail::run_loss_kernel<double>(g, params, spec, cons, cons_mask, diff_cache, -1,
                                               -1, -1, grads);
    }

    if (spec.smoothness_weight > 0.0) {
        loss += detail::smoothness_term(g, params.diffuse, spec.smoothness_weight,
                                        grads && spec.free_diffuse ? &grads->diffuse : nullptr);
        loss += detail::smoothness_term(g, params.specular, spec.smoothness_weight,
                                        grads && spec.free_specular ? &grads->specular : nullptr);
        loss += detail::smoothness_term(g, params.roughness, spec.smoothness_weight,
                                        grads && spec.free_roughness ? &grads->roughness : nullptr);
    }
    if (!std::isfinite(loss)) throw numerical_error("grad_render_loss: non-finite loss");
    return loss;
}

// The loss kernel's own forward radiance (flash+env or env-only). Values are
// bit-identical to what the kernel compares against targets, which makes
// exact zero-residual setups possible in tests and fitting diagnostics.
inline ImageD engine_radiance(const GBuffer& g, const FitParams& params, bool with_flash,
                              int threads = 1) {
    ImageD out(g.width, g.height, 3);
    parallel_for(0, g.height, threads, [&](int y) {
        for (int x = 0; x < g.width; ++x) {
            size_t i = g.index(x, y);
            if (!g.mask[i]) continue;
            vec3 n = params.normal_at(i);
            double rough = params.roughness.at(x, y);
            detail::PixelTerms<double> terms =
                detail::pixel_terms<double>(g, params, nullptr, i, n, rough, with_flash, true);
            vec3 diffuse = get_rgb(params.diffuse, x, y);
            vec3 f0 = get_rgb(params.specular, x, y);
            for (int c = 0; c < 3; ++c)
                out.at(x, y, c) = terms.radiance(c, diffuse, f0, with_flash);
        }
    });
    return out;
}

}  // namespace sgfit
