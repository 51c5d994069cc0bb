// Copyright (c) 2026 sgfit contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <optional>
#include <string>

#include "sgfit/grad.hpp"
#include "sgfit/nnls.hpp"

namespace sgfit {

// Cascaded per-scene fitting: illumination first, then SVBRDF conditioned on
// it, then a joint normal+SVBRDF refinement driven by the rendering residual.
enum class FitStage { Illumination, Svbrdf, Joint };

inline const char* fit_stage_name(FitStage s) {
    switch (s) {
        case FitStage::Illumination: return "illumination";
        case FitStage::Svbrdf: return "svbrdf";
        case FitStage::Joint: return "joint";
    }
    return "unknown";
}

struct FitConfig {
    FitStage stage = FitStage::Svbrdf;
    double learning_rate = 2e-4;  // halved once at half the budget
    int iterations = 5000;
    double smoothness_weight = 0.01;
    int threads = 1;
    AdamConfig adam;

    static FitConfig defaults(FitStage stage) {
        FitConfig c;
        c.stage = stage;
        switch (stage) {
            case FitStage::Illumination: c.iterations = 2000; break;
            case FitStage::Svbrdf: c.iterations = 5000; break;
            case FitStage::Joint: c.iterations = 2000; break;
        }
        return c;
    }

    void validate() const {
        if (!(learning_rate > 0.0)) throw std::invalid_argument("fit: learning rate must be > 0");
        if (iterations < 0) throw std::invalid_argument("fit: iterations must be >= 0");
    }
};

struct FreeClasses {
    bool amps = false, diffuse = false, specular = false, roughness = false, normals = false;
};

struct FitResult {
    FitParams params;               // best-so-far iterate
    std::vector<double> loss_trace;  // loss at each evaluated iterate
    double best_loss = 0.0;
};

namespace detail {

inline void check_finite(std::span<const double> grads, const char* cls, int step) {
    for (double g : grads)
        if (!std::isfinite(g))
            throw numerical_error("adam_fit: non-finite gradient in class '" + std::string(cls) +
                                  "' at step " + std::to_string(step));
}

}  // namespace detail

// Adam (beta1 0.9, beta2 0.999, eps 1e-8) over the free classes with box
// projection and normal re-normalization after every step. Deterministic:
// same inputs and config give bit-identical results.
inline FitResult adam_fit(const FitParams& initial,
                          const std::function<double(const FitParams&, FitGrads&)>& grad_fn,
                          const FitConfig& config, const FreeClasses& free) {
    config.validate();
    FitParams params = initial;
    params.project();
    FitResult result;
    result.params = params;
    result.best_loss = std::numeric_limits<double>::infinity();
    if (config.iterations == 0) {
        result.params = initial;
        return result;
    }

    AdamState amp_state, diffuse_state, specular_state, roughness_state, off_u_state, off_v_state;
    if (free.amps) amp_state.init(kBankLobeCount * 3);
    if (free.diffuse) diffuse_state.init(params.diffuse.data.size());
    if (free.specular) specular_state.init(params.specular.data.size());
    if (free.roughness) roughness_state.init(params.roughness.data.size());
    if (free.normals) {
        off_u_state.init(params.offset_u.size());
        off_v_state.init(params.offset_v.size());
    }

    FitGrads grads;
    std::vector<double> amp_flat(kBankLobeCount * 3), amp_grad_flat(kBankLobeCount * 3);
    for (int step = 1; step <= config.iterations; ++step) {
        double loss = grad_fn(params, grads);
        if (!std::isfinite(loss))
            throw numerical_error("adam_fit: non-finite loss at step " + std::to_string(step));
        result.loss_trace.push_back(loss);
        if (loss < result.best_loss) {
            result.best_loss = loss;
            result.params = params;
        }

        double lr = scheduled_lr(config.learning_rate, step - 1, config.iterations);
        if (free.amps) {
            for (int k = 0; k < kBankLobeCount; ++k)
                for (int c = 0; c < 3; ++c) {
                    amp_flat[size_t(k) * 3 + size_t(c)] = params.bank.amplitudes[size_t(k)][c];
                    amp_grad_flat[size_t(k) * 3 + size_t(c)] = grads.amps[size_t(k)][c];
                }
            detail::check_finite(amp_grad_flat, "sg_amplitudes", step);
            amp_state.update(amp_flat, amp_grad_flat, config.adam, lr, step);
            for (int k = 0; k < kBankLobeCount; ++k)
                for (int c = 0; c < 3; ++c)
                    params.bank.amplitudes[size_t(k)][c] = amp_flat[size_t(k) * 3 + size_t(c)];
        }
        if (free.diffuse) {
            detail::check_finite(grads.diffuse.data, "diffuse", step);
            diffuse_state.update(params.diffuse.data, grads.diffuse.data, config.adam, lr, step);
        }
        if (free.specular) {
            detail::check_finite(grads.specular.data, "specular", step);
            specular_state.update(params.specular.data, grads.specular.data, config.adam, lr,
                                  step);
        }
        if (free.roughness) {
            detail::check_finite(grads.roughness.data, "roughness", step);
            roughness_state.update(params.roughness.data, grads.roughness.data, config.adam, lr,
                                   step);
        }
        if (free.normals) {
            detail::check_finite(grads.offset_u, "normals", step);
            detail::check_finite(grads.offset_v, "normals", step);
            off_u_state.update(params.offset_u, grads.offset_u, config.adam, lr, step);
            off_v_state.update(params.offset_v, grads.offset_v, config.adam, lr, step);
        }
        params.project();
    }

    // consider the final iterate as well
    double final_loss = grad_fn(params, grads);
    result.loss_trace.push_back(final_loss);
    if (final_loss < result.best_loss) {
        result.best_loss = final_loss;
        result.params = params;
    }
    return result;
}

// ---------------------------------------------------------------------------
// Stage drivers
// ---------------------------------------------------------------------------

struct IlluminationFit {
    SgBank bank;
    std::vector<double> loss_trace;
    double best_loss = 0.0;
};

// Shape-guided illumination estimation: a Lambertian albedo proxy is frozen
// and only the 24 RGB amplitudes are optimized against the no-flash image
// (environment light only). Amplitudes stay inside [0, 2].
//
// Grazing pixels are left out of the fit: the Fresnel term drives every
// surface toward mirror reflection at the silhouette, which a Lambertian
// proxy cannot represent, and those pixels otherwise dominate the residual.
inline IlluminationFit fit_illumination(const ImageU8& noflash_ldr, const GBuffer& gbuffer_in,
                                        const std::optional<ImageD>& albedo_guess,
                                        const SgBank& bank_template, const FlashLight& flash,
                                        const FitConfig& config, double grazing_cutoff = 0.35) {
    if (gbuffer_in.empty_mask()) throw std::invalid_argument("fit_illumination: empty mask");
    ImageD target = linearize_ldr(noflash_ldr);

    GBuffer gbuffer = gbuffer_in;
    for (size_t i = 0; i < gbuffer.pixel_count(); ++i) {
        if (!gbuffer.mask[i]) continue;
        vec3 view = normalize(-gbuffer.position[i]);
        if (dot(gbuffer.normal[i], view) < grazing_cutoff) gbuffer.mask[i] = 0;
    }
    if (gbuffer.empty_mask()) gbuffer = gbuffer_in;  // keep fitting something

    FitParams params = FitParams::make(gbuffer, bank_template, flash);
    if (albedo_guess) {
        params.diffuse = *albedo_guess;
        for (auto& v : params.diffuse.data) v = clamp01(v);
    } else {
        // albedo proxy: no-flash pixel over a uniform shading estimate that
        // assumes mean masked albedo 0.5
        vec3 mean(0.0, 0.0, 0.0);
        size_t count = 0;
        for (int y = 0; y < gbuffer.height; ++y)
            for (int x = 0; x < gbuffer.width; ++x) {
                if (!gbuffer.mask[gbuffer.index(x, y)]) continue;
                mean += get_rgb(target, x, y);
                ++count;
            }
        mean = mean / double(count);
        vec3 shading = max(mean * 2.0, vec3(1e-4, 1e-4, 1e-4));
        for (int y = 0; y < gbuffer.height; ++y)
            for (int x = 0; x < gbuffer.width; ++x)
                for (int c = 0; c < 3; ++c)
                    params.diffuse.at(x, y, c) = clamp01(target.at(x, y, c) / shading[c]);
    }

    // Initialize by per-channel NNLS on the linear Lambertian model
    // (target_c ~ albedo_c/pi * sum_k amp_kc * coeff_k). A single view leaves
    // back-facing lobes nearly unobservable, so the solve is ridged toward
    // the scalar least-squares fit; Adam then refines the log-MAE objective.
    detail::DiffuseCoeffCache cache = detail::build_diffuse_cache(gbuffer, params);
    for (int c = 0; c < 3; ++c) {
        std::vector<double> gram(kBankLobeCount * kBankLobeCount, 0.0);
        std::vector<double> rhs(kBankLobeCount, 0.0);
        double prior_num = 0.0, prior_den = 0.0;
        for (int y = 0; y < gbuffer.height; ++y)
            for (int x = 0; x < gbuffer.width; ++x) {
                size_t i = gbuffer.index(x, y);
                if (!gbuffer.mask[i]) continue;
                double a = params.diffuse.at(x, y, c) / kPi;
                double phi[kBankLobeCount];
                double phi_sum = 0.0;
                for (int k = 0; k < kBankLobeCount; ++k) {
                    phi[k] = a * cache.coeffs[i][size_t(k)];
                    phi_sum += phi[k];
                }
                prior_num += phi_sum * target.at(x, y, c);
                prior_den += phi_sum * phi_sum;
                for (int k = 0; k < kBankLobeCount; ++k) {
                    rhs[size_t(k)] += phi[k] * target.at(x, y, c);
                    for (int j = k; j < kBankLobeCount; ++j)
                        gram[size_t(k) * kBankLobeCount + size_t(j)] += phi[k] * phi[j];
                }
            }
        for (int k = 0; k < kBankLobeCount; ++k)
            for (int j = 0; j < k; ++j)
                gram[size_t(k) * kBankLobeCount + size_t(j)] =
                    gram[size_t(j) * kBankLobeCount + size_t(k)];
        double prior = prior_den > 0.0 ? std::clamp(prior_num / prior_den, 0.0, 2.0) : 0.0;
        double mean_diag = 0.0;
        for (int k = 0; k < kBankLobeCount; ++k) mean_diag += gram[size_t(k) * kBankLobeCount + size_t(k)];
        double mu = 0.1 * mean_diag / kBankLobeCount;
        for (int k = 0; k < kBankLobeCount; ++k) {
            gram[size_t(k) * kBankLobeCount + size_t(k)] += mu;
            rhs[size_t(k)] += mu * prior;
        }
        std::vector<double> amps = nnls_from_normal_equations(gram, rhs, kBankLobeCount);
        for (int k = 0; k < kBankLobeCount; ++k)
            params.bank.amplitudes[size_t(k)][c] = std::clamp(amps[size_t(k)], 0.0, 2.0);
    }

    RenderLossSpec spec;
    spec.env_only_target = &target;
    spec.free_amps = true;
    spec.threads = config.threads;

    FitResult fit = adam_fit(
        params,
        [&](const FitParams& p, FitGrads& g) {
            return grad_render_loss(gbuffer, p, spec, &g, &cache);
        },
        config, FreeClasses{.amps = true});
    return {fit.params.bank, std::move(fit.loss_trace), fit.best_loss};
}

struct SvbrdfFit {
    SvbrdfMaps maps;
    std::vector<double> loss_trace;
    double best_loss = 0.0;
};

// Guided SVBRDF estimation with shape and illumination fixed: per-pixel
// diffuse, specular and roughness against the flash image, with a total
// variation regularizer keeping the per-pixel problem well posed.
inline SvbrdfFit fit_svbrdf(const ImageU8& flash_ldr, const GBuffer& gbuffer, const SgBank& bank,
                            const FlashLight& flash, const FitConfig& config,
                            const std::optional<SvbrdfMaps>& init = std::nullopt) {
    if (gbuffer.empty_mask()) throw std::invalid_argument("fit_svbrdf: empty mask");
    ImageD target = linearize_ldr(flash_ldr);

    FitParams params = FitParams::make(gbuffer, bank, flash);
    detail::DiffuseCoeffCache cache = detail::build_diffuse_cache(gbuffer, params);
    if (init) {
        params.diffuse = init->diffuse;
        params.specular = init->specular;
        params.roughness = init->roughness;
    } else {
        // Lambertian inversion of the target under the known lighting
        for (int y = 0; y < gbuffer.height; ++y)
            for (int x = 0; x < gbuffer.width; ++x) {
                size_t i = gbuffer.index(x, y);
                if (!gbuffer.mask[i]) continue;
                vec3 p = gbuffer.position[i];
                vec3 n = gbuffer.normal[i];
                vec3 to_light = flash.position - p;
                double r2 = length_squared(to_light);
                double cos_l = std::max(0.0, dot(n, normalize(to_light)));
                for (int c = 0; c < 3; ++c) {
                    double env_shading = 0.0;
                    for (int k = 0; k < kBankLobeCount; ++k)
                        env_shading +=
                            cache.coeffs[i][size_t(k)] * params.bank.amplitudes[size_t(k)][c];
                    double shading = (flash.intensity[c] / r2 * cos_l + env_shading) / kPi;
                    params.diffuse.at(x, y, c) =
                        std::clamp(target.at(x, y, c) / (shading + 1e-6), 0.05, 0.95);
                }
                for (int c = 0; c < 3; ++c) params.specular.at(x, y, c) = 0.04;
                params.roughness.at(x, y) = 0.5;
            }
    }

    RenderLossSpec spec;
    spec.flash_env_target = &target;
    spec.free_diffuse = spec.free_specular = spec.free_roughness = true;
    spec.smoothness_weight = config.smoothness_weight;
    spec.threads = config.threads;

    FitResult fit = adam_fit(
        params,
        [&](const FitParams& p, FitGrads& g) {
            return grad_render_loss(gbuffer, p, spec, &g, &cache);
        },
        config, FreeClasses{.diffuse = true, .specular = true, .roughness = true});
    return {fit.params.maps(), std::move(fit.loss_trace), fit.best_loss};
}

struct JointFit {
    ImageD normals;  // refined, camera space
    SvbrdfMaps maps;
    std::vector<double> loss_trace;
    double best_loss = 0.0;
};

// Joint refinement of normals (tangent-parameterized) and SVBRDF; depth and
// illumination stay frozen. The consistency term keeps normals tied to the
// depth map with the 0.5 weighting of the shape loss. `refine_svbrdf = false`
// freezes the material maps and refines normals alone.
inline JointFit refine_joint(const ImageU8& flash_ldr, const GBuffer& gbuffer,
                             const SvbrdfMaps& maps, const SgBank& bank, const FlashLight& flash,
                             const FitConfig& config, double consistency_weight = 0.5,
                             bool refine_svbrdf = true) {
    if (gbuffer.empty_mask()) throw std::invalid_argument("refine_joint: empty mask");
    ImageD target = linearize_ldr(flash_ldr);
    ImageD depth = gbuffer_depth_image(gbuffer);

    FitParams params = FitParams::make(gbuffer, bank, flash);
    params.diffuse = maps.diffuse;
    params.specular = maps.specular;
    params.roughness = maps.roughness;

    RenderLossSpec spec;
    spec.flash_env_target = &target;
    spec.consistency_weight = consistency_weight;
    spec.consistency_depth = &depth;
    spec.smoothness_weight = refine_svbrdf ? config.smoothness_weight : 0.0;
    spec.free_diffuse = spec.free_specular = spec.free_roughness = refine_svbrdf;
    spec.free_normals = true;
    spec.threads = config.threads;

    FitResult fit = adam_fit(
        params,
        [&](const FitParams& p, FitGrads& g) { return grad_render_loss(gbuffer, p, spec, &g); },
        config,
        FreeClasses{.diffuse = refine_svbrdf,
                    .specular = refine_svbrdf,
                    .roughness = refine_svbrdf,
                    .normals = true});
    return {fit.params.normal_image(), fit.params.maps(), std::move(fit.loss_trace),
            fit.best_loss};
}

}  // namespace sgfit
