// Copyright (c) 2026 sgfit contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "sgfit/geometry.hpp"
#include "sgfit/shading.hpp"

namespace sgfit {

// Forward render of a G-buffer under flash and/or SG environment lighting.
// Shading happens in the G-buffer's camera space; the flash sits at the
// camera origin and the bank axes are interpreted in the same frame. Pixels
// outside the mask are black. Deterministic for any thread count: each pixel
// is written exactly once.
inline ImageD render(const GBuffer& gbuffer, const SvbrdfMaps& maps, const SgBank& bank,
                     const FlashLight& flash, const RenderOptions& options = {}) {
    if (maps.diffuse.width != gbuffer.width || maps.diffuse.height != gbuffer.height)
        throw std::invalid_argument("render: G-buffer and SVBRDF maps disagree on resolution");
    ImageD out(gbuffer.width, gbuffer.height, 3);
    parallel_for(0, gbuffer.height, options.threads, [&](int y) {
        for (int x = 0; x < gbuffer.width; ++x) {
            size_t i = gbuffer.index(x, y);
            if (!gbuffer.mask[i]) continue;
            ShadingPoint p;
            p.position = gbuffer.position[i];
            p.normal = gbuffer.normal[i];
            p.view = normalize(-p.position);  // camera at the origin of camera space
            BrdfSample s = maps.sample_at(x, y);
            vec3 c(0.0, 0.0, 0.0);
            if (options.flash) c += shade_flash(p, s, flash);
            if (options.environment) {
                c += options.reference_env
                         ? shade_env_reference(p, s, bank, options.reference_samples)
                         : shade_env(p, s, bank);
            }
            set_rgb(out, x, y, c);
        }
    });
    return out;
}

}  // namespace sgfit
