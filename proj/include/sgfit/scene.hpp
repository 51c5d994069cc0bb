// Copyright (c) 2026 sgfit contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "sgfit/envmap.hpp"
#include "sgfit/geometry.hpp"
#include "sgfit/shading.hpp"

namespace sgfit {

// Domain-randomized scene: 6 or 7 material-mapped primitives placed inside
// the camera frustum, one environment bank, flash at the camera.
struct SceneSpec {
    std::vector<Primitive> primitives;
    Camera camera;
    SgBank environment;
    FlashLight flash;
    uint64_t seed = 0;
    double nearest_distance = 0.0;  // the sampled closest-surface draw, meters
};

struct SceneSampleOptions {
    double min_nearest = 0.3, max_nearest = 3.0;
    double fov_y_deg = 50.0;
    vec3 flash_intensity{2.0, 2.0, 2.0};
};

// conservative circumscribed-sphere factor of the canonical shapes ([-1,1]^3)
inline double primitive_bound_radius(const Primitive& prim) {
    double s = std::max({prim.scale.x, prim.scale.y, prim.scale.z});
    return std::sqrt(3.0) * s;
}

inline SceneSpec sample_scene(size_t material_pool_size, std::span<const SgBank> env_pool,
                              uint64_t seed, const SceneSampleOptions& options = {}) {
    if (material_pool_size == 0) throw std::invalid_argument("sample_scene: empty material pool");
    if (env_pool.empty()) throw std::invalid_argument("sample_scene: empty environment pool");

    Rng rng(seed);
    SceneSpec scene;
    scene.seed = seed;
    scene.environment = env_pool[rng.uniform_index(env_pool.size())];
    scene.flash.intensity = options.flash_intensity;

    scene.camera.fov_y_deg = options.fov_y_deg;
    double tan_half = std::tan(0.5 * options.fov_y_deg * kPi / 180.0);

    int count = 6 + (rng.coin_flip() ? 1 : 0);
    double nearest = rng.uniform(options.min_nearest, options.max_nearest);
    scene.nearest_distance = nearest;

    double farthest = nearest;
    for (int i = 0; i < count; ++i) {
        Primitive prim;
        prim.kind = PrimitiveKind(rng.uniform_index(kPrimitiveKindCount));
        prim.material_id = int(rng.uniform_index(material_pool_size));
        prim.uv_scale = rng.uniform(0.5, 3.0);
        prim.pose.rotation =
            Quat::axis_angle(rng.unit_vector(), rng.uniform(0.0, kTwoPi)).normalized();

        // depth along the view axis; the first primitive realizes the
        // sampled nearest-surface distance, the rest sit behind it
        double depth = i == 0 ? nearest : nearest * rng.uniform(1.05, 2.2);
        double extent = depth * tan_half;
        double base = extent * rng.uniform(0.25, 0.5);
        if (prim.kind == PrimitiveKind::Sphere || prim.kind == PrimitiveKind::Torus) {
            prim.scale = {base, base, base};
        } else {
            prim.scale = {base * rng.uniform(0.6, 1.4), base * rng.uniform(0.6, 1.4),
                          base * rng.uniform(0.6, 1.4)};
        }
        double bound = primitive_bound_radius(prim);
        double center_depth = depth + bound;
        double lateral = i == 0 ? 0.35 : 0.7;
        double lx = rng.uniform(-lateral, lateral) * center_depth * tan_half;
        double ly = rng.uniform(-lateral, lateral) * center_depth * tan_half;
        prim.pose.translation = {lx, ly, -center_depth};
        farthest = std::max(farthest, center_depth + bound);
        scene.primitives.push_back(prim);
    }

    scene.camera.near_plane = std::max(0.02, 0.85 * nearest);
    scene.camera.far_plane = 1.15 * farthest;
    return scene;
}

// ---------------------------------------------------------------------------
// Scene text format: one primitive per line,
// "kind tx ty tz qw qx qy qz sx sy sz material_id uv_scale"
// ---------------------------------------------------------------------------

inline std::string scene_to_text(const SceneSpec& scene) {
    std::ostringstream out;
    char line[512];
    for (const Primitive& p : scene.primitives) {
        std::snprintf(line, sizeof line,
                      "%s %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %d %.17g\n",
                      primitive_kind_name(p.kind), p.pose.translation.x, p.pose.translation.y,
                      p.pose.translation.z, p.pose.rotation.w, p.pose.rotation.x,
                      p.pose.rotation.y, p.pose.rotation.z, p.scale.x, p.scale.y, p.scale.z,
                      p.material_id, p.uv_scale);
        out << line;
    }
    return out.str();
}

inline std::vector<Primitive> primitives_from_text(const std::string& text) {
    std::vector<Primitive> prims;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string kind;
        Primitive p;
        if (!(ls >> kind >> p.pose.translation.x >> p.pose.translation.y >>
              p.pose.translation.z >> p.pose.rotation.w >> p.pose.rotation.x >>
              p.pose.rotation.y >> p.pose.rotation.z >> p.scale.x >> p.scale.y >> p.scale.z >>
              p.material_id >> p.uv_scale))
            throw std::runtime_error("scene parse error at line " + std::to_string(line_no));
        p.kind = primitive_kind_from_name(kind);
        p.pose.rotation = p.pose.rotation.normalized();
        if (!(p.scale.x > 0.0 && p.scale.y > 0.0 && p.scale.z > 0.0))
            throw std::runtime_error("scene parse: non-positive scale at line " +
                                     std::to_string(line_no));
        prims.push_back(p);
    }
    return prims;
}

inline void save_scene(const SceneSpec& scene, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << scene_to_text(scene);
}

inline std::vector<Primitive> load_scene_primitives(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open scene file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return primitives_from_text(ss.str());
    } catch (const std::runtime_error& e) {
        throw std::runtime_error(std::string(e.what()) + " in " + path);
    }
}

}  // namespace sgfit
