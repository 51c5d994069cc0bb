// Copyright (c) 2026 sgfit contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>

#include "sgfit/material.hpp"
#include "sgfit/render.hpp"
#include "sgfit/scene.hpp"

namespace sgfit {

// One serialized two-shot training sample: LDR flash / no-flash pair, mask,
// direct-illumination-only flash HDR, and all ground-truth maps.
struct RecordMeta {
    uint64_t seed = 0;
    Camera camera;
    double shake_rotation_deg = 1.0;
    double shake_translation = 0.005;
    vec3 flash_intensity{1.0, 1.0, 1.0};
    double nearest_distance = 0.0;
};

struct DatasetRecord {
    ImageU8 flash_ldr;        // tonemapped flash + environment
    ImageU8 noflash_ldr;      // tonemapped environment only, shaken camera
    ImageU8 mask;             // 0 / 255
    ImageF direct_hdr;        // flash term only, linear
    ImageF depth;             // normalized planar depth
    ImageF normal;            // camera space, unit inside mask
    ImageU8 diffuse_srgb;     // GT diffuse albedo
    ImageU8 specular_srgb;    // GT specular albedo
    ImageU8 roughness_gray;   // GT roughness, linear encoding
    SgBank illumination;      // GT bank
    RecordMeta meta;
};

struct RenderRecordOptions {
    double shake_rotation_deg = 1.0;
    double shake_translation = 0.005;
    int threads = 1;
};

// Per-pixel SVBRDF maps sampled from per-id texture tiles through the
// G-buffer's uv channel (wrap addressing).
inline SvbrdfMaps sample_material_maps(const GBuffer& g,
                                       const std::vector<MaterialMaps>& materials) {
    SvbrdfMaps maps(g.width, g.height);
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x) {
            size_t i = g.index(x, y);
            if (!g.mask[i]) continue;
            int id = g.material_id[i];
            if (id < 0 || size_t(id) >= materials.size())
                throw std::invalid_argument("sample_material_maps: material id " +
                                            std::to_string(id) + " not in pool");
            const MaterialMaps& m = materials[size_t(id)];
            float rgb[3];
            detail::sample_wrap(m.diffuse, g.uv[i].x, g.uv[i].y, rgb);
            for (int c = 0; c < 3; ++c) maps.diffuse.at(x, y, c) = rgb[c];
            detail::sample_wrap(m.specular, g.uv[i].x, g.uv[i].y, rgb);
            for (int c = 0; c < 3; ++c) maps.specular.at(x, y, c) = rgb[c];
            detail::sample_wrap(m.roughness, g.uv[i].x, g.uv[i].y, rgb);
            maps.roughness.at(x, y) = std::max(double(rgb[0]), kMinRoughness);
        }
    return maps;
}

namespace detail {

inline ImageF to_f32(const ImageD& img) {
    ImageF out(img.width, img.height, img.channels);
    for (size_t i = 0; i < img.data.size(); ++i) out.data[i] = float(img.data[i]);
    return out;
}

}  // namespace detail

// Scene-local effective materials: one augmented tile per primitive, seeded
// from the scene seed and the primitive index. `prims_out` gets a copy of the
// scene's primitives with material ids remapped to this local pool.
inline std::vector<MaterialMaps> scene_materials(const SceneSpec& scene,
                                                 const std::vector<MaterialMaps>& pool,
                                                 std::vector<Primitive>& prims_out) {
    prims_out = scene.primitives;
    std::vector<MaterialMaps> materials;
    materials.reserve(prims_out.size());
    for (size_t i = 0; i < prims_out.size(); ++i) {
        int pool_id = prims_out[i].material_id;
        if (pool_id < 0 || size_t(pool_id) >= pool.size())
            throw std::invalid_argument("scene_materials: material id does not resolve in the pool");
        materials.push_back(
            augment_material(pool[size_t(pool_id)], pool, scene.seed * 1000003ull + i));
        prims_out[i].material_id = int(i);
    }
    return materials;
}

// Renders the full record for one scene: trace, shade both shots (the
// no-flash pass re-traces from a shaken camera), and bake the GT maps.
// Returns nullopt when nothing lands in the frustum, and the caller samples
// a new scene.
inline std::optional<DatasetRecord> render_record(const SceneSpec& scene, int resolution,
                                                  const std::vector<MaterialMaps>& pool,
                                                  const RenderRecordOptions& options = {}) {
    Camera camera = scene.camera;
    camera.width = camera.height = resolution;

    std::vector<Primitive> prims;
    std::vector<MaterialMaps> materials = scene_materials(scene, pool, prims);

    GBuffer g = trace_gbuffer(prims, camera, options.threads);
    if (g.empty_mask()) return std::nullopt;
    SvbrdfMaps maps = sample_material_maps(g, materials);

    RenderOptions full;
    full.threads = options.threads;
    RenderOptions flash_only = full;
    flash_only.environment = false;
    RenderOptions env_only = full;
    env_only.flash = false;

    DatasetRecord rec;
    rec.flash_ldr = tonemap_ldr(render(g, maps, scene.environment, scene.flash, full));
    rec.direct_hdr = detail::to_f32(render(g, maps, scene.environment, scene.flash, flash_only));

    Camera shaken = perturb_camera(camera, scene.seed ^ 0x5a5a5a5aull,
                                   options.shake_rotation_deg, options.shake_translation);
    GBuffer g2 = trace_gbuffer(prims, shaken, options.threads);
    SvbrdfMaps maps2 = sample_material_maps(g2, materials);
    rec.noflash_ldr = tonemap_ldr(render(g2, maps2, scene.environment, scene.flash, env_only));

    rec.mask = ImageU8(resolution, resolution, 1);
    for (size_t i = 0; i < g.pixel_count(); ++i) rec.mask.data[i] = g.mask[i] ? 255 : 0;
    rec.depth = ImageF(resolution, resolution, 1);
    for (size_t i = 0; i < g.pixel_count(); ++i) rec.depth.data[i] = float(g.depth[i]);
    rec.normal = ImageF(resolution, resolution, 3);
    for (size_t i = 0; i < g.pixel_count(); ++i) {
        rec.normal.data[3 * i + 0] = float(g.normal[i].x);
        rec.normal.data[3 * i + 1] = float(g.normal[i].y);
        rec.normal.data[3 * i + 2] = float(g.normal[i].z);
    }
    rec.diffuse_srgb = tonemap_ldr(maps.diffuse);
    rec.specular_srgb = tonemap_ldr(maps.specular);
    rec.roughness_gray = ImageU8(resolution, resolution, 1);
    for (int y = 0; y < resolution; ++y)
        for (int x = 0; x < resolution; ++x)
            rec.roughness_gray.at(x, y) =
                g.mask[g.index(x, y)] ? quantize_linear(maps.roughness.at(x, y)) : 0;

    rec.illumination = scene.environment;
    rec.meta.seed = scene.seed;
    rec.meta.camera = camera;
    rec.meta.shake_rotation_deg = options.shake_rotation_deg;
    rec.meta.shake_translation = options.shake_translation;
    rec.meta.flash_intensity = scene.flash.intensity;
    rec.meta.nearest_distance = scene.nearest_distance;
    return rec;
}

// ---------------------------------------------------------------------------
// Record directory layout and meta text
// ---------------------------------------------------------------------------

inline std::string meta_to_text(const RecordMeta& m) {
    char buf[1024];
    std::snprintf(buf, sizeof buf,
                  "seed %llu\n"
                  "width %d\nheight %d\nfov_y_deg %.17g\n"
                  "pose_q %.17g %.17g %.17g %.17g\npose_t %.17g %.17g %.17g\n"
                  "near %.17g\nfar %.17g\n"
                  "shake_rotation_deg %.17g\nshake_translation %.17g\n"
                  "flash_intensity %.17g %.17g %.17g\n"
                  "nearest_distance %.17g\n",
                  static_cast<unsigned long long>(m.seed), m.camera.width, m.camera.height,
                  m.camera.fov_y_deg, m.camera.pose.rotation.w, m.camera.pose.rotation.x,
                  m.camera.pose.rotation.y, m.camera.pose.rotation.z, m.camera.pose.translation.x,
                  m.camera.pose.translation.y, m.camera.pose.translation.z, m.camera.near_plane,
                  m.camera.far_plane, m.shake_rotation_deg, m.shake_translation,
                  m.flash_intensity.x, m.flash_intensity.y, m.flash_intensity.z,
                  m.nearest_distance);
    return buf;
}

inline RecordMeta meta_from_text(const std::string& text) {
    RecordMeta m;
    std::istringstream in(text);
    std::string key;
    while (in >> key) {
        if (key == "seed") {
            unsigned long long s;
            in >> s;
            m.seed = s;
        } else if (key == "width") {
            in >> m.camera.width;
        } else if (key == "height") {
            in >> m.camera.height;
        } else if (key == "fov_y_deg") {
            in >> m.camera.fov_y_deg;
        } else if (key == "pose_q") {
            in >> m.camera.pose.rotation.w >> m.camera.pose.rotation.x >>
                m.camera.pose.rotation.y >> m.camera.pose.rotation.z;
        } else if (key == "pose_t") {
            in >> m.camera.pose.translation.x >> m.camera.pose.translation.y >>
                m.camera.pose.translation.z;
        } else if (key == "near") {
            in >> m.camera.near_plane;
        } else if (key == "far") {
            in >> m.camera.far_plane;
        } else if (key == "shake_rotation_deg") {
            in >> m.shake_rotation_deg;
        } else if (key == "shake_translation") {
            in >> m.shake_translation;
        } else if (key == "flash_intensity") {
            in >> m.flash_intensity.x >> m.flash_intensity.y >> m.flash_intensity.z;
        } else if (key == "nearest_distance") {
            in >> m.nearest_distance;
        } else {
            std::string rest;
            std::getline(in, rest);  // unknown key: skip
        }
        if (!in && !in.eof()) throw std::runtime_error("meta parse error near key " + key);
    }
    return m;
}

inline void write_record(const DatasetRecord& rec, const std::string& directory) {
    namespace fs = std::filesystem;
    fs::create_directories(directory);
    auto at = [&](const char* name) { return (fs::path(directory) / name).string(); };
    save_png(rec.flash_ldr, at("flash.png"));
    save_png(rec.noflash_ldr, at("noflash.png"));
    save_png(rec.mask, at("mask.png"));
    save_pfm(rec.direct_hdr, at("direct.pfm"));
    save_pfm(rec.depth, at("depth.pfm"));
    save_pfm(rec.normal, at("normal.pfm"));
    save_png(rec.diffuse_srgb, at("diffuse.png"));
    save_png(rec.specular_srgb, at("specular.png"));
    save_png(rec.roughness_gray, at("roughness.png"));
    save_bank(rec.illumination, at("illum_sg.txt"));
    std::ofstream meta(at("meta.txt"), std::ios::binary);
    if (!meta) throw std::runtime_error("cannot open for writing: " + at("meta.txt"));
    meta << meta_to_text(rec.meta);
}

inline DatasetRecord read_record(const std::string& directory) {
    namespace fs = std::filesystem;
    auto at = [&](const char* name) {
        std::string path = (fs::path(directory) / name).string();
        if (!fs::exists(path)) throw std::runtime_error("missing record file: " + path);
        return path;
    };
    DatasetRecord rec;
    rec.flash_ldr = load_png(at("flash.png"));
    rec.noflash_ldr = load_png(at("noflash.png"));
    rec.mask = load_png(at("mask.png"));
    rec.direct_hdr = load_pfm(at("direct.pfm"));
    rec.depth = load_pfm(at("depth.pfm"));
    rec.normal = load_pfm(at("normal.pfm"));
    rec.diffuse_srgb = load_png(at("diffuse.png"));
    rec.specular_srgb = load_png(at("specular.png"));
    rec.roughness_gray = load_png(at("roughness.png"));
    rec.illumination = load_bank(at("illum_sg.txt"));
    std::ifstream meta(at("meta.txt"), std::ios::binary);
    std::ostringstream ss;
    ss << meta.rdbuf();
    try {
        rec.meta = meta_from_text(ss.str());
    } catch (const std::runtime_error& e) {
        throw std::runtime_error(std::string(e.what()) + " in " + directory + "/meta.txt");
    }
    return rec;
}

// ---------------------------------------------------------------------------
// Dataset factory driver
// ---------------------------------------------------------------------------

struct DatasetOptions {
    int count = 1;
    uint64_t seed = 0;
    int resolution = 256;
    int threads = 1;
    SceneSampleOptions scene;
    RenderRecordOptions record;
};

// Record index r is a pure function of (pools, seed, r): rejected scenes
// resample deterministically, so regeneration is byte-identical.
inline void generate_dataset(const std::string& out_dir, const std::vector<MaterialMaps>& pool,
                             std::span<const SgBank> env_pool, const DatasetOptions& options,
                             const std::function<void(int, const std::string&)>& on_record = {}) {
    namespace fs = std::filesystem;
    for (int r = 0; r < options.count; ++r) {
        std::optional<DatasetRecord> rec;
        for (uint64_t attempt = 0; attempt < 64 && !rec; ++attempt) {
            uint64_t scene_seed =
                options.seed * 0x100000001b3ull + uint64_t(r) * 0x9e3779b9ull + attempt;
            SceneSpec scene = sample_scene(pool.size(), env_pool, scene_seed, options.scene);
            scene.flash.intensity = options.scene.flash_intensity;
            rec = render_record(scene, options.resolution, pool, options.record);
        }
        if (!rec) throw numerical_error("generate_dataset: record " + std::to_string(r) +
                                        " rejected too many scenes");
        char name[32];
        std::snprintf(name, sizeof name, "scene_%06d", r);
        std::string dir = (fs::path(out_dir) / name).string();
        write_record(*rec, dir);
        if (on_record) on_record(r, dir);
    }
}

}  // namespace sgfit
