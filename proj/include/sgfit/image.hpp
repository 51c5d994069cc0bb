// Copyright (c) 2026 sgfit contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <png.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "sgfit/math.hpp"

namespace sgfit {

// Row-major interleaved image. Row 0 is the top of the picture.
template <typename T>
struct Image {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<T> data;

    Image() = default;
    Image(int w, int h, int c) : width(w), height(h), channels(c), data(size_t(w) * h * c, T(0)) {}

    T* pixel(int x, int y) { return data.data() + (size_t(y) * width + x) * channels; }
    const T* pixel(int x, int y) const { return data.data() + (size_t(y) * width + x) * channels; }

    T& at(int x, int y, int c = 0) { return data[(size_t(y) * width + x) * channels + c]; }
    T at(int x, int y, int c = 0) const { return data[(size_t(y) * width + x) * channels + c]; }

    size_t pixel_count() const { return size_t(width) * height; }
    bool same_shape(const Image& o) const {
        return width == o.width && height == o.height && channels == o.channels;
    }

    bool operator==(const Image& o) const {
        return width == o.width && height == o.height && channels == o.channels && data == o.data;
    }
};

using ImageF = Image<float>;
using ImageD = Image<double>;
using ImageU8 = Image<uint8_t>;

inline vec3 get_rgb(const ImageD& img, int x, int y) {
    const double* p = img.pixel(x, y);
    return {p[0], p[1], p[2]};
}

inline void set_rgb(ImageD& img, int x, int y, const vec3& v) {
    double* p = img.pixel(x, y);
    p[0] = v.x;
    p[1] = v.y;
    p[2] = v.z;
}

template <typename Dst, typename Src>
Image<Dst> convert_image(const Image<Src>& in) {
    Image<Dst> out(in.width, in.height, in.channels);
    for (size_t i = 0; i < in.data.size(); ++i) out.data[i] = Dst(in.data[i]);
    return out;
}

// ---------------------------------------------------------------------------
// Tonemapping: clamp to [0,1], gamma 1/2.2, quantize to 8 bits.
// ---------------------------------------------------------------------------

inline constexpr double kGamma = 2.2;

inline uint8_t tonemap_channel(double v) {
    double c = clamp01(v);
    return uint8_t(std::lround(255.0 * std::pow(c, 1.0 / kGamma)));
}

inline double linearize_channel(uint8_t v) {
    return std::pow(double(v) / 255.0, kGamma);
}

inline ImageU8 tonemap_ldr(const ImageD& hdr) {
    for (double v : hdr.data)
        if (v < 0.0) throw std::invalid_argument("tonemap_ldr: negative radiance");
    ImageU8 out(hdr.width, hdr.height, hdr.channels);
    for (size_t i = 0; i < hdr.data.size(); ++i) out.data[i] = tonemap_channel(hdr.data[i]);
    return out;
}

inline ImageD linearize_ldr(const ImageU8& ldr) {
    ImageD out(ldr.width, ldr.height, ldr.channels);
    for (size_t i = 0; i < ldr.data.size(); ++i) out.data[i] = linearize_channel(ldr.data[i]);
    return out;
}

// Parameter maps (roughness, masks) are stored linearly, not gamma encoded.
inline uint8_t quantize_linear(double v) {
    return uint8_t(std::lround(255.0 * clamp01(v)));
}

// ---------------------------------------------------------------------------
// PFM: 1- or 3-channel float maps, little-endian (negative scale token),
// rows stored bottom-to-top per the format convention.
// ---------------------------------------------------------------------------

inline void save_pfm(const ImageF& img, const std::string& path) {
    if (img.channels != 1 && img.channels != 3)
        throw std::invalid_argument("save_pfm: image must have 1 or 3 channels");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << (img.channels == 3 ? "PF" : "Pf") << "\n"
        << img.width << " " << img.height << "\n-1.0\n";
    size_t row_bytes = size_t(img.width) * img.channels * sizeof(float);
    for (int y = img.height - 1; y >= 0; --y)
        out.write(reinterpret_cast<const char*>(img.pixel(0, y)), std::streamsize(row_bytes));
    if (!out) throw std::runtime_error("write failed: " + path);
}

inline ImageF load_pfm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open PFM file: " + path);
    std::string magic;
    int w = 0, h = 0;
    double scale = 0.0;
    in >> magic >> w >> h >> scale;
    if (!in || (magic != "PF" && magic != "Pf") || w <= 0 || h <= 0)
        throw std::runtime_error("bad PFM header in " + path);
    if (scale >= 0.0) throw std::runtime_error("big-endian PFM not supported: " + path);
    in.get();  // single whitespace after the scale token
    ImageF img(w, h, magic == "PF" ? 3 : 1);
    size_t row_bytes = size_t(w) * img.channels * sizeof(float);
    for (int y = h - 1; y >= 0; --y) {
        in.read(reinterpret_cast<char*>(img.pixel(0, y)), std::streamsize(row_bytes));
        if (!in) throw std::runtime_error("truncated PFM data in " + path);
    }
    for (float v : img.data)
        if (!std::isfinite(v)) throw std::runtime_error("non-finite PFM data in " + path);
    return img;
}

// ---------------------------------------------------------------------------
// PNG via libpng: 8-bit gray or RGB, no interlace.
// ---------------------------------------------------------------------------

inline void save_png(const ImageU8& img, const std::string& path) {
    if (img.channels != 1 && img.channels != 3)
        throw std::invalid_argument("save_png: image must have 1 or 3 channels");
    std::FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw std::runtime_error("cannot open for writing: " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        std::fclose(fp);
        throw std::runtime_error("PNG write failed: " + path);
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, png_uint_32(img.width), png_uint_32(img.height), 8,
                 img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < img.height; ++y)
        png_write_row(png, const_cast<png_bytep>(img.pixel(0, y)));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

inline ImageU8 load_png(const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw std::runtime_error("cannot open PNG file: " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        std::fclose(fp);
        throw std::runtime_error("PNG read failed: " + path);
    }
    png_init_io(png, fp);
    png_read_info(png, info);
    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    int color = png_get_color_type(png, info);
    int depth = png_get_bit_depth(png, info);
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);
    int channels = int(png_get_channels(png, info));
    if (channels != 1 && channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw std::runtime_error("unsupported PNG channel count in " + path);
    }
    ImageU8 img(int(w), int(h), channels);
    for (png_uint_32 y = 0; y < h; ++y) png_read_row(png, img.pixel(0, int(y)), nullptr);
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    return img;
}

// ---------------------------------------------------------------------------
// Radiance HDR (RGBE) reader, for equirectangular environment inputs.
// ---------------------------------------------------------------------------

namespace detail {

inline void rgbe_to_float(const uint8_t rgbe[4], float* out) {
    if (rgbe[3] == 0) {
        out[0] = out[1] = out[2] = 0.0f;
        return;
    }
    float f = std::ldexp(1.0f, int(rgbe[3]) - (128 + 8));
    out[0] = float(rgbe[0]) * f;
    out[1] = float(rgbe[1]) * f;
    out[2] = float(rgbe[2]) * f;
}

}  // namespace detail

inline ImageF load_radiance_hdr(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open HDR file: " + path);
    std::string line;
    std::getline(in, line);
    if (line.rfind("#?", 0) != 0) throw std::runtime_error("bad HDR signature in " + path);
    while (std::getline(in, line) && !line.empty()) {
        // header lines (FORMAT=, EXPOSURE=, comments) until the blank line
    }
    std::getline(in, line);
    int w = 0, h = 0;
    if (std::sscanf(line.c_str(), "-Y %d +X %d", &h, &w) != 2 || w <= 0 || h <= 0)
        throw std::runtime_error("unsupported HDR resolution line in " + path);
    ImageF img(w, h, 3);
    std::vector<uint8_t> scan(size_t(w) * 4);
    for (int y = 0; y < h; ++y) {
        uint8_t head[4];
        in.read(reinterpret_cast<char*>(head), 4);
        if (!in) throw std::runtime_error("truncated HDR data in " + path);
        if (head[0] == 2 && head[1] == 2 && ((head[2] << 8) | head[3]) == w && w >= 8) {
            // new-style RLE, per component plane
            for (int c = 0; c < 4; ++c) {
                int x = 0;
                while (x < w) {
                    int count = in.get();
                    if (count == EOF) throw std::runtime_error("truncated HDR data in " + path);
                    if (count > 128) {
                        int run = count - 128;
                        int value = in.get();
                        if (value == EOF || x + run > w)
                            throw std::runtime_error("corrupt HDR RLE in " + path);
                        for (int i = 0; i < run; ++i) scan[size_t(x++) * 4 + c] = uint8_t(value);
                    } else {
                        if (x + count > w) throw std::runtime_error("corrupt HDR RLE in " + path);
                        for (int i = 0; i < count; ++i) {
                            int value = in.get();
                            if (value == EOF) throw std::runtime_error("truncated HDR data in " + path);
                            scan[size_t(x++) * 4 + c] = uint8_t(value);
                        }
                    }
                }
            }
        } else {
            // flat RGBE scanline
            std::memcpy(scan.data(), head, 4);
            in.read(reinterpret_cast<char*>(scan.data() + 4), std::streamsize(size_t(w) * 4 - 4));
            if (!in) throw std::runtime_error("truncated HDR data in " + path);
        }
        for (int x = 0; x < w; ++x) detail::rgbe_to_float(&scan[size_t(x) * 4], img.pixel(x, y));
    }
    return img;
}

// Dispatch on extension: .pfm or .hdr equirectangular input.
inline ImageF load_environment_image(const std::string& path) {
    auto ends_with = [&](const char* suffix) {
        size_t n = std::strlen(suffix);
        return path.size() >= n && path.compare(path.size() - n, n, suffix) == 0;
    };
    if (ends_with(".pfm") || ends_with(".PFM")) return load_pfm(path);
    if (ends_with(".hdr") || ends_with(".HDR")) return load_radiance_hdr(path);
    throw std::invalid_argument("environment image must be .pfm or .hdr: " + path);
}

}  // namespace sgfit
