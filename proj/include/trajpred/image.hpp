#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <png.h>

#include "trajpred/errors.hpp"
#include "trajpred/geometry.hpp"
#include "trajpred/graph.hpp"

namespace trajpred {

enum class CropSampling { nearest, bilinear };

/// Bird's-eye-view RGB image with a world <-> pixel mapping. Pixels are
/// row-major, channel-last, intensities in [0,1]. World x runs along
/// columns and world y along rows: pixel (row, col) covers world point
/// origin + meters_per_pixel * (col, row).
struct BevImage {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<float> pixels; // height*width*3
    double meters_per_pixel = 1.0;
    Vec2 origin{0.0, 0.0}; // world position of pixel (0,0)

    BevImage() = default;
    BevImage(std::size_t h, std::size_t w) : height(h), width(w), pixels(h * w * 3, 0.0f) {}

    float& at(std::size_t row, std::size_t col, std::size_t ch) {
        return pixels[(row * width + col) * 3 + ch];
    }
    float at(std::size_t row, std::size_t col, std::size_t ch) const {
        return pixels[(row * width + col) * 3 + ch];
    }

    Vec2 world_of_pixel(double col, double row) const {
        return {origin.x + col * meters_per_pixel, origin.y + row * meters_per_pixel};
    }
    Vec2 pixel_of_world(Vec2 w) const {
        return {(w.x - origin.x) / meters_per_pixel, (w.y - origin.y) / meters_per_pixel};
    }

    void validate() const {
        if (height < 1 || width < 1) throw DataError("image: empty dimensions");
        if (!(meters_per_pixel > 0.0) || !std::isfinite(meters_per_pixel)) {
            throw DataError("image: meters_per_pixel must be finite and positive");
        }
        if (pixels.size() != height * width * 3) throw DataError("image: pixel buffer size");
        for (float v : pixels) {
            if (!(v >= 0.0f)) throw DataError("image: negative or non-finite intensity");
        }
    }
};

// ---- file formats ----------------------------------------------------------

inline BevImage read_png(const std::string& path) {
    png_image img;
    std::memset(&img, 0, sizeof(img));
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&img, path.c_str())) {
        throw IoError("failed to open PNG '" + path + "': " + img.message);
    }
    img.format = PNG_FORMAT_RGB;
    std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(img));
    if (!png_image_finish_read(&img, nullptr, buffer.data(), 0, nullptr)) {
        throw IoError("failed to read PNG '" + path + "': " + img.message);
    }
    BevImage out(img.height, img.width);
    for (std::size_t i = 0; i < buffer.size(); ++i) {
        out.pixels[i] = static_cast<float>(buffer[i]) / 255.0f;
    }
    return out;
}

inline void write_png(const std::string& path, std::size_t height, std::size_t width,
                      const std::uint8_t* rgb) {
    png_image img;
    std::memset(&img, 0, sizeof(img));
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(width);
    img.height = static_cast<png_uint_32>(height);
    img.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&img, path.c_str(), 0, rgb, 0, nullptr)) {
        throw IoError("failed to write PNG '" + path + "': " + img.message);
    }
}

inline void write_png(const std::string& path, const BevImage& image) {
    std::vector<std::uint8_t> rgb(image.pixels.size());
    for (std::size_t i = 0; i < rgb.size(); ++i) {
        const float v = std::min(1.0f, std::max(0.0f, image.pixels[i]));
        rgb[i] = static_cast<std::uint8_t>(v * 255.0f + 0.5f);
    }
    write_png(path, image.height, image.width, rgb.data());
}

// Raw container: magic "TJPRAW1\0", u64 height, u64 width, f64 meters_per_pixel,
// f64 origin_x, f64 origin_y, then height*width*3 bytes row-major channel-last.
// All integers and floats little-endian.
inline constexpr char kRawImageMagic[8] = {'T', 'J', 'P', 'R', 'A', 'W', '1', '\0'};

inline void write_raw_image(const std::string& path, const BevImage& image) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os.write(kRawImageMagic, 8);
    const std::uint64_t h = image.height, w = image.width;
    os.write(reinterpret_cast<const char*>(&h), 8);
    os.write(reinterpret_cast<const char*>(&w), 8);
    os.write(reinterpret_cast<const char*>(&image.meters_per_pixel), 8);
    os.write(reinterpret_cast<const char*>(&image.origin.x), 8);
    os.write(reinterpret_cast<const char*>(&image.origin.y), 8);
    for (float v : image.pixels) {
        const float c = std::min(1.0f, std::max(0.0f, v));
        const std::uint8_t b = static_cast<std::uint8_t>(c * 255.0f + 0.5f);
        os.write(reinterpret_cast<const char*>(&b), 1);
    }
    if (!os) throw IoError("failed while writing '" + path + "'");
}

inline BevImage read_raw_image(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path + "'");
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kRawImageMagic, 8) != 0) {
        throw IoError("'" + path + "' is not a raw image file");
    }
    std::uint64_t h = 0, w = 0;
    is.read(reinterpret_cast<char*>(&h), 8);
    is.read(reinterpret_cast<char*>(&w), 8);
    BevImage out(h, w);
    is.read(reinterpret_cast<char*>(&out.meters_per_pixel), 8);
    is.read(reinterpret_cast<char*>(&out.origin.x), 8);
    is.read(reinterpret_cast<char*>(&out.origin.y), 8);
    std::vector<std::uint8_t> bytes(h * w * 3);
    is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!is) throw IoError("truncated raw image '" + path + "'");
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        out.pixels[i] = static_cast<float>(bytes[i]) / 255.0f;
    }
    return out;
}

// ---- crop -------------------------------------------------------------------

/// Rotates and crops the source so the agent's last observed position lands
/// on output pixel (row s/2, col s/4) with its heading along increasing
/// columns. `to_agent` is the agent-centric normalization transform; samples
/// that fall outside the source are filled with zeros.
inline BevImage rotate_crop(const BevImage& src, const RigidTransform2D& to_agent,
                            std::size_t s, CropSampling sampling = CropSampling::nearest) {
    if (s < 2) throw ConfigError("rotate_crop: side must be >= 2, got " + std::to_string(s));
    src.validate();

    const RigidTransform2D to_world = to_agent.inverse();
    const Vec2 agent_px = src.pixel_of_world(to_world.apply({0.0, 0.0}));
    const double pad = static_cast<double>(s);
    if (agent_px.x < -pad || agent_px.x > static_cast<double>(src.width - 1) + pad ||
        agent_px.y < -pad || agent_px.y > static_cast<double>(src.height - 1) + pad) {
        throw CropError("rotate_crop: agent position outside padded source image");
    }

    const double mpp = src.meters_per_pixel;
    const double row_anchor = static_cast<double>(s / 2);
    const double col_anchor = static_cast<double>(s / 4);

    BevImage out(s, s);
    out.meters_per_pixel = mpp;
    out.origin = {-col_anchor * mpp, -row_anchor * mpp};
    for (std::size_t r = 0; r < s; ++r) {
        for (std::size_t c = 0; c < s; ++c) {
            const Vec2 agent_frame{(static_cast<double>(c) - col_anchor) * mpp,
                                   (static_cast<double>(r) - row_anchor) * mpp};
            const Vec2 px = src.pixel_of_world(to_world.apply(agent_frame));
            if (sampling == CropSampling::nearest) {
                const long ci = std::lround(px.x);
                const long ri = std::lround(px.y);
                if (ri >= 0 && ci >= 0 && ri < static_cast<long>(src.height) &&
                    ci < static_cast<long>(src.width)) {
                    for (std::size_t ch = 0; ch < 3; ++ch) {
                        out.at(r, c, ch) = src.at(ri, ci, ch);
                    }
                }
            } else {
                const double fx = std::floor(px.x), fy = std::floor(px.y);
                const double ax = px.x - fx, ay = px.y - fy;
                for (std::size_t ch = 0; ch < 3; ++ch) {
                    double acc = 0.0;
                    for (int dy = 0; dy < 2; ++dy) {
                        for (int dx = 0; dx < 2; ++dx) {
                            const long ci = static_cast<long>(fx) + dx;
                            const long ri = static_cast<long>(fy) + dy;
                            if (ri < 0 || ci < 0 || ri >= static_cast<long>(src.height) ||
                                ci >= static_cast<long>(src.width)) {
                                continue;
                            }
                            const double wgt = (dx ? ax : 1.0 - ax) * (dy ? ay : 1.0 - ay);
                            acc += wgt * src.at(ri, ci, ch);
                        }
                    }
                    out.at(r, c, ch) = static_cast<float>(acc);
                }
            }
        }
    }
    return out;
}

// ---- patch tokenization -------------------------------------------------------

/// Raster-order patches of a square image, each flattened row-major with
/// channel-last ordering: element index within a patch is
/// (row_in_patch * patch_size + col_in_patch) * 3 + channel.
template <typename T>
Tensor<T> patch_matrix(const BevImage& image, std::size_t patch_size) {
    if (image.height != image.width) {
        throw ConfigError("patchify: image must be square, got " + std::to_string(image.height) +
                          "x" + std::to_string(image.width));
    }
    const std::size_t s = image.height;
    if (patch_size == 0 || s % patch_size != 0) {
        throw ConfigError("patchify: side " + std::to_string(s) + " not divisible by patch size " +
                          std::to_string(patch_size));
    }
    const std::size_t per_side = s / patch_size;
    const std::size_t flat = patch_size * patch_size * 3;
    Tensor<T> m({per_side * per_side, flat});
    for (std::size_t pr = 0; pr < per_side; ++pr) {
        for (std::size_t pc = 0; pc < per_side; ++pc) {
            const std::size_t token = pr * per_side + pc;
            for (std::size_t r = 0; r < patch_size; ++r) {
                for (std::size_t c = 0; c < patch_size; ++c) {
                    for (std::size_t ch = 0; ch < 3; ++ch) {
                        m.at(token, (r * patch_size + c) * 3 + ch) =
                            static_cast<T>(image.at(pr * patch_size + r, pc * patch_size + c, ch));
                    }
                }
            }
        }
    }
    return m;
}

template <typename T>
struct PatchTokens {
    Value<T> tokens; // [P, d]
    std::size_t patch_size = 0;
};

/// Flattened patches linearly projected by the given weight/bias blocks.
template <typename T>
PatchTokens<T> patchify(Graph<T>& g, const BevImage& image, std::size_t patch_size,
                        ParamBlock<T>& w, ParamBlock<T>& b) {
    auto m = g.constant(patch_matrix<T>(image, patch_size));
    return PatchTokens<T>{g.linear(m, g.param(w), g.param(b)), patch_size};
}

} // namespace trajpred
