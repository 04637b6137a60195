#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "error.hpp"

namespace rphar {

/// How the three accelerometer axes were fused into a plot.
enum class RpVariant { gray, gray_concat, rgb };

inline std::string to_string(RpVariant v) {
    switch (v) {
        case RpVariant::gray: return "gray";
        case RpVariant::gray_concat: return "gray-concat";
        case RpVariant::rgb: return "rgb";
    }
    return "?";
}

inline RpVariant parse_rp_variant(const std::string& s) {
    if (s == "gray") return RpVariant::gray;
    if (s == "gray-concat" || s == "gray_concat") return RpVariant::gray_concat;
    if (s == "rgb") return RpVariant::rgb;
    throw ConfigError("unknown RP variant '" + s + "' (expected gray, gray-concat or rgb)");
}

/**
 * @brief 8-bit image with 1 or 3 channels stored as separate row-major planes.
 */
struct RpImage {
    int channels = 1;
    int width = 0;
    int height = 0;
    RpVariant variant = RpVariant::gray;
    std::vector<std::uint8_t> pixels;  // channels * height * width, plane after plane

    RpImage() = default;
    RpImage(int channels_, int width_, int height_, RpVariant variant_)
        : channels(channels_), width(width_), height(height_), variant(variant_),
          pixels(static_cast<std::size_t>(channels_) * width_ * height_, 0) {}

    std::size_t plane_size() const { return static_cast<std::size_t>(width) * height; }

    std::uint8_t& at(int c, int x, int y) {
        return pixels[c * plane_size() + static_cast<std::size_t>(y) * width + x];
    }
    std::uint8_t at(int c, int x, int y) const {
        return pixels[c * plane_size() + static_cast<std::size_t>(y) * width + x];
    }

    const std::uint8_t* plane(int c) const { return pixels.data() + c * plane_size(); }
    std::uint8_t* plane(int c) { return pixels.data() + c * plane_size(); }
};

/// Single-channel real-valued image; the working type for gradient descriptors.
struct Plane {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    Plane() = default;
    Plane(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h, 0.0) {}

    double& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    double at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
};

/// Channel `c` of an image as floats in [0, 255].
inline Plane channel_plane(const RpImage& img, int c) {
    Plane p(img.width, img.height);
    const auto* src = img.plane(c);
    for (std::size_t i = 0; i < p.data.size(); ++i) p.data[i] = static_cast<double>(src[i]);
    return p;
}

/// Luminance (ITU-R BT.601 weights) for RGB images, the plane itself for gray images.
inline Plane luminance_plane(const RpImage& img) {
    if (img.channels == 1) return channel_plane(img, 0);
    Plane p(img.width, img.height);
    const auto *r = img.plane(0), *g = img.plane(1), *b = img.plane(2);
    for (std::size_t i = 0; i < p.data.size(); ++i)
        p.data[i] = 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i];
    return p;
}

}  // namespace rphar
