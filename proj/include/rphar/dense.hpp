#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "image.hpp"

namespace rphar {

/// Dense sampling geometry: square patches every `stride` pixels, fully inside the image.
struct GridSpec {
    int stride = 6;
    int patch = 16;

    void validate() const {
        if (stride < 1) throw ConfigError("grid stride must be >= 1");
        if (patch < 4) throw ConfigError("grid patch must be >= 4");
    }
};

/// Patch placement: integer top-left corner and the patch center in pixel coordinates.
struct GridPoint {
    int x0 = 0;
    int y0 = 0;
    double x = 0.0;
    double y = 0.0;
};

enum class DescriptorKind { sift, rgb_sift, opponent_sift, rgb_hist };

inline std::string to_string(DescriptorKind k) {
    switch (k) {
        case DescriptorKind::sift: return "sift";
        case DescriptorKind::rgb_sift: return "rgb-sift";
        case DescriptorKind::opponent_sift: return "opponent-sift";
        case DescriptorKind::rgb_hist: return "rgb-hist";
    }
    return "?";
}

inline DescriptorKind parse_descriptor_kind(const std::string& s) {
    if (s == "sift") return DescriptorKind::sift;
    if (s == "rgb-sift" || s == "rgb_sift" || s == "rgbsift") return DescriptorKind::rgb_sift;
    if (s == "opponent-sift" || s == "opponent_sift" || s == "opponentsift") return DescriptorKind::opponent_sift;
    if (s == "rgb-hist" || s == "rgb_hist" || s == "rgbhist") return DescriptorKind::rgb_hist;
    throw ConfigError("unknown descriptor kind '" + s + "'");
}

inline constexpr int kSiftCells = 4;
inline constexpr int kSiftOrientations = 8;
inline constexpr int kSiftDim = kSiftCells * kSiftCells * kSiftOrientations;
inline constexpr int kHistBinsPerChannel = 4;

inline std::size_t descriptor_dim(DescriptorKind k) {
    switch (k) {
        case DescriptorKind::sift: return kSiftDim;
        case DescriptorKind::rgb_sift:
        case DescriptorKind::opponent_sift: return 3 * kSiftDim;
        case DescriptorKind::rgb_hist: return kHistBinsPerChannel * kHistBinsPerChannel * kHistBinsPerChannel;
    }
    return 0;
}

/// Row-major patch positions; each patch lies entirely inside a width x height image.
inline std::vector<GridPoint> dense_grid(int width, int height, const GridSpec& grid) {
    grid.validate();
    if (width < grid.patch || height < grid.patch)
        throw EmptyGridError("image " + std::to_string(width) + "x" + std::to_string(height) +
                             " is smaller than one " + std::to_string(grid.patch) + "px patch");
    std::vector<GridPoint> pts;
    const double half = grid.patch / 2.0;
    for (int y0 = 0; y0 + grid.patch <= height; y0 += grid.stride)
        for (int x0 = 0; x0 + grid.patch <= width; x0 += grid.stride)
            pts.push_back({x0, y0, x0 + half, y0 + half});
    return pts;
}

namespace detail {

inline void check_patch(int width, int height, GridPoint p, int patch) {
    if (p.x0 < 0 || p.y0 < 0 || p.x0 + patch > width || p.y0 + patch > height)
        throw DimensionError("patch at (" + std::to_string(p.x0) + "," + std::to_string(p.y0) + ") outside image");
}

inline void normalize_sift(std::span<double> h) {
    double n2 = 0.0;
    for (double v : h) n2 += v * v;
    if (!(n2 > 0.0)) return;
    double inv = 1.0 / std::sqrt(n2);
    n2 = 0.0;
    for (double& v : h) {
        v = std::min(v * inv, 0.2);
        n2 += v * v;
    }
    inv = 1.0 / std::sqrt(n2);
    for (double& v : h) v *= inv;
}

}  // namespace detail

/**
 * @brief Upright SIFT descriptor of one patch.
 *
 * Central-difference gradients (clamped at the image border) are accumulated into 4x4
 * spatial cells x 8 orientations with trilinear interpolation, weighted by a Gaussian of
 * sigma = patch/2 around the patch center. The histogram is L2-normalized, clamped at 0.2 and
 * renormalized. A patch without gradient yields the zero vector.
 */
inline std::array<float, kSiftDim> sift_at(const Plane& img, GridPoint p, int patch = 16) {
    detail::check_patch(img.width, img.height, p, patch);
    std::array<double, kSiftDim> hist{};
    const double cell = patch / static_cast<double>(kSiftCells);
    const double half = patch / 2.0;
    const double inv_two_sigma2 = 1.0 / (2.0 * half * half);
    const double bins_per_rad = kSiftOrientations / (2.0 * std::numbers::pi);

    for (int py = 0; py < patch; ++py) {
        const int y = p.y0 + py;
        const int ym = std::max(y - 1, 0), yp = std::min(y + 1, img.height - 1);
        for (int px = 0; px < patch; ++px) {
            const int x = p.x0 + px;
            const int xm = std::max(x - 1, 0), xp = std::min(x + 1, img.width - 1);
            const double gx = 0.5 * (img.at(xp, y) - img.at(xm, y));
            const double gy = 0.5 * (img.at(x, yp) - img.at(x, ym));
            const double mag = std::hypot(gx, gy);
            if (mag == 0.0) continue;
            double ang = std::atan2(gy, gx);
            if (ang < 0.0) ang += 2.0 * std::numbers::pi;

            const double dx = px + 0.5 - half, dy = py + 0.5 - half;
            const double w = mag * std::exp(-(dx * dx + dy * dy) * inv_two_sigma2);

            const double u = (px + 0.5) / cell - 0.5;
            const double v = (py + 0.5) / cell - 0.5;
            const double o = ang * bins_per_rad;
            const int u0 = static_cast<int>(std::floor(u)), v0 = static_cast<int>(std::floor(v));
            const int o0 = static_cast<int>(std::floor(o));
            const double fu = u - u0, fv = v - v0, fo = o - o0;

            for (int iv = 0; iv < 2; ++iv) {
                const int cv = v0 + iv;
                if (cv < 0 || cv >= kSiftCells) continue;
                const double wv = iv ? fv : 1.0 - fv;
                for (int iu = 0; iu < 2; ++iu) {
                    const int cu = u0 + iu;
                    if (cu < 0 || cu >= kSiftCells) continue;
                    const double wu = iu ? fu : 1.0 - fu;
                    for (int io = 0; io < 2; ++io) {
                        const int co = (o0 + io) % kSiftOrientations;
                        const double wo = io ? fo : 1.0 - fo;
                        hist[(cv * kSiftCells + cu) * kSiftOrientations + co] += w * wv * wu * wo;
                    }
                }
            }
        }
    }
    detail::normalize_sift(hist);
    std::array<float, kSiftDim> out{};
    for (int i = 0; i < kSiftDim; ++i) out[i] = static_cast<float>(hist[i]);
    return out;
}

namespace detail {

inline std::array<Plane, 3> rgb_planes(const RpImage& img) {
    if (img.channels == 3) return {channel_plane(img, 0), channel_plane(img, 1), channel_plane(img, 2)};
    const Plane g = channel_plane(img, 0);
    return {g, g, g};
}

inline std::array<Plane, 3> opponent_planes(const RpImage& img) {
    const auto rgb = rgb_planes(img);
    std::array<Plane, 3> out{Plane(img.width, img.height), Plane(img.width, img.height), Plane(img.width, img.height)};
    const double s2 = std::sqrt(2.0), s6 = std::sqrt(6.0), s3 = std::sqrt(3.0);
    for (std::size_t i = 0; i < out[0].data.size(); ++i) {
        const double r = rgb[0].data[i], g = rgb[1].data[i], b = rgb[2].data[i];
        out[0].data[i] = (r - g) / s2;
        out[1].data[i] = (r + g - 2.0 * b) / s6;
        out[2].data[i] = (r + g + b) / s3;
    }
    return out;
}

inline std::vector<float> sift_concat(const std::array<Plane, 3>& planes, GridPoint p, int patch) {
    std::vector<float> out;
    out.reserve(3 * kSiftDim);
    for (const auto& pl : planes) {
        const auto d = sift_at(pl, p, patch);
        out.insert(out.end(), d.begin(), d.end());
    }
    return out;
}

}  // namespace detail

/// SIFT on R, G and B independently, concatenated (384 values).
inline std::vector<float> rgb_sift_at(const RpImage& img, GridPoint p, int patch = 16) {
    return detail::sift_concat(detail::rgb_planes(img), p, patch);
}

/// SIFT on the opponent channels O1 = (R-G)/sqrt2, O2 = (R+G-2B)/sqrt6, O3 = (R+G+B)/sqrt3.
inline std::vector<float> opponent_sift_at(const RpImage& img, GridPoint p, int patch = 16) {
    return detail::sift_concat(detail::opponent_planes(img), p, patch);
}

/// Joint RGB histogram of the patch with `bins` levels per channel, L1-normalized.
inline std::vector<float> rgb_hist_at(const RpImage& img, GridPoint p, int patch = 16,
                                      int bins = kHistBinsPerChannel) {
    detail::check_patch(img.width, img.height, p, patch);
    if (bins < 1 || bins > 256) throw ConfigError("histogram bins per channel must be in [1, 256]");
    const int c1 = img.channels == 3 ? 1 : 0, c2 = img.channels == 3 ? 2 : 0;
    std::vector<double> counts(static_cast<std::size_t>(bins) * bins * bins, 0.0);
    for (int y = p.y0; y < p.y0 + patch; ++y)
        for (int x = p.x0; x < p.x0 + patch; ++x) {
            const int r = img.at(0, x, y) * bins / 256;
            const int g = img.at(c1, x, y) * bins / 256;
            const int b = img.at(c2, x, y) * bins / 256;
            counts[(static_cast<std::size_t>(r) * bins + g) * bins + b] += 1.0;
        }
    const double total = static_cast<double>(patch) * patch;
    std::vector<float> out(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) out[i] = static_cast<float>(counts[i] / total);
    return out;
}

/**
 * @brief Descriptors of one image on a dense grid.
 *
 * Row i of `data` (length `dim`) belongs to `points[i]`.
 */
struct LocalDescriptorSet {
    int width = 0;
    int height = 0;
    DescriptorKind kind = DescriptorKind::sift;
    std::size_t dim = 0;
    std::vector<GridPoint> points;
    std::vector<float> data;

    std::size_t size() const { return points.size(); }
    std::span<const float> row(std::size_t i) const { return {data.data() + i * dim, dim}; }
    std::span<float> row(std::size_t i) { return {data.data() + i * dim, dim}; }
};

/**
 * @brief Dense descriptors of an RP image.
 *
 * Gray SIFT on an RGB image uses its luminance; color descriptors on a gray image replicate
 * the single channel. Throws EmptyGridError when the image cannot hold one patch.
 */
inline LocalDescriptorSet extract_descriptors(const RpImage& img, DescriptorKind kind, const GridSpec& grid = {}) {
    LocalDescriptorSet set;
    set.width = img.width;
    set.height = img.height;
    set.kind = kind;
    set.dim = descriptor_dim(kind);
    set.points = dense_grid(img.width, img.height, grid);
    set.data.reserve(set.points.size() * set.dim);

    switch (kind) {
        case DescriptorKind::sift: {
            const Plane lum = luminance_plane(img);
            for (const auto& p : set.points) {
                const auto d = sift_at(lum, p, grid.patch);
                set.data.insert(set.data.end(), d.begin(), d.end());
            }
            break;
        }
        case DescriptorKind::rgb_sift:
        case DescriptorKind::opponent_sift: {
            const auto planes = kind == DescriptorKind::rgb_sift ? detail::rgb_planes(img) : detail::opponent_planes(img);
            for (const auto& p : set.points) {
                const auto d = detail::sift_concat(planes, p, grid.patch);
                set.data.insert(set.data.end(), d.begin(), d.end());
            }
            break;
        }
        case DescriptorKind::rgb_hist:
            for (const auto& p : set.points) {
                const auto d = rgb_hist_at(img, p, grid.patch);
                set.data.insert(set.data.end(), d.begin(), d.end());
            }
            break;
    }
    return set;
}

}  // namespace rphar
