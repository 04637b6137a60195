#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "image.hpp"
#include "ingest.hpp"

namespace rphar {

/// Whether recurrent (near) states are drawn dark or light.
enum class Polarity { dark_recurrent, light_recurrent };

inline std::string to_string(Polarity p) {
    return p == Polarity::dark_recurrent ? "dark" : "light";
}

inline Polarity parse_polarity(const std::string& s) {
    if (s == "dark" || s == "dark_recurrent") return Polarity::dark_recurrent;
    if (s == "light" || s == "light_recurrent") return Polarity::light_recurrent;
    throw ConfigError("unknown polarity '" + s + "' (expected dark or light)");
}

/**
 * @brief Recurrence plot parameters.
 *
 * Without `epsilon` the plot shows graded distances; with it, the binary recurrence matrix.
 */
struct RpConfig {
    int m = 2;  ///< embedding dimension
    int d = 2;  ///< embedding delay
    std::optional<double> epsilon;
    Polarity polarity = Polarity::dark_recurrent;

    void validate() const {
        if (m < 1) throw ConfigError("embedding dimension m must be >= 1");
        if (d < 1) throw ConfigError("embedding delay d must be >= 1");
        if (epsilon && !(*epsilon >= 0.0)) throw ConfigError("epsilon must be >= 0");
    }

    /// Shortest series that yields at least one embedded point.
    std::size_t min_length() const { return static_cast<std::size_t>(m - 1) * d + 1; }
};

/// Dense row-major matrix.
template <typename T>
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<T> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, T fill = T{}) : rows(r), cols(c), data(r * c, fill) {}

    T& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

/// Delay-embedded trajectory: `count` points of `dim` coordinates, stored point after point.
struct Embedding {
    std::size_t dim = 0;
    std::size_t count = 0;
    std::vector<double> coords;

    std::span<const double> point(std::size_t i) const { return {coords.data() + i * dim, dim}; }
};

/// Point i is (s[i], s[i+d], ..., s[i+(m-1)d]); there are N - (m-1)d points.
inline Embedding embed(std::span<const double> series, int m, int d) {
    if (m < 1 || d < 1) throw ConfigError("embedding needs m >= 1 and d >= 1");
    const std::size_t span_len = static_cast<std::size_t>(m - 1) * d;
    if (series.size() < span_len + 1)
        throw LengthError("series of length " + std::to_string(series.size()) +
                          " too short for embedding; need at least " + std::to_string(span_len + 1));
    Embedding e;
    e.dim = static_cast<std::size_t>(m);
    e.count = series.size() - span_len;
    e.coords.resize(e.count * e.dim);
    for (std::size_t i = 0; i < e.count; ++i)
        for (std::size_t k = 0; k < e.dim; ++k) e.coords[i * e.dim + k] = series[i + k * d];
    return e;
}

/// Pairwise Euclidean distances; exactly symmetric with a zero diagonal.
inline Matrix<double> distance_matrix(const Embedding& e) {
    Matrix<double> dm(e.count, e.count, 0.0);
    for (std::size_t i = 0; i < e.count; ++i) {
        const double* a = e.coords.data() + i * e.dim;
        for (std::size_t j = i + 1; j < e.count; ++j) {
            const double* b = e.coords.data() + j * e.dim;
            double acc = 0.0;
            for (std::size_t k = 0; k < e.dim; ++k) {
                const double diff = a[k] - b[k];
                acc += diff * diff;
            }
            const double dist = std::sqrt(acc);
            dm(i, j) = dist;
            dm(j, i) = dist;
        }
    }
    return dm;
}

/// R[i][j] = 1 when D[i][j] <= epsilon (a distance of exactly epsilon counts as recurrent).
inline Matrix<std::uint8_t> apply_threshold(const Matrix<double>& dist, double epsilon) {
    if (!(epsilon >= 0.0)) throw ConfigError("epsilon must be >= 0");
    Matrix<std::uint8_t> r(dist.rows, dist.cols, 0);
    for (std::size_t i = 0; i < dist.data.size(); ++i) r.data[i] = dist.data[i] <= epsilon ? 1 : 0;
    return r;
}

namespace detail {

inline std::uint8_t apply_polarity(std::uint8_t level, Polarity p) {
    return p == Polarity::dark_recurrent ? level : static_cast<std::uint8_t>(255 - level);
}

}  // namespace detail

/**
 * @brief Min-max renders a distance matrix into a square gray image.
 *
 * Under dark_recurrent the smallest distance maps to 0 and the largest to 255. A constant
 * matrix renders as all zeros for either polarity.
 */
inline RpImage render_gray(const Matrix<double>& dist, Polarity polarity = Polarity::dark_recurrent) {
    if (dist.data.empty()) throw LengthError("cannot render an empty matrix");
    RpImage img(1, static_cast<int>(dist.cols), static_cast<int>(dist.rows), RpVariant::gray);
    const auto [lo_it, hi_it] = std::minmax_element(dist.data.begin(), dist.data.end());
    const double lo = *lo_it, range = *hi_it - *lo_it;
    if (!(range > 0.0)) return img;
    for (std::size_t i = 0; i < dist.data.size(); ++i) {
        const double scaled = 255.0 * (dist.data[i] - lo) / range;
        const auto level = static_cast<std::uint8_t>(std::clamp(std::lround(scaled), 0L, 255L));
        img.pixels[i] = detail::apply_polarity(level, polarity);
    }
    return img;
}

/// Renders a binary recurrence matrix; recurrent cells are dark under dark_recurrent.
inline RpImage render_gray(const Matrix<std::uint8_t>& rec, Polarity polarity = Polarity::dark_recurrent) {
    if (rec.data.empty()) throw LengthError("cannot render an empty matrix");
    RpImage img(1, static_cast<int>(rec.cols), static_cast<int>(rec.rows), RpVariant::gray);
    const auto [lo, hi] = std::minmax_element(rec.data.begin(), rec.data.end());
    if (*lo == *hi) return img;
    for (std::size_t i = 0; i < rec.data.size(); ++i)
        img.pixels[i] = detail::apply_polarity(rec.data[i] ? 0 : 255, polarity);
    return img;
}

/// Plot of one scalar series: embed, distances, optional threshold, render.
inline RpImage rp_series(std::span<const double> series, const RpConfig& cfg) {
    cfg.validate();
    const auto dist = distance_matrix(embed(series, cfg.m, cfg.d));
    if (cfg.epsilon) return render_gray(apply_threshold(dist, *cfg.epsilon), cfg.polarity);
    return render_gray(dist, cfg.polarity);
}

/// Per-timestep Euclidean norm of the three axes.
inline std::vector<double> magnitude_series(const SensorSample& s) {
    std::vector<double> out(s.length());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = std::sqrt(s.axes[0][i] * s.axes[0][i] + s.axes[1][i] * s.axes[1][i] +
                           s.axes[2][i] * s.axes[2][i]);
    return out;
}

/// Plot of the acceleration magnitude.
inline RpImage rp_gray(const SensorSample& s, const RpConfig& cfg) {
    s.validate();
    const auto norm = magnitude_series(s);
    RpImage img = rp_series(norm, cfg);
    img.variant = RpVariant::gray;
    return img;
}

/// x, y and z plots side by side: width 3E, height E.
inline RpImage rp_gray_concat(const SensorSample& s, const RpConfig& cfg) {
    s.validate();
    const RpImage px = rp_series(s.axes[0], cfg);
    const int e = px.width;
    RpImage out(1, 3 * e, e, RpVariant::gray_concat);
    for (int a = 0; a < 3; ++a) {
        const RpImage part = a == 0 ? px : rp_series(s.axes[a], cfg);
        for (int y = 0; y < e; ++y)
            std::copy_n(part.pixels.data() + static_cast<std::size_t>(y) * e, e,
                        out.pixels.data() + static_cast<std::size_t>(y) * 3 * e + a * e);
    }
    return out;
}

/// x, y and z plots as the R, G and B channels, each normalized independently.
inline RpImage rp_rgb(const SensorSample& s, const RpConfig& cfg) {
    s.validate();
    RpImage out;
    for (int a = 0; a < 3; ++a) {
        const RpImage part = rp_series(s.axes[a], cfg);
        if (a == 0) out = RpImage(3, part.width, part.height, RpVariant::rgb);
        std::copy(part.pixels.begin(), part.pixels.end(), out.plane(a));
    }
    return out;
}

inline RpImage render_rp(const SensorSample& s, RpVariant variant, const RpConfig& cfg) {
    switch (variant) {
        case RpVariant::gray: return rp_gray(s, cfg);
        case RpVariant::gray_concat: return rp_gray_concat(s, cfg);
        case RpVariant::rgb: return rp_rgb(s, cfg);
    }
    throw ConfigError("unknown RP variant");
}

}  // namespace rphar
