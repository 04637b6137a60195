#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "error.hpp"
#include "ingest.hpp"
#include "spectrum.hpp"

namespace rphar {

/// Feature values plus the name of the method (and parameters) that produced them.
struct FeatureVector {
    std::vector<double> values;
    std::string descriptor_id;
};

enum class TimeFeature { mean, std, rms, quantile, histogram, covariance };
enum class Transform { fft, dft };

inline constexpr int kQuantileCount = 21;
inline constexpr int kHistogramBins = 16;
inline constexpr int kDefaultBands = 10;

inline std::string to_string(TimeFeature k) {
    switch (k) {
        case TimeFeature::mean: return "mean";
        case TimeFeature::std: return "std";
        case TimeFeature::rms: return "rms";
        case TimeFeature::quantile: return "quantile";
        case TimeFeature::histogram: return "histogram";
        case TimeFeature::covariance: return "covariance";
    }
    return "?";
}

namespace features {

inline double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

/// Sample standard deviation (n - 1 denominator).
inline double stddev(const std::vector<double>& v) {
    const double mu = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - mu) * (x - mu);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

inline double rms(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s / static_cast<double>(v.size()));
}

/// Quantile with linear interpolation between order statistics (sorted input).
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Pearson correlation; 0 when either side has zero variance.
inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const double ma = mean(a), mb = mean(b);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa <= 0.0 || sbb <= 0.0) return 0.0;
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

}  // namespace features

/**
 * @brief Time-domain statistics of a sample, axis by axis.
 *
 * Dimensions: mean/std/rms 3, quantile 63 (21 probabilities 0, 0.05, ..., 1), histogram 48
 * (16 equal-width bins over each axis' own [min, max], as frequencies), covariance 3
 * (Pearson correlation of xy, xz, yz).
 */
inline FeatureVector time_feature(const SensorSample& s, TimeFeature kind) {
    s.validate();
    if ((kind == TimeFeature::std || kind == TimeFeature::covariance) && s.length() < 2)
        throw LengthError(to_string(kind) + " needs at least 2 samples, got " + std::to_string(s.length()));

    FeatureVector fv;
    fv.descriptor_id = to_string(kind);
    auto& out = fv.values;
    switch (kind) {
        case TimeFeature::mean:
            for (const auto& ax : s.axes) out.push_back(features::mean(ax));
            break;
        case TimeFeature::std:
            for (const auto& ax : s.axes) out.push_back(features::stddev(ax));
            break;
        case TimeFeature::rms:
            for (const auto& ax : s.axes) out.push_back(features::rms(ax));
            break;
        case TimeFeature::quantile:
            fv.descriptor_id = "quantile21";
            for (const auto& ax : s.axes) {
                auto sorted = ax;
                std::sort(sorted.begin(), sorted.end());
                for (int q = 0; q < kQuantileCount; ++q)
                    out.push_back(features::quantile_sorted(sorted, static_cast<double>(q) / (kQuantileCount - 1)));
            }
            break;
        case TimeFeature::histogram:
            fv.descriptor_id = "histogram16";
            for (const auto& ax : s.axes) {
                std::array<double, kHistogramBins> bins{};
                const auto [lo, hi] = std::minmax_element(ax.begin(), ax.end());
                const double range = *hi - *lo;
                for (double x : ax) {
                    int b = 0;
                    if (range > 0.0) b = std::min(kHistogramBins - 1, static_cast<int>((x - *lo) / range * kHistogramBins));
                    bins[b] += 1.0;
                }
                for (double c : bins) out.push_back(c / static_cast<double>(ax.size()));
            }
            break;
        case TimeFeature::covariance:
            out.push_back(features::pearson(s.axes[0], s.axes[1]));
            out.push_back(features::pearson(s.axes[0], s.axes[2]));
            out.push_back(features::pearson(s.axes[1], s.axes[2]));
            break;
    }
    return fv;
}

/// |X_k| for k = 0 .. floor(N/2).
inline std::vector<double> magnitude_spectrum(std::span<const double> x, Transform t) {
    const auto spec = t == Transform::fft ? spectrum::fft(x) : spectrum::dft(x);
    std::vector<double> mag(x.size() / 2 + 1);
    for (std::size_t k = 0; k < mag.size(); ++k) mag[k] = std::abs(spec[k]);
    return mag;
}

/// Start index of band i when L magnitudes are split into n bands: round(i*L/n), halves up.
inline std::size_t band_boundary(std::size_t i, std::size_t length, std::size_t n_bands) {
    return (2 * i * length + n_bands) / (2 * n_bands);
}

/**
 * @brief Mean spectral magnitude in `n_bands` contiguous bands, per axis (3 * n_bands values).
 *
 * A band left empty because the spectrum is shorter than n_bands contributes 0.
 */
inline FeatureVector spectrum_bands(const SensorSample& s, int n_bands = kDefaultBands,
                                    Transform transform = Transform::fft) {
    s.validate();
    if (n_bands < 1) throw ConfigError("n_bands must be >= 1");
    if (s.length() < static_cast<std::size_t>(n_bands))
        throw LengthError("spectrum bands need at least " + std::to_string(n_bands) + " samples, got " +
                          std::to_string(s.length()));
    FeatureVector fv;
    fv.descriptor_id = std::string(transform == Transform::fft ? "fftbands" : "dftbands") + std::to_string(n_bands);
    const auto nb = static_cast<std::size_t>(n_bands);
    for (const auto& ax : s.axes) {
        const auto mag = magnitude_spectrum(ax, transform);
        for (std::size_t b = 0; b < nb; ++b) {
            const std::size_t lo = band_boundary(b, mag.size(), nb);
            const std::size_t hi = band_boundary(b + 1, mag.size(), nb);
            double acc = 0.0;
            for (std::size_t k = lo; k < hi; ++k) acc += mag[k];
            fv.values.push_back(hi > lo ? acc / static_cast<double>(hi - lo) : 0.0);
        }
    }
    return fv;
}

/// Every baseline the experiment runner knows, by name.
enum class BaselineKind { mean, std, rms, quantile, histogram, covariance, fftbands, dftbands };

inline BaselineKind parse_baseline(const std::string& s) {
    if (s == "mean") return BaselineKind::mean;
    if (s == "std") return BaselineKind::std;
    if (s == "rms") return BaselineKind::rms;
    if (s == "quantile") return BaselineKind::quantile;
    if (s == "histogram") return BaselineKind::histogram;
    if (s == "covariance") return BaselineKind::covariance;
    if (s == "fftbands") return BaselineKind::fftbands;
    if (s == "dftbands") return BaselineKind::dftbands;
    throw ConfigError("unknown baseline feature '" + s + "'");
}

inline std::string to_string(BaselineKind k) {
    constexpr const char* names[] = {"mean", "std", "rms", "quantile", "histogram", "covariance", "fftbands", "dftbands"};
    return names[static_cast<int>(k)];
}

inline bool is_baseline_name(const std::string& s) {
    for (const char* n : {"mean", "std", "rms", "quantile", "histogram", "covariance", "fftbands", "dftbands"})
        if (s == n) return true;
    return false;
}

inline FeatureVector baseline_feature(const SensorSample& s, BaselineKind k) {
    switch (k) {
        case BaselineKind::fftbands: return spectrum_bands(s, kDefaultBands, Transform::fft);
        case BaselineKind::dftbands: return spectrum_bands(s, kDefaultBands, Transform::dft);
        default: return time_feature(s, static_cast<TimeFeature>(static_cast<int>(k)));
    }
}

}  // namespace rphar
