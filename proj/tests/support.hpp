#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "rphar/ingest.hpp"

namespace testing_support {

/// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "t") {
        static std::mt19937_64 rng(std::random_device{}());
        path_ = std::filesystem::temp_directory_path() /
                ("rphar-" + tag + "-" + std::to_string(rng() % 1000000000ULL));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

private:
    std::filesystem::path path_;
};

/// Small deterministic generator for property cases.
struct Gen {
    std::mt19937_64 rng;
    explicit Gen(std::uint64_t seed) : rng(seed) {}

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
    }
    std::size_t index(std::size_t lo, std::size_t hi) {  // inclusive
        return lo + static_cast<std::size_t>(rng() % (hi - lo + 1));
    }
    double normal() {
        const double u1 = uniform(1e-12, 1.0), u2 = uniform(0.0, 1.0);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }
    std::vector<double> series(std::size_t n, double lo = -20.0, double hi = 20.0) {
        std::vector<double> v(n);
        for (auto& x : v) x = uniform(lo, hi);
        return v;
    }
};

/**
 * Synthetic tri-axial recording whose shape depends on the class index: a class-specific
 * carrier frequency and axis offsets plus noise.
 */
inline rphar::SensorSample synthetic_sample(const std::string& label, int cls, int idx, std::size_t n,
                                            Gen& g) {
    rphar::SensorSample s;
    s.label = label;
    s.id = label + "_" + std::to_string(idx);
    const double f = 0.05 + 0.04 * cls;
    const double phase = g.uniform(0.0, 6.28);
    for (std::size_t t = 0; t < n; ++t) {
        const double tt = static_cast<double>(t);
        s.axes[0].push_back(3.0 * std::sin(f * tt + phase) + 0.4 * g.normal());
        s.axes[1].push_back((cls % 3) * 2.0 + 2.0 * std::cos(0.5 * f * tt) + 0.4 * g.normal());
        s.axes[2].push_back(9.81 - cls + (cls % 2 ? std::sin(3 * f * tt) : 0.0) + 0.4 * g.normal());
    }
    return s;
}

inline rphar::Dataset synthetic_dataset(int classes, int per_class, std::size_t min_len, std::size_t max_len,
                                        std::uint64_t seed) {
    Gen g(seed);
    std::vector<rphar::SensorSample> samples;
    for (int c = 0; c < classes; ++c) {
        const std::string label = "class_" + std::string(1, static_cast<char>('a' + c));
        for (int i = 0; i < per_class; ++i)
            samples.push_back(synthetic_sample(label, c, i, g.index(min_len, max_len), g));
    }
    return rphar::Dataset::from_samples(std::move(samples));
}

}  // namespace testing_support
