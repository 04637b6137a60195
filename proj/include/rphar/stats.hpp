#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "error.hpp"

namespace rphar {

/// Rows are true classes, columns predicted classes.
using ConfusionMatrix = std::vector<std::vector<std::size_t>>;

/// Recall of each class (diagonal over row sum). Throws on an empty row.
inline std::vector<double> per_class_accuracy(const ConfusionMatrix& cm) {
    std::vector<double> out;
    out.reserve(cm.size());
    for (std::size_t r = 0; r < cm.size(); ++r) {
        if (cm[r].size() != cm.size()) throw DimensionError("confusion matrix is not square");
        std::size_t total = 0;
        for (std::size_t v : cm[r]) total += v;
        if (total == 0) throw ProtocolError("class " + std::to_string(r) + " has no test samples");
        out.push_back(static_cast<double>(cm[r][r]) / static_cast<double>(total));
    }
    return out;
}

/// Mean per-class recall (balanced accuracy).
inline double normalized_accuracy(const ConfusionMatrix& cm) {
    if (cm.empty()) throw ProtocolError("empty confusion matrix");
    const auto acc = per_class_accuracy(cm);
    double s = 0.0;
    for (double a : acc) s += a;
    return s / static_cast<double>(acc.size());
}

/// Two-sided Student-t critical value t_{1 - alpha/2, df}.
inline double t_critical(double alpha, std::size_t df) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must be in (0, 1)");
    if (df < 1) throw LengthError("Student-t needs at least one degree of freedom");
    const boost::math::students_t dist(static_cast<double>(df));
    return boost::math::quantile(boost::math::complement(dist, alpha / 2.0));
}

struct Interval {
    double mean = 0.0;
    double half_width = 0.0;

    double lower() const { return mean - half_width; }
    double upper() const { return mean + half_width; }
};

/// mean +- t_{1-alpha/2, n-1} * s / sqrt(n), with s the sample standard deviation.
inline Interval confidence_interval(std::span<const double> values, double alpha = 0.05) {
    const std::size_t n = values.size();
    if (n < 2) throw LengthError("confidence interval needs at least 2 values, got " + std::to_string(n));
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double s = std::sqrt(ss / static_cast<double>(n - 1));
    return {mean, t_critical(alpha, n - 1) * s / std::sqrt(static_cast<double>(n))};
}

enum class Verdict { a_better, b_better, no_difference };

inline std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::a_better: return "A_better";
        case Verdict::b_better: return "B_better";
        case Verdict::no_difference: return "no_difference";
    }
    return "?";
}

struct PairedResult {
    Interval difference;
    Verdict verdict = Verdict::no_difference;
    std::vector<double> per_class_difference;
};

/**
 * @brief Paired test on per-class mean accuracies.
 *
 * `a[c]` and `b[c]` are the run-averaged accuracies of class c under each method. The
 * differences a[c] - b[c] form the sample; an interval entirely above (below) zero favors
 * A (B), otherwise there is no significant difference.
 */
inline PairedResult paired_difference_test(std::span<const double> a, std::span<const double> b, double alpha = 0.05) {
    if (a.size() != b.size()) throw ProtocolError("paired test needs the same classes on both sides");
    PairedResult r;
    r.per_class_difference.resize(a.size());
    for (std::size_t c = 0; c < a.size(); ++c) r.per_class_difference[c] = a[c] - b[c];
    r.difference = confidence_interval(r.per_class_difference, alpha);
    if (r.difference.lower() > 0.0) r.verdict = Verdict::a_better;
    else if (r.difference.upper() < 0.0) r.verdict = Verdict::b_better;
    return r;
}

}  // namespace rphar
