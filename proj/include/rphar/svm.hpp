#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace rphar {

struct SvmConfig {
    double c = 1.0;
    int epochs = 100;
    std::uint64_t seed = 1;
    bool standardize = false;   ///< z-score features with training statistics
    double tolerance = 1e-4;    ///< stop once the projected-gradient spread drops below this

    void validate() const {
        if (!(c > 0.0)) throw ConfigError("SVM C must be > 0");
        if (epochs < 1) throw ConfigError("SVM epochs must be >= 1");
        if (!(tolerance > 0.0)) throw ConfigError("SVM tolerance must be > 0");
    }
};

/// Per-dimension z-scoring; zero-variance dimensions are only centered.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale;

    static Standardizer fit(std::span<const std::vector<double>> rows) {
        Standardizer s;
        const std::size_t dim = rows.front().size();
        s.mean.assign(dim, 0.0);
        s.scale.assign(dim, 1.0);
        const double n = static_cast<double>(rows.size());
        for (const auto& r : rows)
            for (std::size_t j = 0; j < dim; ++j) s.mean[j] += r[j];
        for (double& m : s.mean) m /= n;
        std::vector<double> var(dim, 0.0);
        for (const auto& r : rows)
            for (std::size_t j = 0; j < dim; ++j) var[j] += (r[j] - s.mean[j]) * (r[j] - s.mean[j]);
        for (std::size_t j = 0; j < dim; ++j) {
            const double sd = std::sqrt(var[j] / n);
            s.scale[j] = sd > 0.0 ? 1.0 / sd : 1.0;
        }
        return s;
    }

    std::vector<double> apply(std::span<const double> x) const {
        std::vector<double> out(x.size());
        for (std::size_t j = 0; j < x.size(); ++j) out[j] = (x[j] - mean[j]) * scale[j];
        return out;
    }
};

/**
 * @brief One-vs-rest linear SVM: one (weight, bias) pair per class.
 */
struct LinearModel {
    std::vector<std::string> classes;
    std::size_t dim = 0;
    std::vector<std::vector<double>> weights;
    std::vector<double> biases;
    SvmConfig config;
    std::optional<Standardizer> normalization;

    /// Decision value of every class for `x` (raw, unnormalized features).
    std::vector<double> scores(std::span<const double> x) const {
        if (x.size() != dim)
            throw DimensionError("feature has " + std::to_string(x.size()) + " values, model expects " + std::to_string(dim));
        std::vector<double> z;
        if (normalization) {
            z = normalization->apply(x);
            x = z;
        }
        std::vector<double> s(classes.size());
        for (std::size_t c = 0; c < classes.size(); ++c) {
            double acc = biases[c];
            const auto& w = weights[c];
            for (std::size_t j = 0; j < dim; ++j) acc += w[j] * x[j];
            s[c] = acc;
        }
        return s;
    }
};

struct Prediction {
    std::size_t class_index = 0;
    std::string label;
    std::vector<double> scores;
};

namespace detail {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) acc += a[j] * b[j];
    return acc;
}

/**
 * Dual coordinate descent for min 0.5|w|^2 + 0.5 b^2 + C sum max(0, 1 - y (w.x + b)).
 * The bias is an extra feature fixed at 1, regularized like the weights.
 */
inline void train_binary(const std::vector<std::vector<double>>& x, const std::vector<double>& y, const SvmConfig& cfg,
                         std::uint64_t seed, std::vector<double>& w, double& b) {
    const std::size_t n = x.size();
    w.assign(x.front().size(), 0.0);
    b = 0.0;
    std::vector<double> alpha(n, 0.0), qd(n);
    for (std::size_t i = 0; i < n; ++i) qd[i] = dot(x[i], x[i]) + 1.0;
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(seed);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle(order, rng);
        double pg_max = -std::numeric_limits<double>::infinity();
        double pg_min = std::numeric_limits<double>::infinity();
        for (std::size_t i : order) {
            const double g = y[i] * (dot(w, x[i]) + b) - 1.0;
            double pg = g;
            if (alpha[i] == 0.0) pg = std::min(g, 0.0);
            else if (alpha[i] == cfg.c) pg = std::max(g, 0.0);
            pg_max = std::max(pg_max, pg);
            pg_min = std::min(pg_min, pg);
            if (pg == 0.0) continue;
            const double old = alpha[i];
            alpha[i] = std::clamp(old - g / qd[i], 0.0, cfg.c);
            const double step = (alpha[i] - old) * y[i];
            if (step == 0.0) continue;
            const auto& xi = x[i];
            for (std::size_t j = 0; j < w.size(); ++j) w[j] += step * xi[j];
            b += step;
        }
        if (pg_max - pg_min < cfg.tolerance) break;
    }
}

}  // namespace detail

/**
 * @brief Trains one binary hinge-loss SVM per class (that class vs the rest).
 *
 * Deterministic given (data, config): the visiting order of each binary problem comes from
 * a generator seeded by (config.seed, class index). `jobs` bounds parallel binary problems.
 */
inline LinearModel train(std::span<const std::vector<double>> features, std::span<const std::string> labels,
                         const SvmConfig& cfg = {}, unsigned jobs = 1) {
    cfg.validate();
    if (features.size() != labels.size()) throw DimensionError("features and labels differ in count");
    if (features.empty()) throw LengthError("no training samples");
    const std::size_t dim = features.front().size();
    for (const auto& f : features)
        if (f.size() != dim) throw DimensionError("training features have differing dimensions");
    const std::set<std::string> distinct(labels.begin(), labels.end());
    if (distinct.size() < 2) throw ConfigError("training needs at least 2 classes");

    LinearModel model;
    model.classes.assign(distinct.begin(), distinct.end());
    model.dim = dim;
    model.config = cfg;

    std::vector<std::vector<double>> x(features.begin(), features.end());
    if (cfg.standardize) {
        model.normalization = Standardizer::fit(features);
        for (auto& r : x) r = model.normalization->apply(r);
    }

    const std::size_t n_classes = model.classes.size();
    model.weights.resize(n_classes);
    model.biases.resize(n_classes);
    parallel_for(n_classes, jobs, [&](std::size_t c) {
        std::vector<double> y(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) y[i] = labels[i] == model.classes[c] ? 1.0 : -1.0;
        detail::train_binary(x, y, cfg, derive_seed(cfg.seed, c), model.weights[c], model.biases[c]);
    });
    return model;
}

/// Argmax of the class scores; ties go to the lowest class index.
inline Prediction predict(const LinearModel& model, std::span<const double> x) {
    Prediction p;
    p.scores = model.scores(x);
    for (std::size_t c = 1; c < p.scores.size(); ++c)
        if (p.scores[c] > p.scores[p.class_index]) p.class_index = c;
    p.label = model.classes[p.class_index];
    return p;
}

/// Mean hinge loss of class `c`'s binary problem over the given samples.
inline double hinge_loss(const LinearModel& model, std::size_t c, std::span<const std::vector<double>> features,
                         std::span<const std::string> labels) {
    double total = 0.0;
    for (std::size_t i = 0; i < features.size(); ++i) {
        const double y = labels[i] == model.classes[c] ? 1.0 : -1.0;
        total += std::max(0.0, 1.0 - y * model.scores(features[i])[c]);
    }
    return total / static_cast<double>(features.size());
}

inline nlohmann::json to_json(const LinearModel& m) {
    nlohmann::json j;
    j["format"] = "rphar-model";
    j["version"] = 1;
    j["classes"] = m.classes;
    j["dim"] = m.dim;
    j["weights"] = m.weights;
    j["biases"] = m.biases;
    j["config"] = {{"c", m.config.c}, {"epochs", m.config.epochs}, {"seed", m.config.seed},
                   {"standardize", m.config.standardize}, {"tolerance", m.config.tolerance}};
    if (m.normalization) j["normalization"] = {{"mean", m.normalization->mean}, {"scale", m.normalization->scale}};
    return j;
}

inline LinearModel model_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format") != "rphar-model" || j.at("version") != 1) throw ParseError("unsupported model file");
        LinearModel m;
        m.classes = j.at("classes").get<std::vector<std::string>>();
        m.dim = j.at("dim").get<std::size_t>();
        m.weights = j.at("weights").get<std::vector<std::vector<double>>>();
        m.biases = j.at("biases").get<std::vector<double>>();
        const auto& c = j.at("config");
        m.config.c = c.at("c");
        m.config.epochs = c.at("epochs");
        m.config.seed = c.at("seed");
        m.config.standardize = c.at("standardize");
        m.config.tolerance = c.at("tolerance");
        if (j.contains("normalization"))
            m.normalization = Standardizer{j["normalization"].at("mean").get<std::vector<double>>(),
                                           j["normalization"].at("scale").get<std::vector<double>>()};
        if (m.weights.size() != m.classes.size() || m.biases.size() != m.classes.size())
            throw ParseError("model file: class count mismatch");
        for (const auto& w : m.weights)
            if (w.size() != m.dim) throw ParseError("model file: weight dimension mismatch");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("model file: ") + e.what());
    }
}

}  // namespace rphar
