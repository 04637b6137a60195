#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "baseline.hpp"
#include "bovw.hpp"
#include "cache.hpp"
#include "dense.hpp"
#include "error.hpp"
#include "ingest.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "rp.hpp"
#include "stats.hpp"
#include "svm.hpp"

namespace rphar {

/// One train/test partition, as indices into Dataset::samples (both ascending).
struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/**
 * @brief Repeated balanced splits: per run, `per_class_train` random samples of every class
 * train the model and the rest are tested.
 */
struct SplitPlan {
    std::vector<Split> runs;
    std::size_t per_class_train = 10;
    std::uint64_t master_seed = 0;
    std::uint64_t fingerprint = 0;  ///< hash of the sample ids in every split
};

inline std::uint64_t split_fingerprint(const Dataset& ds, const SplitPlan& plan) {
    Fnv1a h;
    h.update(std::to_string(plan.master_seed) + "|" + std::to_string(plan.per_class_train));
    for (const auto& run : plan.runs) {
        h.update("|train");
        for (std::size_t i : run.train) h.update("," + ds.samples[i].label + "/" + ds.samples[i].id);
        h.update("|test");
        for (std::size_t i : run.test) h.update("," + ds.samples[i].label + "/" + ds.samples[i].id);
    }
    return h.digest();
}

/// Run r shuffles each class with a generator seeded from (master_seed, r).
inline SplitPlan make_splits(const Dataset& ds, std::size_t per_class = 10, std::size_t runs = 10,
                             std::uint64_t master_seed = 0) {
    if (per_class < 1) throw ConfigError("per-class training count must be >= 1");
    if (runs < 1) throw ConfigError("number of runs must be >= 1");
    if (ds.classes.empty()) throw ProtocolError("dataset has no classes");
    std::vector<std::vector<std::size_t>> by_class(ds.classes.size());
    for (std::size_t i = 0; i < ds.samples.size(); ++i) by_class[ds.class_index(ds.samples[i].label)].push_back(i);
    for (std::size_t c = 0; c < by_class.size(); ++c)
        if (by_class[c].size() <= per_class)
            throw ProtocolError("class '" + ds.classes[c] + "' has " + std::to_string(by_class[c].size()) +
                                " samples; need more than " + std::to_string(per_class) + " to leave a test set");

    SplitPlan plan;
    plan.per_class_train = per_class;
    plan.master_seed = master_seed;
    for (std::size_t r = 0; r < runs; ++r) {
        Rng rng(derive_seed(master_seed, r));
        std::vector<char> is_train(ds.samples.size(), 0);
        for (const auto& members : by_class) {
            auto shuffled = members;
            shuffle(shuffled, rng);
            for (std::size_t t = 0; t < per_class; ++t) is_train[shuffled[t]] = 1;
        }
        Split split;
        for (std::size_t i = 0; i < ds.samples.size(); ++i) (is_train[i] ? split.train : split.test).push_back(i);
        plan.runs.push_back(std::move(split));
    }
    plan.fingerprint = split_fingerprint(ds, plan);
    return plan;
}

/**
 * @brief A complete feature path plus classifier settings.
 *
 * `baseline` features come straight from the sensor data; `bovw` renders a recurrence
 * plot, extracts dense descriptors, and codes them against a per-run codebook.
 */
struct MethodSpec {
    enum class Kind { baseline, bovw };
    Kind kind = Kind::bovw;
    BaselineKind baseline = BaselineKind::quantile;

    RpVariant variant = RpVariant::rgb;
    RpConfig rp;
    DescriptorKind descriptor = DescriptorKind::rgb_sift;
    GridSpec grid;
    std::size_t codebook_size = 1000;
    std::uint64_t codebook_seed = 1;
    BovwConfig bovw;

    SvmConfig svm;

    std::string id() const {
        if (kind == Kind::baseline) return to_string(baseline);
        return "rp-" + to_string(variant) + "/" + bovw_descriptor_id(descriptor, codebook_size, bovw);
    }
};

struct RunOptions {
    unsigned jobs = 1;
    std::function<void(const std::string&)> log = [](const std::string& msg) { std::cerr << msg << '\n'; };
    std::optional<std::filesystem::path> cache_dir;
    std::size_t memo_budget_bytes = std::size_t{1} << 30;  ///< descriptor sets kept in memory across runs
};

struct PredictionRecord {
    std::string id;
    std::string truth;
    std::string predicted;
};

struct RunResult {
    ConfusionMatrix confusion;
    std::vector<double> per_class_accuracy;
    double normalized_accuracy = 0.0;
    std::vector<std::string> excluded_ids;
    std::vector<PredictionRecord> predictions;
};

/**
 * @brief Outcome of one method under one split plan.
 */
struct EvalReport {
    std::string method_id;
    std::string config_hash;
    std::vector<std::string> classes;
    std::uint64_t master_seed = 0;
    std::size_t per_class_train = 0;
    std::uint64_t split_fingerprint = 0;
    std::vector<RunResult> runs;
    double mean_accuracy = 0.0;
    std::optional<double> half_width;  ///< absent for single-run reports
    std::size_t feature_dim = 0;

    bool single_run() const { return runs.size() < 2; }

    /// Per-class accuracy averaged over runs.
    std::vector<double> class_mean_accuracy() const {
        std::vector<double> out(classes.size(), 0.0);
        for (const auto& r : runs)
            for (std::size_t c = 0; c < out.size(); ++c) out[c] += r.per_class_accuracy[c];
        for (double& v : out) v /= static_cast<double>(runs.size());
        return out;
    }

    ConfusionMatrix total_confusion() const {
        ConfusionMatrix total(classes.size(), std::vector<std::size_t>(classes.size(), 0));
        for (const auto& r : runs)
            for (std::size_t i = 0; i < classes.size(); ++i)
                for (std::size_t j = 0; j < classes.size(); ++j) total[i][j] += r.confusion[i][j];
        return total;
    }
};

/// Fills per-run statistics and the summary from the confusion matrices.
inline void summarize(EvalReport& rep, double alpha = 0.05) {
    std::vector<double> accs;
    for (auto& r : rep.runs) {
        r.per_class_accuracy = per_class_accuracy(r.confusion);
        r.normalized_accuracy = normalized_accuracy(r.confusion);
        accs.push_back(r.normalized_accuracy);
    }
    if (accs.empty()) throw ProtocolError("report has no runs");
    if (accs.size() >= 2) {
        const auto ci = confidence_interval(accs, alpha);
        rep.mean_accuracy = ci.mean;
        rep.half_width = ci.half_width;
    } else {
        rep.mean_accuracy = accs.front();
        rep.half_width.reset();
    }
}

/// Paired per-class comparison of two reports over the same split plan and classes.
inline PairedResult paired_class_test(const EvalReport& a, const EvalReport& b, double alpha = 0.05) {
    if (a.classes != b.classes) throw ProtocolError("reports cover different class lists");
    if (a.master_seed != b.master_seed || a.per_class_train != b.per_class_train ||
        a.split_fingerprint != b.split_fingerprint || a.runs.size() != b.runs.size())
        throw ProtocolError("reports were produced on different split plans");
    const auto ma = a.class_mean_accuracy(), mb = b.class_mean_accuracy();
    return paired_difference_test(ma, mb, alpha);
}

namespace detail {

/// Size of the plot rendered for a series of `length` samples, or nullopt if too short.
inline std::optional<std::pair<int, int>> rp_image_size(std::size_t length, RpVariant variant, const RpConfig& cfg) {
    if (length < cfg.min_length()) return std::nullopt;
    const int e = static_cast<int>(length - static_cast<std::size_t>(cfg.m - 1) * cfg.d);
    return std::pair{variant == RpVariant::gray_concat ? 3 * e : e, e};
}

inline std::size_t grid_count(int w, int h, const GridSpec& g) {
    if (w < g.patch || h < g.patch) return 0;
    return static_cast<std::size_t>((w - g.patch) / g.stride + 1) * static_cast<std::size_t>((h - g.patch) / g.stride + 1);
}

/// Descriptor sets for the samples of a dataset, computed on demand, optionally kept in
/// memory (within a byte budget) and on disk.
class DescriptorStore {
public:
    DescriptorStore(const Dataset& ds, const MethodSpec& spec, const RunOptions& opt)
        : ds_(ds), spec_(spec), counts_(ds.samples.size(), 0), memo_(ds.samples.size()),
          keep_(ds.samples.size(), 0) {
        if (opt.cache_dir) disk_.emplace(*opt.cache_dir);
        const std::size_t dim = descriptor_dim(spec.descriptor);
        std::size_t used = 0;
        for (std::size_t i = 0; i < ds.samples.size(); ++i) {
            const auto size = rp_image_size(ds.samples[i].length(), spec.variant, spec.rp);
            if (size) counts_[i] = grid_count(size->first, size->second, spec.grid);
            const std::size_t bytes = counts_[i] * (dim * sizeof(float) + sizeof(GridPoint));
            if (used + bytes <= opt.memo_budget_bytes) {
                keep_[i] = 1;
                used += bytes;
            }
        }
    }

    /// Number of descriptors sample i yields (0: excluded).
    std::size_t count(std::size_t i) const { return counts_[i]; }

    /// Safe to call concurrently for distinct i.
    LocalDescriptorSet get(std::size_t i) {
        if (memo_[i]) return *memo_[i];
        const auto& s = ds_.samples[i];
        std::string key;
        std::optional<LocalDescriptorSet> set;
        if (disk_) {
            key = DescriptorCache::key(s, spec_.variant, spec_.rp, spec_.descriptor, spec_.grid);
            set = disk_->load(key);
        }
        if (!set) {
            set = extract_descriptors(render_rp(s, spec_.variant, spec_.rp), spec_.descriptor, spec_.grid);
            prepare_for_coding(*set);
            if (disk_) disk_->store(key, *set);
        }
        if (set->size() != counts_[i]) throw DimensionError("descriptor count differs from grid geometry");
        if (keep_[i]) memo_[i] = *set;
        return std::move(*set);
    }

private:
    const Dataset& ds_;
    const MethodSpec& spec_;
    std::vector<std::size_t> counts_;
    std::vector<std::optional<LocalDescriptorSet>> memo_;
    std::vector<char> keep_;
    std::optional<DescriptorCache> disk_;
};

}  // namespace detail

/**
 * @brief Runs the protocol for one method.
 *
 * For every run: features (BoVW codebooks drawn from training images only), training,
 * prediction of the test split and a confusion matrix. Samples whose plot cannot hold a
 * single descriptor patch are excluded from the run and listed in the report.
 */
inline EvalReport run_experiment(const Dataset& ds, const MethodSpec& spec, const SplitPlan& plan,
                                 const RunOptions& opt = {}) {
    spec.rp.validate();
    spec.grid.validate();
    spec.bovw.validate();
    spec.svm.validate();
    if (plan.runs.empty()) throw ProtocolError("split plan has no runs");

    EvalReport rep;
    rep.method_id = spec.id();
    rep.classes = ds.classes;
    rep.master_seed = plan.master_seed;
    rep.per_class_train = plan.per_class_train;
    rep.split_fingerprint = plan.fingerprint;

    const std::size_t n = ds.samples.size();
    const std::size_t n_classes = ds.classes.size();
    std::vector<std::size_t> label_index(n);
    for (std::size_t i = 0; i < n; ++i) label_index[i] = ds.class_index(ds.samples[i].label);

    SvmConfig svm = spec.svm;
    svm.standardize = spec.kind == MethodSpec::Kind::baseline;

    std::vector<std::vector<double>> fixed_features;
    std::optional<detail::DescriptorStore> store;
    std::vector<char> excluded(n, 0);
    if (spec.kind == MethodSpec::Kind::baseline) {
        fixed_features.resize(n);
        parallel_for(n, opt.jobs, [&](std::size_t i) {
            fixed_features[i] = baseline_feature(ds.samples[i], spec.baseline).values;
        });
        rep.feature_dim = fixed_features.empty() ? 0 : fixed_features.front().size();
    } else {
        store.emplace(ds, spec, opt);
        for (std::size_t i = 0; i < n; ++i)
            if (store->count(i) == 0) {
                excluded[i] = 1;
                if (opt.log)
                    opt.log("warning: sample '" + ds.samples[i].id + "' (length " + std::to_string(ds.samples[i].length()) +
                            ") yields no " + std::to_string(spec.grid.patch) + "px patch; excluded");
            }
        rep.feature_dim = spec.bovw.feature_dim(spec.codebook_size);
    }

    for (std::size_t r = 0; r < plan.runs.size(); ++r) {
        const Split& split = plan.runs[r];
        RunResult result;
        result.confusion.assign(n_classes, std::vector<std::size_t>(n_classes, 0));

        std::vector<std::size_t> train, test;
        for (const auto* part : {&split.train, &split.test})
            for (std::size_t i : *part) {
                if (excluded[i]) result.excluded_ids.push_back(ds.samples[i].id);
                else (part == &split.train ? train : test).push_back(i);
            }

        std::vector<std::vector<double>> features_storage;
        const std::vector<std::vector<double>>* features = &fixed_features;
        if (spec.kind == MethodSpec::Kind::bovw) {
            // Codebook: random rows of the concatenated training descriptors.
            std::vector<std::size_t> offsets{0};
            for (std::size_t i : train) offsets.push_back(offsets.back() + store->count(i));
            const std::size_t dim = descriptor_dim(spec.descriptor);
            auto fetch = [&](std::span<const std::size_t> idx, std::vector<float>& out) {
                std::map<std::size_t, std::vector<std::size_t>> by_sample;  // train position -> draw slots
                for (std::size_t b = 0; b < idx.size(); ++b) {
                    const auto pos = static_cast<std::size_t>(
                        std::upper_bound(offsets.begin(), offsets.end(), idx[b]) - offsets.begin() - 1);
                    by_sample[pos].push_back(b);
                }
                std::vector<std::pair<std::size_t, std::vector<std::size_t>>> groups(by_sample.begin(), by_sample.end());
                parallel_for(groups.size(), opt.jobs, [&](std::size_t g) {
                    const std::size_t pos = groups[g].first;
                    const auto set = store->get(train[pos]);
                    for (std::size_t b : groups[g].second) {
                        const auto row = set.row(idx[b] - offsets[pos]);
                        std::copy(row.begin(), row.end(), out.begin() + static_cast<std::ptrdiff_t>(b * dim));
                    }
                });
            };
            const Codebook cb = build_codebook_lazy(offsets.back(), dim, spec.descriptor, spec.codebook_size,
                                                    derive_seed(spec.codebook_seed, r), fetch);
            features_storage.assign(n, {});
            std::vector<std::size_t> active(train);
            active.insert(active.end(), test.begin(), test.end());
            parallel_for(active.size(), opt.jobs, [&](std::size_t a) {
                const std::size_t i = active[a];
                features_storage[i] = encode(store->get(i), cb, spec.bovw).values;
            });
            features = &features_storage;
        }

        std::vector<std::vector<double>> x_train;
        std::vector<std::string> y_train;
        for (std::size_t i : train) {
            x_train.push_back((*features)[i]);
            y_train.push_back(ds.samples[i].label);
        }
        svm.seed = derive_seed(spec.svm.seed, r);
        const LinearModel model = rphar::train(x_train, y_train, svm, opt.jobs);

        std::vector<std::size_t> predicted(test.size());
        parallel_for(test.size(), opt.jobs, [&](std::size_t t) {
            const auto p = predict(model, (*features)[test[t]]);
            predicted[t] = ds.class_index(p.label);
        });
        for (std::size_t t = 0; t < test.size(); ++t) {
            const std::size_t i = test[t];
            ++result.confusion[label_index[i]][predicted[t]];
            result.predictions.push_back({ds.samples[i].id, ds.samples[i].label, ds.classes[predicted[t]]});
        }
        if (opt.log && !result.excluded_ids.empty())
            opt.log("run " + std::to_string(r + 1) + ": " + std::to_string(result.excluded_ids.size()) +
                    " sample(s) excluded");
        rep.runs.push_back(std::move(result));
    }
    summarize(rep);
    return rep;
}

// ---------------------------------------------------------------------------------------------
// Report serialization

inline nlohmann::json to_json(const EvalReport& rep) {
    nlohmann::json j;
    j["format"] = "rphar-report";
    j["version"] = 1;
    j["method_id"] = rep.method_id;
    j["config_hash"] = rep.config_hash;
    j["classes"] = rep.classes;
    j["feature_dim"] = rep.feature_dim;
    j["protocol"] = {{"master_seed", rep.master_seed},
                     {"per_class_train", rep.per_class_train},
                     {"runs", rep.runs.size()},
                     {"split_fingerprint", rep.split_fingerprint}};
    auto runs = nlohmann::json::array();
    for (const auto& r : rep.runs) {
        nlohmann::json jr;
        jr["confusion"] = r.confusion;
        jr["per_class_accuracy"] = r.per_class_accuracy;
        jr["normalized_accuracy"] = r.normalized_accuracy;
        jr["excluded"] = r.excluded_ids;
        auto preds = nlohmann::json::array();
        for (const auto& p : r.predictions) preds.push_back({p.id, p.truth, p.predicted});
        jr["predictions"] = preds;
        runs.push_back(jr);
    }
    j["runs"] = runs;
    j["summary"] = {{"mean_normalized_accuracy", rep.mean_accuracy},
                    {"ci95_half_width", rep.half_width ? nlohmann::json(*rep.half_width) : nlohmann::json(nullptr)},
                    {"single_run", rep.single_run()}};
    return j;
}

inline EvalReport report_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format") != "rphar-report" || j.at("version") != 1) throw ParseError("unsupported report file");
        EvalReport rep;
        rep.method_id = j.at("method_id");
        rep.config_hash = j.at("config_hash");
        rep.classes = j.at("classes").get<std::vector<std::string>>();
        rep.feature_dim = j.at("feature_dim");
        const auto& p = j.at("protocol");
        rep.master_seed = p.at("master_seed");
        rep.per_class_train = p.at("per_class_train");
        rep.split_fingerprint = p.at("split_fingerprint");
        for (const auto& jr : j.at("runs")) {
            RunResult r;
            r.confusion = jr.at("confusion").get<ConfusionMatrix>();
            r.excluded_ids = jr.at("excluded").get<std::vector<std::string>>();
            for (const auto& jp : jr.at("predictions"))
                r.predictions.push_back({jp.at(0).get<std::string>(), jp.at(1).get<std::string>(), jp.at(2).get<std::string>()});
            if (r.confusion.size() != rep.classes.size()) throw ParseError("report: confusion matrix size mismatch");
            rep.runs.push_back(std::move(r));
        }
        summarize(rep);
        return rep;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("report file: ") + e.what());
    }
}

/// CSV with one row per run (normalized accuracy then per-class accuracies) and summary rows.
inline std::string accuracy_table(const EvalReport& rep) {
    std::ostringstream out;
    out << "run,normalized_accuracy";
    for (const auto& c : rep.classes) out << ',' << c;
    out << '\n';
    for (std::size_t r = 0; r < rep.runs.size(); ++r) {
        out << r + 1 << ',' << format_double(rep.runs[r].normalized_accuracy);
        for (double a : rep.runs[r].per_class_accuracy) out << ',' << format_double(a);
        out << '\n';
    }
    out << "mean," << format_double(rep.mean_accuracy);
    for (double a : rep.class_mean_accuracy()) out << ',' << format_double(a);
    out << '\n';
    out << "ci95_half_width," << (rep.half_width ? format_double(*rep.half_width) : std::string("NA")) << '\n';
    return out.str();
}

/// Human-readable summary.
inline std::string text_summary(const EvalReport& rep) {
    std::ostringstream out;
    char buf[128];
    out << "method: " << rep.method_id << '\n';
    out << "feature dimension: " << rep.feature_dim << '\n';
    out << "classes: " << rep.classes.size() << ", runs: " << rep.runs.size()
        << ", training samples per class: " << rep.per_class_train << ", master seed: " << rep.master_seed << '\n';
    for (std::size_t r = 0; r < rep.runs.size(); ++r) {
        std::snprintf(buf, sizeof buf, "  run %2zu  normalized accuracy %.4f", r + 1, rep.runs[r].normalized_accuracy);
        out << buf;
        if (!rep.runs[r].excluded_ids.empty()) out << "  (" << rep.runs[r].excluded_ids.size() << " excluded)";
        out << '\n';
    }
    if (rep.half_width) {
        std::snprintf(buf, sizeof buf, "mean normalized accuracy: %.4f +- %.4f (95%% CI)\n", rep.mean_accuracy, *rep.half_width);
    } else {
        std::snprintf(buf, sizeof buf, "normalized accuracy: %.4f (single run, no confidence interval)\n", rep.mean_accuracy);
    }
    out << buf;
    out << "per-class mean accuracy:\n";
    const auto cm = rep.class_mean_accuracy();
    for (std::size_t c = 0; c < rep.classes.size(); ++c) {
        std::snprintf(buf, sizeof buf, "  %2zu %-18s %.4f\n", c + 1, rep.classes[c].c_str(), cm[c]);
        out << buf;
    }
    return out.str();
}

}  // namespace rphar
