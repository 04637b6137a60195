#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "baseline.hpp"
#include "bovw.hpp"
#include "dense.hpp"
#include "error.hpp"
#include "eval.hpp"
#include "ingest.hpp"
#include "rng.hpp"
#include "rp.hpp"

namespace rphar {

/**
 * @brief Everything one experiment needs. Defaults reproduce the best configuration:
 * RGB plots, RGB-SIFT, 1000 words, soft assignment (sigma 150), max pooling over a
 * 1/2/4 pyramid, 10 training samples per class, 10 runs.
 *
 * File format: one `key = value` per line, `#` starts a comment. See keys().
 */
struct ExperimentConfig {
    std::string dataset_path;
    std::string dataset_format = "wharf";
    std::vector<std::string> drop_classes{"eat_meat", "eat_soup"};

    std::string feature = "bovw";  ///< "bovw" or a baseline name

    RpVariant variant = RpVariant::rgb;
    RpConfig rp;
    DescriptorKind descriptor = DescriptorKind::rgb_sift;
    GridSpec grid;
    std::size_t codebook_size = 1000;
    std::uint64_t codebook_seed = 1;
    BovwConfig bovw;

    double svm_c = 1.0;
    int svm_epochs = 100;
    std::uint64_t svm_seed = 1;

    std::size_t per_class = 10;
    std::size_t runs = 10;
    std::uint64_t master_seed = 1;

    std::string output_dir;

    static const std::vector<std::string>& keys() {
        static const std::vector<std::string> k = {
            "dataset.path", "dataset.format", "dataset.drop", "feature", "rp.variant", "rp.m", "rp.d",
            "rp.epsilon", "rp.polarity", "descriptor", "grid.stride", "grid.patch", "bovw.k", "bovw.seed",
            "bovw.assignment", "bovw.sigma", "bovw.pooling", "bovw.levels", "svm.c", "svm.epochs", "svm.seed",
            "protocol.per_class", "protocol.runs", "protocol.master_seed", "output.dir"};
        return k;
    }

    /// Sets one field from its text form; throws ConfigError on unknown keys or bad values.
    void set(const std::string& key, const std::string& raw) {
        const std::string value = trim(raw);
        try {
            if (key == "dataset.path") dataset_path = value;
            else if (key == "dataset.format") {
                if (value != "wharf" && value != "csv") throw ConfigError("dataset.format must be wharf or csv");
                dataset_format = value;
            } else if (key == "dataset.drop") {
                drop_classes.clear();
                for (const auto& c : split_list(value)) drop_classes.push_back(normalize_label(c));
            } else if (key == "feature") {
                if (value != "bovw" && !is_baseline_name(value)) throw ConfigError("unknown feature '" + value + "'");
                feature = value;
            } else if (key == "rp.variant") variant = parse_rp_variant(value);
            else if (key == "rp.m") rp.m = std::stoi(value);
            else if (key == "rp.d") rp.d = std::stoi(value);
            else if (key == "rp.epsilon") rp.epsilon = (value.empty() || value == "none") ? std::nullopt : std::optional<double>(parse_double(value));
            else if (key == "rp.polarity") rp.polarity = parse_polarity(value);
            else if (key == "descriptor") descriptor = parse_descriptor_kind(value);
            else if (key == "grid.stride") grid.stride = std::stoi(value);
            else if (key == "grid.patch") grid.patch = std::stoi(value);
            else if (key == "bovw.k") codebook_size = std::stoull(value);
            else if (key == "bovw.seed") codebook_seed = std::stoull(value);
            else if (key == "bovw.assignment") bovw.assignment = parse_assignment(value);
            else if (key == "bovw.sigma") bovw.sigma = parse_double(value);
            else if (key == "bovw.pooling") bovw.pooling = parse_pooling(value);
            else if (key == "bovw.levels") {
                bovw.levels.clear();
                for (const auto& v : split_list(value)) bovw.levels.push_back(std::stoi(v));
            } else if (key == "svm.c") svm_c = parse_double(value);
            else if (key == "svm.epochs") svm_epochs = std::stoi(value);
            else if (key == "svm.seed") svm_seed = std::stoull(value);
            else if (key == "protocol.per_class") per_class = std::stoull(value);
            else if (key == "protocol.runs") runs = std::stoull(value);
            else if (key == "protocol.master_seed") master_seed = std::stoull(value);
            else if (key == "output.dir") output_dir = value;
            else throw ConfigError("unknown config key '" + key + "'");
        } catch (const std::logic_error&) {
            throw ConfigError("bad value '" + value + "' for config key '" + key + "'");
        }
    }

    std::string get(const std::string& key) const {
        if (key == "dataset.path") return dataset_path;
        if (key == "dataset.format") return dataset_format;
        if (key == "dataset.drop") return join(drop_classes);
        if (key == "feature") return feature;
        if (key == "rp.variant") return to_string(variant);
        if (key == "rp.m") return std::to_string(rp.m);
        if (key == "rp.d") return std::to_string(rp.d);
        if (key == "rp.epsilon") return rp.epsilon ? format_double(*rp.epsilon) : "none";
        if (key == "rp.polarity") return to_string(rp.polarity);
        if (key == "descriptor") return to_string(descriptor);
        if (key == "grid.stride") return std::to_string(grid.stride);
        if (key == "grid.patch") return std::to_string(grid.patch);
        if (key == "bovw.k") return std::to_string(codebook_size);
        if (key == "bovw.seed") return std::to_string(codebook_seed);
        if (key == "bovw.assignment") return to_string(bovw.assignment);
        if (key == "bovw.sigma") return format_double(bovw.sigma);
        if (key == "bovw.pooling") return to_string(bovw.pooling);
        if (key == "bovw.levels") {
            std::vector<std::string> v;
            for (int g : bovw.levels) v.push_back(std::to_string(g));
            return join(v);
        }
        if (key == "svm.c") return format_double(svm_c);
        if (key == "svm.epochs") return std::to_string(svm_epochs);
        if (key == "svm.seed") return std::to_string(svm_seed);
        if (key == "protocol.per_class") return std::to_string(per_class);
        if (key == "protocol.runs") return std::to_string(runs);
        if (key == "protocol.master_seed") return std::to_string(master_seed);
        if (key == "output.dir") return output_dir;
        throw ConfigError("unknown config key '" + key + "'");
    }

    /// Canonical text: every key, fixed order.
    std::string to_text() const {
        std::string out;
        for (const auto& k : keys()) out += k + " = " + get(k) + "\n";
        return out;
    }

    static ExperimentConfig from_text(const std::string& text) {
        ExperimentConfig cfg;
        std::istringstream in(text);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            if (trim(line).empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
            cfg.set(trim(line.substr(0, eq)), line.substr(eq + 1));
        }
        return cfg;
    }

    static ExperimentConfig load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot read config file " + path.string());
        std::ostringstream buf;
        buf << in.rdbuf();
        return from_text(buf.str());
    }

    /// 16 hex digits identifying every field value except output.dir.
    std::string hash() const {
        Fnv1a h;
        for (const auto& k : keys())
            if (k != "output.dir") h.update(k + " = " + get(k) + "\n");
        char buf[24];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h.digest()));
        return buf;
    }

    void validate() const {
        rp.validate();
        grid.validate();
        bovw.validate();
        if (codebook_size < 1) throw ConfigError("bovw.k must be >= 1");
        if (!(svm_c > 0.0)) throw ConfigError("svm.c must be > 0");
        if (svm_epochs < 1) throw ConfigError("svm.epochs must be >= 1");
        if (per_class < 1) throw ConfigError("protocol.per_class must be >= 1");
        if (runs < 1) throw ConfigError("protocol.runs must be >= 1");
    }

    MethodSpec method() const {
        MethodSpec m;
        if (feature == "bovw") {
            m.kind = MethodSpec::Kind::bovw;
        } else {
            m.kind = MethodSpec::Kind::baseline;
            m.baseline = parse_baseline(feature);
        }
        m.variant = variant;
        m.rp = rp;
        m.descriptor = descriptor;
        m.grid = grid;
        m.codebook_size = codebook_size;
        m.codebook_seed = codebook_seed;
        m.bovw = bovw;
        m.svm.c = svm_c;
        m.svm.epochs = svm_epochs;
        m.svm.seed = svm_seed;
        return m;
    }

    bool operator==(const ExperimentConfig& o) const { return to_text() == o.to_text(); }

    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return {};
        const auto e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }

    static std::vector<std::string> split_list(const std::string& s) {
        std::vector<std::string> out;
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (!item.empty()) out.push_back(item);
        }
        return out;
    }

    static std::string join(const std::vector<std::string>& v) {
        std::string out;
        for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
        return out;
    }

    static double parse_double(const std::string& s) {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw ConfigError("not a number: '" + s + "'");
        return v;
    }
};

/// One `--sweep key=v1,v2,...` axis.
struct SweepAxis {
    std::string key;
    std::vector<std::string> values;

    static SweepAxis parse(const std::string& spec) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos) throw ConfigError("sweep must look like key=v1,v2,...");
        SweepAxis a{ExperimentConfig::trim(spec.substr(0, eq)), ExperimentConfig::split_list(spec.substr(eq + 1))};
        if (a.values.empty()) throw ConfigError("sweep over '" + a.key + "' has no values");
        return a;
    }
};

/// Cross product of the axes applied to `base`; the last axis varies fastest.
inline std::vector<ExperimentConfig> expand_sweep(const ExperimentConfig& base, const std::vector<SweepAxis>& axes) {
    std::vector<ExperimentConfig> out{base};
    for (const auto& axis : axes) {
        std::vector<ExperimentConfig> next;
        for (const auto& cfg : out)
            for (const auto& v : axis.values) {
                ExperimentConfig c = cfg;
                c.set(axis.key, v);
                next.push_back(std::move(c));
            }
        out = std::move(next);
    }
    return out;
}

/// Loads the configured dataset and drops the configured classes.
inline Dataset load_configured_dataset(const ExperimentConfig& cfg) {
    if (cfg.dataset_path.empty()) throw ConfigError("dataset.path is not set");
    Dataset ds = cfg.dataset_format == "wharf" ? load_wharf(cfg.dataset_path) : load_csv_dir(cfg.dataset_path);
    const std::set<std::string> drop(cfg.drop_classes.begin(), cfg.drop_classes.end());
    return filter_classes(ds, drop);
}

}  // namespace rphar
