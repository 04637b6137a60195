#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "baseline.hpp"
#include "dense.hpp"
#include "error.hpp"
#include "rng.hpp"

namespace rphar {

/**
 * @brief Visual vocabulary: k descriptor-space words sampled from a descriptor pool.
 */
struct Codebook {
    DescriptorKind kind = DescriptorKind::sift;
    std::size_t dim = 0;
    std::size_t k = 0;
    std::uint64_t seed = 0;
    std::vector<float> words;  // k rows of `dim` values

    std::span<const float> word(std::size_t j) const { return {words.data() + j * dim, dim}; }
};

enum class Assignment { hard, soft };
enum class Pooling { average, max, max_spm };

inline std::string to_string(Assignment a) { return a == Assignment::hard ? "hard" : "soft"; }
inline std::string to_string(Pooling p) {
    switch (p) {
        case Pooling::average: return "average";
        case Pooling::max: return "max";
        case Pooling::max_spm: return "max-spm";
    }
    return "?";
}

inline Assignment parse_assignment(const std::string& s) {
    if (s == "hard") return Assignment::hard;
    if (s == "soft") return Assignment::soft;
    throw ConfigError("unknown assignment '" + s + "' (expected hard or soft)");
}

inline Pooling parse_pooling(const std::string& s) {
    if (s == "average" || s == "avg") return Pooling::average;
    if (s == "max") return Pooling::max;
    if (s == "max-spm" || s == "max_spm" || s == "maxspm") return Pooling::max_spm;
    throw ConfigError("unknown pooling '" + s + "' (expected average, max or max-spm)");
}

/// Assignment and pooling settings. `levels` are pyramid grid sides (used by max_spm only).
struct BovwConfig {
    Assignment assignment = Assignment::soft;
    double sigma = 150.0;
    Pooling pooling = Pooling::max_spm;
    std::vector<int> levels{1, 2, 4};

    void validate() const {
        if (assignment == Assignment::soft && !(sigma > 0.0)) throw ConfigError("soft assignment needs sigma > 0");
        if (pooling == Pooling::max_spm) {
            if (levels.empty()) throw ConfigError("spatial pyramid needs at least one level");
            for (int g : levels)
                if (g < 1) throw ConfigError("spatial pyramid levels must be >= 1");
        }
    }

    /// Output length for a codebook of size k.
    std::size_t feature_dim(std::size_t k) const {
        if (pooling != Pooling::max_spm) return k;
        std::size_t cells = 0;
        for (int g : levels) cells += static_cast<std::size_t>(g) * g;
        return cells * k;
    }
};

/// Scale applied to descriptors before coding: SIFT-family unit vectors map to [0, 255]
/// (x512, clamped), color histograms stay in [0, 1].
inline double coding_scale(DescriptorKind k) { return k == DescriptorKind::rgb_hist ? 1.0 : 512.0; }

inline void prepare_for_coding(LocalDescriptorSet& set) {
    if (set.kind == DescriptorKind::rgb_hist) return;
    const auto scale = static_cast<float>(coding_scale(set.kind));
    for (float& v : set.data) v = std::min(v * scale, 255.0f);
}

namespace detail {

inline float squared_distance(const float* a, const float* b, std::size_t n) {
    float acc[8] = {};
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        for (int l = 0; l < 8; ++l) {
            const float d = a[i + l] - b[i + l];
            acc[l] += d * d;
        }
    float tail = 0.0f;
    for (; i < n; ++i) {
        const float d = a[i] - b[i];
        tail += d * d;
    }
    return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail;
}

}  // namespace detail

/**
 * @brief Fisher-Yates permutation of [0, n) drawn one element at a time.
 *
 * Only displaced positions are stored, so drawing k of n costs O(k) memory.
 */
class LazyPermutation {
public:
    LazyPermutation(std::size_t n, std::uint64_t seed) : n_(n), rng_(seed) {}

    bool done() const { return next_ >= n_; }

    std::size_t next() {
        const std::size_t j = next_ + static_cast<std::size_t>(uniform_index(rng_, n_ - next_));
        const std::size_t at_i = get(next_), at_j = get(j);
        moved_[j] = at_i;
        ++next_;
        return at_j;
    }

private:
    std::size_t get(std::size_t i) const {
        auto it = moved_.find(i);
        return it == moved_.end() ? i : it->second;
    }

    std::size_t n_;
    std::size_t next_ = 0;
    Rng rng_;
    std::unordered_map<std::size_t, std::size_t> moved_;
};

/**
 * @brief Random-selection codebook over a pool of `n` rows that is read on demand.
 *
 * Rows are drawn uniformly without replacement (seeded); a row identical to an already
 * chosen word is skipped and another is drawn, until k distinct words are found.
 * `fetch(indices, out)` must write the requested rows, in order, into `out`.
 */
template <typename FetchRows>
Codebook build_codebook_lazy(std::size_t n, std::size_t dim, DescriptorKind kind, std::size_t k,
                             std::uint64_t seed, FetchRows&& fetch) {
    if (dim == 0) throw DimensionError("descriptor dimension must be positive");
    if (k < 1) throw ConfigError("codebook size must be >= 1");
    if (n < k)
        throw ConfigError("descriptor pool has " + std::to_string(n) + " rows, fewer than k = " + std::to_string(k));

    Codebook cb{kind, dim, k, seed, {}};
    cb.words.reserve(k * dim);
    LazyPermutation perm(n, seed);
    std::unordered_set<std::string> chosen;
    std::vector<std::size_t> batch;
    std::vector<float> rows;
    std::size_t found = 0;
    while (found < k && !perm.done()) {
        batch.clear();
        while (batch.size() < k - found && !perm.done()) batch.push_back(perm.next());
        rows.assign(batch.size() * dim, 0.0f);
        fetch(std::span<const std::size_t>(batch), rows);
        for (std::size_t b = 0; b < batch.size(); ++b) {
            const float* row = rows.data() + b * dim;
            if (!chosen.emplace(reinterpret_cast<const char*>(row), dim * sizeof(float)).second) continue;
            cb.words.insert(cb.words.end(), row, row + dim);
            ++found;
        }
    }
    if (found < k)
        throw ConfigError("descriptor pool has only " + std::to_string(found) +
                          " distinct rows, fewer than k = " + std::to_string(k));
    return cb;
}

/// Random-selection codebook from an in-memory pool of rows of length `dim`.
inline Codebook build_codebook(std::span<const float> pool, std::size_t dim, DescriptorKind kind,
                               std::size_t k, std::uint64_t seed) {
    if (dim == 0 || pool.size() % dim != 0) throw DimensionError("descriptor pool size is not a multiple of dim");
    return build_codebook_lazy(pool.size() / dim, dim, kind, k, seed,
                               [&](std::span<const std::size_t> idx, std::vector<float>& out) {
                                   for (std::size_t b = 0; b < idx.size(); ++b)
                                       std::copy_n(pool.data() + idx[b] * dim, dim, out.data() + b * dim);
                               });
}

/// Squared Euclidean distance from `desc` to every word.
inline void word_distances(std::span<const float> desc, const Codebook& cb, std::vector<float>& out) {
    if (desc.size() != cb.dim)
        throw DimensionError("descriptor has " + std::to_string(desc.size()) + " values, codebook expects " +
                             std::to_string(cb.dim));
    out.resize(cb.k);
    for (std::size_t j = 0; j < cb.k; ++j) out[j] = detail::squared_distance(desc.data(), cb.words.data() + j * cb.dim, cb.dim);
}

namespace detail {

inline std::size_t nearest(const std::vector<float>& d2) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < d2.size(); ++j)
        if (d2[j] < d2[best]) best = j;
    return best;
}

/// Codeword weights from squared distances, written into `w` (length k).
inline void weights_from_distances(const std::vector<float>& d2, const BovwConfig& cfg, std::vector<double>& w) {
    w.assign(d2.size(), 0.0);
    const std::size_t best = nearest(d2);
    if (cfg.assignment == Assignment::hard) {
        w[best] = 1.0;
        return;
    }
    const double inv = 1.0 / (2.0 * cfg.sigma * cfg.sigma);
    const double shift = d2[best];
    double sum = 0.0;
    for (std::size_t j = 0; j < d2.size(); ++j) {
        w[j] = std::exp(-(static_cast<double>(d2[j]) - shift) * inv);
        sum += w[j];
    }
    if (!(sum > 0.0) || !std::isfinite(sum)) {
        w.assign(d2.size(), 0.0);
        w[best] = 1.0;
        return;
    }
    for (double& v : w) v /= sum;
}

}  // namespace detail

/**
 * @brief Weight vector of one descriptor over the codebook.
 *
 * Hard: one-hot at the nearest word (lowest index on ties). Soft (codeword uncertainty):
 * w_j proportional to exp(-|desc - word_j|^2 / (2 sigma^2)), normalized to sum 1.
 */
inline std::vector<double> assign(std::span<const float> desc, const Codebook& cb, const BovwConfig& cfg) {
    cfg.validate();
    std::vector<float> d2;
    word_distances(desc, cb, d2);
    std::vector<double> w;
    detail::weights_from_distances(d2, cfg, w);
    return w;
}

namespace detail {

/// Pyramid cell of a point for grid side g: floor(g * x / width), clamped to g - 1.
inline int cell_index(double pos, int extent, int g) {
    const int c = static_cast<int>(std::floor(g * pos / extent));
    return std::clamp(c, 0, g - 1);
}

/// Accumulates per-point weights into the pooled vector; shared by pool() and encode().
class Pooler {
public:
    Pooler(std::size_t k, int width, int height, const BovwConfig& cfg)
        : k_(k), width_(width), height_(height), cfg_(cfg), out_(cfg.feature_dim(k), 0.0) {}

    void add(const std::vector<double>& w, const GridPoint& p) {
        if (w.size() != k_) throw DimensionError("assignment length differs from codebook size");
        ++count_;
        switch (cfg_.pooling) {
            case Pooling::average:
                for (std::size_t j = 0; j < k_; ++j) out_[j] += w[j];
                break;
            case Pooling::max:
                for (std::size_t j = 0; j < k_; ++j) out_[j] = std::max(out_[j], w[j]);
                break;
            case Pooling::max_spm: {
                std::size_t base = 0;
                for (int g : cfg_.levels) {
                    const int cx = cell_index(p.x, width_, g), cy = cell_index(p.y, height_, g);
                    double* block = out_.data() + base + (static_cast<std::size_t>(cy) * g + cx) * k_;
                    for (std::size_t j = 0; j < k_; ++j) block[j] = std::max(block[j], w[j]);
                    base += static_cast<std::size_t>(g) * g * k_;
                }
                break;
            }
        }
    }

    std::vector<double> finish() {
        if (count_ == 0) throw LengthError("cannot pool an image without descriptors");
        if (cfg_.pooling == Pooling::average)
            for (double& v : out_) v /= static_cast<double>(count_);
        return std::move(out_);
    }

private:
    std::size_t k_;
    int width_, height_;
    const BovwConfig& cfg_;
    std::vector<double> out_;
    std::size_t count_ = 0;
};

}  // namespace detail

inline std::string bovw_descriptor_id(DescriptorKind kind, std::size_t k, const BovwConfig& cfg) {
    std::string id = "bovw-" + to_string(kind) + "-k" + std::to_string(k) + "-" + to_string(cfg.assignment);
    if (cfg.assignment == Assignment::soft) id += format_double(cfg.sigma);
    id += "-" + to_string(cfg.pooling);
    if (cfg.pooling == Pooling::max_spm) {
        id += "[";
        for (std::size_t i = 0; i < cfg.levels.size(); ++i) id += (i ? "," : "") + std::to_string(cfg.levels[i]);
        id += "]";
    }
    return id;
}

/**
 * @brief Pools per-point codeword weights into one image vector.
 *
 * average/max give k values. max_spm concatenates, for each pyramid level g, the max over
 * the points of each of the g x g cells (row-major), so levels {1,2,4} give 21k values.
 * Empty cells stay zero.
 */
inline FeatureVector pool(const std::vector<std::vector<double>>& assignments, std::span<const GridPoint> points,
                          int width, int height, const BovwConfig& cfg) {
    cfg.validate();
    if (assignments.empty()) throw LengthError("cannot pool an image without descriptors");
    if (assignments.size() != points.size()) throw DimensionError("assignments and points differ in count");
    const std::size_t k = assignments.front().size();
    detail::Pooler pooler(k, width, height, cfg);
    for (std::size_t i = 0; i < assignments.size(); ++i) pooler.add(assignments[i], points[i]);
    return {pooler.finish(), {}};
}

/// assign() + pool() for a whole descriptor set without materializing the assignments.
inline FeatureVector encode(const LocalDescriptorSet& set, const Codebook& cb, const BovwConfig& cfg) {
    cfg.validate();
    if (set.kind != cb.kind)
        throw DimensionError("descriptor kind " + to_string(set.kind) + " does not match codebook kind " + to_string(cb.kind));
    detail::Pooler pooler(cb.k, set.width, set.height, cfg);
    std::vector<float> d2;
    std::vector<double> w;
    for (std::size_t i = 0; i < set.size(); ++i) {
        word_distances(set.row(i), cb, d2);
        detail::weights_from_distances(d2, cfg, w);
        pooler.add(w, set.points[i]);
    }
    return {pooler.finish(), bovw_descriptor_id(set.kind, cb.k, cfg)};
}

/// CSV codebook: a format line, a `kind,dim,k,seed` header and one row per word.
inline void write_codebook(const Codebook& cb, std::ostream& out) {
    out << "rphar-codebook,1\nkind,dim,k,seed\n"
        << to_string(cb.kind) << ',' << cb.dim << ',' << cb.k << ',' << cb.seed << '\n';
    char buf[32];
    for (std::size_t j = 0; j < cb.k; ++j) {
        for (std::size_t i = 0; i < cb.dim; ++i) {
            const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, cb.words[j * cb.dim + i]);
            if (i) out << ',';
            out.write(buf, ptr - buf);
        }
        out << '\n';
    }
}

inline Codebook read_codebook(std::istream& in) {
    std::string line;
    auto next = [&](const char* what) {
        if (!std::getline(in, line)) throw ParseError(std::string("codebook: missing ") + what);
        if (!line.empty() && line.back() == '\r') line.pop_back();
    };
    next("format line");
    if (line != "rphar-codebook,1") throw ParseError("codebook: unsupported format '" + line + "'");
    next("header");
    if (line != "kind,dim,k,seed") throw ParseError("codebook: bad header");
    next("parameters");
    Codebook cb;
    {
        std::stringstream ss(line);
        std::string kind, dim, k, seed;
        std::getline(ss, kind, ',');
        std::getline(ss, dim, ',');
        std::getline(ss, k, ',');
        std::getline(ss, seed, ',');
        try {
            cb.kind = parse_descriptor_kind(kind);
            cb.dim = std::stoull(dim);
            cb.k = std::stoull(k);
            cb.seed = std::stoull(seed);
        } catch (const std::logic_error&) {
            throw ParseError("codebook: bad parameter line '" + line + "'");
        }
    }
    if (cb.dim == 0 || cb.k == 0) throw ParseError("codebook: empty dimensions");
    cb.words.reserve(cb.k * cb.dim);
    for (std::size_t j = 0; j < cb.k; ++j) {
        next("word row");
        const char* p = line.data();
        const char* end = line.data() + line.size();
        for (std::size_t i = 0; i < cb.dim; ++i) {
            float v = 0.0f;
            const auto [ptr, ec] = std::from_chars(p, end, v);
            if (ec != std::errc()) throw ParseError("codebook: bad value in row " + std::to_string(j));
            cb.words.push_back(v);
            p = ptr;
            if (i + 1 < cb.dim) {
                if (p == end || *p != ',') throw ParseError("codebook: short row " + std::to_string(j));
                ++p;
            }
        }
        if (p != end) throw ParseError("codebook: long row " + std::to_string(j));
    }
    return cb;
}

}  // namespace rphar
