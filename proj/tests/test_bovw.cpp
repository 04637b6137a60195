#include <gtest/gtest.h>

#include <numeric>
#include <set>
#include <sstream>

#include "rphar/bovw.hpp"
#include "rphar/rp.hpp"
#include "support.hpp"

using namespace rphar;
using testing_support::Gen;

namespace {

Codebook random_codebook(std::size_t k, std::size_t dim, Gen& g, double spread = 255.0) {
    Codebook cb{DescriptorKind::sift, dim, k, 0, {}};
    for (std::size_t i = 0; i < k * dim; ++i) cb.words.push_back(static_cast<float>(g.uniform(0.0, spread)));
    return cb;
}

std::vector<float> random_desc(std::size_t dim, Gen& g, double spread = 255.0) {
    std::vector<float> d(dim);
    for (auto& v : d) v = static_cast<float>(g.uniform(0.0, spread));
    return d;
}

/// Eager Fisher-Yates over the full pool with the same draw rule, skipping repeated rows.
std::vector<float> codebook_oracle(const std::vector<float>& pool, std::size_t dim, std::size_t k, std::uint64_t seed) {
    const std::size_t n = pool.size() / dim;
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(seed);
    std::vector<float> words;
    std::set<std::vector<float>> seen;
    for (std::size_t i = 0; i < n && seen.size() < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(uniform_index(rng, n - i));
        std::swap(perm[i], perm[j]);
        std::vector<float> row(pool.begin() + perm[i] * dim, pool.begin() + (perm[i] + 1) * dim);
        if (seen.insert(row).second) words.insert(words.end(), row.begin(), row.end());
    }
    return words;
}

struct Scene {
    std::vector<std::vector<double>> assignments;
    std::vector<GridPoint> points;
    int width, height;
};

Scene random_scene(Gen& g, std::size_t k) {
    Scene s;
    s.width = static_cast<int>(g.index(16, 120));
    s.height = static_cast<int>(g.index(16, 120));
    s.points = dense_grid(s.width, s.height, GridSpec{});
    for (std::size_t i = 0; i < s.points.size(); ++i) {
        std::vector<double> w(k);
        double sum = 0.0;
        for (auto& v : w) sum += (v = g.uniform(0.0, 1.0));
        for (auto& v : w) v /= sum;
        s.assignments.push_back(w);
    }
    return s;
}

}  // namespace

TEST(Codebook, LazyMatchesEagerOracle) {
    Gen g(21);
    for (int c = 0; c < 200; ++c) {
        const std::size_t dim = g.index(1, 6), n = g.index(1, 300);
        std::vector<float> pool(n * dim);
        // Few distinct values so duplicates are common.
        for (auto& v : pool) v = static_cast<float>(g.index(0, c % 2 ? 3 : 50));
        const std::size_t k = g.index(1, n);
        const std::uint64_t seed = g.rng();
        const auto ref = codebook_oracle(pool, dim, k, seed);
        if (ref.size() < k * dim) {
            EXPECT_THROW(build_codebook(pool, dim, DescriptorKind::sift, k, seed), ConfigError);
            continue;
        }
        const Codebook cb = build_codebook(pool, dim, DescriptorKind::sift, k, seed);
        ASSERT_EQ(cb.words, ref) << c;
        EXPECT_EQ(cb.k, k);
        EXPECT_EQ(cb.seed, seed);
    }
}

TEST(Codebook, ForcedSelectionDeterminismAndMembership) {
    Gen g(22);
    const std::size_t dim = 4;
    std::vector<float> pool;
    for (int i = 0; i < 10; ++i)
        for (std::size_t d = 0; d < dim; ++d) pool.push_back(static_cast<float>(i * 10 + d));
    const Codebook cb = build_codebook(pool, dim, DescriptorKind::sift, 10, 5);
    std::set<std::vector<float>> got, want;
    for (std::size_t j = 0; j < 10; ++j) {
        got.emplace(cb.word(j).begin(), cb.word(j).end());
        want.emplace(pool.begin() + j * dim, pool.begin() + (j + 1) * dim);
    }
    EXPECT_EQ(got, want);
    EXPECT_EQ(build_codebook(pool, dim, DescriptorKind::sift, 10, 5).words, cb.words);
    EXPECT_NE(build_codebook(pool, dim, DescriptorKind::sift, 10, 6).words, cb.words);
    EXPECT_THROW(build_codebook(pool, dim, DescriptorKind::sift, 11, 5), ConfigError);
    EXPECT_THROW(build_codebook(pool, 3, DescriptorKind::sift, 2, 5), DimensionError);

    // 10^5 rows, k = 1000: every word is a pool row and all are distinct.
    const std::size_t n = 100000, d2 = 8;
    std::vector<float> big(n * d2);
    for (auto& v : big) v = static_cast<float>(g.index(0, 255));
    const Codebook bcb = build_codebook(big, d2, DescriptorKind::sift, 1000, 9);
    std::set<std::vector<float>> rows, words;
    for (std::size_t i = 0; i < n; ++i) rows.emplace(big.begin() + i * d2, big.begin() + (i + 1) * d2);
    for (std::size_t j = 0; j < 1000; ++j) words.emplace(bcb.word(j).begin(), bcb.word(j).end());
    EXPECT_EQ(words.size(), 1000u);
    for (const auto& w : words) EXPECT_TRUE(rows.contains(w));
}

TEST(Codebook, CsvRoundTrip) {
    Gen g(23);
    Codebook cb = random_codebook(7, 5, g);
    cb.kind = DescriptorKind::opponent_sift;
    cb.seed = 12345678901234ULL;
    std::stringstream ss;
    write_codebook(cb, ss);
    const Codebook back = read_codebook(ss);
    EXPECT_EQ(back.kind, cb.kind);
    EXPECT_EQ(back.dim, cb.dim);
    EXPECT_EQ(back.k, cb.k);
    EXPECT_EQ(back.seed, cb.seed);
    EXPECT_EQ(back.words, cb.words);

    std::stringstream bad("rphar-codebook,1\nkind,dim,k,seed\nsift,2,1,0\n1,2,3\n");
    EXPECT_THROW(read_codebook(bad), ParseError);
    std::stringstream wrong("something else\n");
    EXPECT_THROW(read_codebook(wrong), ParseError);
}

TEST(Assign, HardExactMatchAndTies) {
    Codebook cb{DescriptorKind::sift, 2, 5, 0, {0, 0, 100, 0, 0, 100, 100, 100, 50, 50}};
    BovwConfig hard;
    hard.assignment = Assignment::hard;
    const std::vector<float> w3{100, 100};
    const auto a = assign(w3, cb, hard);
    EXPECT_EQ(a, (std::vector<double>{0, 0, 0, 1, 0}));
    const std::vector<float> mid{50, 0};  // equidistant from words 0 and 1
    EXPECT_EQ(assign(mid, cb, hard)[0], 1.0);
    const std::vector<float> wrong{1, 2, 3};
    EXPECT_THROW(assign(wrong, cb, hard), DimensionError);
}

TEST(Assign, SoftSymmetricPair) {
    Codebook cb{DescriptorKind::sift, 2, 3, 0, {0, 0, 10, 0, 5000, 5000}};
    BovwConfig soft;
    soft.sigma = 150;
    const std::vector<float> mid{5, 0};
    const auto w = assign(mid, cb, soft);
    EXPECT_NEAR(w[0], 0.5, 1e-12);
    EXPECT_NEAR(w[1], 0.5, 1e-12);
    EXPECT_LT(w[2], 1e-12);
}

TEST(Assign, SoftSumsToOneAndArgmaxIsHard) {
    Gen g(24);
    BovwConfig soft, hard;
    hard.assignment = Assignment::hard;
    for (int c = 0; c < 1000; ++c) {
        const std::size_t k = g.index(1, 40), dim = g.index(1, 16);
        const Codebook cb = random_codebook(k, dim, g);
        soft.sigma = std::pow(10.0, g.uniform(-1.0, 3.0));
        const auto d = random_desc(dim, g);
        const auto w = assign(d, cb, soft);
        const auto h = assign(d, cb, hard);
        double sum = 0.0;
        for (double v : w) {
            ASSERT_GE(v, 0.0);
            sum += v;
        }
        ASSERT_NEAR(sum, 1.0, 1e-9);
        std::vector<float> d2;
        word_distances(d, cb, d2);
        const std::size_t hard_j = std::max_element(h.begin(), h.end()) - h.begin();
        const std::size_t soft_j = std::max_element(w.begin(), w.end()) - w.begin();
        const bool tied = std::count(d2.begin(), d2.end(), d2[hard_j]) > 1;
        if (!tied) {
            ASSERT_EQ(soft_j, hard_j) << c;
        }
    }
}

TEST(Assign, TinySigmaCollapsesToHard) {
    Gen g(25);
    const Codebook cb = random_codebook(20, 8, g);
    BovwConfig soft, hard;
    soft.sigma = 1e-6;
    hard.assignment = Assignment::hard;
    for (int c = 0; c < 50; ++c) {
        const auto d = random_desc(8, g);
        EXPECT_EQ(assign(d, cb, soft), assign(d, cb, hard));
    }
    soft.sigma = 0.0;
    EXPECT_THROW(assign(random_desc(8, g), cb, soft), ConfigError);
}

TEST(Pool, DimensionsAndSinglePoint) {
    BovwConfig cfg;
    EXPECT_EQ(cfg.feature_dim(1000), 21000u);
    cfg.pooling = Pooling::max;
    EXPECT_EQ(cfg.feature_dim(1000), 1000u);
    const std::vector<std::vector<double>> one{{0, 0, 1, 0}};
    const std::vector<GridPoint> pt{{0, 0, 8, 8}};
    for (auto p : {Pooling::average, Pooling::max}) {
        cfg.pooling = p;
        EXPECT_EQ(pool(one, pt, 16, 16, cfg).values, one[0]);
    }
    cfg.pooling = Pooling::max_spm;
    const auto spm = pool(one, pt, 16, 16, cfg).values;
    EXPECT_EQ(spm.size(), 84u);
    EXPECT_EQ(spm[2], 1.0);
    // Point at the image center falls in cell (1,1) of the 2x2 level and (2,2) of the 4x4 level.
    EXPECT_EQ(spm[4 + 3 * 4 + 2], 1.0);
    EXPECT_EQ(spm[20 + (2 * 4 + 2) * 4 + 2], 1.0);
    EXPECT_DOUBLE_EQ(std::accumulate(spm.begin(), spm.end(), 0.0), 3.0);
    EXPECT_THROW(pool({}, {}, 16, 16, cfg), LengthError);
}

TEST(Pool, CellIndexBoundaries) {
    EXPECT_EQ(detail::cell_index(0.0, 100, 4), 0);
    EXPECT_EQ(detail::cell_index(25.0, 100, 4), 1);
    EXPECT_EQ(detail::cell_index(24.999, 100, 4), 0);
    EXPECT_EQ(detail::cell_index(100.0, 100, 4), 3);
    EXPECT_EQ(detail::cell_index(50.0, 100, 2), 1);
}

TEST(Pool, EmptyCellsStayZero) {
    BovwConfig cfg;
    cfg.levels = {2};
    const std::vector<std::vector<double>> w{{1, 0}, {0.5, 0.5}};
    const std::vector<GridPoint> pts{{0, 0, 8, 8}, {0, 6, 8, 14}};  // both in the top-left quarter of 64x64
    const auto v = pool(w, pts, 64, 64, cfg).values;
    EXPECT_EQ(v, (std::vector<double>{1, 0.5, 0, 0, 0, 0, 0, 0}));
}

TEST(Pool, Level1BlockEqualsMaxPoolingBitExact) {
    Gen g(26);
    BovwConfig spm, mx;
    mx.pooling = Pooling::max;
    for (int c = 0; c < 1000; ++c) {
        const std::size_t k = g.index(1, 30);
        const Scene s = random_scene(g, k);
        const auto a = pool(s.assignments, s.points, s.width, s.height, spm).values;
        const auto b = pool(s.assignments, s.points, s.width, s.height, mx).values;
        ASSERT_TRUE(std::equal(b.begin(), b.end(), a.begin()));
    }
}

TEST(Pool, OrderInvariant) {
    Gen g(27);
    for (int c = 0; c < 1000; ++c) {
        const std::size_t k = g.index(1, 20);
        Scene s = random_scene(g, k);
        BovwConfig cfg;
        cfg.pooling = static_cast<Pooling>(c % 3);
        const auto before = pool(s.assignments, s.points, s.width, s.height, cfg).values;
        std::vector<std::size_t> order(s.points.size());
        std::iota(order.begin(), order.end(), 0);
        Rng rng(c);
        shuffle(order, rng);
        Scene t;
        for (auto i : order) {
            t.assignments.push_back(s.assignments[i]);
            t.points.push_back(s.points[i]);
        }
        const auto after = pool(t.assignments, t.points, s.width, s.height, cfg).values;
        ASSERT_EQ(before.size(), after.size());
        for (std::size_t i = 0; i < before.size(); ++i) {
            if (cfg.pooling == Pooling::average) {
                ASSERT_NEAR(before[i], after[i], 1e-12);
            } else {
                ASSERT_EQ(before[i], after[i]);
            }
        }
        for (double v : after) {
            ASSERT_GE(v, 0.0);
            ASSERT_LE(v, 1.0 + 1e-12);
        }
    }
}

TEST(Pool, WordPermutationEquivariant) {
    Gen g(28);
    for (int c = 0; c < 100; ++c) {
        const std::size_t k = g.index(2, 12), dim = 6;
        const Codebook cb = random_codebook(k, dim, g);
        std::vector<std::size_t> perm(k);
        std::iota(perm.begin(), perm.end(), 0);
        Rng rng(c);
        shuffle(perm, rng);
        Codebook pcb = cb;
        for (std::size_t j = 0; j < k; ++j)
            std::copy_n(cb.words.begin() + perm[j] * dim, dim, pcb.words.begin() + j * dim);
        LocalDescriptorSet set;
        set.width = set.height = 40;
        set.kind = DescriptorKind::sift;
        set.dim = dim;
        set.points = dense_grid(40, 40, GridSpec{});
        for (std::size_t i = 0; i < set.points.size(); ++i) {
            const auto d = random_desc(dim, g);
            set.data.insert(set.data.end(), d.begin(), d.end());
        }
        BovwConfig cfg;
        cfg.pooling = static_cast<Pooling>(c % 3);
        cfg.levels = {1, 2};
        const auto a = encode(set, cb, cfg).values, b = encode(set, pcb, cfg).values;
        const std::size_t blocks = a.size() / k;
        for (std::size_t blk = 0; blk < blocks; ++blk)
            for (std::size_t j = 0; j < k; ++j) ASSERT_NEAR(b[blk * k + j], a[blk * k + perm[j]], 1e-12);
    }
}

TEST(Encode, EqualsAssignThenPool) {
    Gen g(29);
    const SensorSample s = testing_support::synthetic_sample("walk", 2, 0, 80, g);
    LocalDescriptorSet set = extract_descriptors(rp_rgb(s, RpConfig{}), DescriptorKind::rgb_sift);
    prepare_for_coding(set);
    const Codebook cb = build_codebook(set.data, set.dim, set.kind, 20, 3);
    for (auto p : {Pooling::average, Pooling::max, Pooling::max_spm})
        for (auto a : {Assignment::hard, Assignment::soft}) {
            BovwConfig cfg;
            cfg.pooling = p;
            cfg.assignment = a;
            std::vector<std::vector<double>> ws;
            for (std::size_t i = 0; i < set.size(); ++i) ws.push_back(assign(set.row(i), cb, cfg));
            const auto ref = pool(ws, set.points, set.width, set.height, cfg);
            const auto got = encode(set, cb, cfg);
            EXPECT_EQ(got.values, ref.values);
            EXPECT_EQ(got.values.size(), cfg.feature_dim(20));
        }
    Codebook other = cb;
    other.kind = DescriptorKind::sift;
    EXPECT_THROW(encode(set, other, BovwConfig{}), DimensionError);
}

TEST(Coding, ScaleAndClamp) {
    LocalDescriptorSet set;
    set.kind = DescriptorKind::sift;
    set.data = {0.0f, 0.1f, 0.2f, 0.6f};
    prepare_for_coding(set);
    EXPECT_FLOAT_EQ(set.data[1], 51.2f);
    EXPECT_FLOAT_EQ(set.data[2], 102.4f);
    EXPECT_FLOAT_EQ(set.data[3], 255.0f);
    set.kind = DescriptorKind::rgb_hist;
    set.data = {0.25f};
    prepare_for_coding(set);
    EXPECT_EQ(set.data[0], 0.25f);
}

TEST(BovwConfig, ParseAndValidate) {
    EXPECT_EQ(parse_pooling("max-spm"), Pooling::max_spm);
    EXPECT_EQ(parse_pooling("average"), Pooling::average);
    EXPECT_EQ(parse_assignment("hard"), Assignment::hard);
    EXPECT_THROW(parse_pooling("sum"), ConfigError);
    EXPECT_THROW(parse_assignment("fuzzy"), ConfigError);
    BovwConfig cfg;
    cfg.levels = {};
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg.levels = {1, 0};
    EXPECT_THROW(cfg.validate(), ConfigError);
    EXPECT_EQ(bovw_descriptor_id(DescriptorKind::rgb_sift, 1000, BovwConfig{}), "bovw-rgb-sift-k1000-soft150-max-spm[1,2,4]");
}
