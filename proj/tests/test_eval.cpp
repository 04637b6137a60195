#include <gtest/gtest.h>

#include <set>

#include "rphar/eval.hpp"
#include "support.hpp"

using namespace rphar;
using testing_support::Gen;
using testing_support::TempDir;

namespace {

RunOptions quiet(unsigned jobs = 2) {
    RunOptions o;
    o.jobs = jobs;
    o.log = nullptr;
    return o;
}

Dataset sized_dataset(const std::vector<std::size_t>& sizes, std::size_t length = 20, std::uint64_t seed = 1) {
    Gen g(seed);
    std::vector<SensorSample> v;
    for (std::size_t c = 0; c < sizes.size(); ++c)
        for (std::size_t i = 0; i < sizes[c]; ++i)
            v.push_back(testing_support::synthetic_sample("k" + std::to_string(10 + c), static_cast<int>(c),
                                                          static_cast<int>(i), length, g));
    return Dataset::from_samples(std::move(v));
}

MethodSpec small_bovw() {
    MethodSpec m;
    m.kind = MethodSpec::Kind::bovw;
    m.variant = RpVariant::rgb;
    m.descriptor = DescriptorKind::rgb_sift;
    m.codebook_size = 40;
    return m;
}

}  // namespace

TEST(Splits, TwelveClassDataset) {
    // 884 samples over 12 classes.
    const std::vector<std::size_t> sizes{100, 12, 42, 100, 56, 100, 101, 100, 20, 100, 13, 140};
    std::size_t total = 0;
    for (auto s : sizes) total += s;
    ASSERT_EQ(total, 884u);
    const Dataset ds = sized_dataset(sizes, 4);
    const SplitPlan plan = make_splits(ds, 10, 10, 1);
    ASSERT_EQ(plan.runs.size(), 10u);
    for (const auto& r : plan.runs) {
        EXPECT_EQ(r.train.size(), 120u);
        EXPECT_EQ(r.test.size(), 764u);
    }
}

TEST(Splits, PropertiesOnRandomDatasets) {
    Gen g(61);
    for (int c = 0; c < 200; ++c) {
        const std::size_t classes = g.index(2, 8), per = g.index(1, 6);
        std::vector<std::size_t> sizes(classes);
        for (auto& s : sizes) s = g.index(per + 1, per + 15);
        const Dataset ds = sized_dataset(sizes, 4, c);
        const SplitPlan plan = make_splits(ds, per, g.index(1, 4), g.rng());
        for (const auto& run : plan.runs) {
            std::set<std::size_t> tr(run.train.begin(), run.train.end()), te(run.test.begin(), run.test.end());
            ASSERT_EQ(tr.size(), run.train.size());
            ASSERT_EQ(tr.size() + te.size(), ds.samples.size());
            for (auto i : tr) ASSERT_FALSE(te.contains(i));
            std::vector<std::size_t> per_class(classes, 0);
            for (auto i : run.train) ++per_class[ds.class_index(ds.samples[i].label)];
            for (auto n : per_class) ASSERT_EQ(n, per);
        }
    }
}

TEST(Splits, DeterministicSeededAndBounded) {
    const Dataset ds = sized_dataset({15, 12, 20}, 4);
    const SplitPlan a = make_splits(ds, 10, 5, 3), b = make_splits(ds, 10, 5, 3), c = make_splits(ds, 10, 5, 4);
    EXPECT_EQ(a.fingerprint, b.fingerprint);
    for (std::size_t r = 0; r < 5; ++r) EXPECT_EQ(a.runs[r].train, b.runs[r].train);
    EXPECT_NE(a.fingerprint, c.fingerprint);
    EXPECT_NE(a.runs[0].train, a.runs[1].train);
    try {
        make_splits(ds, 12, 1, 0);
        FAIL();
    } catch (const ProtocolError& e) {
        EXPECT_NE(std::string(e.what()).find("k11"), std::string::npos);
        EXPECT_EQ(e.exit_code(), 3);
    }
    EXPECT_NO_THROW(make_splits(ds, 11, 1, 0));
}

TEST(RunExperiment, SeparableBaselineIsPerfect) {
    // Class means at the origin and on the three axes.
    Gen g(62);
    std::vector<SensorSample> v;
    for (int c = 0; c < 4; ++c)
        for (int i = 0; i < 14; ++i) {
            SensorSample s;
            s.label = "c" + std::to_string(10 + c);
            s.id = s.label + "_" + std::to_string(i);
            const double centre[3] = {c == 0 ? 10.0 : 0.0, c == 1 ? 10.0 : 0.0, c == 2 ? 10.0 : 0.0};
            for (int a = 0; a < 3; ++a)
                for (int t = 0; t < 30; ++t) s.axes[a].push_back(centre[a] + 0.05 * g.normal());
            v.push_back(s);
        }
    const Dataset ds = Dataset::from_samples(v);
    MethodSpec m;
    m.kind = MethodSpec::Kind::baseline;
    m.baseline = BaselineKind::mean;
    const EvalReport rep = run_experiment(ds, m, make_splits(ds, 10, 10, 1), quiet());
    EXPECT_EQ(rep.mean_accuracy, 1.0);
    ASSERT_TRUE(rep.half_width.has_value());
    EXPECT_EQ(*rep.half_width, 0.0);
    EXPECT_EQ(rep.feature_dim, 3u);
    EXPECT_EQ(rep.method_id, "mean");
}

TEST(RunExperiment, ConfusionInvariantsAndDeterminism) {
    const Dataset ds = testing_support::synthetic_dataset(3, 14, 40, 90, 5);
    const MethodSpec m = small_bovw();
    const SplitPlan plan = make_splits(ds, 10, 3, 7);
    const EvalReport a = run_experiment(ds, m, plan, quiet(1));
    const EvalReport b = run_experiment(ds, m, plan, quiet(4));
    EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
    EXPECT_EQ(a.feature_dim, 21u * 40u);
    for (std::size_t r = 0; r < plan.runs.size(); ++r) {
        const auto& run = a.runs[r];
        std::vector<std::size_t> test_per_class(3, 0);
        for (auto i : plan.runs[r].test) ++test_per_class[ds.class_index(ds.samples[i].label)];
        std::size_t total = 0;
        for (std::size_t c = 0; c < 3; ++c) {
            std::size_t row = 0;
            for (auto v : run.confusion[c]) row += v;
            EXPECT_EQ(row, test_per_class[c]);
            total += row;
        }
        EXPECT_EQ(total, run.predictions.size());
        EXPECT_GE(run.normalized_accuracy, 0.0);
        EXPECT_LE(run.normalized_accuracy, 1.0);
    }
    EXPECT_GT(a.mean_accuracy, 0.6);
}

TEST(RunExperiment, DiskCacheAndMemoBudgetDoNotChangeResults) {
    TempDir dir("cache");
    const Dataset ds = testing_support::synthetic_dataset(2, 12, 40, 70, 6);
    const MethodSpec m = small_bovw();
    const SplitPlan plan = make_splits(ds, 10, 2, 1);
    const EvalReport plain = run_experiment(ds, m, plan, quiet());
    RunOptions opt = quiet();
    opt.cache_dir = dir.path();
    opt.memo_budget_bytes = 0;
    const EvalReport cold = run_experiment(ds, m, plan, opt);
    std::size_t files = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir.path())) files += e.path().extension() == ".rphd";
    EXPECT_EQ(files, ds.samples.size());
    const EvalReport warm = run_experiment(ds, m, plan, opt);
    EXPECT_EQ(to_json(plain).dump(), to_json(cold).dump());
    EXPECT_EQ(to_json(plain).dump(), to_json(warm).dump());
}

TEST(RunExperiment, TooShortSamplesAreExcluded) {
    Dataset ds = testing_support::synthetic_dataset(2, 13, 40, 60, 8);
    ds.samples[0].axes = {{{1, 2, 3, 4, 5}, {1, 2, 3, 4, 5}, {1, 2, 3, 4, 5}}};  // plot of 3x3
    const std::string short_id = ds.samples[0].id;
    std::vector<std::string> logged;
    RunOptions opt = quiet();
    opt.log = [&](const std::string& s) { logged.push_back(s); };
    const SplitPlan plan = make_splits(ds, 10, 2, 1);
    const EvalReport rep = run_experiment(ds, small_bovw(), plan, opt);
    for (const auto& run : rep.runs) {
        ASSERT_EQ(run.excluded_ids.size(), 1u);
        EXPECT_EQ(run.excluded_ids[0], short_id);
    }
    ASSERT_FALSE(logged.empty());
    EXPECT_NE(logged[0].find(short_id), std::string::npos);
}

TEST(Report, SingleRunHasNoInterval) {
    const Dataset ds = testing_support::synthetic_dataset(2, 12, 30, 40, 9);
    MethodSpec m;
    m.kind = MethodSpec::Kind::baseline;
    const EvalReport rep = run_experiment(ds, m, make_splits(ds, 10, 1, 1), quiet());
    EXPECT_TRUE(rep.single_run());
    EXPECT_FALSE(rep.half_width.has_value());
    EXPECT_NE(text_summary(rep).find("single run"), std::string::npos);
    EXPECT_NE(accuracy_table(rep).find("ci95_half_width,NA"), std::string::npos);
}

TEST(Report, JsonRoundTripAndTable) {
    const Dataset ds = testing_support::synthetic_dataset(3, 13, 30, 50, 10);
    MethodSpec m;
    m.kind = MethodSpec::Kind::baseline;
    m.baseline = BaselineKind::fftbands;
    EvalReport rep = run_experiment(ds, m, make_splits(ds, 10, 4, 2), quiet());
    rep.config_hash = "0123456789abcdef";
    const EvalReport back = report_from_json(nlohmann::json::parse(to_json(rep).dump()));
    EXPECT_EQ(to_json(back).dump(), to_json(rep).dump());
    EXPECT_EQ(accuracy_table(back), accuracy_table(rep));
    const std::string table = accuracy_table(rep);
    EXPECT_EQ(table.substr(0, table.find('\n')), "run,normalized_accuracy,class_a,class_b,class_c");
    EXPECT_THROW(report_from_json(nlohmann::json{{"format", "rphar-report"}}), ParseError);
}

TEST(PairedClassTest, IdentityAndPlanMismatch) {
    const Dataset ds = testing_support::synthetic_dataset(3, 13, 30, 50, 11);
    MethodSpec q;
    q.kind = MethodSpec::Kind::baseline;
    q.baseline = BaselineKind::quantile;
    MethodSpec f = q;
    f.baseline = BaselineKind::rms;
    const SplitPlan plan = make_splits(ds, 10, 4, 2);
    const EvalReport a = run_experiment(ds, q, plan, quiet());
    const EvalReport b = run_experiment(ds, f, plan, quiet());
    EXPECT_EQ(paired_class_test(a, a).verdict, Verdict::no_difference);
    EXPECT_EQ(paired_class_test(a, a).difference.mean, 0.0);
    const PairedResult ab = paired_class_test(a, b);
    const auto ma = a.class_mean_accuracy(), mb = b.class_mean_accuracy();
    double mean = 0.0;
    for (std::size_t c = 0; c < 3; ++c) mean += (ma[c] - mb[c]) / 3.0;
    EXPECT_NEAR(ab.difference.mean, mean, 1e-12);

    const EvalReport other_seed = run_experiment(ds, f, make_splits(ds, 10, 4, 3), quiet());
    EXPECT_THROW(paired_class_test(a, other_seed), ProtocolError);
    EvalReport renamed = b;
    renamed.classes[0] = "zzz";
    EXPECT_THROW(paired_class_test(a, renamed), ProtocolError);
}
