#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "dsec/cohort/synthetic.hpp"
#include "dsec/error.hpp"
#include "dsec/eval/compare.hpp"
#include "dsec/eval/forest.hpp"
#include "dsec/eval/roc.hpp"
#include "dsec/eval/svg.hpp"
#include "test_util.hpp"

using namespace dsec;
using namespace dsec::eval;

namespace {

// Tie-corrected Mann–Whitney statistic by comparing every pair.
double pairwise_auc(const std::vector<double>& s, const std::vector<int>& y) {
    double wins = 0, pairs = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (y[i] != 1 || y[j] != 0) continue;
            pairs += 1;
            wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
        }
    }
    return wins / pairs;
}

ComparisonConfig quick_config() {
    ComparisonConfig c;
    c.schedule.pretrain_epochs = 3;
    c.schedule.transfer_epochs = 2;
    c.schedule.cluster_epochs = 3;
    c.forest.n_trees = 10;
    return c;
}

} // namespace

TEST(Roc, PerfectSeparation) {
    const std::vector<double> s{0.1, 0.2, 0.8, 0.9};
    const std::vector<int> y{0, 0, 1, 1};
    EXPECT_EQ(roc_auc(s, y).auc, 1.0);
}

TEST(Roc, ThreeOfFourPairsConcordant) {
    const std::vector<double> s{0.1, 0.4, 0.35, 0.8};
    const std::vector<int> y{0, 0, 1, 1};
    const auto c = roc_auc(s, y);
    EXPECT_DOUBLE_EQ(c.auc, 0.75);
    EXPECT_EQ(c.fpr.front(), 0.0);
    EXPECT_EQ(c.tpr.front(), 0.0);
    EXPECT_EQ(c.thresholds.front(), std::numeric_limits<double>::infinity());
    EXPECT_EQ(c.fpr.back(), 1.0);
    EXPECT_EQ(c.tpr.back(), 1.0);
}

TEST(Roc, MatchesMannWhitneyWithTies) {
    Rng rng(1);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 5 + rng.index(40);
        std::vector<double> s(n);
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = static_cast<double>(rng.index(6)) / 5.0;  // many ties
            y[i] = static_cast<int>(i % 2);
        }
        EXPECT_NEAR(roc_auc(s, y).auc, pairwise_auc(s, y), 1e-12);
    }
}

TEST(Roc, RejectsDegenerateInput) {
    const std::vector<double> s{0.1, 0.2};
    EXPECT_THROW(roc_auc(s, std::vector<int>{1, 1}), DomainError);
    EXPECT_THROW(roc_auc(s, std::vector<int>{0, 2}), DomainError);
    EXPECT_THROW(roc_auc(std::vector<double>{0.1, std::nan("")}, std::vector<int>{0, 1}), DomainError);
    EXPECT_THROW(roc_auc(s, std::vector<int>{0}), ShapeError);
}

TEST(Forest, AxisAlignedSeparationIsLearned) {
    Matrix x(40, 1);
    std::vector<int> y;
    for (std::size_t i = 0; i < 40; ++i) {
        x(i, 0) = static_cast<double>(i) - 19.5;
        y.push_back(x(i, 0) > 0 ? 1 : 0);
    }
    Rng rng(2);
    const auto f = forest_train(x, y, {}, rng);
    EXPECT_EQ(roc_auc(forest_predict(f, x), y).auc, 1.0);
}

TEST(Forest, NoiseLabelsGiveChanceOutOfFold) {
    Rng d(3);
    const Matrix x = test::random_matrix(1000, 5, d);
    std::vector<int> y;
    for (std::size_t i = 0; i < 1000; ++i) y.push_back(d.bernoulli(0.5) ? 1 : 0);
    std::vector<std::size_t> fit, held;
    for (std::size_t i = 0; i < 1000; ++i) (i < 500 ? fit : held).push_back(i);
    std::vector<int> y_fit, y_held;
    for (auto i : fit) y_fit.push_back(y[i]);
    for (auto i : held) y_held.push_back(y[i]);
    Rng rng(4);
    const auto f = forest_train(select_rows(x, fit), y_fit, {}, rng);
    const double auc = roc_auc(forest_predict(f, select_rows(x, held)), y_held).auc;
    EXPECT_GE(auc, 0.4);
    EXPECT_LE(auc, 0.6);
}

TEST(Forest, StumpFindsTheExhaustivelyBestSplit) {
    const Matrix x{{1.0, 5.0}, {2.0, 3.0}, {3.0, 4.0}, {4.0, 1.0}};
    const std::vector<int> y{0, 1, 0, 1};
    // Exhaustive search over both features and every midpoint threshold.
    double best = 1e9;
    int best_feature = -1;
    double best_threshold = 0;
    for (int f = 0; f < 2; ++f) {
        std::vector<double> v;
        for (std::size_t i = 0; i < 4; ++i) v.push_back(x(i, static_cast<std::size_t>(f)));
        std::sort(v.begin(), v.end());
        for (std::size_t k = 0; k + 1 < v.size(); ++k) {
            const double t = (v[k] + v[k + 1]) / 2;
            std::array<std::size_t, 2> l{0, 0}, r{0, 0};
            for (std::size_t i = 0; i < 4; ++i) (x(i, static_cast<std::size_t>(f)) <= t ? l : r)[static_cast<std::size_t>(y[i])]++;
            const double g = split_gini(l, r);
            if (g < best - 1e-12) best = g, best_feature = f, best_threshold = t;
        }
    }
    ForestOptions opt;
    opt.max_depth = 1;
    opt.max_features = 2;
    opt.bootstrap = false;
    Rng rng(5);
    const auto tree = grow_tree(x, y, {0, 1, 2, 3}, opt, rng);
    ASSERT_EQ(tree.nodes.size(), 3u);
    EXPECT_EQ(tree.nodes[0].feature, best_feature);
    EXPECT_DOUBLE_EQ(tree.nodes[0].threshold, best_threshold);
    EXPECT_EQ(tree.depth(), 1u);
}

TEST(Forest, GiniOfPureAndMixedSplits) {
    EXPECT_EQ(split_gini({3, 0}, {0, 5}), 0.0);
    EXPECT_DOUBLE_EQ(split_gini({1, 1}, {1, 1}), 0.5);
}

TEST(Forest, SeededAndNeedsBothClasses) {
    Rng d(6);
    const Matrix x = test::random_matrix(60, 3, d);
    std::vector<int> y;
    for (std::size_t i = 0; i < 60; ++i) y.push_back(x(i, 0) + 0.3 * x(i, 1) > 0 ? 1 : 0);
    Rng a(7), b(7);
    EXPECT_EQ(forest_predict(forest_train(x, y, {}, a), x), forest_predict(forest_train(x, y, {}, b), x));
    std::vector<int> one(60, 0);
    one[0] = 1;
    Rng c(8);
    EXPECT_THROW(forest_train(x, one, {}, c), DomainError);
}

TEST(Compare, ReferenceValuesAreExposed) {
    EXPECT_EQ(kReferenceAucDsec, 0.84);
    EXPECT_EQ(kReferenceAucDecRf, 0.73);
    EXPECT_EQ(kReferenceAucPcaRf, 0.66);
}

TEST(Compare, ReportIsReproducible) {
    auto spec = cohort::default_synthetic_spec(11);
    spec.n_patients = 300;
    const auto m = cohort::generate_synthetic_cohort(spec);
    const auto a = compare_methods(m, quick_config(), 5);
    const auto b = compare_methods(m, quick_config(), 5);
    EXPECT_EQ(a.test.dsec.auc, b.test.dsec.auc);
    EXPECT_EQ(a.test.dsec.tpr, b.test.dsec.tpr);
    EXPECT_EQ(a.test.dec_rf.auc, b.test.dec_rf.auc);
    EXPECT_EQ(a.test.pca_rf.auc, b.test.pca_rf.auc);
    EXPECT_EQ(a.n_train + a.n_test, 300u);
    EXPECT_EQ(a.n_test, 76u);  // 37.5 per class rounds to 38
}

TEST(Compare, CrossValidationReportsEveryFold) {
    auto spec = cohort::default_synthetic_spec(12);
    spec.n_patients = 300;
    auto config = quick_config();
    config.cross_validate = true;
    config.split.n_folds = 3;
    const auto r = compare_methods(cohort::generate_synthetic_cohort(spec), config, 6);
    ASSERT_EQ(r.folds.size(), 3u);
    for (const auto& f : r.folds) {
        EXPECT_GE(f.auc_dsec, 0.0);
        EXPECT_LE(f.auc_dsec, 1.0);
    }
}

TEST(Compare, NullCohortGivesChanceForEveryMethod) {
    const auto m = cohort::generate_synthetic_cohort(cohort::null_synthetic_spec(13));
    const auto r = compare_methods(m, ComparisonConfig{}, 13);
    for (double auc : {r.test.dsec.auc, r.test.dec_rf.auc, r.test.pca_rf.auc}) {
        EXPECT_GE(auc, 0.4);
        EXPECT_LE(auc, 0.6);
    }
}

TEST(Compare, NullCohortDefeatsARawFeatureClassifier) {
    auto spec = cohort::null_synthetic_spec(14);
    spec.n_patients = 8000;
    const auto m = cohort::generate_synthetic_cohort(spec);
    std::vector<std::size_t> train, test;
    for (std::size_t i = 0; i < m.rows(); ++i) (i % 4 == 0 ? test : train).push_back(i);
    const auto data = prepare_data(m, train, test);
    ForestOptions opt;
    opt.n_trees = 50;
    Rng rng(15);
    const auto f = forest_train(data.train, data.y_train, opt, rng);
    const double auc = roc_auc(forest_predict(f, data.test), data.y_test).auc;
    EXPECT_GE(auc, 0.45);
    EXPECT_LE(auc, 0.55);
}

TEST(Svg, RocAndScatterAreWellFormed) {
    const std::vector<double> s{0.1, 0.4, 0.35, 0.8};
    const std::vector<int> y{0, 0, 1, 1};
    const std::vector<NamedCurve> curves{{"A <b>", roc_auc(s, y)}};
    std::ostringstream roc;
    write_roc_svg(roc, curves, "t & u");
    const auto text = roc.str();
    EXPECT_EQ(text.rfind("<svg", 0), 0u);
    EXPECT_NE(text.find("</svg>"), std::string::npos);
    EXPECT_NE(text.find("A &lt;b&gt;"), std::string::npos);
    EXPECT_NE(text.find("t &amp; u"), std::string::npos);
    EXPECT_NE(text.find("0.750"), std::string::npos);
    std::ostringstream scatter;
    write_scatter_svg(scatter, Matrix{{0, 1}, {2, 3}, {1, 1}}, std::vector<int>{0, 1, 1}, "p");
    const auto points = scatter.str();
    std::size_t circles = 0;
    for (auto pos = points.find("<circle"); pos != std::string::npos; pos = points.find("<circle", pos + 1)) ++circles;
    EXPECT_GE(circles, 3u);
}
