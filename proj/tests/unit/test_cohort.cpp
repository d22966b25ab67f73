#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "dsec/cohort/admissions.hpp"
#include "dsec/cohort/csv.hpp"
#include "dsec/cohort/patient_matrix.hpp"
#include "dsec/cohort/propensity.hpp"
#include "dsec/cohort/split.hpp"
#include "dsec/cohort/synthetic.hpp"
#include "dsec/error.hpp"
#include "test_util.hpp"

using namespace dsec;
using namespace dsec::cohort;

namespace {

// n patients × 13 features, all present, alternating labels.
PatientMatrix dense_matrix(std::size_t n) {
    PatientMatrix m;
    m.feature_names = default_feature_names();
    const std::size_t d = m.feature_names.size();
    m.features = Matrix(n, d);
    m.mask.assign(n * d, 1);
    for (std::size_t i = 0; i < n; ++i) {
        m.patient_ids.push_back("P" + std::to_string(1000 + i));
        m.labels.push_back(static_cast<int>(i % 2));
        m.codes.push_back({});
        m.age.push_back(60);
        m.sex.push_back(0);
        m.subgroup.push_back(-1);
        for (std::size_t j = 0; j < d; ++j) m.features(i, j) = static_cast<double>(i + j);
    }
    return m;
}

void drop(PatientMatrix& m, std::size_t r, std::size_t c) {
    m.mask[r * m.cols() + c] = 0;
    m.features(r, c) = 0;
}

std::string header() {
    std::string h = "patient_id,admission_id,timestamp,age,sex,label";
    for (const auto& f : default_feature_names()) h += "," + f;
    return h + ",codes\n";
}

// One admission row with the given cells for named measurements.
std::string row(const std::string& pid, const std::string& aid, const std::string& ts, int label,
                const std::map<std::string, std::string>& cells, const std::string& codes) {
    std::string r = pid + "," + aid + "," + ts + ",70,1," + std::to_string(label);
    for (const auto& f : default_feature_names()) {
        const auto it = cells.find(f);
        r += "," + (it == cells.end() ? std::string{} : it->second);
    }
    return r + "," + codes + "\n";
}

std::map<std::string, std::string> first_n(std::size_t n, const std::string& value = "1") {
    std::map<std::string, std::string> cells;
    const auto names = default_feature_names();
    for (std::size_t j = 0; j < n; ++j) cells[names[j]] = value;
    return cells;
}

} // namespace

TEST(Csv, QuotedFieldsAndEscaping) {
    EXPECT_EQ(split_csv_line(R"(a,"b,c","d""e",)"), (std::vector<std::string>{"a", "b,c", "d\"e", ""}));
    EXPECT_EQ(csv_escape("plain"), "plain");
    EXPECT_EQ(csv_escape("a,b"), "\"a,b\"");
    EXPECT_EQ(csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
}

TEST(Csv, NumbersRoundTripExactly) {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) {
        EXPECT_EQ(parse_double(format_double(v)), v);
    }
    EXPECT_FALSE(parse_double("").has_value());
    EXPECT_FALSE(parse_double("1.5x").has_value());
    EXPECT_FALSE(parse_double("abc").has_value());
}

TEST(Admissions, HeaderOnlyGivesNoRecords) {
    std::istringstream in(header());
    const auto load = load_admissions(in);
    EXPECT_TRUE(load.records.empty());
    EXPECT_TRUE(load.errors.empty());
}

TEST(Admissions, BadNumberIsIsolatedToItsRow) {
    auto bad = first_n(13);
    bad["creatinine"] = "high";
    std::istringstream in(header() + row("A", "A1", "2020-01-01", 0, first_n(13), "") +
                          row("B", "B1", "2020-01-01", 0, bad, "") + row("C", "C1", "2020-01-01", 0, first_n(13), ""));
    const auto load = load_admissions(in);
    ASSERT_EQ(load.records.size(), 2u);
    EXPECT_EQ(load.records[0].patient_id, "A");
    EXPECT_EQ(load.records[1].patient_id, "C");
    ASSERT_EQ(load.errors.size(), 1u);
    EXPECT_EQ(load.errors[0].line, 3u);
    EXPECT_NE(load.errors[0].message.find("creatinine"), std::string::npos);
}

TEST(Admissions, MissingColumnIsFatal) {
    std::istringstream in("patient_id,admission_id,timestamp,age,sex,codes\n");
    EXPECT_THROW(load_admissions(in), FormatError);
}

TEST(Admissions, DuplicateKeysAndInconsistentPatientsAreReported) {
    std::istringstream in(header() + row("A", "A1", "2020-01-01", 0, first_n(13), "") +
                          row("A", "A1", "2020-02-01", 0, first_n(13), "") +
                          row("B", "B1", "2020-01-01", 0, first_n(13), "") +
                          row("B", "B2", "2020-02-01", 1, first_n(13), "I50.9"));
    const auto load = load_admissions(in);
    EXPECT_EQ(load.errors.size(), 2u);
}

TEST(Admissions, SyntheticCohortRoundTrips) {
    auto spec = default_synthetic_spec(3);
    spec.n_patients = 60;
    const auto records = to_admissions(generate_synthetic_cohort(spec), 4);
    std::stringstream ss;
    write_admissions(ss, records);
    const auto load = load_admissions(ss);
    EXPECT_TRUE(load.errors.empty());
    EXPECT_EQ(load.records, records);
}

TEST(Aggregate, ReadingsAreAveraged) {
    auto cells = first_n(13);
    cells["spo2"] = "94;96";
    std::istringstream in(header() + row("A", "A1", "2020-01-01", 0, cells, ""));
    const auto load = load_admissions(in);
    const auto selected = aggregate_and_select(load.records, default_feature_names());
    ASSERT_EQ(selected.size(), 1u);
    EXPECT_EQ(selected[0].readings.at("spo2"), (std::vector<double>{95.0}));
}

TEST(Aggregate, HeartFailureUsesEarliestCodedAdmission) {
    std::istringstream in(header() + row("H", "H5", "2020-01-05", 1, first_n(13, "5"), "I50.1") +
                          row("H", "H2", "2020-01-02", 1, first_n(13, "2"), "I50.1;E11.9") +
                          row("H", "H1", "2020-01-01", 1, first_n(13, "1"), "R05"));
    const auto selected = aggregate_and_select(load_admissions(in).records, default_feature_names());
    ASSERT_EQ(selected.size(), 1u);
    EXPECT_EQ(selected[0].admission_id, "H2");
    EXPECT_EQ(selected[0].codes, (analysis::CodeSet{"E11.9", "I50.1", "R05"}));
}

TEST(Aggregate, ControlsUseTheMostCompleteAdmission) {
    std::istringstream in(header() + row("C", "C10", "2020-01-01", 0, first_n(10), "") +
                          row("C", "C12", "2020-02-01", 0, first_n(12), "") +
                          row("C", "C12b", "2020-03-01", 0, first_n(12), ""));
    const auto selected = aggregate_and_select(load_admissions(in).records, default_feature_names());
    ASSERT_EQ(selected.size(), 1u);
    EXPECT_EQ(selected[0].admission_id, "C12");
}

TEST(Filter, FeaturePresenceThresholdIsStrict) {
    auto m = dense_matrix(100);
    for (std::size_t r = 59; r < 100; ++r) drop(m, r, 0);  // present in 59%
    for (std::size_t r = 0; r < 39; ++r) drop(m, r, 1);    // present in 61%
    FilterReport report;
    const auto out = filter_features_and_cases(m, {}, &report);
    EXPECT_EQ(report.dropped_features, (std::vector<std::string>{m.feature_names[0]}));
    EXPECT_EQ(out.cols(), 12u);
    EXPECT_EQ(out.feature_names.front(), m.feature_names[1]);
    EXPECT_EQ(out.rows(), 100u);
}

TEST(Filter, ExactlySixtyPercentPresenceIsDropped) {
    auto m = dense_matrix(100);
    for (std::size_t r = 60; r < 100; ++r) drop(m, r, 2);
    FilterReport report;
    filter_features_and_cases(m, {}, &report);
    EXPECT_EQ(report.dropped_features, (std::vector<std::string>{m.feature_names[2]}));
}

TEST(Filter, PatientCoverageThreshold) {
    auto m = dense_matrix(20);
    for (std::size_t c = 7; c < 13; ++c) drop(m, 0, c);  // 7 of 13 = 54%
    for (std::size_t c = 8; c < 13; ++c) drop(m, 1, c);  // 8 of 13 = 62%
    FilterReport report;
    const auto out = filter_features_and_cases(m, {}, &report);
    EXPECT_EQ(report.dropped_patients, (std::vector<std::string>{m.patient_ids[0]}));
    EXPECT_EQ(out.rows(), 19u);
    EXPECT_EQ(out.patient_ids.front(), m.patient_ids[1]);
}

TEST(Filter, DenseMatrixIsUnchanged) {
    const auto m = dense_matrix(10);
    const auto out = filter_features_and_cases(m);
    EXPECT_EQ(out.features, m.features);
    EXPECT_EQ(out.patient_ids, m.patient_ids);
}

TEST(Filter, RepeatsUntilStable) {
    // Dropping the sparse feature lowers patient 0's coverage below 60%.
    auto m = dense_matrix(10);
    for (std::size_t r = 0; r < 10; ++r)
        if (r % 2 == 0) drop(m, r, 0);
    for (std::size_t c = 1; c < 6; ++c) drop(m, 1, c);  // 8 of 13 present before, 7 of 12 after
    FilterReport report;
    const auto out = filter_features_and_cases(m, {}, &report);
    EXPECT_EQ(report.dropped_features.size(), 1u);
    EXPECT_EQ(report.dropped_patients, (std::vector<std::string>{m.patient_ids[1]}));
    EXPECT_EQ(out.rows(), 9u);
}

TEST(Standardizer, ImputesWithTrainingMean) {
    auto m = dense_matrix(3);
    m.features(0, 0) = 1.0;
    m.features(2, 0) = 3.0;
    drop(m, 1, 0);
    const std::vector<std::size_t> all{0, 1, 2};
    const auto s = Standardizer::fit(m, all);
    EXPECT_DOUBLE_EQ(s.mean[0], 2.0);
    const auto z = s.transform(m);
    const double sd = std::sqrt(2.0 / 3.0);
    EXPECT_NEAR(z(0, 0), -1.0 / sd, 1e-12);
    EXPECT_EQ(z(1, 0), 0.0);
    EXPECT_NEAR(z(2, 0), 1.0 / sd, 1e-12);
}

TEST(Standardizer, TrainingColumnsAreZScores) {
    auto m = dense_matrix(50);
    Rng rng(1);
    for (double& v : m.features.values()) v = rng.normal(3, 7);
    std::vector<std::size_t> rows(50);
    std::iota(rows.begin(), rows.end(), 0);
    const auto z = Standardizer::fit(m, rows).transform(m, rows);
    for (std::size_t j = 0; j < z.cols(); ++j) {
        double mean = 0, ss = 0;
        for (std::size_t i = 0; i < 50; ++i) mean += z(i, j) / 50.0;
        for (std::size_t i = 0; i < 50; ++i) ss += (z(i, j) - mean) * (z(i, j) - mean) / 50.0;
        EXPECT_LT(std::abs(mean), 1e-9);
        EXPECT_NEAR(std::sqrt(ss), 1.0, 1e-9);
    }
}

TEST(Standardizer, TestRowsUseTrainingStatistics) {
    auto m = dense_matrix(6);
    for (std::size_t r = 0; r < 6; ++r) m.features(r, 0) = r < 4 ? static_cast<double>(r) : 10.0;
    const std::vector<std::size_t> train{0, 1, 2, 3}, test{4, 5};
    const auto z = Standardizer::fit(m, train).transform(m, test);
    EXPECT_GT(z(0, 0), 0.0);
    EXPECT_EQ(z(0, 0), z(1, 0));
}

TEST(Standardizer, ZeroVarianceFeatureMapsToZero) {
    auto m = dense_matrix(4);
    for (std::size_t r = 0; r < 4; ++r) m.features(r, 3) = 5.0;
    const std::vector<std::size_t> all{0, 1, 2, 3};
    const auto s = Standardizer::fit(m, all);
    EXPECT_TRUE(s.zero_variance[3]);
    for (std::size_t r = 0; r < 4; ++r) EXPECT_EQ(s.transform(m)(r, 3), 0.0);
}

TEST(MatrixCsv, RoundTrip) {
    auto m = dense_matrix(5);
    drop(m, 2, 4);
    m.codes[1] = {"A01", "B02"};
    m.features(0, 0) = 1.0 / 3.0;
    std::stringstream ss;
    write_matrix_csv(ss, m);
    const auto back = read_matrix_csv(ss);
    EXPECT_EQ(back.features, m.features);
    EXPECT_EQ(back.mask, m.mask);
    EXPECT_EQ(back.codes, m.codes);
    EXPECT_EQ(back.labels, m.labels);
    EXPECT_EQ(back.patient_ids, m.patient_ids);
    EXPECT_EQ(back.feature_names, m.feature_names);
}

TEST(Propensity, CaseTakesTheNearestAgedControl) {
    const Matrix cases{{50, 0}};
    const Matrix controls{{70, 0}, {49, 0}};
    Rng rng(1);
    const auto r = propensity_match(cases, controls, rng);
    EXPECT_EQ(r.control_for_case, (std::vector<std::size_t>{1}));
    EXPECT_EQ(r.unmatched_cases, 0u);
}

TEST(Propensity, BalancedPoolsStayBalanced) {
    Rng d(2);
    Matrix cases(200, 2), controls(400, 2);
    for (std::size_t i = 0; i < 200; ++i) cases(i, 0) = d.normal(65, 10), cases(i, 1) = d.bernoulli(0.5);
    for (std::size_t i = 0; i < 400; ++i) controls(i, 0) = d.normal(65, 10), controls(i, 1) = d.bernoulli(0.5);
    Rng rng(3);
    const auto r = propensity_match(cases, controls, rng);
    std::vector<double> a, b;
    for (std::size_t i = 0; i < 200; ++i) {
        a.push_back(cases(i, 0));
        b.push_back(controls(r.control_for_case[i], 0));
    }
    EXPECT_LT(standardized_mean_difference(a, b), 0.1);
    EXPECT_EQ(r.matched_controls.size(), 200u);
    EXPECT_TRUE(std::is_sorted(r.matched_controls.begin(), r.matched_controls.end()));
}

TEST(Propensity, EmptyControlPoolIsAnError) {
    Rng rng(4);
    EXPECT_THROW(propensity_match(Matrix{{50, 1}}, Matrix(0, 2), rng), DomainError);
}

TEST(Propensity, SurplusCasesStayUnmatched) {
    Rng rng(5);
    const auto r = propensity_match(Matrix{{50, 0}, {60, 1}, {70, 0}}, Matrix{{55, 0}}, rng);
    EXPECT_EQ(r.unmatched_cases, 2u);
    EXPECT_EQ(std::count(r.control_for_case.begin(), r.control_for_case.end(), kUnmatched), 2);
}

TEST(Split, ProportionalAllocation) {
    std::vector<int> labels(100, 0);
    std::fill(labels.begin() + 60, labels.end(), 1);
    const auto s = stratified_split(labels, {0.25, 5, 7});
    std::size_t zeros = 0, ones = 0;
    for (std::size_t r : s.test) (labels[r] == 0 ? zeros : ones)++;
    EXPECT_EQ(zeros, 15u);
    EXPECT_EQ(ones, 10u);
    EXPECT_EQ(s.train.size(), 75u);
}

TEST(Split, FoldsPartitionTheTrainingRows) {
    std::vector<int> labels;
    for (int i = 0; i < 97; ++i) labels.push_back(i % 3 == 0);
    const auto s = stratified_split(labels, {0.2, 5, 8});
    std::vector<std::size_t> all;
    for (const auto& f : s.folds) all.insert(all.end(), f.begin(), f.end());
    std::sort(all.begin(), all.end());
    EXPECT_EQ(all, s.train);
    EXPECT_EQ(std::adjacent_find(all.begin(), all.end()), all.end());
    std::vector<std::size_t> everything = s.train;
    everything.insert(everything.end(), s.test.begin(), s.test.end());
    std::sort(everything.begin(), everything.end());
    EXPECT_EQ(everything.size(), 97u);
    EXPECT_EQ(std::adjacent_find(everything.begin(), everything.end()), everything.end());
    const auto [fit, val] = s.fold(2);
    EXPECT_EQ(fit.size() + val.size(), s.train.size());
}

TEST(Split, SameSeedSameSplit) {
    std::vector<int> labels;
    for (int i = 0; i < 50; ++i) labels.push_back(i % 2);
    const auto a = stratified_split(labels, {0.25, 5, 9});
    const auto b = stratified_split(labels, {0.25, 5, 9});
    const auto c = stratified_split(labels, {0.25, 5, 10});
    EXPECT_EQ(a.test, b.test);
    EXPECT_EQ(a.folds, b.folds);
    EXPECT_NE(a.test, c.test);
}

TEST(Split, InvalidInputs) {
    EXPECT_THROW(stratified_split(std::vector<int>(20, 1), {0.25, 5, 1}), DomainError);
    std::vector<int> tiny{0, 0, 0, 1, 1, 1};
    EXPECT_THROW(stratified_split(tiny, {0.25, 5, 1}), DomainError);
    EXPECT_THROW((SplitSpec{1.5, 5, 1}.validate()), DomainError);
}

TEST(Synthetic, NoMissingnessGivesDenseMask) {
    auto spec = default_synthetic_spec(1);
    spec.missingness_rate = 0;
    spec.n_patients = 100;
    const auto m = generate_synthetic_cohort(spec);
    EXPECT_TRUE(std::all_of(m.mask.begin(), m.mask.end(), [](auto v) { return v == 1; }));
}

TEST(Synthetic, SizesIdsAndDeterminism) {
    auto spec = default_synthetic_spec(2);
    spec.n_patients = 101;
    const auto a = generate_synthetic_cohort(spec);
    const auto b = generate_synthetic_cohort(spec);
    EXPECT_EQ(a.features, b.features);
    EXPECT_EQ(a.codes, b.codes);
    ASSERT_EQ(a.rows(), 101u);
    EXPECT_EQ(a.cols(), 13u);
    std::set<std::string> ids(a.patient_ids.begin(), a.patient_ids.end());
    EXPECT_EQ(ids.size(), 101u);
    EXPECT_TRUE(ids.count("P00001"));
    std::vector<std::size_t> sizes(spec.subgroups.size(), 0);
    for (int g : a.subgroup) sizes[static_cast<std::size_t>(g)]++;
    // Weights 1/6 ×3 and 1/4 ×2 of 101 by largest remainder.
    std::size_t total = 0;
    for (std::size_t g = 0; g < sizes.size(); ++g) {
        const double exact = spec.subgroups[g].weight * 101.0;
        EXPECT_LE(std::abs(static_cast<double>(sizes[g]) - exact), 1.0);
        total += sizes[g];
    }
    EXPECT_EQ(total, 101u);
    for (std::size_t r = 0; r < a.rows(); ++r) {
        EXPECT_EQ(a.labels[r], spec.subgroups[static_cast<std::size_t>(a.subgroup[r])].label);
    }
}

TEST(Synthetic, MarkerCodePrevalenceFollowsTheSpec) {
    auto spec = default_synthetic_spec(3);
    spec.n_patients = 6000;
    const auto m = generate_synthetic_cohort(spec);
    for (const auto& code : spec.codes) {
        for (std::size_t g = 0; g < spec.subgroups.size(); ++g) {
            std::size_t n = 0, with = 0;
            for (std::size_t r = 0; r < m.rows(); ++r) {
                if (static_cast<std::size_t>(m.subgroup[r]) != g) continue;
                ++n;
                with += std::binary_search(m.codes[r].begin(), m.codes[r].end(), code.code) ? 1 : 0;
            }
            EXPECT_NEAR(static_cast<double>(with) / static_cast<double>(n), code.prevalence[g], 0.05)
                << code.code << " in " << spec.subgroups[g].name;
        }
    }
}

TEST(Synthetic, ValidationCollectsProblems) {
    auto spec = default_synthetic_spec(4);
    spec.codes[0].prevalence[0] = 1.5;
    spec.missingness_rate = -0.1;
    try {
        spec.validate();
        FAIL() << "expected DomainError";
    } catch (const DomainError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("prevalence"), std::string::npos);
        EXPECT_NE(msg.find("missingness"), std::string::npos);
    }
}

TEST(Synthetic, AdmissionsRecoverTheIndexAdmission) {
    auto spec = default_synthetic_spec(5);
    spec.n_patients = 200;
    const auto m = generate_synthetic_cohort(spec);
    const auto selected = aggregate_and_select(to_admissions(m, 6), m.feature_names);
    const auto rebuilt = build_patient_matrix(selected, m.feature_names);
    EXPECT_EQ(rebuilt.patient_ids, m.patient_ids);
    EXPECT_EQ(rebuilt.labels, m.labels);
    EXPECT_EQ(rebuilt.mask, m.mask);
    EXPECT_EQ(max_abs_diff(rebuilt.features, m.features), 0.0);
}
