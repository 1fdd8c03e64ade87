// Counter-based RNG, fitting helpers and small study runs.

#include <gtest/gtest.h>

#include <cmath>

#include "drexp/drexp.hpp"

using namespace drexp;

TEST(Philox, MatchesNumpyBitGenerator) {
    // numpy Philox(key=[20240601, 3], counter=[0, 0, 5, 2]) increments the counter
    // before each block, so its first eight outputs are blocks {1,0,5,2} and {2,0,5,2}.
    const Philox4x64::Key key{20240601, 3};
    const auto b1 = Philox4x64::block({1, 0, 5, 2}, key);
    const auto b2 = Philox4x64::block({2, 0, 5, 2}, key);
    EXPECT_EQ(b1[0], 0xab14656a16239dbdULL);
    EXPECT_EQ(b1[1], 0xbab17322da1c8678ULL);
    EXPECT_EQ(b1[2], 0x321afb879a8acf66ULL);
    EXPECT_EQ(b1[3], 0x5bda2dc32acdb56eULL);
    EXPECT_EQ(b2[0], 0xbfe88e06bed4ee09ULL);
    EXPECT_EQ(b2[1], 0xf619cedf1203e015ULL);
    EXPECT_EQ(b2[2], 0x0724d4f7204ed974ULL);
    EXPECT_EQ(b2[3], 0x60cef97b1520104aULL);
}

TEST(RandomStream, CounterLayoutAndIndependence) {
    RandomStream s(20240601, 3, 5, 2);
    const auto b0 = Philox4x64::block({0, 0, 5, 2}, {20240601, 3});
    const auto b1 = Philox4x64::block({1, 0, 5, 2}, {20240601, 3});
    for (int i = 0; i < 4; ++i) EXPECT_EQ(s.next_u64(), b0[i]);
    EXPECT_EQ(s.next_u64(), b1[0]);
    RandomStream a(1, 0), b(1, 1), c(1, 0, 1);
    EXPECT_NE(a.next_u64(), b.next_u64());
    EXPECT_NE(RandomStream(1, 0).next_u64(), c.next_u64());
}

TEST(RandomStream, UniformAndNormalMoments) {
    RandomStream s(7, 0);
    double m = 0, m2 = 0, um = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = s.uniform();
        ASSERT_GT(u, 0.0);
        ASSERT_LT(u, 1.0);
        um += u;
        const double z = s.normal();
        m += z;
        m2 += z * z;
    }
    EXPECT_NEAR(um / n, 0.5, 0.005);
    EXPECT_NEAR(m / n, 0.0, 0.01);
    EXPECT_NEAR(m2 / n, 1.0, 0.02);
}

TEST(Draw, FamiliesHaveTheRightMeans) {
    RandomStream s(9, 0);
    const auto b = draw_sample(Bernoulli{}, ParameterVector{0.3}, 100000, s);
    const auto l = draw_sample(LaplaceLocation{}, ParameterVector{2.0}, 100000, s);
    const auto g = draw_sample(GaussianMeanVar{}, ParameterVector{-1.0, 4.0}, 100000, s);
    EXPECT_NEAR(Sample(b).mean(), 0.3, 0.005);
    EXPECT_NEAR(Sample(l).mean(), 2.0, 0.015);
    EXPECT_NEAR(Sample(l).variance_mle(), 2.0, 0.05);
    EXPECT_NEAR(Sample(g).variance_mle(), 4.0, 0.08);
    Support sup;
    sup.points = {0, 1};
    const auto custom = ExponentialFamily::from_expressions("c", {"x"}, "log(1 + exp(theta1))", "0", sup);
    EXPECT_THROW(draw(custom, ParameterVector{0.0}, s), DomainError);
}

TEST(FitSlope, ExactLineAndDegenerateInput) {
    const auto f = fit_slope("g", {1, 2, 3, 4}, {3, 1, -1, -3});
    EXPECT_NEAR(f.slope, -2.0, 1e-14);
    EXPECT_NEAR(f.intercept, 5.0, 1e-14);
    EXPECT_NEAR(f.r_squared, 1.0, 1e-14);
    EXPECT_TRUE(f.conclusive);
    EXPECT_EQ(f.points, 4u);
    const auto bad = fit_slope("g", {1}, {2});
    EXPECT_FALSE(bad.conclusive);
}

TEST(Median, EvenAndOdd) {
    EXPECT_EQ(median({3, 1, 2}), 2);
    EXPECT_EQ(median({4, 1, 3, 2}), 2.5);
}

TEST(StudyConfig, ValidationRejectsBadValues) {
    auto c = default_study_config(StudyKind::Wilks);
    c.level = 1.5;
    EXPECT_THROW(c.validate(), Error);
    c = default_study_config(StudyKind::Rate);
    c.n_grid = {};
    EXPECT_THROW(c.validate(), Error);
    EXPECT_THROW(parse_study_kind("nope"), UsageError);
    EXPECT_EQ(parse_study_kind("blowup"), StudyKind::Blowup);
}

TEST(Studies, SamplesAreReproducible) {
    auto c = default_study_config(StudyKind::Consistency);
    const Sample a = study_sample(c, 4, 1), b = study_sample(c, 4, 1), d = study_sample(c, 5, 1);
    EXPECT_EQ(a.values(), b.values());
    EXPECT_NE(a.values(), d.values());
}

TEST(Studies, ThreadCountDoesNotChangeReports) {
    auto c = default_study_config(StudyKind::Rate);
    c.replications = 12;
    c.n_grid = {50, 200};
    const auto one = run_study(c);
    c.threads = 4;
    const auto four = run_study(c);
    ASSERT_EQ(one.cells.size(), four.cells.size());
    for (std::size_t i = 0; i < one.cells.size(); ++i)
        for (std::size_t j = 0; j < one.cells[i].metrics.size(); ++j)
            EXPECT_EQ(one.cells[i].metrics[j].value, four.cells[i].metrics[j].value);
}

TEST(Studies, DynamicInconsistencyExact) {
    const auto r = dynamic_inconsistency_check(0.5, 2.0);
    EXPECT_TRUE(r.passed()) << r.summary();
    int seen = 0;
    for (const auto& c : r.cells) {
        if (c.group != "gamma=1" || c.get("k") != 2.0) continue;
        ++seen;
        EXPECT_NEAR(c.get("nested"), 0.5 + 3.0 * 2.0 / 8.0, 1e-8);
        EXPECT_NEAR(c.get("one_shot"), 0.5 + 2.0 / 2.0, 1e-8);
    }
    EXPECT_EQ(seen, 1);
}

TEST(Studies, WilksSmoke) {
    auto c = default_study_config(StudyKind::Wilks);
    c.replications = 200;
    const auto r = wilks_coverage_study(c);
    const double cov = r.cells.front().get("coverage");
    EXPECT_GT(cov, 0.88);
    EXPECT_LT(cov, 1.0);
}
