// V statistic, large-sample expansions, Wilks calibration and special functions.

#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>

#include "drexp/drexp.hpp"

using namespace drexp;

TEST(Special, IncompleteGammaMatchesBoost) {
    for (double a : {0.5, 1.0, 2.5, 10.0, 60.0})
        for (double x : {1e-3, 0.3, 1.0, 4.0, 20.0, 90.0}) {
            EXPECT_NEAR(special::gamma_p(a, x), boost::math::gamma_p(a, x), 1e-13) << a << " " << x;
            const double q = boost::math::gamma_q(a, x);
            EXPECT_NEAR(special::gamma_q(a, x), q, 1e-13 + 1e-11 * q) << a << " " << x;
        }
}

TEST(Special, ChiSquareQuantileMatchesBoost) {
    for (int d : {1, 2, 3, 7, 30})
        for (double level : {0.01, 0.5, 0.9, 0.95, 0.99, 0.999999}) {
            const double ref = boost::math::quantile(boost::math::chi_squared_distribution<>(d), level);
            EXPECT_NEAR(special::chi2_quantile(level, d), ref, 1e-10 * ref) << d << " " << level;
        }
    EXPECT_THROW(special::chi2_quantile(1.0, 1), DomainError);
    EXPECT_THROW(special::chi2_quantile(0.5, 0), DomainError);
}

TEST(Special, NormalQuantileMatchesBoost) {
    const boost::math::normal_distribution<> z;
    for (double p : {1e-300, 1e-12, 0.001, 0.02425, 0.3, 0.5, 0.7, 0.97575, 0.999, 1 - 1e-12}) {
        const double ref = boost::math::quantile(z, p);
        EXPECT_NEAR(special::normal_quantile(p), ref, 1e-13 * std::max(1.0, std::fabs(ref))) << p;
    }
    EXPECT_EQ(special::normal_quantile(0.0), -kInf);
    EXPECT_THROW(special::normal_quantile(1.5), DomainError);
}

TEST(Wilks, CalibrationValues) {
    EXPECT_NEAR(wilks_k(0.95, 1), 1.92073, 5e-6);
    EXPECT_NEAR(wilks_k(0.95, 2), 2.99573, 5e-6);
    // d = 2: χ²₂ is exponential with mean 2, so k = −log(1 − level)
    EXPECT_NEAR(wilks_k(0.8, 2), -std::log(0.2), 1e-12);
    EXPECT_THROW(wilks_k(0.0, 1), DomainError);
    EXPECT_THROW(wilks_k(0.9, 0), DomainError);
}

TEST(VStatistic, AnalyticGradientInverseInformationForms) {
    // Bernoulli φ = x: ∇E = 1, I = 1/(p(1 − p))
    EXPECT_NEAR(v_statistic(Bernoulli{}, ParameterVector{0.3}, OutcomeFn::identity()), 0.21, 1e-10);
    // Gaussian σ² known, φ = x: V = σ²
    EXPECT_NEAR(v_statistic(GaussianKnownVar{2.5}, ParameterVector{0.7}, OutcomeFn::identity()), 2.5, 1e-8);
    // Gaussian (μ, σ²), φ = x²: ∇E = (2μ, 1), I = diag(1/σ², 1/(2σ⁴))
    const double mu = 0.6, s2 = 1.8;
    EXPECT_NEAR(v_statistic(GaussianMeanVar{}, ParameterVector{mu, s2}, OutcomeFn::power(1.0, 2)),
                4 * mu * mu * s2 + 2 * s2 * s2, 1e-6);
    EXPECT_EQ(v_statistic(Bernoulli{}, ParameterVector{0.3}, OutcomeFn::constant(2.0)), 0.0);
}

TEST(Expansion, MatchesEngineForLargeN) {
    std::vector<double> xs(20000, 0.0);
    for (std::size_t i = 0; i < 6000; ++i) xs[i] = 1.0;
    const FittedModel m(Bernoulli{}, Sample(xs));
    const double k = 1.5;
    const auto a = asymptotic_expansion(m, OutcomeFn::identity(), k);
    EXPECT_NEAR(a.base, 0.3, 1e-15);
    EXPECT_NEAR(a.v, 0.21, 1e-10);
    const double e1 = dr_expectation(m, OutcomeFn::identity(), PenaltySpec(k, 1.0)).value;
    const double ei = dr_expectation(m, OutcomeFn::identity(), PenaltySpec(k, kInf)).value;
    // premiums agree to leading order: relative error O(N^{-1/2})
    EXPECT_NEAR((e1 - 0.3) / (a.approx_gamma1 - 0.3), 1.0, 0.02);
    EXPECT_NEAR((ei - 0.3) / (a.approx_gammainf - 0.3), 1.0, 0.02);
}

TEST(Expansion, ExactForGaussianLinear) {
    const Sample s({0.2, -0.5, 1.1, 0.4});
    const auto a = asymptotic_expansion(GaussianKnownVar{}, s, OutcomeFn::power(2.0, 1), 3.0);
    EXPECT_NEAR(a.approx_gamma1, gaussian_linear({2.0, 3.0, 4.0, 1.0, s.mean()}), 1e-7);
    EXPECT_NEAR(a.approx_gammainf, gaussian_linear({2.0, 3.0, 4.0, kInf, s.mean()}), 1e-7);
}

TEST(Expansion, RefusesBoundaryMle) {
    EXPECT_THROW(asymptotic_expansion(Bernoulli{}, Sample({1, 1, 1}), OutcomeFn::identity(), 1.0), BoundaryError);
}

TEST(LikelihoodInterval, GaussianWilksInterval) {
    std::vector<double> xs;
    for (int i = 0; i < 50; ++i) xs.insert(xs.end(), {0.5, -0.5});
    const auto iv = likelihood_interval(GaussianKnownVar{}, Sample(xs), OutcomeFn::identity(), wilks_k(0.95, 1));
    const double half = boost::math::quantile(boost::math::normal_distribution<>(), 0.975) / 10.0;
    EXPECT_NEAR(iv.lo(), -half, 1e-8);
    EXPECT_NEAR(iv.hi(), half, 1e-8);
}

TEST(LikelihoodInterval, NestedAsDataGrow) {
    std::vector<double> few{1, 1, 0}, many(3000, 0.0);
    for (int i = 0; i < 2000; ++i) many[i] = 1.0;
    const double k = wilks_k(0.95, 1);
    const auto a = likelihood_interval(Bernoulli{}, Sample(few), OutcomeFn::identity(), k);
    const auto b = likelihood_interval(Bernoulli{}, Sample(many), OutcomeFn::identity(), k);
    EXPECT_LT(a.lo(), b.lo());
    EXPECT_LT(b.hi(), a.hi());
}
