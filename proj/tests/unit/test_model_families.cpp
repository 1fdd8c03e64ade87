// Families, samples, MLEs, expectations and the expression language.

#include <gtest/gtest.h>

#include <boost/math/distributions/laplace.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <numbers>

#include "drexp/drexp.hpp"

using namespace drexp;

TEST(Sample, RejectsEmptyAndNonFinite) {
    EXPECT_THROW(Sample(std::vector<double>{}), DomainError);
    EXPECT_THROW(Sample({1.0, kNaN}), DomainError);
    EXPECT_THROW(Sample({1.0, kInf}), DomainError);
}

TEST(Sample, MeanAndMleVariance) {
    const Sample s({1.0, 2.0, 4.0, 9.0});
    EXPECT_DOUBLE_EQ(s.mean(), 4.0);
    EXPECT_DOUBLE_EQ(s.variance_mle(), (9.0 + 4.0 + 0.0 + 25.0) / 4.0);
}

TEST(Mle, ClosedFormsPerFamily) {
    const Sample coins({1, 0, 1, 1, 0});
    EXPECT_DOUBLE_EQ(mle(Bernoulli{}, coins).theta[0], 0.6);
    const Sample xs({0.5, -1.0, 3.0, 2.0, 0.25});
    EXPECT_NEAR(mle(GaussianKnownVar{2.0}, xs).theta[0], 0.95, 1e-15);
    const auto mv = mle(GaussianMeanVar{}, xs);
    EXPECT_NEAR(mv.theta[0], 0.95, 1e-15);
    EXPECT_NEAR(mv.theta[1], xs.variance_mle(), 1e-14);
    EXPECT_DOUBLE_EQ(mle(LaplaceLocation{}, xs).theta[0], 0.5);  // sample median
}

TEST(Mle, BoundaryAndDegenerateCases) {
    const auto allones = mle(Bernoulli{}, Sample({1, 1, 1}));
    EXPECT_DOUBLE_EQ(allones.theta[0], 1.0);
    EXPECT_TRUE(allones.on_boundary);
    EXPECT_TRUE(mle(GaussianMeanVar{}, Sample({2.0, 2.0, 2.0})).degenerate);
    EXPECT_THROW(FittedModel(GaussianMeanVar{}, Sample({2.0, 2.0})), DegeneracyError);
    EXPECT_THROW(mle(Bernoulli{}, Sample({0.0, 0.5})), DomainError);
}

TEST(LogLikelihood, MatchesBoostDensities) {
    const Sample xs({0.3, -1.2, 2.5, 0.0});
    const boost::math::normal_distribution<> n(0.4, std::sqrt(1.7));
    const boost::math::laplace_distribution<> l(0.4, 1.0);
    double ln = 0, ll = 0;
    for (double x : xs.values()) {
        ln += std::log(boost::math::pdf(n, x));
        ll += std::log(boost::math::pdf(l, x));
    }
    EXPECT_NEAR(log_likelihood(GaussianMeanVar{}, ParameterVector{0.4, 1.7}, xs), ln, 1e-12);
    EXPECT_NEAR(log_likelihood(GaussianKnownVar{1.7}, ParameterVector{0.4}, xs), ln, 1e-12);
    EXPECT_NEAR(log_likelihood(LaplaceLocation{}, ParameterVector{0.4}, xs), ll, 1e-12);
    EXPECT_NEAR(log_likelihood(Bernoulli{}, ParameterVector{0.25}, Sample({1, 0, 0})),
                std::log(0.25) + 2 * std::log(0.75), 1e-14);
}

TEST(Divergence, ClosedFormAgreesWithSummation) {
    const FittedModel b(Bernoulli{}, Sample({1, 1, 0, 1, 0, 0, 0}));
    const FittedModel g(GaussianMeanVar{}, Sample({0.1, 2.0, -0.7, 1.3}));
    const FittedModel l(LaplaceLocation{}, Sample({0.1, 2.0, -0.7, 1.3, 5.0}));
    for (double q : {0.01, 0.2, 3.0 / 7.0, 0.9})
        EXPECT_NEAR(b.divergence(ParameterVector{q}), b.divergence_by_summation(ParameterVector{q}), 1e-12);
    for (auto th : {ParameterVector{0.0, 0.5}, ParameterVector{3.0, 4.0}, g.mle()})
        EXPECT_NEAR(g.divergence(th), g.divergence_by_summation(th), 1e-12);
    for (double mu : {-3.0, 0.0, 1.0, 1.3, 1.7, 10.0})
        EXPECT_NEAR(l.divergence(ParameterVector{mu}), l.divergence_by_summation(ParameterVector{mu}), 1e-12);
    EXPECT_EQ(b.divergence(ParameterVector{3.0 / 7.0}), 0.0);
    EXPECT_EQ(b.divergence(ParameterVector{1.5}), kInf);
}

TEST(Divergence, LaplaceStaysAccurateUnderHugeOutliers) {
    std::vector<double> xs(101, 0.0);
    for (int i = 0; i < 101; ++i) xs[i] = (i - 50) * 0.01;
    xs[0] = 1e12;
    const FittedModel m(LaplaceLocation{}, Sample(xs));
    // Moving μ by h across points where all but the outlier lie on one side.
    const double mu = m.mle()[0] + 1e-6;
    const double direct = m.divergence(ParameterVector{mu});
    EXPECT_GE(direct, 0.0);
    EXPECT_LT(direct, 1e-4);
}

TEST(OutcomeExpectation, MatchesIndependentIntegrals) {
    const OutcomeFn sq = OutcomeFn::power(1.0, 2);
    EXPECT_NEAR(outcome_expectation(GaussianKnownVar{2.0}, ParameterVector{1.5}, sq), 2.0 + 2.25, 1e-12);
    EXPECT_NEAR(outcome_expectation(GaussianMeanVar{}, ParameterVector{-1.0, 0.3}, sq), 1.3, 1e-12);
    EXPECT_NEAR(outcome_expectation(LaplaceLocation{}, ParameterVector{0.5}, sq), 2.0 + 0.25, 1e-10);
    EXPECT_NEAR(outcome_expectation(Bernoulli{}, ParameterVector{0.3}, OutcomeFn::expression("exp(x)")),
                0.7 + 0.3 * std::numbers::e, 1e-14);

    // E e^{−|X|} for X ~ N(m, 1) is e^{1/2}(e^{−m}Φ(m − 1) + e^{m}Φ(−m − 1)).
    const boost::math::normal_distribution<> nd(0.2, 1.0), z;
    const double ref = std::exp(0.5) * (std::exp(-0.2) * boost::math::cdf(z, -0.8) + std::exp(0.2) * boost::math::cdf(z, -1.2));
    EXPECT_NEAR(outcome_expectation(GaussianKnownVar{}, ParameterVector{0.2}, OutcomeFn::expression("exp(-abs(x))")),
                ref, 1e-8 * ref);
    boost::math::quadrature::tanh_sinh<double> ts;
    auto lap = [](double x) { return std::exp(-x * x) * 0.5 * std::exp(-std::fabs(x - 0.3)); };
    const double lref = ts.integrate(lap, -40.0, 0.3) + ts.integrate(lap, 0.3, 40.0);
    EXPECT_NEAR(outcome_expectation(LaplaceLocation{}, ParameterVector{0.3}, OutcomeFn::expression("exp(-x^2)")), lref,
                1e-8 * lref);
    EXPECT_NEAR(outcome_expectation(GaussianKnownVar{}, ParameterVector{0.2}, OutcomeFn::indicator(1.0)),
                boost::math::cdf(boost::math::complement(nd, 1.0)), 1e-12);
}

TEST(OutcomeExpectation, DivergentIntegralIsReported) {
    EXPECT_THROW(outcome_expectation(GaussianKnownVar{}, ParameterVector{0.0}, OutcomeFn::expression("exp(x^2)")),
                 NonIntegrableError);
}

TEST(OutcomeExpectation, FarLocationsStayIntegrable) {
    // Location families are integrated around μ, so E[X] = μ holds at any scale.
    for (double mu : {3e9, -1e12, 5e15}) {
        const auto centred = OutcomeFn::expression("x").plus(-mu);
        EXPECT_NEAR(outcome_expectation(LaplaceLocation{}, ParameterVector{mu}, OutcomeFn::expression("x")), mu,
                    1e-8 * std::fabs(mu));
        EXPECT_NEAR(outcome_expectation(GaussianKnownVar{}, ParameterVector{mu}, OutcomeFn::expression("x")), mu,
                    1e-8 * std::fabs(mu));
        EXPECT_NO_THROW(outcome_expectation(LaplaceLocation{}, ParameterVector{mu}, centred));
    }
    // φ itself must be computable: |x − μ| at μ = 3e9 carries ulp(3e9) ≈ 5e-7 noise.
    const auto dev = OutcomeFn::expression("abs(x - 1e4)");
    EXPECT_NEAR(outcome_expectation(LaplaceLocation{}, ParameterVector{1e4}, dev), 1.0, 1e-7);
}

TEST(InformationMatrix, AnalyticValues) {
    EXPECT_NEAR(information_matrix(Bernoulli{}, ParameterVector{0.3})(0, 0), 1.0 / 0.21, 1e-9);
    EXPECT_NEAR(information_matrix(GaussianKnownVar{4.0}, ParameterVector{0.3})(0, 0), 0.25, 1e-12);
    const Matrix mv = information_matrix(GaussianMeanVar{}, ParameterVector{0.0, 2.0});
    EXPECT_NEAR(mv(0, 0), 0.5, 1e-9);
    EXPECT_NEAR(mv(1, 1), 1.0 / 8.0, 1e-9);
    EXPECT_NEAR(mv(0, 1), 0.0, 1e-9);
}

TEST(CustomFamily, GeometricFromExpressions) {
    // Geometric on {0, 1, ...}: T = x, θ = log q < 0, A = −log(1 − e^θ); the MLE is log(x̄/(1 + x̄)).
    Support s;
    for (int i = 0; i <= 400; ++i) s.points.push_back(i);
    const ParameterBox dom{{-kInf}, {0.0}, {true}, {true}};
    const auto geo = ExponentialFamily::from_expressions("geometric", {"x"}, "-log(1 - exp(theta1))", "0", s, dom);
    const Sample xs({0, 2, 3, 1, 4});
    const auto r = mle(geo, xs);
    EXPECT_NEAR(r.theta[0], std::log(2.0 / 3.0), 1e-8);
    double ll = 0;
    for (double x : xs.values()) ll += std::log((1.0 / 3.0) * std::pow(2.0 / 3.0, x));
    EXPECT_NEAR(log_likelihood(geo, r.theta, xs), ll, 1e-10);
    // mean q/(1 − q) = 3 at q = 3/4
    EXPECT_NEAR(outcome_expectation(geo, ParameterVector{std::log(0.75)}, OutcomeFn::identity()), 3.0, 1e-9);
    const auto check = check_exponential_family(geo, {ParameterVector{-1.0}, ParameterVector{-0.3}});
    EXPECT_LT(check.max_normalization_error, 1e-6);
    EXPECT_GT(check.min_second_difference, 0.0);
}

TEST(CustomFamily, GaussianAgreesWithBuiltIn) {
    // Natural parametrization of N(μ, 1): θ = μ, T = x, A = θ²/2.
    Support s;
    const auto f = ExponentialFamily::from_expressions("normal", {"x"}, "theta1^2/2", "-x^2/2 - 0.9189385332046727", s);
    const Sample xs({0.1, 0.7, -0.4, 2.2});
    const FittedModel custom(f, xs), builtin(GaussianKnownVar{}, xs);
    EXPECT_NEAR(custom.mle()[0], builtin.mle()[0], 1e-9);
    for (double mu : {-1.0, 0.0, 0.65, 3.0})
        EXPECT_NEAR(custom.divergence(ParameterVector{mu}), builtin.divergence(ParameterVector{mu}), 1e-9);
}

TEST(Expression, ParsesArithmeticAndIndicators) {
    EXPECT_DOUBLE_EQ(Expression::in_x("2*x^2 - 3*x + 1")(2.0), 3.0);
    EXPECT_DOUBLE_EQ(Expression::in_x("-x^2")(3.0), -9.0);
    EXPECT_DOUBLE_EQ(Expression::in_x("max(x, 1) + min(x, -1)")(0.0), 0.0);
    EXPECT_DOUBLE_EQ(Expression::in_x("log(exp(x))")(0.75), 0.75);
    EXPECT_DOUBLE_EQ(Expression::in_x("x > 1")(2.0), 1.0);
    EXPECT_DOUBLE_EQ(Expression::in_x("x <= 1")(2.0), 0.0);
    EXPECT_TRUE(Expression::in_x("x > 1").is_indicator());
    EXPECT_THROW(Expression::in_x("x +"), UsageError);
    EXPECT_THROW(Expression::in_x("y"), UsageError);
    EXPECT_THROW(Expression::in_x("foo(x)"), UsageError);
}

TEST(Outcome, BoundsAreTrackedOrDeclared) {
    EXPECT_TRUE(OutcomeFn::indicator(0.0).bounded());
    EXPECT_TRUE(OutcomeFn::expression("x > 0").bounded());
    EXPECT_FALSE(OutcomeFn::expression("x").bounded());
    const auto b = OutcomeFn::expression("tanh(x)", Bounds{-1, 1}).scaled(-3.0).bounds();
    ASSERT_TRUE(b.has_value());
    EXPECT_DOUBLE_EQ(b->lo, -3.0);
    EXPECT_DOUBLE_EQ(b->hi, 3.0);
}
