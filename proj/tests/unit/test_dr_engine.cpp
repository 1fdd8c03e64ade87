// DR-expectation engine against oracles derived by hand or brute force here.

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "drexp/drexp.hpp"

using namespace drexp;

namespace {

Sample gaussian_sample(double mean, std::size_t n, unsigned seed = 1) {
    std::mt19937_64 g(seed);
    std::normal_distribution<double> d(0.0, 1.0);
    std::vector<double> xs(n);
    double m = 0;
    for (auto& x : xs) m += (x = d(g));
    m /= static_cast<double>(n);
    for (auto& x : xs) x += mean - m;
    return Sample(xs);
}

// max of f on [a, b]: dense grid then golden section around the best cell.
template <class F>
double brute_max(F f, double a, double b, int n = 200001) {
    double best = -kInf, arg = a;
    const double h = (b - a) / (n - 1);
    for (int i = 0; i < n; ++i) {
        const double x = a + i * h, v = f(x);
        if (v > best) best = v, arg = x;
    }
    double lo = arg - h, hi = arg + h;
    const double r = 0.6180339887498949;
    for (int i = 0; i < 200; ++i) {
        const double c = hi - r * (hi - lo), d = lo + r * (hi - lo);
        if (f(c) > f(d)) hi = d;
        else lo = c;
    }
    return std::max(best, f(0.5 * (lo + hi)));
}

}  // namespace

TEST(Engine, GaussianKnownVarLinearGamma1AndInf) {
    for (double s2 : {0.5, 1.0, 3.0})
        for (double beta : {-2.0, 0.7, 4.0})
            for (double k : {0.3, 2.0}) {
                const std::size_t n = 40;
                const Sample s = gaussian_sample(0.25, n);
                const GaussianKnownVar fam{s2};
                // sup_μ βμ − N(μ − X̄)²/(2σ²k) = βX̄ + kβ²σ²/(2N)
                const double g1 = beta * 0.25 + k * beta * beta * s2 / (2.0 * n);
                // μ on the likelihood interval |μ − X̄| ≤ σ√(2k/N)
                const double gi = beta * 0.25 + std::fabs(beta) * std::sqrt(s2 * 2.0 * k / n);
                const auto r1 = dr_expectation(fam, s, OutcomeFn::power(beta, 1), PenaltySpec(k, 1.0));
                const auto ri = dr_expectation(fam, s, OutcomeFn::power(beta, 1), PenaltySpec(k, kInf));
                EXPECT_EQ(r1.status, DrStatus::Finite);
                EXPECT_NEAR(r1.value, g1, 1e-8 * (1 + std::fabs(g1)));
                EXPECT_NEAR(ri.value, gi, 1e-8 * (1 + std::fabs(gi)));
                EXPECT_NEAR(r1.arg_theta->coords()[0], 0.25 + k * beta * s2 / n, 1e-5);
            }
}

TEST(Engine, GaussianKnownVarGamma2ByBruteForce) {
    const std::size_t n = 25;
    const Sample s = gaussian_sample(-0.4, n);
    for (double k : {0.5, 3.0}) {
        const double beta = 1.5;
        auto obj = [&](double mu) {
            const double a = n * (mu + 0.4) * (mu + 0.4) / 2.0 / k;
            return beta * mu - a * a;
        };
        const double ref = brute_max(obj, -5.0, 5.0);
        const auto r = dr_expectation(GaussianKnownVar{}, s, OutcomeFn::power(beta, 1), PenaltySpec(k, 2.0));
        EXPECT_NEAR(r.value, ref, 1e-9);
    }
}

TEST(Engine, BernoulliMatchesGrid) {
    const Sample s({1, 0, 0, 1, 0, 0, 0});
    const FittedModel m(Bernoulli{}, s);
    for (double gamma : {1.0, 1.5, kInf})
        for (double k : {0.2, 1.0, 4.0}) {
            const PenaltySpec spec(k, gamma);
            auto obj = [&](double q) {
                const double a = -(2 * std::log(q / (2.0 / 7)) + 5 * std::log((1 - q) / (5.0 / 7)));
                return q - transform(std::max(a, 0.0), spec);
            };
            double ref = 0;
            if (std::isinf(gamma)) {
                // the objective jumps to −∞ at the boundary: bisect α(q) = k instead
                double lo = 2.0 / 7, hi = 1 - 1e-15;
                for (int i = 0; i < 200; ++i) {
                    const double mid = 0.5 * (lo + hi);
                    (std::isfinite(obj(mid)) ? lo : hi) = mid;
                }
                ref = lo;
            } else {
                ref = brute_max(obj, 1e-12, 1 - 1e-12);
            }
            EXPECT_NEAR(dr_expectation(m, OutcomeFn::identity(), spec).value, ref, 1e-7) << k << " " << gamma;
        }
}

TEST(Engine, GaussianMeanVarLikelihoodBoundary) {
    // With σ² profiled out, α(μ) = (N/2) log(1 + (μ − X̄)²/σ̂²), so the γ = ∞
    // upper value is X̄ + σ̂ √(e^{2k/N} − 1).
    const Sample s({0.1, 1.4, -0.3, 0.9, 2.2, 0.6, -1.0, 0.4});
    const double xbar = s.mean(), sd = std::sqrt(s.variance_mle());
    for (double k : {0.5, 1.92, 4.0}) {
        const double ref = xbar + sd * std::sqrt(std::exp(2.0 * k / 8.0) - 1.0);
        const auto r = dr_expectation(GaussianMeanVar{}, s, OutcomeFn::identity(), PenaltySpec(k, kInf));
        EXPECT_NEAR(r.value, ref, 1e-7);
    }
}

TEST(Engine, GaussianMeanVarLinearIsInfiniteForFiniteGamma) {
    // profiled α grows like log μ², slower than any linear gain
    const Sample s({0.1, 1.4, -0.3, 0.9});
    for (double g : {1.0, 2.0}) {
        const auto r = dr_expectation(GaussianMeanVar{}, s, OutcomeFn::identity(), PenaltySpec(1.0, g));
        EXPECT_EQ(r.status, DrStatus::PlusInfinity);
        EXPECT_EQ(r.value, kInf);
    }
}

TEST(Engine, LaplaceLikelihoodIntervalByBisection) {
    const Sample s({-1.3, 0.2, 0.25, 0.9, 3.1, -0.4, 1.7});
    const FittedModel m(LaplaceLocation{}, s);
    auto alpha = [&](double mu) {
        double a = 0;
        for (double x : s.values()) a += std::fabs(x - mu) - std::fabs(x - 0.25);
        return a;
    };
    const double k = 1.5;
    double lo = 0.25, hi = 50.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (alpha(mid) <= k ? lo : hi) = mid;
    }
    EXPECT_NEAR(dr_expectation(m, OutcomeFn::identity(), PenaltySpec(k, kInf)).value, lo, 1e-8);
}

TEST(Engine, SquareBlowsUpPastCriticalBeta) {
    const Sample s = gaussian_sample(0.3, 100);
    const double k = 2.0;  // N/2k = 25
    EXPECT_EQ(dr_expectation(GaussianKnownVar{}, s, OutcomeFn::power(24.0, 2), PenaltySpec(k, 1.0)).status, DrStatus::Finite);
    for (double beta : {25.0, 26.0, 100.0})
        EXPECT_EQ(dr_expectation(GaussianKnownVar{}, s, OutcomeFn::power(beta, 2), PenaltySpec(k, 1.0)).status,
                  DrStatus::PlusInfinity)
            << beta;
    // γ = ∞ restricts μ to a bounded interval, so the value stays finite
    EXPECT_EQ(dr_expectation(GaussianKnownVar{}, s, OutcomeFn::power(100.0, 2), PenaltySpec(k, kInf)).status,
              DrStatus::Finite);
}

TEST(Engine, BoundedOutcomeNeverInfinite) {
    const Sample s({0.0, 0.5, -0.5, 1.0});
    for (auto fam : {FamilySpec{GaussianKnownVar{}}, FamilySpec{GaussianMeanVar{}}, FamilySpec{LaplaceLocation{}}})
        for (double g : {1.0, kInf}) {
            const auto r = dr_expectation(fam, s, OutcomeFn::indicator(0.0), PenaltySpec(50.0, g));
            EXPECT_EQ(r.status, DrStatus::Finite);
            EXPECT_LE(r.value, 1.0 + 1e-12);
            EXPECT_GT(r.value, 0.5);
        }
}

TEST(Engine, ConstantOutcomeIsExact) {
    const auto r = dr_expectation(Bernoulli{}, Sample({1, 0}), OutcomeFn::constant(3.25), PenaltySpec(9.0, 1.0));
    EXPECT_EQ(r.value, 3.25);
    EXPECT_EQ(r.status, DrStatus::Finite);
}

TEST(Engine, LowerIsNegatedUpperOfNegation) {
    const FittedModel m(Bernoulli{}, Sample({1, 1, 0, 1}));
    const PenaltySpec spec(0.8, kInf);
    const auto lo = lower_expectation(m, OutcomeFn::identity(), spec);
    const auto up = dr_expectation(m, -OutcomeFn::identity(), spec);
    EXPECT_DOUBLE_EQ(lo.value, -up.value);
    EXPECT_LT(lo.value, 0.75);
    const auto iv = dr_interval(m, OutcomeFn::identity(), spec);
    EXPECT_TRUE(iv.converged());
    EXPECT_LT(iv.lo(), 0.75);
    EXPECT_GT(iv.hi(), 0.75);
    const auto minus = lower_expectation(FittedModel(GaussianKnownVar{}, gaussian_sample(0, 10)), OutcomeFn::power(-10.0, 2),
                                         PenaltySpec(1.0, 1.0));
    EXPECT_EQ(minus.status, DrStatus::MinusInfinity);
    EXPECT_EQ(minus.value, -kInf);
}

TEST(Engine, ThreadCountDoesNotChangeResult) {
    const Sample s({0.1, 1.4, -0.3, 0.9, 2.2});
    OptimizerConfig one, four;
    four.threads = 4;
    for (double g : {1.0, kInf}) {
        const auto a = dr_expectation(GaussianMeanVar{}, s, OutcomeFn::expression("exp(-x^2)"), PenaltySpec(1.0, g), one);
        const auto b = dr_expectation(GaussianMeanVar{}, s, OutcomeFn::expression("exp(-x^2)"), PenaltySpec(1.0, g), four);
        EXPECT_EQ(a.value, b.value);
    }
}

TEST(Engine, ConfigValidation) {
    OptimizerConfig c;
    c.coarse_grid_points = 1;
    EXPECT_THROW(dr_expectation(Bernoulli{}, Sample({1, 0}), OutcomeFn::identity(), PenaltySpec(), c), DomainError);
    c = {};
    c.domain_expansion_factor = 1.0;
    EXPECT_THROW(c.validate(), DomainError);
}

TEST(Engine, CustomValueFunction) {
    // maximize_penalized over any value: E = θ² under GaussianKnownVar with γ = ∞
    const FittedModel m(GaussianKnownVar{}, gaussian_sample(1.0, 50));
    auto v = [](const ParameterVector& th) { return th[0] * th[0]; };
    const double r = std::sqrt(2.0 * 2.0 / 50.0);
    EXPECT_NEAR(maximize_penalized(m, v, PenaltySpec(2.0, kInf)).value, (1.0 + r) * (1.0 + r), 1e-8);
}
