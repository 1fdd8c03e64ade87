#pragma once

// Closed-form values for the Gaussian and Laplace worked examples, the
// entropic certainty equivalent, and the exponentially composed penalty.
// Where the published algebra disagrees with direct maximization, the
// optimizer-certified value is the default and `as_printed` reproduces the
// published display.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "drexp/engine.hpp"
#include "drexp/error.hpp"
#include "drexp/model.hpp"
#include "drexp/numeric.hpp"
#include "drexp/sample.hpp"

namespace drexp {

enum class Formula { Certified, AsPrinted };

/// Unit-variance Gaussian example: β, k, N, γ and the sample mean X̄.
struct GaussianClosedFormInput {
    double beta = 1.0;
    double k = 1.0;
    double n = 1.0;
    double gamma = 1.0;
    double xbar = 0.0;

    void validate() const {
        if (!(k > 0.0) || !std::isfinite(k)) throw DomainError("k must be positive");
        if (!(n >= 1.0)) throw DomainError("N must be at least 1");
        if (!(gamma >= 1.0)) throw DomainError("gamma must lie in [1, inf]");
        if (!std::isfinite(beta) || !std::isfinite(xbar)) throw DomainError("beta and xbar must be finite");
    }
};

/// E^{k,γ}(βX) = βX̄ + |β|^{2γ/(2γ−1)} (2k/N)^{γ/(2γ−1)} (2γ)^{−1/(2γ−1)} (1 − 1/2γ).
/// The printed display has (k/N) in place of (2k/N), which contradicts its own
/// γ = 1 and γ = ∞ reductions.
inline double gaussian_linear(const GaussianClosedFormInput& in, Formula f = Formula::Certified) {
    in.validate();
    const double b = std::fabs(in.beta);
    const double ratio = (f == Formula::Certified ? 2.0 : 1.0) * in.k / in.n;
    if (b == 0.0) return 0.0;
    if (std::isinf(in.gamma)) return in.beta * in.xbar + b * std::sqrt(ratio);
    const double g = in.gamma, e = 2.0 * g - 1.0;
    return in.beta * in.xbar + std::pow(b, 2.0 * g / e) * std::pow(ratio, g / e) * std::pow(2.0 * g, -1.0 / e) *
                                   (1.0 - 0.5 / g);
}

/// E^{k,1}(βX²) = β + βN X̄²/(N − 2kβ) for β < N/2k, else +∞.
inline double gaussian_square_gamma1(double beta, double k, double n, double xbar, Formula f = Formula::Certified) {
    GaussianClosedFormInput{beta, k, n, 1.0, xbar}.validate();
    if (beta >= n / (2.0 * k)) return kInf;
    const double d = n - 2.0 * k * beta;
    if (f == Formula::AsPrinted) return beta + beta * (n * (n - 2.0 * k * beta * beta) / (d * d)) * xbar * xbar;
    return beta + beta * n * xbar * xbar / d;
}

/// E^{k,∞}(βX²) = β(1 + (|X̄| + √(2k/N))²) for β ≥ 0; for β < 0 the
/// smallest μ² on the likelihood interval is used.
inline double gaussian_square_gammainf(double beta, double k, double n, double xbar, Formula f = Formula::Certified) {
    GaussianClosedFormInput{beta, k, n, kInf, xbar}.validate();
    const double r = std::sqrt(2.0 * k / n);
    if (f == Formula::AsPrinted) return beta * (1.0 + xbar + r) * (1.0 + xbar + r);
    if (beta >= 0.0) return beta * (1.0 + (std::fabs(xbar) + r) * (std::fabs(xbar) + r));
    const double m = std::max(0.0, std::fabs(xbar) - r);
    return beta * (1.0 + m * m);
}

/// Empirical quantile by the left-continuous inverse CDF: inf{x : F_N(x) ≥ p}.
inline double empirical_quantile(std::vector<double> xs, double p) {
    if (xs.empty()) throw DomainError("quantile of an empty sample");
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    std::size_t idx = static_cast<std::size_t>(std::ceil(p * n - 1e-12 * n));
    idx = std::clamp<std::size_t>(idx, 1, xs.size());
    return xs[idx - 1];
}

/// Laplace location, E^{k,1}(βX) for 0 < β < N/k. The maximizer is the
/// empirical (1/2 + βk/2N)-quantile μ*; the default evaluates the exact
/// objective βμ* − α(μ*)/k there. AsPrinted returns the published weighted
/// combination (1 − k/4N)βμ* + (3k/4N)βm − (k/2N)·mean{βX_n : m < X_n ≤ μ*}.
inline double laplace_linear_approx(double beta, double k, const Sample& s, Formula f = Formula::Certified) {
    const double n = static_cast<double>(s.size());
    if (!(k > 0.0)) throw DomainError("k must be positive");
    if (!(beta > 0.0 && beta < n / k)) throw DomainError("laplace closed form needs 0 < beta < N/k");
    const double mu_star = empirical_quantile(s.values(), 0.5 + beta * k / (2.0 * n));
    const FittedModel model(LaplaceLocation{}, s);
    const double m = model.mle()[0];
    if (f == Formula::Certified) return beta * mu_star - model.divergence({mu_star}) / k;
    double sum = 0.0;
    int cnt = 0;
    for (double x : s.values())
        if (x > m && x <= mu_star) {
            sum += beta * x;
            ++cnt;
        }
    const double mean_between = cnt ? sum / cnt : 0.0;
    return (1.0 - k / (4.0 * n)) * beta * mu_star + (3.0 * k / (4.0 * n)) * beta * m - (k / (2.0 * n)) * mean_between;
}

/// (1/k) log( Σ w_i exp(k ξ_i) ), computed with a max shift.
inline double entropic_certainty_equivalent(std::span<const double> xi, std::span<const double> weights, double k) {
    if (!(k > 0.0)) throw DomainError("k must be positive");
    if (xi.empty() || xi.size() != weights.size()) throw DomainError("values and weights must be nonempty and aligned");
    double top = -kInf;
    for (std::size_t i = 0; i < xi.size(); ++i)
        if (weights[i] > 0.0) top = std::max(top, k * xi[i]);
    double s = 0.0, wsum = 0.0;
    for (std::size_t i = 0; i < xi.size(); ++i) {
        if (weights[i] < 0.0) throw DomainError("weights must be nonnegative");
        wsum += weights[i];
        if (weights[i] > 0.0) s += weights[i] * std::exp(k * xi[i] - top);
    }
    return (top + std::log(s / wsum)) / k;
}

/// Empirical version: equal weights on the observations.
inline double entropic_certainty_equivalent(std::span<const double> xi, double k) {
    const std::vector<double> w(xi.size(), 1.0);
    return entropic_certainty_equivalent(xi, w, k);
}

/// Gaussian ξ ~ N(m, σ²): m + kσ²/2.
inline double entropic_certainty_equivalent_gaussian(double mean, double variance, double k) {
    if (!(k > 0.0)) throw DomainError("k must be positive");
    if (!(variance >= 0.0)) throw DomainError("variance must be nonnegative");
    return mean + 0.5 * k * variance;
}

/// Composed penalty with entropy in the other direction. Certified (default):
/// the variational value sup_θ { (1/β) log E_θ[e^{βφ}] − α(θ)/k }. AsPrinted:
/// (1/β) log E^{k,1}(e^{βφ}), +∞ when the inner value is.
template <detail::OutcomeModel M>
DrResult composed_exponential_dr(const M& model, const OutcomeFn& phi, double k, double beta,
                                 Formula f = Formula::Certified, const OptimizerConfig& cfg = {}) {
    if (!(beta > 0.0) || !std::isfinite(beta)) throw DomainError("composed penalty needs beta > 0");
    const PenaltySpec spec(k, 1.0);
    if (phi.is_constant()) return dr_expectation(model, phi, spec, cfg);
    const OutcomeFn expo = phi.exponentiated(beta);
    if (f == Formula::AsPrinted) {
        DrResult r = dr_expectation(model, expo, spec, cfg);
        if (r.status == DrStatus::Finite || r.status == DrStatus::NotConverged) r.value = std::log(r.value) / beta;
        return r;
    }
    auto value = [&](const ParameterVector& th) { return std::log(model.expectation(th, expo)) / beta; };
    return maximize_penalized(model, value, spec, cfg, phi.bounds());
}

} // namespace drexp
