#pragma once

#include <cmath>
#include <vector>

#include "drexp/engine.hpp"
#include "drexp/error.hpp"
#include "drexp/family.hpp"
#include "drexp/model.hpp"
#include "drexp/numeric.hpp"
#include "drexp/special.hpp"

namespace drexp {

/// Gradient of θ ↦ E_θ[φ]. Bernoulli is exact (φ(1) − φ(0)); otherwise central
/// differences with step 1e-5·(1+|θ_i|), shrunk to stay inside the domain.
inline std::vector<double> expectation_gradient(const FamilySpec& f, const ParameterVector& th, const OutcomeFn& phi) {
    require_in_domain(f, th);
    if (std::holds_alternative<Bernoulli>(f)) return {phi(1.0) - phi(0.0)};
    const ParameterBox box = domain(f);
    std::vector<double> g(th.size());
    for (std::size_t i = 0; i < th.size(); ++i) {
        const double h = detail::safe_step(box, th, i, 1e-5 * (1.0 + std::fabs(th[i])));
        ParameterVector a = th, b = th;
        a[i] += h;
        b[i] -= h;
        g[i] = (outcome_expectation(f, a, phi) - outcome_expectation(f, b, phi)) / (2.0 * h);
    }
    return g;
}

/// V(φ, θ̂) = (∂E_θ[φ])ᵀ 𝕴⁻¹ (∂E_θ[φ]) at θ̂.
inline double v_statistic(const FamilySpec& f, const ParameterVector& th_hat, const OutcomeFn& phi) {
    if (phi.is_constant()) return 0.0;
    const Matrix info = information_matrix(f, th_hat);
    const auto grad = expectation_gradient(f, th_hat, phi);
    const auto x = spd_solve(info, grad);
    double v = 0.0;
    for (std::size_t i = 0; i < grad.size(); ++i) v += grad[i] * x[i];
    return std::max(v, 0.0);
}

struct AsymptoticApprox {
    double base = 0.0;             // E_θ̂[φ]
    double v = 0.0;                // V(φ, θ̂)
    double approx_gamma1 = 0.0;    // base + (k/2N) v
    double approx_gammainf = 0.0;  // base + √((2k/N) v)
    double k = 0.0;
    std::size_t n = 0;
};

inline AsymptoticApprox asymptotic_expansion(const FittedModel& m, const OutcomeFn& phi, double k) {
    if (!(k > 0.0)) throw DomainError("k must be positive");
    const auto& fit = m.mle_result();
    if (fit.on_boundary)
        throw BoundaryError("MLE " + fit.theta.str() + " is on the domain boundary; the large-sample expansion is invalid");
    AsymptoticApprox a;
    a.k = k;
    a.n = m.sample_size();
    a.base = m.expectation(fit.theta, phi);
    a.v = v_statistic(m.family(), fit.theta, phi);
    const double n = static_cast<double>(a.n);
    a.approx_gamma1 = a.base + k / (2.0 * n) * a.v;
    a.approx_gammainf = a.base + std::sqrt(2.0 * k / n * a.v);
    return a;
}

inline AsymptoticApprox asymptotic_expansion(const FamilySpec& f, const Sample& s, const OutcomeFn& phi, double k) {
    return asymptotic_expansion(FittedModel(f, s), phi, k);
}

/// k with F_{χ²_d}(2k) = level.
inline double wilks_k(double level, int d) {
    if (!(level > 0.0 && level < 1.0)) throw DomainError("confidence level must lie in (0, 1)");
    if (d < 1) throw DomainError("dimension must be positive");
    return 0.5 * special::chi2_quantile(level, d);
}

/// Hull of {E_θ[φ] : α(θ) ≤ k}: the γ = ∞ DR interval.
template <detail::OutcomeModel M>
DrInterval likelihood_interval(const M& model, const OutcomeFn& phi, double k, const OptimizerConfig& cfg = {}) {
    return dr_interval(model, phi, PenaltySpec(k, kInf), cfg);
}

inline DrInterval likelihood_interval(const FamilySpec& f, const Sample& s, const OutcomeFn& phi, double k,
                                      const OptimizerConfig& cfg = {}) {
    return likelihood_interval(FittedModel(f, s), phi, k, cfg);
}

} // namespace drexp
