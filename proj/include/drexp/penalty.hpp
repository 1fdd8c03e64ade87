#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "drexp/error.hpp"
#include "drexp/family.hpp"
#include "drexp/model.hpp"
#include "drexp/numeric.hpp"
#include "drexp/sample.hpp"

namespace drexp {

/// Uncertainty aversion k > 0 and exponent γ ∈ [1, ∞]; γ = +inf is exact.
struct PenaltySpec {
    double k = 1.0;
    double gamma = 1.0;

    PenaltySpec() = default;
    PenaltySpec(double k_, double gamma_) : k(k_), gamma(gamma_) { validate(); }

    static PenaltySpec parse(const std::string& k_text, const std::string& gamma_text) {
        const double k = parse_extended(k_text), g = parse_extended(gamma_text);
        if (!(k > 0.0) || !std::isfinite(k)) throw UsageError("--k must be a positive finite number, got '" + k_text + "'");
        if (!(g >= 1.0)) throw UsageError("--gamma must lie in [1, inf], got '" + gamma_text + "'");
        return {k, g};
    }

    bool infinite() const { return std::isinf(gamma); }

    void validate() const {
        if (!(k > 0.0) || !std::isfinite(k)) throw DomainError("penalty k must be positive and finite");
        if (!(gamma >= 1.0)) throw DomainError("penalty gamma must lie in [1, inf]");
    }
};

/// α ≥ 0 (extended real).
class DivergenceValue {
public:
    explicit DivergenceValue(double alpha) : alpha_(alpha) {
        if (!(alpha >= 0.0)) throw ConsistencyError("divergence must be nonnegative, got " + format_extended(alpha));
    }
    double value() const { return alpha_; }
    operator double() const { return alpha_; }

private:
    double alpha_;
};

/// (α/k)^γ, with x^∞ = 0 on [0, 1] and +∞ above.
inline double transform(double alpha, const PenaltySpec& spec) {
    const double r = alpha / spec.k;
    if (spec.infinite()) return r <= 1.0 ? 0.0 : kInf;
    if (spec.gamma == 1.0) return r;
    if (r < 0.0) throw DomainError("transform of a negative divergence is only defined for gamma = 1");
    if (spec.gamma == 2.0) return r * r;
    return std::pow(r, spec.gamma);
}

inline double transform(const DivergenceValue& alpha, const PenaltySpec& spec) { return transform(alpha.value(), spec); }

inline DivergenceValue divergence(const FittedModel& m, const ParameterVector& th) {
    if (!domain(m.family()).closure_contains(th))
        throw DomainError("parameter " + th.str() + " outside the closed domain of " + family_name(m.family()));
    return DivergenceValue(m.divergence(th));
}

inline DivergenceValue divergence(const FamilySpec& f, const ParameterVector& th, const Sample& s) {
    return divergence(FittedModel(f, s), th);
}

/// N(A(θ) − A(θ̂) − <θ − θ̂, ∂A(θ̂)>): the exponential-family route, which
/// relies on the first-order condition ∂A(θ̂) = T̄ at the MLE.
inline double divergence_exponential_form(const ExponentialFamily& e, const ParameterVector& th,
                                          const ParameterVector& th_hat, std::size_t n) {
    const auto g = detail::ef_gradient(e, th_hat);
    double a = e.log_partition(th.view()) - e.log_partition(th_hat.view());
    for (std::size_t i = 0; i < e.dim; ++i) a -= (th[i] - th_hat[i]) * g[i];
    return static_cast<double>(n) * a;
}

/// (N/2)(θ − θ̂)ᵀ 𝕴_θ̂ (θ − θ̂).
inline DivergenceValue quadratic_divergence(const FittedModel& m, const ParameterVector& th) {
    const auto th_hat = m.mle();
    const Matrix info = information_matrix(m.family(), th_hat);
    std::vector<double> d(th.size());
    for (std::size_t i = 0; i < th.size(); ++i) d[i] = th[i] - th_hat[i];
    return DivergenceValue(0.5 * static_cast<double>(m.sample_size()) * quadratic_form(info, d));
}

inline DivergenceValue quadratic_divergence(const FamilySpec& f, const ParameterVector& th, const Sample& s) {
    return quadratic_divergence(FittedModel(f, s), th);
}

/// GaussianMeanVar with the variance regularizer: α(θ) + ε(σ² − σ̂²). Negative
/// below σ̂², so it is usable with γ = 1 only.
class RegularizedModel {
public:
    RegularizedModel(FittedModel base, double epsilon) : base_(std::move(base)), eps_(epsilon) {
        if (!std::holds_alternative<GaussianMeanVar>(base_.family()))
            throw DomainError("the variance regularizer applies to the gaussian mean-variance family only");
        if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw DomainError("regularizer epsilon must be positive");
    }

    const FittedModel& base() const { return base_; }
    double epsilon() const { return eps_; }
    std::size_t dimension() const { return 2; }
    ParameterVector mle() const { return base_.mle(); }
    ParameterBox domain() const { return base_.domain(); }
    std::size_t sample_size() const { return base_.sample_size(); }

    double divergence(const ParameterVector& th) const {
        const double a = base_.divergence(th);
        if (!std::isfinite(a)) return a;
        return a + eps_ * (th[1] - base_.mle()[1]);
    }
    double expectation(const ParameterVector& th, const OutcomeFn& phi) const { return base_.expectation(th, phi); }

private:
    FittedModel base_;
    double eps_;
};

static_assert(PenalizedModel<RegularizedModel>);

inline double regularized_divergence(const FamilySpec& f, const ParameterVector& th, const Sample& s, double epsilon) {
    return RegularizedModel(FittedModel(f, s), epsilon).divergence(th);
}

} // namespace drexp
