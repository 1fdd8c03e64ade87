#pragma once

// Finite-support nonparametric machinery: relative entropy, the tilted
// density g = p/(λ − tφ) that maximizes E_g[φ] − D(p‖g)/t, and the mixture
// construction showing that unbounded outcomes have infinite DR-expectation
// once the model class is closed under mixing.

#include <algorithm>
#include <cmath>
#include <span>
#include <sstream>
#include <vector>

#include "drexp/error.hpp"
#include "drexp/family.hpp"
#include "drexp/model.hpp"
#include "drexp/numeric.hpp"
#include "drexp/outcome.hpp"
#include "drexp/penalty.hpp"

namespace drexp {

class DiscreteDistribution {
public:
    DiscreteDistribution(std::vector<double> support, std::vector<double> probs)
        : support_(std::move(support)), probs_(std::move(probs)) {
        if (support_.empty()) throw DomainError("discrete distribution needs at least one support point");
        if (support_.size() != probs_.size())
            throw DomainError("support has " + std::to_string(support_.size()) + " points but probs has " +
                              std::to_string(probs_.size()));
        double total = 0.0;
        for (std::size_t i = 0; i < probs_.size(); ++i) {
            if (!std::isfinite(support_[i])) throw DomainError("support point " + std::to_string(i) + " is not finite");
            if (!(probs_[i] >= 0.0) || !std::isfinite(probs_[i]))
                throw DomainError("probability " + std::to_string(i) + " is not a nonnegative number");
            total += probs_[i];
        }
        if (std::fabs(total - 1.0) > 1e-12) throw DomainError("probabilities sum to " + format_extended(total) + ", not 1");
        auto sorted = support_;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw DomainError("support points must be distinct");
    }

    std::size_t size() const { return support_.size(); }
    const std::vector<double>& support() const { return support_; }
    const std::vector<double>& probs() const { return probs_; }

    double expectation(const OutcomeFn& phi) const {
        double s = 0.0;
        for (std::size_t i = 0; i < size(); ++i)
            if (probs_[i] > 0.0) s += probs_[i] * phi(support_[i]);
        return s;
    }
    double variance(const OutcomeFn& phi) const {
        const double m = expectation(phi);
        double s = 0.0;
        for (std::size_t i = 0; i < size(); ++i)
            if (probs_[i] > 0.0) s += probs_[i] * (phi(support_[i]) - m) * (phi(support_[i]) - m);
        return s;
    }

private:
    std::vector<double> support_;
    std::vector<double> probs_;
};

namespace detail {
inline void require_shared_support(const DiscreteDistribution& p, const DiscreteDistribution& q) {
    if (p.support() != q.support()) throw DomainError("distributions must share the same support");
}
} // namespace detail

/// Σ p_i log(p_i/q_i), with 0·log(0/q) = 0 and +∞ when p_i > 0 = q_i.
inline double kl_divergence(const DiscreteDistribution& p, const DiscreteDistribution& q) {
    detail::require_shared_support(p, q);
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double a = p.probs()[i], b = q.probs()[i];
        if (a == 0.0) continue;
        if (b == 0.0) return kInf;
        s += a * std::log(a / b);
    }
    return std::max(s, 0.0);
}

inline double total_variation(const DiscreteDistribution& p, const DiscreteDistribution& q) {
    detail::require_shared_support(p, q);
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += std::fabs(p.probs()[i] - q.probs()[i]);
    return 0.5 * s;
}

struct TiltResult {
    double lambda = 1.0;
    std::vector<double> g;        // tilted probabilities on p's support
    std::vector<double> log_ratio;  // log(p_i/g_i), accurate relative to t
    int iterations = 0;
    double sup_phi = 0.0;
    double inf_phi = 0.0;
};

/// Solves Σ p_i/(λ − tφ_i) = 1 for the root λ > t·sup φ (sup over p_i > 0) and
/// returns g_i = p_i/(λ − tφ_i). When t·(sup φ − inf φ) ≤ 1/2 the root is
/// sought as λ = 1 + tμ with μ ∈ [inf φ, sup φ] from the equivalent condition
/// Σ p_i(φ_i − μ)/(1 + t(μ − φ_i)) = 0, which stays well conditioned as t → 0.
/// Otherwise the bisection runs on δ = λ − t·sup φ so the pole stays resolved
/// however large t·sup φ is.
inline TiltResult tilt_optimizer(const DiscreteDistribution& p, const OutcomeFn& phi, double t) {
    if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("tilt parameter t must be positive and finite");
    const auto& x = p.support();
    const auto& w = p.probs();
    const std::size_t n = p.size();
    std::vector<double> f(n);
    TiltResult r;
    r.sup_phi = -kInf;
    r.inf_phi = kInf;
    for (std::size_t i = 0; i < n; ++i) {
        f[i] = phi(x[i]);
        if (!std::isfinite(f[i])) throw DomainError("outcome is not finite at support point " + format_extended(x[i]));
        if (w[i] > 0.0) {
            r.sup_phi = std::max(r.sup_phi, f[i]);
            r.inf_phi = std::min(r.inf_phi, f[i]);
        }
    }
    r.g.assign(n, 0.0);
    r.log_ratio.assign(n, 0.0);
    // log_total = log Σ p_i/den_i, supplied accurately by each branch.
    auto finish = [&](auto&& den, auto&& log_den, double log_total) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (w[i] == 0.0) continue;
            r.g[i] = w[i] / den(i);
            r.log_ratio[i] = log_den(i) + log_total;
            total += r.g[i];
        }
        for (auto& gi : r.g) gi /= total;  // removes the residual bisection error
    };

    if (t * (r.sup_phi - r.inf_phi) <= 0.5) {
        auto h = [&](double mu) {  // (Σ p_i/(1 + t(μ − φ_i)) − 1)/t
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                if (w[i] > 0.0) s += w[i] * (f[i] - mu) / (1.0 + t * (mu - f[i]));
            return s;
        };
        double lo = r.inf_phi, hi = r.sup_phi;  // h(lo) ≥ 0 ≥ h(hi)
        for (; r.iterations < 300; ++r.iterations) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            if (h(mid) > 0.0) lo = mid;
            else hi = mid;
        }
        const double mu = 0.5 * (lo + hi);
        r.lambda = 1.0 + t * mu;
        finish([&](std::size_t i) { return 1.0 + t * (mu - f[i]); },
               [&](std::size_t i) { return std::log1p(t * (mu - f[i])); }, std::log1p(t * h(mu)));
        return r;
    }

    const double ts = t * r.sup_phi;
    std::vector<double> gap(n);  // t(sup φ − φ_i) ≥ 0
    for (std::size_t i = 0; i < n; ++i) gap[i] = t * (r.sup_phi - f[i]);
    auto excess = [&](double delta) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (w[i] > 0.0) s += w[i] / (delta + gap[i]);
        return s - 1.0;
    };
    double lo = 1e-14 * std::max(1.0, std::fabs(ts)), hi = 2.0;
    if (!(excess(lo) > 0.0 && excess(hi) < 0.0)) {
        std::ostringstream os;
        os << "tilt equation has no sign change on (" << lo << ", " << hi << "] above t*sup(phi) = " << ts
           << " (excess " << excess(lo) << ", " << excess(hi) << ")";
        throw NumericalError(os.str());
    }
    for (; r.iterations < 300 && hi - lo > 1e-17 * hi; ++r.iterations) {
        const double mid = 0.5 * (lo + hi);
        if (excess(mid) > 0.0) lo = mid;
        else hi = mid;
    }
    const double delta = 0.5 * (lo + hi);
    r.lambda = ts + delta;
    finish([&](std::size_t i) { return delta + gap[i]; }, [&](std::size_t i) { return std::log(delta + gap[i]); },
           std::log1p(excess(delta)));
    return r;
}

/// sup_g { E_g[φ] − D(p‖g)/t } evaluated at the tilt.
inline double nonparametric_dr_gamma1(const DiscreteDistribution& p, const OutcomeFn& phi, double t) {
    if (phi.is_constant()) return phi.constant_term();
    const TiltResult r = tilt_optimizer(p, phi, t);
    double eg = 0.0, kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double w = p.probs()[i];
        if (w == 0.0) continue;
        eg += r.g[i] * phi(p.support()[i]);
        kl += w * r.log_ratio[i];
    }
    return eg - std::max(kl, 0.0) / t;
}

struct BlowupPoint {
    double epsilon = 0.0;
    double mixture_expectation = 0.0;  // (1−ε)E_P[φ] + εE_{Q^ε}[φ]
    double penalty_bound = 0.0;        // α(P) − N log(1−ε) ≥ α(P(ε))
    double penalty = 0.0;              // α(P(ε)) by direct summation
    double lower_bound = 0.0;          // mixture_expectation − (penalty_bound/k)^γ
};

/// Along P(ε) = (1−ε)P + εQ^ε, with P the fitted model and Q^ε the same model
/// shifted to location θ̂ + ε^{-2}, the objective is bounded below by
/// (1−ε)E_P[φ] + εE_{Q^ε}[φ] − (α(P) − N log(1−ε))^γ/k^γ, because every
/// likelihood factor loses at most (1−ε). Location families only.
inline std::vector<BlowupPoint> mixture_blowup_probe(const FittedModel& m, const OutcomeFn& phi, const PenaltySpec& spec,
                                                     std::span<const double> epsilons) {
    const auto& fam = m.family();
    if (!std::holds_alternative<GaussianKnownVar>(fam) && !std::holds_alternative<GaussianMeanVar>(fam) &&
        !std::holds_alternative<LaplaceLocation>(fam))
        throw DomainError("mixture probe needs a location family, got " + family_name(fam));
    const ParameterVector th = m.mle();
    const double n = static_cast<double>(m.sample_size());
    const double base = m.expectation(th, phi);
    std::vector<BlowupPoint> out;
    for (double eps : epsilons) {
        if (!(eps > 0.0 && eps < 1.0)) throw DomainError("mixture weights must lie in (0, 1)");
        ParameterVector shifted = th;
        shifted[0] += 1.0 / (eps * eps);
        BlowupPoint b;
        b.epsilon = eps;
        b.mixture_expectation = (1.0 - eps) * base + eps * m.expectation(shifted, phi);
        b.penalty_bound = -n * std::log1p(-eps);
        double ll = 0.0;
        for (double x : m.sample().values()) {
            const double a = std::log1p(-eps) + log_density(fam, th, x);
            const double c = std::log(eps) + log_density(fam, shifted, x);
            const double top = std::max(a, c);
            ll += top + std::log(std::exp(a - top) + std::exp(c - top));
        }
        b.penalty = std::max(0.0, m.max_log_likelihood() - ll);
        b.lower_bound = b.mixture_expectation - transform(b.penalty_bound, spec);
        out.push_back(b);
    }
    return out;
}

} // namespace drexp
