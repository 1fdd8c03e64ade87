#pragma once

// A family fitted to a sample: MLE plus fast, cancellation-safe divergence
// α(θ) = ℓ(θ̂) − ℓ(θ) for every built-in.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <numeric>
#include <vector>

#include "drexp/error.hpp"
#include "drexp/family.hpp"
#include "drexp/numeric.hpp"
#include "drexp/outcome.hpp"
#include "drexp/sample.hpp"

namespace drexp {

/// What the engine needs from a model: the MLE, the domain and α.
template <class M>
concept PenalizedModel = requires(const M& m, const ParameterVector& th) {
    { m.dimension() } -> std::convertible_to<std::size_t>;
    { m.mle() } -> std::convertible_to<ParameterVector>;
    { m.domain() } -> std::convertible_to<ParameterBox>;
    { m.sample_size() } -> std::convertible_to<std::size_t>;
    { m.divergence(th) } -> std::convertible_to<double>;
};

/// Clamps rounding-level negatives of α to 0; a larger negative means the
/// MLE is not a maximizer and is reported as an internal inconsistency.
inline double clamp_divergence(double raw, double scale) {
    if (raw >= 0.0 || std::isnan(raw)) return raw;
    if (raw >= -1e-10 * std::max(1.0, scale)) return 0.0;
    throw ConsistencyError("negative divergence " + format_extended(raw) + " (the MLE is not a maximizer)");
}

class FittedModel {
public:
    FittedModel(FamilySpec family, Sample sample) : family_(std::move(family)), sample_(std::move(sample)) {
        fit_ = drexp::mle(family_, sample_);
        if (fit_.degenerate)
            throw DegeneracyError("likelihood of " + family_name(family_) + " is unbounded on this sample (MLE " +
                                  fit_.theta.str() + " is degenerate)");
        domain_ = drexp::domain(family_);
        const auto& x = sample_.values();
        n_ = static_cast<double>(x.size());
        std::visit(
            [&](const auto& v) {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, Bernoulli>) {
                    ones_ = std::accumulate(x.begin(), x.end(), 0.0);
                } else if constexpr (std::is_same_v<T, LaplaceLocation>) {
                    sorted_ = x;
                    std::sort(sorted_.begin(), sorted_.end());
                    prefix_.assign(sorted_.size() + 1, 0.0);
                    for (std::size_t i = 0; i < sorted_.size(); ++i) prefix_[i + 1] = prefix_[i] + sorted_[i];
                } else if constexpr (std::is_same_v<T, ExponentialFamily>) {
                    tbar_.assign(v.dim, 0.0);
                    for (double xi : x) {
                        auto t = v.sufficient(xi);
                        for (std::size_t i = 0; i < v.dim; ++i) tbar_[i] += t[i] / n_;
                    }
                    a_hat_ = v.log_partition(fit_.theta.view());
                }
            },
            family_);
        loglik_hat_ = log_likelihood(family_, fit_.theta, sample_);
        scale_ = std::isfinite(loglik_hat_) ? std::fabs(loglik_hat_) : 1.0;
    }

    const FamilySpec& family() const { return family_; }
    const Sample& sample() const { return sample_; }
    const MleResult& mle_result() const { return fit_; }
    ParameterVector mle() const { return fit_.theta; }
    std::size_t dimension() const { return drexp::dimension(family_); }
    std::size_t sample_size() const { return sample_.size(); }
    ParameterBox domain() const { return domain_; }
    double max_log_likelihood() const { return loglik_hat_; }

    /// α(θ); +∞ outside the open domain or where the data have zero density.
    double divergence(const ParameterVector& th) const {
        if (!domain_.contains(th)) return kInf;
        return clamp_divergence(raw_divergence(th), scale_);
    }

    /// ℓ(θ̂) − ℓ(θ) by direct summation of log-densities (unclamped).
    double divergence_by_summation(const ParameterVector& th) const {
        return loglik_hat_ - log_likelihood(family_, th, sample_);
    }

    double expectation(const ParameterVector& th, const OutcomeFn& phi) const {
        return outcome_expectation(family_, th, phi);
    }

private:
    double raw_divergence(const ParameterVector& th) const {
        const double* p = th.coords().data();
        return std::visit(
            [&](const auto& v) -> double {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, Bernoulli>) {
                    // N·KL(p̂ ‖ q) with 0·log(0/q) = 0; log1p keeps it accurate near p̂.
                    const double q = p[0], ph = fit_.theta[0], zeros = n_ - ones_;
                    double a = 0.0;
                    if (ones_ > 0) {
                        if (q == 0.0) return kInf;
                        a -= ones_ * std::log1p((q - ph) / ph);
                    }
                    if (zeros > 0) {
                        if (q == 1.0) return kInf;
                        a -= zeros * std::log1p((ph - q) / (1.0 - ph));
                    }
                    return a;
                } else if constexpr (std::is_same_v<T, GaussianKnownVar>) {
                    const double r = p[0] - fit_.theta[0];
                    return n_ * r * r / (2.0 * v.sigma2);
                } else if constexpr (std::is_same_v<T, GaussianMeanVar>) {
                    const double r = p[0] - fit_.theta[0];
                    const double u = (fit_.theta[1] - p[1]) / p[1];
                    return 0.5 * n_ * ((u - std::log1p(u)) + r * r / p[1]);
                } else if constexpr (std::is_same_v<T, LaplaceLocation>) {
                    return laplace_divergence(p[0]);
                } else {
                    // Exact: N(A(θ) − A(θ̂) − <θ − θ̂, T̄>); no first-order condition needed.
                    double a = v.log_partition(th.view()) - a_hat_;
                    for (std::size_t i = 0; i < v.dim; ++i) a -= (p[i] - fit_.theta[i]) * tbar_[i];
                    return std::isfinite(a) ? n_ * a : kInf;
                }
            },
            family_);
    }

    // Σ|X − μ| − Σ|X − m| from counts and the prefix sums of the sorted data,
    // so a few huge observations do not swamp the difference.
    double laplace_divergence(double mu) const {
        const double m = fit_.theta[0];
        if (mu == m) return 0.0;
        const double a = std::min(mu, m), b = std::max(mu, m), delta = b - a;
        const auto lo_end = std::upper_bound(sorted_.begin(), sorted_.end(), a);
        const auto hi_begin = std::lower_bound(sorted_.begin(), sorted_.end(), b);
        const double n_le_a = static_cast<double>(lo_end - sorted_.begin());
        const double n_ge_b = static_cast<double>(sorted_.end() - hi_begin);
        double mid = 0.0;
        if (hi_begin > lo_end) {
            const std::size_t i = static_cast<std::size_t>(lo_end - sorted_.begin());
            const std::size_t j = static_cast<std::size_t>(hi_begin - sorted_.begin());
            mid = static_cast<double>(j - i) * (a + b) - 2.0 * (prefix_[j] - prefix_[i]);
        }
        const double s = mu > m ? 1.0 : -1.0;
        return s * ((n_le_a - n_ge_b) * delta + mid);
    }

    FamilySpec family_;
    Sample sample_;
    MleResult fit_;
    ParameterBox domain_;
    double n_ = 0.0;
    double ones_ = 0.0;
    std::vector<double> sorted_, prefix_, tbar_;
    double a_hat_ = 0.0;
    double loglik_hat_ = 0.0;
    double scale_ = 1.0;
};

static_assert(PenalizedModel<FittedModel>);

} // namespace drexp
