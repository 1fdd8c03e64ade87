#pragma once

// Engine-versus-closed-form cross-checks. Gating checks must agree within
// their tolerance; as-printed formulas that disagree with direct maximization
// are reported next to the certified value without gating.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "drexp/closed_forms.hpp"
#include "drexp/engine.hpp"
#include "drexp/family.hpp"
#include "drexp/model.hpp"
#include "drexp/random.hpp"

namespace drexp {

struct OracleCheck {
    std::string group;
    std::string name;
    double engine = kNaN;
    double reference = kNaN;
    std::optional<double> as_printed;
    double error = kNaN;
    double tolerance = 0.0;
    bool relative = true;
    bool gating = true;
    bool passed = false;
};

inline const std::vector<std::string>& oracle_groups() {
    static const std::vector<std::string> g{"gaussian-linear", "gaussian-square", "bernoulli-grid",
                                            "laplace",         "entropic",        "composed"};
    return g;
}

/// N observations X̄ ± 1 alternating (N even) or with a trailing X̄, so the mean is X̄.
inline Sample sample_with_mean(double xbar, std::size_t n) {
    std::vector<double> xs(n, xbar);
    for (std::size_t i = 0; i + 1 < n; i += 2) {
        xs[i] = xbar + 1.0;
        xs[i + 1] = xbar - 1.0;
    }
    return Sample(std::move(xs));
}

/// max over q ∈ [0,1] of q·φ(1) + (1−q)·φ(0) − (α(q)/k)^γ by brute force: an
/// n-point grid, then a 1001-point grid across the two cells around the winner.
inline double bernoulli_grid_oracle(const FittedModel& m, double phi0, double phi1, const PenaltySpec& spec,
                                    std::size_t points = 1000001) {
    auto obj = [&](double q) {
        const double a = m.divergence(ParameterVector{q});
        if (!(a < kInf)) return -kInf;
        const double pen = transform(a, spec);
        if (!(pen < kInf)) return -kInf;
        return q * phi1 + (1.0 - q) * phi0 - pen;
    };
    const double h = 1.0 / static_cast<double>(points - 1);
    double best = -kInf;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < points; ++i) {
        const double v = obj(static_cast<double>(i) * h);
        if (v > best) {
            best = v;
            arg = i;
        }
    }
    const double lo = std::max(0.0, (static_cast<double>(arg) - 1.0) * h);
    const double hi = std::min(1.0, (static_cast<double>(arg) + 1.0) * h);
    for (int j = 0; j <= 1000; ++j) best = std::max(best, obj(lo + (hi - lo) * j / 1000.0));
    return best;
}

namespace detail {

inline OracleCheck make_check(std::string group, std::string name, double engine, double reference, double tol,
                              bool relative = true) {
    OracleCheck c;
    c.group = std::move(group);
    c.name = std::move(name);
    c.engine = engine;
    c.reference = reference;
    c.tolerance = tol;
    c.relative = relative;
    if (engine == reference) c.error = 0.0;
    else if (relative) c.error = std::fabs(engine - reference) / std::max(std::fabs(reference), 1e-300);
    else c.error = std::fabs(engine - reference);
    c.passed = c.error <= tol;
    return c;
}

inline std::string label(std::initializer_list<std::pair<const char*, double>> kv) {
    std::string s;
    for (const auto& [k, v] : kv) s += (s.empty() ? "" : " ") + std::string(k) + "=" + format_short(v);
    return s;
}

} // namespace detail

/// Runs the selected groups (all when `groups` is empty).
inline std::vector<OracleCheck> run_oracle(const std::vector<std::string>& groups = {}, const OptimizerConfig& cfg = {}) {
    auto want = [&](const std::string& g) {
        return groups.empty() || std::find(groups.begin(), groups.end(), g) != groups.end();
    };
    for (const auto& g : groups)
        if (std::find(oracle_groups().begin(), oracle_groups().end(), g) == oracle_groups().end())
            throw UsageError("unknown oracle check '" + g + "'");
    std::vector<OracleCheck> out;

    if (want("gaussian-linear")) {
        for (double beta : {0.1, 1.0, 5.0})
            for (double k : {0.5, 2.0, 8.0})
                for (std::size_t n : {10u, 100u, 1000u})
                    for (double gamma : {1.0, 2.0, kInf})
                        for (double xbar : {-1.0, 0.0, 0.5}) {
                            const auto r = dr_expectation(GaussianKnownVar{}, sample_with_mean(xbar, n),
                                                          OutcomeFn::power(beta, 1), PenaltySpec(k, gamma), cfg);
                            const GaussianClosedFormInput in{beta, k, static_cast<double>(n), gamma, xbar};
                            auto c = detail::make_check(
                                "gaussian-linear",
                                detail::label({{"beta", beta}, {"k", k}, {"N", double(n)}, {"gamma", gamma}, {"xbar", xbar}}),
                                r.value, gaussian_linear(in), 1e-6);
                            if (gamma != 1.0 && !std::isinf(gamma)) c.as_printed = gaussian_linear(in, Formula::AsPrinted);
                            out.push_back(c);
                        }
    }

    if (want("gaussian-square")) {
        const double n = 100, k = 2;
        for (double beta : {0.5, 5.0, 20.0, 24.75})
            for (double xbar : {0.0, 0.3, -1.0}) {
                const Sample s = sample_with_mean(xbar, 100);
                const auto r1 = dr_expectation(GaussianKnownVar{}, s, OutcomeFn::power(beta, 2), PenaltySpec(k, 1.0), cfg);
                auto c1 = detail::make_check("gaussian-square",
                                             detail::label({{"gamma", 1}, {"beta", beta}, {"xbar", xbar}}), r1.value,
                                             gaussian_square_gamma1(beta, k, n, xbar), 1e-6);
                c1.as_printed = gaussian_square_gamma1(beta, k, n, xbar, Formula::AsPrinted);
                out.push_back(c1);
                const auto ri = dr_expectation(GaussianKnownVar{}, s, OutcomeFn::power(beta, 2), PenaltySpec(k, kInf), cfg);
                auto ci = detail::make_check("gaussian-square",
                                             detail::label({{"gamma", kInf}, {"beta", beta}, {"xbar", xbar}}), ri.value,
                                             gaussian_square_gammainf(beta, k, n, xbar), 1e-6);
                ci.as_printed = gaussian_square_gammainf(beta, k, n, xbar, Formula::AsPrinted);
                out.push_back(ci);
            }
        const auto over = dr_expectation(GaussianKnownVar{}, sample_with_mean(0.3, 100), OutcomeFn::power(25.0, 2),
                                         PenaltySpec(k, 1.0), cfg);
        out.push_back(detail::make_check("gaussian-square", "gamma=1 beta=N/2k is +inf", over.value,
                                         gaussian_square_gamma1(25.0, k, n, 0.3), 0.0));
    }

    if (want("bernoulli-grid")) {
        for (auto [ones, n] : {std::pair{2, 3}, std::pair{1, 2}, std::pair{7, 20}, std::pair{0, 5}})
            for (double k : {0.5, 1.0, 2.0})
                for (double gamma : {1.0, kInf}) {
                    std::vector<double> xs(static_cast<std::size_t>(n), 0.0);
                    for (int i = 0; i < ones; ++i) xs[static_cast<std::size_t>(i)] = 1.0;
                    const FittedModel m(Bernoulli{}, Sample(xs));
                    const PenaltySpec spec(k, gamma);
                    const auto r = dr_expectation(m, OutcomeFn::identity(), spec, cfg);
                    out.push_back(detail::make_check(
                        "bernoulli-grid",
                        detail::label({{"ones", double(ones)}, {"N", double(n)}, {"k", k}, {"gamma", gamma}}), r.value,
                        bernoulli_grid_oracle(m, 0.0, 1.0, spec), 1e-6, false));
                }
    }

    if (want("laplace")) {
        RandomStream rng(7, 0);
        const Sample s(draw_sample(LaplaceLocation{}, ParameterVector{0.0}, 1001, rng));
        for (double beta : {10.0, 100.0, 500.5}) {
            const auto r = dr_expectation(LaplaceLocation{}, s, OutcomeFn::power(beta, 1), PenaltySpec(1.0, 1.0), cfg);
            auto c = detail::make_check("laplace", detail::label({{"beta", beta}, {"k", 1}, {"N", 1001}}), r.value,
                                        laplace_linear_approx(beta, 1.0, s), 1e-6);
            c.as_printed = laplace_linear_approx(beta, 1.0, s, Formula::AsPrinted);
            out.push_back(c);
        }
    }

    if (want("entropic")) {
        const std::vector<double> xi{0.0, 1.0};
        out.push_back(detail::make_check("entropic", "two-point k=1", entropic_certainty_equivalent(xi, 1.0),
                                         std::log((1.0 + std::exp(1.0)) / 2.0), 1e-12));
        out.push_back(detail::make_check("entropic", "gaussian m=0 var=1 k=2",
                                         entropic_certainty_equivalent_gaussian(0.0, 1.0, 2.0), 1.0, 1e-12));
        // GaussianKnownVar, γ=1: E^{k,1}(βX) = βX̄ + β²k/2N, the entropic premium with variance 1/N.
        const auto r = dr_expectation(GaussianKnownVar{}, sample_with_mean(0.2, 50), OutcomeFn::power(3.0, 1),
                                      PenaltySpec(2.0, 1.0), cfg);
        out.push_back(detail::make_check("entropic", "gaussian-kv beta=3 k=2 N=50 vs m + k var/2", r.value,
                                         entropic_certainty_equivalent_gaussian(0.6, 9.0 / 50.0, 2.0), 1e-6));
    }

    if (want("composed")) {
        const FittedModel m(Bernoulli{}, Sample({1.0, 1.0, 0.0}));
        const OutcomeFn phi = OutcomeFn::identity();
        for (double beta : {0.5, 2.0}) {
            const auto printed = composed_exponential_dr(m, phi, 1.0, beta, Formula::AsPrinted, cfg);
            const double e0 = 1.0, e1 = std::exp(beta);
            const double direct = std::log(bernoulli_grid_oracle(m, e0, e1, PenaltySpec(1.0, 1.0))) / beta;
            out.push_back(detail::make_check("composed", detail::label({{"printed route beta", beta}}), printed.value,
                                             direct, 1e-6, false));
        }
        const auto small = composed_exponential_dr(m, phi, 1.0, 1e-4, Formula::Certified, cfg);
        const auto plain = dr_expectation(m, phi, PenaltySpec(1.0, 1.0), cfg);
        out.push_back(detail::make_check("composed", "beta=1e-4 limit", small.value, plain.value, 1e-3, false));
    }
    return out;
}

} // namespace drexp
