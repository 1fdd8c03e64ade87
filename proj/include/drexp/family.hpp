#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <functional>
#include <initializer_list>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "drexp/error.hpp"
#include "drexp/expression.hpp"
#include "drexp/numeric.hpp"
#include "drexp/outcome.hpp"
#include "drexp/quadrature.hpp"
#include "drexp/sample.hpp"
#include "drexp/special.hpp"

namespace drexp {

class ParameterVector {
public:
    ParameterVector() = default;
    ParameterVector(std::initializer_list<double> c) : coords_(c) {}
    explicit ParameterVector(std::vector<double> c) : coords_(std::move(c)) {}

    std::size_t size() const { return coords_.size(); }
    double operator[](std::size_t i) const { return coords_[i]; }
    double& operator[](std::size_t i) { return coords_[i]; }
    const std::vector<double>& coords() const { return coords_; }
    std::span<const double> view() const { return coords_; }
    auto begin() const { return coords_.begin(); }
    auto end() const { return coords_.end(); }

    // Lexicographic, which is also the engine's tie-break order.
    friend auto operator<=>(const ParameterVector&, const ParameterVector&) = default;

    std::string str() const {
        std::string s = "(";
        for (std::size_t i = 0; i < coords_.size(); ++i) s += (i ? ", " : "") + format_extended(coords_[i]);
        return s + ")";
    }

private:
    std::vector<double> coords_;
};

/// Per-coordinate bounds; an open end excludes the bound itself.
struct ParameterBox {
    std::vector<double> lo, hi;
    std::vector<bool> lo_open, hi_open;

    static ParameterBox real_line(std::size_t d) {
        return {std::vector<double>(d, -kInf), std::vector<double>(d, kInf), std::vector<bool>(d, true),
                std::vector<bool>(d, true)};
    }
    std::size_t dimension() const { return lo.size(); }

    bool contains(const ParameterVector& t) const {
        if (t.size() != lo.size()) return false;
        for (std::size_t i = 0; i < lo.size(); ++i) {
            if (!std::isfinite(t[i])) return false;
            if (lo_open[i] ? !(t[i] > lo[i]) : !(t[i] >= lo[i])) return false;
            if (hi_open[i] ? !(t[i] < hi[i]) : !(t[i] <= hi[i])) return false;
        }
        return true;
    }

    /// Membership in the closed box (open ends admitted).
    bool closure_contains(const ParameterVector& t) const {
        if (t.size() != lo.size()) return false;
        for (std::size_t i = 0; i < lo.size(); ++i)
            if (!(t[i] >= lo[i] && t[i] <= hi[i])) return false;
        return true;
    }
};

/// Observation support of a custom family: an interval, or finitely many points.
struct Support {
    double lo = -kInf;
    double hi = kInf;
    std::vector<double> points;

    bool discrete() const { return !points.empty(); }
};

struct Bernoulli {};

struct GaussianKnownVar {
    double sigma2 = 1.0;
};

struct GaussianMeanVar {};

/// Laplace location family with scale fixed at 1.
struct LaplaceLocation {};

/// f(x; θ) = h(x) exp(<θ, T(x)> − A(θ)) in natural parameters.
struct ExponentialFamily {
    std::string name = "custom";
    std::size_t dim = 1;
    std::function<std::vector<double>(double)> sufficient;
    std::function<double(std::span<const double>)> log_partition;
    std::function<std::vector<double>(std::span<const double>)> gradient;  // optional ∂A
    std::function<double(double)> log_base;
    Support support;
    ParameterBox domain = ParameterBox::real_line(1);

    /// Family from expressions: T components in x, A in theta1..thetad, log h in x.
    static ExponentialFamily from_expressions(std::string name, const std::vector<std::string>& stats,
                                              const std::string& log_partition, const std::string& log_base,
                                              Support support, std::optional<ParameterBox> domain = std::nullopt) {
        if (stats.empty()) throw UsageError("custom family needs at least one sufficient statistic");
        ExponentialFamily f;
        f.name = std::move(name);
        f.dim = stats.size();
        std::vector<Expression> ts;
        for (const auto& s : stats) ts.push_back(Expression::in_x(s));
        f.sufficient = [ts](double x) {
            std::vector<double> out;
            out.reserve(ts.size());
            for (const auto& e : ts) out.push_back(e(x));
            return out;
        };
        std::vector<std::string> names;
        for (std::size_t i = 0; i < f.dim; ++i) names.push_back("theta" + std::to_string(i + 1));
        if (f.dim == 1) names.push_back("theta");
        Expression a(log_partition, names);
        const std::size_t d = f.dim;
        f.log_partition = [a, d](std::span<const double> th) {
            if (d == 1) {
                const double v[2] = {th[0], th[0]};
                return a.eval(v);
            }
            return a.eval(th);
        };
        Expression h = Expression::in_x(log_base.empty() ? "0" : log_base);
        f.log_base = [h](double x) { return h(x); };
        f.support = std::move(support);
        f.domain = domain ? *domain : ParameterBox::real_line(f.dim);
        if (f.domain.dimension() != f.dim) throw UsageError("custom family domain dimension mismatch");
        return f;
    }
};

using FamilySpec = std::variant<Bernoulli, GaussianKnownVar, GaussianMeanVar, LaplaceLocation, ExponentialFamily>;

struct MleResult {
    ParameterVector theta;
    bool degenerate = false;   // likelihood unbounded on the open domain (e.g. σ̂² = 0)
    bool on_boundary = false;  // MLE on the boundary of the closed domain
    int iterations = 0;
};

inline std::size_t dimension(const FamilySpec& f) {
    if (std::holds_alternative<GaussianMeanVar>(f)) return 2;
    if (auto e = std::get_if<ExponentialFamily>(&f)) return e->dim;
    return 1;
}

inline std::string family_name(const FamilySpec& f) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Bernoulli>) return "bernoulli";
            else if constexpr (std::is_same_v<T, GaussianKnownVar>) return "gaussian-kv";
            else if constexpr (std::is_same_v<T, GaussianMeanVar>) return "gaussian-mv";
            else if constexpr (std::is_same_v<T, LaplaceLocation>) return "laplace";
            else return v.name;
        },
        f);
}

inline std::vector<std::string> parameter_names(const FamilySpec& f) {
    return std::visit(
        [](const auto& v) -> std::vector<std::string> {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Bernoulli>) return {"q"};
            else if constexpr (std::is_same_v<T, GaussianMeanVar>) return {"mu", "sigma2"};
            else if constexpr (std::is_same_v<T, ExponentialFamily>) {
                std::vector<std::string> n;
                for (std::size_t i = 0; i < v.dim; ++i) n.push_back("theta" + std::to_string(i + 1));
                return n;
            } else return {"mu"};
        },
        f);
}

/// Admissible parameters. Bernoulli uses the closed interval [0, 1].
inline ParameterBox domain(const FamilySpec& f) {
    return std::visit(
        [](const auto& v) -> ParameterBox {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Bernoulli>) return {{0.0}, {1.0}, {false}, {false}};
            else if constexpr (std::is_same_v<T, GaussianMeanVar>)
                return {{-kInf, 0.0}, {kInf, kInf}, {true, true}, {true, true}};
            else if constexpr (std::is_same_v<T, ExponentialFamily>) return v.domain;
            else return ParameterBox::real_line(1);
        },
        f);
}

inline void require_in_domain(const FamilySpec& f, const ParameterVector& theta) {
    if (!domain(f).contains(theta))
        throw DomainError("parameter " + theta.str() + " outside the domain of family " + family_name(f));
}

inline void validate_family(const FamilySpec& f) {
    if (auto g = std::get_if<GaussianKnownVar>(&f))
        if (!(g->sigma2 > 0.0) || !std::isfinite(g->sigma2)) throw DomainError("gaussian-kv needs sigma2 > 0");
    if (auto e = std::get_if<ExponentialFamily>(&f)) {
        if (!e->sufficient || !e->log_partition || !e->log_base)
            throw DomainError("custom family needs T, A and log h");
        if (e->domain.dimension() != e->dim) throw DomainError("custom family domain dimension mismatch");
        if (!e->support.discrete() && !(e->support.lo < e->support.hi))
            throw DomainError("custom family support is empty");
    }
}

namespace detail {

inline double dot(const std::vector<double>& a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline bool on_support(const Support& s, double x) {
    if (!s.discrete()) return x >= s.lo && x <= s.hi;
    for (double p : s.points)
        if (std::fabs(p - x) <= 1e-12 * (1.0 + std::fabs(x))) return true;
    return false;
}

inline double ef_log_density(const ExponentialFamily& e, std::span<const double> th, double x) {
    if (!on_support(e.support, x)) return -kInf;
    return e.log_base(x) + dot(e.sufficient(x), th) - e.log_partition(th);
}

/// Largest step <= h0 keeping θ ± h e_i inside the domain.
inline double safe_step(const ParameterBox& box, const ParameterVector& th, std::size_t i, double h0) {
    double h = h0;
    for (int k = 0; k < 60; ++k) {
        ParameterVector a = th, b = th;
        a[i] += h;
        b[i] -= h;
        if (box.contains(a) && box.contains(b)) return h;
        h *= 0.5;
    }
    throw DomainError("parameter " + th.str() + " is on the domain boundary; no finite-difference step fits");
}

inline std::vector<double> ef_gradient(const ExponentialFamily& e, const ParameterVector& th) {
    if (e.gradient) return e.gradient(th.view());
    std::vector<double> g(e.dim);
    for (std::size_t i = 0; i < e.dim; ++i) {
        const double h = safe_step(e.domain, th, i, 1e-6 * (1.0 + std::fabs(th[i])));
        ParameterVector a = th, b = th;
        a[i] += h;
        b[i] -= h;
        g[i] = (e.log_partition(a.view()) - e.log_partition(b.view())) / (2.0 * h);
    }
    return g;
}

/// Central second differences of A with step 1e-5·(1+|θ_i|).
inline Matrix ef_hessian(const ExponentialFamily& e, const ParameterVector& th) {
    const std::size_t d = e.dim;
    std::vector<double> h(d);
    for (std::size_t i = 0; i < d; ++i) h[i] = safe_step(e.domain, th, i, 1e-5 * (1.0 + std::fabs(th[i])));
    auto A = [&](double di, std::size_t i, double dj, std::size_t j) {
        ParameterVector p = th;
        p[i] += di;
        p[j] += dj;
        return e.log_partition(p.view());
    };
    const double a0 = e.log_partition(th.view());
    Matrix m(d);
    for (std::size_t i = 0; i < d; ++i) {
        m(i, i) = (A(h[i], i, 0, i) - 2.0 * a0 + A(-h[i], i, 0, i)) / (h[i] * h[i]);
        for (std::size_t j = 0; j < i; ++j) {
            const double v = (A(h[i], i, h[j], j) - A(h[i], i, -h[j], j) - A(-h[i], i, h[j], j) +
                              A(-h[i], i, -h[j], j)) / (4.0 * h[i] * h[j]);
            m(i, j) = m(j, i) = v;
        }
    }
    return m;
}

inline ParameterVector ef_start(const ParameterBox& box) {
    std::vector<double> s(box.dimension());
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double lo = box.lo[i], hi = box.hi[i];
        if (std::isfinite(lo) && std::isfinite(hi)) s[i] = 0.5 * (lo + hi);
        else if (std::isfinite(lo)) s[i] = lo + 1.0;
        else if (std::isfinite(hi)) s[i] = hi - 1.0;
    }
    return ParameterVector(std::move(s));
}

/// Damped Newton on the concave per-observation log-likelihood <θ, T̄> − A(θ).
inline MleResult ef_mle(const ExponentialFamily& e, const Sample& s) {
    std::vector<double> tbar(e.dim, 0.0);
    for (double x : s.values()) {
        if (!on_support(e.support, x))
            throw DomainError("observation " + format_extended(x) + " outside the support of " + e.name);
        auto t = e.sufficient(x);
        for (std::size_t i = 0; i < e.dim; ++i) tbar[i] += t[i] / static_cast<double>(s.size());
    }
    double tscale = 1.0;
    for (double v : tbar) tscale = std::max(tscale, std::fabs(v));
    const double gtol = (e.gradient ? 1e-12 : 1e-9) * tscale;
    auto objective = [&](const ParameterVector& th) {
        if (!e.domain.contains(th)) return -kInf;
        const double v = dot(tbar, th.view()) - e.log_partition(th.view());
        return std::isfinite(v) ? v : -kInf;
    };
    ParameterVector th = ef_start(e.domain);
    double f = objective(th);
    double gnorm = kInf;
    for (int it = 0; it < 200; ++it) {
        auto grad = ef_gradient(e, th);
        gnorm = 0.0;
        for (std::size_t i = 0; i < e.dim; ++i) {
            grad[i] = tbar[i] - grad[i];
            gnorm = std::max(gnorm, std::fabs(grad[i]));
        }
        if (gnorm <= gtol) return {th, false, false, it};
        std::vector<double> step;
        try {
            step = spd_solve(ef_hessian(e, th), grad);
        } catch (const DegeneracyError&) {
            step = grad;
        }
        double t = 1.0;
        bool moved = false;
        for (int k = 0; k < 60; ++k, t *= 0.5) {
            ParameterVector cand = th;
            for (std::size_t i = 0; i < e.dim; ++i) cand[i] += t * step[i];
            const double fc = objective(cand);
            if (fc >= f - 1e-15 * std::fabs(f)) {
                double moved_by = 0.0;
                for (std::size_t i = 0; i < e.dim; ++i)
                    moved_by = std::max(moved_by, std::fabs(cand[i] - th[i]) / (1.0 + std::fabs(th[i])));
                th = cand;
                f = fc;
                moved = moved_by > 1e-15;
                break;
            }
        }
        for (double c : th)
            if (std::fabs(c) > 1e12)
                throw ConvergenceError("custom-family MLE diverges (|theta| > 1e12 after " + std::to_string(it + 1) +
                                       " iterations); the mean of T is likely on the boundary of its range");
        if (!moved) {
            if (gnorm <= 1e3 * gtol) return {th, false, false, it};
            break;
        }
    }
    throw ConvergenceError("custom-family MLE did not converge: theta=" + th.str() +
                           ", |score|_inf=" + format_extended(gnorm) + ", tolerance=" + format_extended(gtol));
}

inline double laplace_expectation_of_leaf(double mu, const Leaf& leaf, const quad::Tolerance& tol) {
    // Integrate in u = x − μ so the density is not quantized at ulp(μ) when |μ| is large.
    auto dens = [&](double u) {
        const double w = 0.5 * std::exp(-std::fabs(u));
        return w == 0.0 ? 0.0 : OutcomeFn::eval_leaf(leaf, mu + u) * w;
    };
    return quad::integrate(dens, -kInf, 0.0, tol).value + quad::integrate(dens, 0.0, kInf, tol).value;
}

inline double gaussian_expectation_of_leaf(double mu, double s2, const Leaf& leaf, const quad::Tolerance& tol) {
    const double sd = std::sqrt(s2);
    auto dens = [&](double z) {
        const double w = special::normal_pdf(z);
        return w == 0.0 ? 0.0 : OutcomeFn::eval_leaf(leaf, mu + sd * z) * w;
    };
    return quad::integrate(dens, -kInf, 0.0, tol).value + quad::integrate(dens, 0.0, kInf, tol).value;
}

} // namespace detail

inline double log_density(const FamilySpec& f, const ParameterVector& th, double x) {
    return std::visit(
        [&](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Bernoulli>) {
                if (x == 1.0) return std::log(th[0]);
                if (x == 0.0) return std::log1p(-th[0]);
                return -kInf;
            } else if constexpr (std::is_same_v<T, GaussianKnownVar>) {
                const double r = x - th[0];
                return -0.5 * std::log(2.0 * std::numbers::pi * v.sigma2) - 0.5 * r * r / v.sigma2;
            } else if constexpr (std::is_same_v<T, GaussianMeanVar>) {
                const double r = x - th[0];
                return -0.5 * std::log(2.0 * std::numbers::pi * th[1]) - 0.5 * r * r / th[1];
            } else if constexpr (std::is_same_v<T, LaplaceLocation>) {
                return -std::numbers::ln2 - std::fabs(x - th[0]);
            } else {
                return detail::ef_log_density(v, th.view(), x);
            }
        },
        f);
}

/// Σ log f(X_n; θ); −∞ when a datum has zero density.
inline double log_likelihood(const FamilySpec& f, const ParameterVector& th, const Sample& s) {
    require_in_domain(f, th);
    if (std::holds_alternative<Bernoulli>(f)) {
        double ones = 0.0;
        for (double x : s.values()) {
            if (x != 0.0 && x != 1.0) return -kInf;
            ones += x;
        }
        const double zeros = static_cast<double>(s.size()) - ones;
        const double q = th[0];
        double l = 0.0;
        if (ones > 0) l += ones * std::log(q);
        if (zeros > 0) l += zeros * std::log1p(-q);
        return l;
    }
    double l = 0.0;
    for (double x : s.values()) l += log_density(f, th, x);
    return l;
}

inline MleResult mle(const FamilySpec& f, const Sample& s) {
    validate_family(f);
    return std::visit(
        [&](const auto& v) -> MleResult {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Bernoulli>) {
                double ones = 0.0;
                for (double x : s.values()) {
                    if (x != 0.0 && x != 1.0)
                        throw DomainError("bernoulli observations must be 0 or 1, got " + format_extended(x));
                    ones += x;
                }
                const double p = ones / static_cast<double>(s.size());
                return {ParameterVector{p}, false, p == 0.0 || p == 1.0, 0};
            } else if constexpr (std::is_same_v<T, GaussianKnownVar>) {
                return {ParameterVector{s.mean()}, false, false, 0};
            } else if constexpr (std::is_same_v<T, GaussianMeanVar>) {
                const double var = s.variance_mle();
                return {ParameterVector{s.mean(), var}, !(var > 0.0), !(var > 0.0), 0};
            } else if constexpr (std::is_same_v<T, LaplaceLocation>) {
                auto xs = s.values();
                const std::size_t k = (xs.size() - 1) / 2;
                std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(k), xs.end());
                return {ParameterVector{xs[k]}, false, false, 0};
            } else {
                return detail::ef_mle(v, s);
            }
        },
        f);
}

/// E_θ[φ(X)]: closed forms for the recognized leaves, quadrature otherwise.
inline double outcome_expectation(const FamilySpec& f, const ParameterVector& th, const OutcomeFn& phi,
                                  const quad::Tolerance& tol = {}) {
    require_in_domain(f, th);
    if (std::holds_alternative<Bernoulli>(f)) {
        const double q = th[0];
        return (q > 0.0 ? q * phi(1.0) : 0.0) + (q < 1.0 ? (1.0 - q) * phi(0.0) : 0.0);
    }
    if (auto e = std::get_if<ExponentialFamily>(&f); e && e->support.discrete()) {
        double s = 0.0;
        for (double x : e->support.points) {
            const double w = std::exp(detail::ef_log_density(*e, th.view(), x));
            if (w > 0.0) s += w * phi(x);
        }
        return s;
    }
    double total = phi.constant_term();
    for (const auto& term : phi.terms()) {
        const Leaf& leaf = *term.leaf;
        if (std::holds_alternative<leaf::Table>(leaf))
            throw DomainError("table outcome needs a family with discrete support");
        double v = 0.0;
        if (std::holds_alternative<GaussianKnownVar>(f) || std::holds_alternative<GaussianMeanVar>(f)) {
            const double mu = th[0];
            const double s2 = std::holds_alternative<GaussianKnownVar>(f) ? std::get<GaussianKnownVar>(f).sigma2 : th[1];
            if (std::holds_alternative<leaf::Identity>(leaf)) v = mu;
            else if (std::holds_alternative<leaf::Square>(leaf)) v = mu * mu + s2;
            else if (auto ind = std::get_if<leaf::Indicator>(&leaf)) {
                const double z = (ind->threshold - mu) / std::sqrt(s2);
                v = ind->above ? special::normal_cdf(-z) : special::normal_cdf(z);
            } else v = detail::gaussian_expectation_of_leaf(mu, s2, leaf, tol);
        } else if (std::holds_alternative<LaplaceLocation>(f)) {
            const double mu = th[0];
            if (std::holds_alternative<leaf::Identity>(leaf)) v = mu;
            else if (std::holds_alternative<leaf::Square>(leaf)) v = mu * mu + 2.0;
            else if (auto ind = std::get_if<leaf::Indicator>(&leaf)) {
                const double t = ind->threshold;
                const double above = t >= mu ? 0.5 * std::exp(-(t - mu)) : 1.0 - 0.5 * std::exp(-(mu - t));
                v = ind->above ? above : 1.0 - above;
            } else v = detail::laplace_expectation_of_leaf(mu, leaf, tol);
        } else {
            const auto& e = std::get<ExponentialFamily>(f);
            auto dens = [&](double x) {
                const double w = std::exp(detail::ef_log_density(e, th.view(), x));
                return w == 0.0 ? 0.0 : OutcomeFn::eval_leaf(leaf, x) * w;
            };
            const double lo = e.support.lo, hi = e.support.hi;
            if (std::isfinite(lo) || std::isfinite(hi)) {
                v = quad::integrate(dens, lo, hi, tol).value;
            } else {
                v = quad::integrate(dens, -kInf, 0.0, tol).value + quad::integrate(dens, 0.0, kInf, tol).value;
            }
        }
        if (!std::isfinite(v)) throw NonIntegrableError("E_theta[phi] is not finite at theta=" + th.str());
        total += term.coef * v;
    }
    return total;
}

/// Fisher information per observation in the family's exposed parametrization.
inline Matrix information_matrix(const FamilySpec& f, const ParameterVector& th) {
    require_in_domain(f, th);
    Matrix m(dimension(f));
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Bernoulli>) {
                const double q = th[0];
                if (!(q > 0.0 && q < 1.0)) throw DegeneracyError("bernoulli information is singular at q in {0, 1}");
                m(0, 0) = 1.0 / (q * (1.0 - q));
            } else if constexpr (std::is_same_v<T, GaussianKnownVar>) {
                m(0, 0) = 1.0 / v.sigma2;
            } else if constexpr (std::is_same_v<T, GaussianMeanVar>) {
                m(0, 0) = 1.0 / th[1];
                m(1, 1) = 0.5 / (th[1] * th[1]);
            } else if constexpr (std::is_same_v<T, LaplaceLocation>) {
                m(0, 0) = 1.0;
            } else {
                m = detail::ef_hessian(v, th);
            }
        },
        f);
    cholesky(m);  // throws DegeneracyError unless positive definite
    return m;
}

/// Exponential-family form of a built-in (natural parameters).
inline ExponentialFamily to_exponential_family(const FamilySpec& f) {
    return std::visit(
        [](const auto& v) -> ExponentialFamily {
            using T = std::decay_t<decltype(v)>;
            ExponentialFamily e;
            if constexpr (std::is_same_v<T, Bernoulli>) {
                e.name = "bernoulli-natural";
                e.sufficient = [](double x) { return std::vector<double>{x}; };
                e.log_partition = [](std::span<const double> t) {
                    return t[0] > 0 ? t[0] + std::log1p(std::exp(-t[0])) : std::log1p(std::exp(t[0]));
                };
                e.gradient = [](std::span<const double> t) { return std::vector<double>{1.0 / (1.0 + std::exp(-t[0]))}; };
                e.log_base = [](double) { return 0.0; };
                e.support.points = {0.0, 1.0};
            } else if constexpr (std::is_same_v<T, GaussianKnownVar>) {
                const double s2 = v.sigma2;
                e.name = "gaussian-kv-natural";
                e.sufficient = [](double x) { return std::vector<double>{x}; };
                e.log_partition = [s2](std::span<const double> t) { return 0.5 * s2 * t[0] * t[0]; };
                e.gradient = [s2](std::span<const double> t) { return std::vector<double>{s2 * t[0]}; };
                e.log_base = [s2](double x) { return -0.5 * x * x / s2 - 0.5 * std::log(2.0 * std::numbers::pi * s2); };
            } else if constexpr (std::is_same_v<T, GaussianMeanVar>) {
                e.name = "gaussian-mv-natural";
                e.dim = 2;
                e.sufficient = [](double x) { return std::vector<double>{x, x * x}; };
                e.log_partition = [](std::span<const double> t) {
                    return -t[0] * t[0] / (4.0 * t[1]) - 0.5 * std::log(-2.0 * t[1]);
                };
                e.gradient = [](std::span<const double> t) {
                    return std::vector<double>{-t[0] / (2.0 * t[1]), t[0] * t[0] / (4.0 * t[1] * t[1]) - 0.5 / t[1]};
                };
                e.log_base = [](double) { return -0.5 * std::log(2.0 * std::numbers::pi); };
                e.domain = {{-kInf, -kInf}, {kInf, 0.0}, {true, true}, {true, true}};
            } else if constexpr (std::is_same_v<T, LaplaceLocation>) {
                throw DomainError("the Laplace location family is not an exponential family");
            } else {
                e = v;
            }
            return e;
        },
        f);
}

inline ParameterVector to_natural(const FamilySpec& f, const ParameterVector& th) {
    require_in_domain(f, th);
    if (std::holds_alternative<Bernoulli>(f)) return {std::log(th[0] / (1.0 - th[0]))};
    if (auto g = std::get_if<GaussianKnownVar>(&f)) return {th[0] / g->sigma2};
    if (std::holds_alternative<GaussianMeanVar>(f)) return {th[0] / th[1], -0.5 / th[1]};
    if (std::holds_alternative<LaplaceLocation>(f)) throw DomainError("laplace has no natural parametrization");
    return th;
}

inline ParameterVector from_natural(const FamilySpec& f, const ParameterVector& eta) {
    if (std::holds_alternative<Bernoulli>(f)) return {1.0 / (1.0 + std::exp(-eta[0]))};
    if (auto g = std::get_if<GaussianKnownVar>(&f)) return {g->sigma2 * eta[0]};
    if (std::holds_alternative<GaussianMeanVar>(f)) {
        const double s2 = -0.5 / eta[1];
        return {eta[0] * s2, s2};
    }
    if (std::holds_alternative<LaplaceLocation>(f)) throw DomainError("laplace has no natural parametrization");
    return eta;
}

struct FamilyCheck {
    double max_normalization_error = 0.0;
    double min_second_difference = kInf;
};

/// Numerical checks of a custom family at the probe parameters: density
/// integrates (sums) to 1 within 1e-6 and A has nonnegative second differences.
inline FamilyCheck check_exponential_family(const ExponentialFamily& e, const std::vector<ParameterVector>& probes) {
    validate_family(FamilySpec{e});
    FamilyCheck out;
    for (const auto& th : probes) {
        if (!e.domain.contains(th)) throw DomainError("probe " + th.str() + " outside the custom family's domain");
        double mass = 0.0;
        if (e.support.discrete()) {
            for (double x : e.support.points) mass += std::exp(detail::ef_log_density(e, th.view(), x));
        } else {
            auto dens = [&](double x) { return std::exp(detail::ef_log_density(e, th.view(), x)); };
            if (std::isfinite(e.support.lo) || std::isfinite(e.support.hi))
                mass = quad::integrate(dens, e.support.lo, e.support.hi).value;
            else
                mass = quad::integrate(dens, -kInf, 0.0).value + quad::integrate(dens, 0.0, kInf).value;
        }
        out.max_normalization_error = std::max(out.max_normalization_error, std::fabs(mass - 1.0));
        const Matrix h = detail::ef_hessian(e, th);
        for (std::size_t i = 0; i < e.dim; ++i) out.min_second_difference = std::min(out.min_second_difference, h(i, i));
    }
    if (out.max_normalization_error > 1e-6)
        throw DomainError(e.name + ": density does not integrate to 1 (error " +
                          format_extended(out.max_normalization_error) + ")");
    if (out.min_second_difference < -1e-6)
        throw DomainError(e.name + ": log-partition is not convex (second difference " +
                          format_extended(out.min_second_difference) + ")");
    return out;
}

} // namespace drexp
