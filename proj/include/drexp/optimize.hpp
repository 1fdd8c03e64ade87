#pragma once

// Derivative-free scalar and simplex optimizers, bisection, and a small
// index-ordered parallel_for used by the grid stages.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <functional>
#include <numeric>
#include <thread>
#include <vector>

#include "drexp/numeric.hpp"

namespace drexp::opt {

struct ScalarOptimum {
    double x = 0.0;
    double value = -kInf;
    int evaluations = 0;
    bool converged = false;
    double bracket_width = kInf;
};

/// Brent's method (golden section + parabolic interpolation) maximizing f on
/// [a, b]. Non-finite values are treated as -inf, so parabolic steps fall back
/// to golden section near infeasible points.
template <class F>
ScalarOptimum brent_maximize(F&& f, double a, double b, double rel_tol, int max_iter = 500) {
    constexpr double cgold = 0.3819660112501051;
    constexpr double huge = 1e300;
    auto neg = [&](double x) {
        const double v = f(x);
        return std::isfinite(v) ? -v : huge;
    };
    ScalarOptimum out;
    if (a > b) std::swap(a, b);
    double x = a + cgold * (b - a);
    double w = x, v = x;
    double fx = neg(x);
    double fw = fx, fv = fx;
    double d = 0.0, e = 0.0;
    int evals = 1;
    int iter = 0;
    for (; iter < max_iter; ++iter) {
        const double xm = 0.5 * (a + b);
        const double tol1 = rel_tol * std::max(1.0, std::fabs(x)) + 1e-3 * kEps;
        const double tol2 = 2.0 * tol1;
        if (std::fabs(x - xm) <= tol2 - 0.5 * (b - a)) {
            out.converged = true;
            break;
        }
        bool golden = true;
        if (std::fabs(e) > tol1 && fx < huge && fw < huge && fv < huge) {
            double r = (x - w) * (fx - fv);
            double q = (x - v) * (fx - fw);
            double p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if (q > 0.0) p = -p;
            q = std::fabs(q);
            const double etemp = e;
            e = d;
            if (std::fabs(p) < std::fabs(0.5 * q * etemp) && p > q * (a - x) && p < q * (b - x)) {
                d = p / q;
                const double u = x + d;
                if (u - a < tol2 || b - u < tol2) d = (xm - x >= 0.0) ? tol1 : -tol1;
                golden = false;
            }
        }
        if (golden) {
            e = (x >= xm) ? a - x : b - x;
            d = cgold * e;
        }
        const double u = (std::fabs(d) >= tol1) ? x + d : x + ((d >= 0.0) ? tol1 : -tol1);
        const double fu = neg(u);
        ++evals;
        if (fu <= fx) {
            if (u >= x) a = x;
            else b = x;
            v = w; fv = fw;
            w = x; fw = fx;
            x = u; fx = fu;
        } else {
            if (u < x) a = u;
            else b = u;
            if (fu <= fw || w == x) {
                v = w; fv = fw;
                w = u; fw = fu;
            } else if (fu <= fv || v == x || v == w) {
                v = u; fv = fu;
            }
        }
    }
    out.x = x;
    out.value = (fx >= huge) ? -kInf : -fx;
    out.evaluations = evals;
    out.bracket_width = b - a;
    return out;
}

/// Bisection for the boundary of a monotone predicate: `inside(lo)` holds,
/// `inside(hi)` fails. Returns the last point known to be inside.
template <class P>
double bisect_boundary(P&& inside, double lo, double hi, int max_iter = 400) {
    for (int i = 0; i < max_iter; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        if (inside(mid)) lo = mid;
        else hi = mid;
    }
    return lo;
}

struct SimplexOptimum {
    std::vector<double> x;
    double value = -kInf;
    int evaluations = 0;
    bool converged = false;
    double simplex_size = kInf;
};

/// Nelder-Mead maximization with the standard coefficients. `steps` sets the
/// initial simplex edge per coordinate.
template <class F>
SimplexOptimum nelder_mead_maximize(F&& f, std::vector<double> start, const std::vector<double>& steps,
                                    double rel_tol, int max_evals = 20000) {
    const std::size_t n = start.size();
    auto neg = [&](const std::vector<double>& x) {
        const double v = f(x);
        return std::isfinite(v) ? -v : kInf;
    };
    std::vector<std::vector<double>> pts(n + 1, start);
    for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += steps[i];
    std::vector<double> vals(n + 1);
    int evals = 0;
    for (std::size_t i = 0; i <= n; ++i) {
        vals[i] = neg(pts[i]);
        ++evals;
    }
    std::vector<std::size_t> order(n + 1);
    SimplexOptimum out;
    auto size_of = [&]() {
        double s = 0.0;
        for (std::size_t i = 1; i <= n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                s = std::max(s, std::fabs(pts[i][j] - pts[0][j]) / std::max(1.0, std::fabs(pts[0][j])));
        return s;
    };
    while (evals < max_evals) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return vals[l] < vals[r]; });
        {
            auto p2 = pts;
            auto v2 = vals;
            for (std::size_t i = 0; i <= n; ++i) {
                pts[i] = p2[order[i]];
                vals[i] = v2[order[i]];
            }
        }
        const double spread = std::fabs(vals[n] - vals[0]);
        if (size_of() < rel_tol && (spread <= 1e-14 * (1.0 + std::fabs(vals[0])) || !std::isfinite(spread))) {
            out.converged = true;
            break;
        }
        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) centroid[j] += pts[i][j] / static_cast<double>(n);
        auto along = [&](double t) {
            std::vector<double> p(n);
            for (std::size_t j = 0; j < n; ++j) p[j] = centroid[j] + t * (pts[n][j] - centroid[j]);
            return p;
        };
        auto xr = along(-1.0);
        const double fr = neg(xr);
        ++evals;
        if (fr < vals[0]) {
            auto xe = along(-2.0);
            const double fe = neg(xe);
            ++evals;
            if (fe < fr) { pts[n] = xe; vals[n] = fe; }
            else { pts[n] = xr; vals[n] = fr; }
        } else if (fr < vals[n - 1]) {
            pts[n] = xr; vals[n] = fr;
        } else {
            const bool outside = fr < vals[n];
            auto xc = along(outside ? -0.5 : 0.5);
            const double fc = neg(xc);
            ++evals;
            if (fc < (outside ? fr : vals[n])) {
                pts[n] = xc; vals[n] = fc;
            } else {
                for (std::size_t i = 1; i <= n; ++i) {
                    for (std::size_t j = 0; j < n; ++j) pts[i][j] = pts[0][j] + 0.5 * (pts[i][j] - pts[0][j]);
                    vals[i] = neg(pts[i]);
                    ++evals;
                }
            }
        }
    }
    std::size_t best = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
    out.x = pts[best];
    out.value = std::isfinite(vals[best]) ? -vals[best] : -kInf;
    out.evaluations = evals;
    out.simplex_size = size_of();
    return out;
}

/// Runs body(i) for i in [0, n). Work is split in contiguous index blocks so
/// results written to slot i do not depend on scheduling.
template <class Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    const std::size_t workers = std::min<std::size_t>(threads, n);
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            const std::size_t begin = n * w / workers;
            const std::size_t end = n * (w + 1) / workers;
            try {
                for (std::size_t i = begin; i < end; ++i) body(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace drexp::opt
