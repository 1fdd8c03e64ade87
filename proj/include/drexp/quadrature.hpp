#pragma once

#include <algorithm>
#include <cmath>
#include <queue>
#include <vector>

#include "drexp/error.hpp"
#include "drexp/numeric.hpp"

namespace drexp::quad {

struct Tolerance {
    double abs = 1e-10;
    double rel = 1e-8;
    int max_intervals = 4000;
};

struct Result {
    double value = 0.0;
    double error = 0.0;
    int intervals = 0;
};

namespace detail {

// Kronrod 15-point nodes (positive half) and weights; Gauss 7-point weights on the odd nodes.
inline constexpr double xgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                                  0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                                  0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                                  0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double wgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                                  0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                                  0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                                  0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double wg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                 0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double a, b, value, error;
    bool operator<(const Segment& o) const { return error < o.error; }
};

template <class F>
Segment gk15(F& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double fc = f(c);
    double kron = fc * wgk[7];
    double gauss = fc * wg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = h * xgk[j];
        const double f1 = f(c - dx);
        const double f2 = f(c + dx);
        kron += wgk[j] * (f1 + f2);
        if (j % 2 == 1) gauss += wg[j / 2] * (f1 + f2);
    }
    const double value = kron * h;
    const double err = std::fabs((kron - gauss) * h);
    if (!std::isfinite(value)) throw NonIntegrableError("integrand is not finite on the integration range");
    return {a, b, value, err};
}

} // namespace detail

/// Globally adaptive Gauss-Kronrod (7/15) on a finite interval.
template <class F>
Result integrate_finite(F&& f, double a, double b, const Tolerance& tol = {}) {
    if (a == b) return {};
    std::priority_queue<detail::Segment> heap;
    auto first = detail::gk15(f, a, b);
    double total = first.value, err = first.error;
    heap.push(first);
    int n = 1;
    while (err > std::max(tol.abs, tol.rel * std::fabs(total))) {
        if (n >= tol.max_intervals)
            throw NonIntegrableError("quadrature did not reach tolerance (integral may diverge)");
        auto s = heap.top();
        heap.pop();
        const double m = 0.5 * (s.a + s.b);
        if (m == s.a || m == s.b) throw NonIntegrableError("quadrature interval collapsed");
        auto l = detail::gk15(f, s.a, m);
        auto r = detail::gk15(f, m, s.b);
        total += l.value + r.value - s.value;
        err += l.error + r.error - s.error;
        heap.push(l);
        heap.push(r);
        ++n;
    }
    // Re-sum to shed accumulated cancellation from the running updates.
    double sum = 0.0, esum = 0.0;
    while (!heap.empty()) {
        sum += heap.top().value;
        esum += heap.top().error;
        heap.pop();
    }
    return {sum, esum, n};
}

/// Integral over [lo, hi] where either end may be infinite. Infinite ranges
/// are mapped to (-1, 1) or [0, 1) around `center` with length `scale`.
template <class F>
Result integrate(F&& f, double lo, double hi, const Tolerance& tol = {}, double center = 0.0, double scale = 1.0) {
    if (lo > hi) throw DomainError("integrate: lower limit above upper limit");
    const bool lo_inf = std::isinf(lo), hi_inf = std::isinf(hi);
    if (!lo_inf && !hi_inf) return integrate_finite(f, lo, hi, tol);
    if (lo_inf && hi_inf) {
        auto g = [&](double t) {
            const double d = 1.0 - t * t;
            if (d <= 0.0) return 0.0;
            const double v = f(center + scale * t / d);
            return v == 0.0 ? 0.0 : v * scale * (1.0 + t * t) / (d * d);
        };
        return integrate_finite(g, -1.0, 1.0, tol);
    }
    if (hi_inf) {
        auto g = [&](double t) {
            const double d = 1.0 - t;
            if (d <= 0.0) return 0.0;
            const double v = f(lo + scale * t / d);
            return v == 0.0 ? 0.0 : v * scale / (d * d);
        };
        return integrate_finite(g, 0.0, 1.0, tol);
    }
    auto g = [&](double t) {
        const double d = 1.0 - t;
        if (d <= 0.0) return 0.0;
        const double v = f(hi - scale * t / d);
        return v == 0.0 ? 0.0 : v * scale / (d * d);
    };
    return integrate_finite(g, 0.0, 1.0, tol);
}

} // namespace drexp::quad
