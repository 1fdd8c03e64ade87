#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "drexp/error.hpp"

namespace drexp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
inline constexpr double kEps = std::numeric_limits<double>::epsilon();

/// Extended reals are serialized as "+inf"/"-inf" strings.
inline std::string format_extended(double v) {
    if (v == kInf) return "+inf";
    if (v == -kInf) return "-inf";
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Six significant digits, for human-readable summaries.
inline std::string format_short(double v) {
    if (!std::isfinite(v)) return format_extended(v);
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline double parse_extended(const std::string& s) {
    if (s == "inf" || s == "+inf" || s == "Inf" || s == "infinity") return kInf;
    if (s == "-inf" || s == "-Inf") return -kInf;
    std::size_t pos = 0;
    double v = 0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw UsageError("not a number: '" + s + "'");
    }
    if (pos != s.size()) throw UsageError("not a number: '" + s + "'");
    return v;
}

inline bool relative_close(double a, double b, double rel, double abs_floor = 0.0) {
    if (a == b) return true;
    return std::fabs(a - b) <= std::max(abs_floor, rel * std::max(std::fabs(a), std::fabs(b)));
}

/// Small dense row-major matrix; only what the information-matrix code needs.
struct Matrix {
    std::size_t n = 0;
    std::vector<double> a;

    Matrix() = default;
    explicit Matrix(std::size_t dim) : n(dim), a(dim * dim, 0.0) {}

    static Matrix identity(std::size_t dim) {
        Matrix m(dim);
        for (std::size_t i = 0; i < dim; ++i) m(i, i) = 1.0;
        return m;
    }
    double& operator()(std::size_t i, std::size_t j) { return a[i * n + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * n + j]; }
};

/// Cholesky factor L (lower) of a symmetric matrix; throws on non-positive-definite input.
inline Matrix cholesky(const Matrix& m) {
    Matrix l(m.n);
    for (std::size_t j = 0; j < m.n; ++j) {
        double d = m(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > 0.0) || !std::isfinite(d)) throw DegeneracyError("information matrix is not positive definite");
        l(j, j) = std::sqrt(d);
        for (std::size_t i = j + 1; i < m.n; ++i) {
            double s = m(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    return l;
}

/// Solves m x = b for symmetric positive-definite m.
inline std::vector<double> spd_solve(const Matrix& m, std::vector<double> b) {
    const Matrix l = cholesky(m);
    const std::size_t n = m.n;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < i; ++k) b[i] -= l(i, k) * b[k];
        b[i] /= l(i, i);
    }
    for (std::size_t ii = n; ii-- > 0;) {
        for (std::size_t k = ii + 1; k < n; ++k) b[ii] -= l(k, ii) * b[k];
        b[ii] /= l(ii, ii);
    }
    return b;
}

inline double quadratic_form(const Matrix& m, const std::vector<double>& v) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.n; ++i)
        for (std::size_t j = 0; j < m.n; ++j) s += v[i] * m(i, j) * v[j];
    return s;
}

} // namespace drexp
