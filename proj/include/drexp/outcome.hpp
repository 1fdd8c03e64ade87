#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "drexp/error.hpp"
#include "drexp/expression.hpp"
#include "drexp/numeric.hpp"

namespace drexp {

struct Bounds {
    double lo = -kInf;
    double hi = kInf;

    bool finite() const { return std::isfinite(lo) && std::isfinite(hi); }
    double oscillation() const { return hi - lo; }
};

/// Building blocks of an outcome function. Families recognize the first three
/// and integrate them in closed form; the rest go through quadrature or
/// direct summation on discrete supports.
namespace leaf {
struct Identity {};
struct Square {};
struct Indicator {
    double threshold = 0.0;
    bool above = true;  // above: 1{x > threshold}; otherwise 1{x <= threshold}
};
struct Table {
    std::vector<std::pair<double, double>> entries;  // sorted by point
};
struct Expr {
    Expression expr;
    std::optional<Bounds> bounds;
};
struct Custom {
    std::function<double(double)> fn;
    std::optional<Bounds> bounds;
    std::string name;
};
} // namespace leaf

using Leaf = std::variant<leaf::Identity, leaf::Square, leaf::Indicator, leaf::Table, leaf::Expr, leaf::Custom>;

/// The outcome phi, represented as constant + sum of coef * leaf(x). Values
/// are immutable; arithmetic builds new functions sharing leaves.
class OutcomeFn {
public:
    struct Term {
        double coef;
        std::shared_ptr<const Leaf> leaf;
    };

    OutcomeFn() = default;

    static OutcomeFn constant(double c) {
        OutcomeFn f;
        f.constant_ = c;
        return f;
    }
    static OutcomeFn identity() { return from_leaf(leaf::Identity{}); }
    static OutcomeFn affine(double a, double b) { return from_leaf(leaf::Identity{}, a).plus(b); }

    /// beta * x^p for p in {1, 2}.
    static OutcomeFn power(double beta, int p) {
        if (p == 1) return from_leaf(leaf::Identity{}, beta);
        if (p == 2) return from_leaf(leaf::Square{}, beta);
        throw DomainError("power outcome supports p in {1, 2}");
    }
    static OutcomeFn indicator(double threshold, bool above = true) {
        return from_leaf(leaf::Indicator{threshold, above});
    }
    static OutcomeFn table(std::vector<std::pair<double, double>> entries) {
        if (entries.empty()) throw DomainError("table outcome needs at least one entry");
        std::sort(entries.begin(), entries.end());
        for (std::size_t i = 1; i < entries.size(); ++i)
            if (entries[i].first == entries[i - 1].first) throw DomainError("table outcome has duplicate points");
        return from_leaf(leaf::Table{std::move(entries)});
    }
    static OutcomeFn expression(const std::string& source, std::optional<Bounds> bounds = std::nullopt) {
        Expression e = Expression::in_x(source);
        if (!bounds && e.is_indicator()) bounds = Bounds{0.0, 1.0};
        return from_leaf(leaf::Expr{std::move(e), bounds});
    }
    static OutcomeFn custom(std::function<double(double)> fn, std::optional<Bounds> bounds = std::nullopt,
                            std::string name = "custom") {
        return from_leaf(leaf::Custom{std::move(fn), bounds, std::move(name)});
    }

    double operator()(double x) const {
        double v = constant_;
        for (const auto& t : terms_) v += t.coef * eval_leaf(*t.leaf, x);
        return v;
    }

    OutcomeFn scaled(double s) const {
        OutcomeFn f = *this;
        f.constant_ *= s;
        for (auto& t : f.terms_) t.coef *= s;
        return f;
    }
    OutcomeFn plus(double c) const {
        OutcomeFn f = *this;
        f.constant_ += c;
        return f;
    }
    OutcomeFn operator-() const { return scaled(-1.0); }
    friend OutcomeFn operator+(const OutcomeFn& a, const OutcomeFn& b) {
        OutcomeFn f = a;
        f.constant_ += b.constant_;
        f.terms_.insert(f.terms_.end(), b.terms_.begin(), b.terms_.end());
        return f;
    }
    friend OutcomeFn operator*(double s, const OutcomeFn& f) { return f.scaled(s); }

    /// x -> exp(beta * phi(x)), a single opaque leaf.
    OutcomeFn exponentiated(double beta) const {
        std::optional<Bounds> b;
        if (auto own = bounds()) {
            const double l = std::exp(beta * (beta >= 0 ? own->lo : own->hi));
            const double h = std::exp(beta * (beta >= 0 ? own->hi : own->lo));
            b = Bounds{l, h};
        }
        OutcomeFn self = *this;
        return custom([self, beta](double x) { return std::exp(beta * self(x)); }, b,
                      "exp(" + std::to_string(beta) + "*(" + self.describe() + "))");
    }

    double constant_term() const { return constant_; }
    const std::vector<Term>& terms() const { return terms_; }
    bool is_constant() const { return terms_.empty(); }

    /// Bounds by interval arithmetic over the leaves; nullopt if any leaf is unbounded.
    std::optional<Bounds> bounds() const {
        double lo = constant_, hi = constant_;
        for (const auto& t : terms_) {
            auto b = leaf_bounds(*t.leaf);
            if (!b) return std::nullopt;
            if (t.coef >= 0) {
                lo += t.coef * b->lo;
                hi += t.coef * b->hi;
            } else {
                lo += t.coef * b->hi;
                hi += t.coef * b->lo;
            }
        }
        if (!std::isfinite(lo) || !std::isfinite(hi)) return std::nullopt;
        return Bounds{lo, hi};
    }
    bool bounded() const { return bounds().has_value(); }

    std::string describe() const {
        std::ostringstream os;
        os.precision(17);
        bool first = true;
        if (constant_ != 0.0 || terms_.empty()) {
            os << constant_;
            first = false;
        }
        for (const auto& t : terms_) {
            if (!first) os << " + ";
            first = false;
            if (t.coef != 1.0) os << t.coef << "*";
            os << leaf_name(*t.leaf);
        }
        return os.str();
    }

    static double eval_leaf(const Leaf& l, double x) {
        return std::visit(
            [x](const auto& v) -> double {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, leaf::Identity>) return x;
                else if constexpr (std::is_same_v<T, leaf::Square>) return x * x;
                else if constexpr (std::is_same_v<T, leaf::Indicator>)
                    return v.above ? (x > v.threshold ? 1.0 : 0.0) : (x <= v.threshold ? 1.0 : 0.0);
                else if constexpr (std::is_same_v<T, leaf::Table>) {
                    auto it = std::lower_bound(v.entries.begin(), v.entries.end(), x,
                                               [](const auto& e, double p) { return e.first < p - 1e-12 * (1 + std::fabs(p)); });
                    if (it == v.entries.end() || std::fabs(it->first - x) > 1e-12 * (1 + std::fabs(x)))
                        throw DomainError("table outcome evaluated off its support at x=" + format_extended(x));
                    return it->second;
                } else {
                    const double r = [&] {
                        if constexpr (std::is_same_v<T, leaf::Expr>) return v.expr(x);
                        else return v.fn(x);
                    }();
                    if (v.bounds && !(r >= v.bounds->lo - 1e-12 && r <= v.bounds->hi + 1e-12))
                        throw DomainError("outcome value " + format_extended(r) + " leaves its declared bounds");
                    return r;
                }
            },
            l);
    }

    static std::optional<Bounds> leaf_bounds(const Leaf& l) {
        return std::visit(
            [](const auto& v) -> std::optional<Bounds> {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, leaf::Indicator>) return Bounds{0.0, 1.0};
                else if constexpr (std::is_same_v<T, leaf::Table>) {
                    Bounds b{kInf, -kInf};
                    for (const auto& [p, val] : v.entries) {
                        b.lo = std::min(b.lo, val);
                        b.hi = std::max(b.hi, val);
                    }
                    return b;
                } else if constexpr (std::is_same_v<T, leaf::Expr> || std::is_same_v<T, leaf::Custom>)
                    return v.bounds;
                else return std::nullopt;
            },
            l);
    }

private:
    template <class L>
    static OutcomeFn from_leaf(L l, double coef = 1.0) {
        OutcomeFn f;
        f.terms_.push_back({coef, std::make_shared<const Leaf>(std::move(l))});
        return f;
    }

    static std::string leaf_name(const Leaf& l) {
        return std::visit(
            [](const auto& v) -> std::string {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, leaf::Identity>) return "x";
                else if constexpr (std::is_same_v<T, leaf::Square>) return "x^2";
                else if constexpr (std::is_same_v<T, leaf::Indicator>)
                    return std::string(v.above ? "1{x>" : "1{x<=") + format_extended(v.threshold) + "}";
                else if constexpr (std::is_same_v<T, leaf::Table>) return "table[" + std::to_string(v.entries.size()) + "]";
                else if constexpr (std::is_same_v<T, leaf::Expr>) return "(" + v.expr.source() + ")";
                else return v.name;
            },
            l);
    }

    double constant_ = 0.0;
    std::vector<Term> terms_;
};

} // namespace drexp
