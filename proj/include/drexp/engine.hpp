#pragma once

// DR-expectation sup_θ { E_θ[φ] − (α(θ)/k)^γ } over a fitted model.
//
// γ < ∞: coarse grid on a box around θ̂, local refinement (Brent in 1-d,
// Nelder-Mead otherwise). The box grows while the incumbent sits on one of
// its free edges; after the last expansion a ray probe from θ̂ through the
// incumbent decides between a far finite optimum and +∞.
// γ = ∞: maximize E_θ[φ] over the likelihood region {α ≤ k}, located with the
// exact divergence (1-d: interval endpoints; d ≥ 2: star-shaped radial map).

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "drexp/error.hpp"
#include "drexp/family.hpp"
#include "drexp/model.hpp"
#include "drexp/numeric.hpp"
#include "drexp/optimize.hpp"
#include "drexp/outcome.hpp"
#include "drexp/penalty.hpp"

namespace drexp {

enum class DrStatus { Finite, PlusInfinity, MinusInfinity, NotConverged };

inline const char* to_string(DrStatus s) {
    switch (s) {
    case DrStatus::Finite: return "finite";
    case DrStatus::PlusInfinity: return "+inf";
    case DrStatus::MinusInfinity: return "-inf";
    case DrStatus::NotConverged: return "not_converged";
    }
    return "?";
}

struct OptimizerConfig {
    int coarse_grid_points = 201;
    double refine_tolerance = 1e-9;
    double blowup_threshold = 1e8;
    double domain_expansion_factor = 10.0;
    int max_expansions = 6;
    unsigned threads = 1;

    void validate() const {
        if (coarse_grid_points < 3) throw DomainError("coarse_grid_points must be at least 3");
        if (!(refine_tolerance > 0.0)) throw DomainError("refine_tolerance must be positive");
        if (!(blowup_threshold > 0.0)) throw DomainError("blowup_threshold must be positive");
        if (!(domain_expansion_factor > 1.0)) throw DomainError("domain_expansion_factor must exceed 1");
        if (max_expansions < 0) throw DomainError("max_expansions must be nonnegative");
    }
};

struct DrResult {
    double value = kNaN;
    std::optional<ParameterVector> arg_theta;
    DrStatus status = DrStatus::NotConverged;
    long evals = 0;
    double tolerance_achieved = kInf;
    int expansions = 0;
    std::string detail;

    bool finite() const { return status == DrStatus::Finite; }
};

namespace detail {

struct Candidate {
    ParameterVector theta;
    double g = -kInf;
};

// Higher objective wins; equal objectives go to the lexicographically smaller θ.
inline bool better(const Candidate& a, const Candidate& b) {
    if (a.g != b.g) return a.g > b.g;
    return a.theta < b.theta;
}

template <PenalizedModel M, class V>
class Search {
public:
    Search(const M& model, V& value, const PenaltySpec& spec, const OptimizerConfig& cfg, std::optional<Bounds> bounds)
        : m_(model), value_(value), spec_(spec), cfg_(cfg), bounded_(bounds.has_value()),
          osc_(bounds ? bounds->oscillation() : kInf), hat_(model.mle()), dom_(model.domain()),
          d_(model.dimension()) {
        const double n = static_cast<double>(model.sample_size());
        w0_ = std::max(10.0 / std::sqrt(n), 1.0);
    }

    DrResult run() { return spec_.infinite() ? run_constrained() : run_penalized(); }

private:
    // g(θ) = E_θ[φ] − (α(θ)/k)^γ, −∞ where the penalty is infinite. For a
    // bounded outcome a penalty above osc(φ) cannot beat θ̂, so E is skipped
    // there (`pruned`). A divergent E_θ[φ] away from θ̂ makes the supremum +∞.
    double g(const ParameterVector& th, bool* pruned = nullptr) {
        ++evals_;
        if (!dom_.contains(th)) return -kInf;
        const double a = m_.divergence(th);
        if (!(a < kInf)) return -kInf;
        const double pen = transform(a, spec_);
        if (!(pen < kInf)) return -kInf;
        if (bounded_ && pen > osc_) {
            if (pruned) *pruned = true;
            return -kInf;
        }
        try {
            return value_(th) - pen;
        } catch (const NonIntegrableError&) {
            if (th == hat_) throw;
            return kInf;
        }
    }

    bool feasible(const ParameterVector& th) {
        ++evals_;
        if (!dom_.contains(th)) return false;
        return m_.divergence(th) <= spec_.k;
    }

    double e(const ParameterVector& th) {
        ++evals_;
        return value_(th);
    }

    Candidate at(const ParameterVector& th) { return {th, g(th)}; }

    ParameterVector offset(const ParameterVector& base, const std::vector<double>& dir, double s) const {
        ParameterVector p = base;
        for (std::size_t j = 0; j < d_; ++j) p[j] += s * dir[j];
        return p;
    }

    int points_per_dim() const {
        if (d_ == 1) return cfg_.coarse_grid_points;
        const double budget = static_cast<double>(cfg_.coarse_grid_points) * cfg_.coarse_grid_points;
        return std::max(3, static_cast<int>(std::floor(std::pow(budget, 1.0 / static_cast<double>(d_)))));
    }

    int wide_points_per_dim() const {
        const int n = d_ == 1 ? cfg_.coarse_grid_points : std::min(points_per_dim(), 101);
        return n % 2 ? n : n + 1;
    }

    DrResult finish(const Candidate& best, DrStatus status, double tol, std::string detail = {}) {
        DrResult r;
        r.status = status;
        r.value = status == DrStatus::PlusInfinity ? kInf : best.g;
        if (status != DrStatus::PlusInfinity) r.arg_theta = best.theta;
        r.evals = evals_;
        r.tolerance_achieved = tol;
        r.expansions = expansions_;
        r.detail = std::move(detail);
        return r;
    }

    // ---- γ < ∞ -------------------------------------------------------------

    struct GridOutcome {
        Candidate best;
        std::vector<double> lo, hi;
        std::vector<int> index;
        bool on_free_edge = false;
        bool has_free_edge = false;
        bool boundary_pruned = true;  // every point on a free edge has penalty above osc(φ)
        bool infinite = false;
    };

    // Linear grid on θ̂ ± w, or (wide) a grid uniform in asinh((θ − θ̂)/w0)
    // reaching 1e15·(1+|θ̂|), which resolves far-away ridges at relative spacing.
    GridOutcome grid(double w, bool wide = false) {
        const int n = wide ? wide_points_per_dim() : points_per_dim();
        GridOutcome out;
        out.lo.resize(d_);
        out.hi.resize(d_);
        std::vector<bool> free_lo(d_), free_hi(d_);
        for (std::size_t j = 0; j < d_; ++j) {
            out.lo[j] = std::max(dom_.lo[j], hat_[j] - w);
            out.hi[j] = std::min(dom_.hi[j], hat_[j] + w);
            free_lo[j] = hat_[j] - w > dom_.lo[j];
            free_hi[j] = hat_[j] + w < dom_.hi[j];
            if (free_lo[j] || free_hi[j]) out.has_free_edge = true;
        }
        std::size_t total = 1;
        for (std::size_t j = 0; j < d_; ++j) total *= static_cast<std::size_t>(n);
        std::vector<double> reach(d_);
        for (std::size_t j = 0; j < d_; ++j) reach[j] = std::asinh(1e15 * (1.0 + std::fabs(hat_[j])) / w0_);
        auto coord = [&](std::size_t j, int i) {
            if (wide) {
                const double t = reach[j] * (2.0 * static_cast<double>(i) / static_cast<double>(n - 1) - 1.0);
                return i == (n - 1) / 2 ? hat_[j] : hat_[j] + w0_ * std::sinh(t);
            }
            if (i == n - 1) return out.hi[j];
            return out.lo[j] + (out.hi[j] - out.lo[j]) * static_cast<double>(i) / static_cast<double>(n - 1);
        };
        auto unflatten = [&](std::size_t flat) {
            std::vector<int> idx(d_);
            for (std::size_t j = d_; j-- > 0;) {
                idx[j] = static_cast<int>(flat % static_cast<std::size_t>(n));
                flat /= static_cast<std::size_t>(n);
            }
            return idx;
        };
        std::vector<double> vals(total);
        std::vector<char> edge_ok(total, 1);
        opt::parallel_for(total, cfg_.threads, [&](std::size_t f) {
            const auto idx = unflatten(f);
            ParameterVector th{std::vector<double>(d_)};
            bool on_edge = false;
            for (std::size_t j = 0; j < d_; ++j) {
                th[j] = coord(j, idx[j]);
                if ((idx[j] == 0 && free_lo[j]) || (idx[j] == n - 1 && free_hi[j])) on_edge = true;
            }
            bool pruned = false;
            vals[f] = g(th, &pruned);
            // Outside the domain or at infinite penalty also counts as enclosed.
            if (on_edge && !pruned && vals[f] > -kInf) edge_ok[f] = 0;
        });
        for (std::size_t f = 0; f < total; ++f) {
            if (!edge_ok[f]) out.boundary_pruned = false;
            if (vals[f] == kInf) out.infinite = true;
        }
        // Row-major order with the first coordinate slowest is lexicographic,
        // so the first maximum is the tie-break winner.
        std::size_t arg = 0;
        for (std::size_t f = 1; f < total; ++f)
            if (vals[f] > vals[arg]) arg = f;
        out.index = unflatten(arg);
        ParameterVector th{std::vector<double>(d_)};
        for (std::size_t j = 0; j < d_; ++j) {
            th[j] = coord(j, out.index[j]);
            if ((out.index[j] == 0 && free_lo[j]) || (out.index[j] == n - 1 && free_hi[j])) out.on_free_edge = true;
        }
        out.best = {th, vals[arg]};
        return out;
    }

    // Local refinement around a grid incumbent; returns the best candidate and the achieved tolerance.
    std::pair<Candidate, double> refine(const GridOutcome& go) {
        const int n = points_per_dim();
        if (d_ == 1) {
            const double h = (go.hi[0] - go.lo[0]) / static_cast<double>(n - 1);
            const double a = std::max(go.lo[0], go.best.theta[0] - h);
            const double b = std::min(go.hi[0], go.best.theta[0] + h);
            auto r = opt::brent_maximize([&](double x) { return g(ParameterVector{x}); }, a, b, cfg_.refine_tolerance);
            Candidate c{ParameterVector{r.x}, r.value};
            const double tol = r.converged ? r.bracket_width / std::max(1.0, std::fabs(r.x)) : kInf;
            return {better(c, go.best) ? c : go.best, tol};
        }
        std::vector<double> steps(d_);
        for (std::size_t j = 0; j < d_; ++j) steps[j] = std::max((go.hi[j] - go.lo[j]) / static_cast<double>(n - 1), 1e-12);
        return simplex(go.best, steps);
    }

    std::pair<Candidate, double> simplex(const Candidate& start, const std::vector<double>& steps) {
        auto f = [&](const std::vector<double>& x) { return g(ParameterVector(x)); };
        Candidate best = start;
        double tol = kInf;
        std::vector<double> x = start.theta.coords();
        std::vector<double> st = steps;
        // Restarts guard against Nelder-Mead's premature collapse.
        for (int restart = 0; restart < 3; ++restart) {
            auto r = opt::nelder_mead_maximize(f, x, st, cfg_.refine_tolerance);
            Candidate c{ParameterVector(r.x), r.value};
            const bool improved = better(c, best) && c.g > best.g + 1e-15 * std::fabs(best.g);
            if (better(c, best)) best = c;
            tol = r.converged ? r.simplex_size : kInf;
            if (!improved && restart > 0) break;
            x = best.theta.coords();
            for (std::size_t j = 0; j < d_; ++j) st[j] = std::max(1e-3 * st[j], 1e-6 * (1.0 + std::fabs(x[j])));
        }
        return {best, tol};
    }

    // Boxes θ̂ ± w·factor^e. A bounded outcome stops once the region where the
    // penalty is below osc(φ) is enclosed; an unbounded one scans every scale,
    // since g may have a local maximum near θ̂ and still diverge far away.
    DrResult run_penalized() {
        Candidate best = at(hat_);
        if (!std::isfinite(best.g)) throw NumericalError("objective is not finite at the MLE " + hat_.str());
        GridOutcome top, last;
        bool have_top = false;
        double w = w0_;
        for (int e = 0;; ++e) {
            last = grid(w);
            if (last.infinite)
                return finish(last.best, DrStatus::PlusInfinity, 0.0, "E_theta[phi] diverges at a finite-penalty parameter");
            if (!have_top || better(last.best, top.best)) {
                top = last;
                have_top = true;
            }
            if (e == cfg_.max_expansions || !last.has_free_edge) break;
            if (bounded_ && last.boundary_pruned) break;
            w *= cfg_.domain_expansion_factor;
            ++expansions_;
        }
        auto [refined, tol] = refine(top);
        if (better(refined, best)) best = refined;
        if (last.on_free_edge && !(bounded_ && last.boundary_pruned)) return ray_probe(last.best, best);
        if (!bounded_) {
            const GridOutcome far = grid(w0_, true);
            if (far.infinite)
                return finish(far.best, DrStatus::PlusInfinity, 0.0, "E_theta[phi] diverges at a finite-penalty parameter");
            if (far.best.g > best.g + 1e-9 * (1.0 + std::fabs(best.g))) return ray_probe(far.best, far.best);
        }
        if (tol > 1e3 * cfg_.refine_tolerance) return finish(best, DrStatus::NotConverged, tol, "local refinement stalled");
        return finish(best, DrStatus::Finite, tol);
    }

    // Doubling probe along θ̂ + s·(incumbent − θ̂).
    DrResult ray_probe(const Candidate& incumbent, Candidate best) {
        std::vector<double> dir(d_);
        double dnorm = 0.0, hnorm = 0.0;
        for (std::size_t j = 0; j < d_; ++j) {
            dir[j] = incumbent.theta[j] - hat_[j];
            dnorm = std::max(dnorm, std::fabs(dir[j]));
            hnorm = std::max(hnorm, std::fabs(hat_[j]));
        }
        const double s_max = 1e15 * (1.0 + hnorm) / dnorm;
        double s_prev2 = 0.0, s_prev = 1.0;
        double g_prev = incumbent.g;
        bool precision_exhausted = false;
        for (double s = 2.0; s <= s_max; s *= 2.0) {
            const ParameterVector p = offset(hat_, dir, s);
            const double gs = g(p);
            // Once the step in g is lost in the cancellation between E_θ[φ] and
            // the penalty, further doubling only measures rounding noise.
            if (std::isfinite(gs) && std::isfinite(g_prev)) {
                const double ev = e(p);
                const double noise = 64.0 * kEps * (std::fabs(ev) + std::fabs(ev - gs));
                if (gs != g_prev && std::fabs(gs - g_prev) < 1e4 * noise) {
                    precision_exhausted = true;
                    break;
                }
            }
            if (gs == kInf) {
                best.g = kInf;
                return finish(best, DrStatus::PlusInfinity, 0.0, "E_theta[phi] diverges along the probe ray");
            }
            if (gs <= g_prev) {
                auto r = opt::brent_maximize([&](double t) { return g(offset(hat_, dir, t)); }, s_prev2, s,
                                             cfg_.refine_tolerance);
                Candidate c{offset(hat_, dir, r.x), r.value};
                double tol = r.converged ? r.bracket_width / std::max(1.0, std::fabs(r.x)) : kInf;
                if (d_ > 1) {
                    std::vector<double> steps(d_);
                    for (std::size_t j = 0; j < d_; ++j)
                        steps[j] = std::max(1e-3 * std::fabs(c.theta[j] - hat_[j]), 1e-9 * (1.0 + std::fabs(c.theta[j])));
                    auto [p, ptol] = simplex(c, steps);
                    c = p;
                    tol = ptol;
                }
                if (better(c, best)) best = c;
                if (tol > 1e3 * cfg_.refine_tolerance)
                    return finish(best, DrStatus::NotConverged, tol, "refinement after ray probe stalled");
                return finish(best, DrStatus::Finite, tol, "optimum found by ray probe");
            }
            s_prev2 = s_prev;
            s_prev = s;
            g_prev = gs;
        }
        if (!bounded_ && g_prev > cfg_.blowup_threshold) {
            best.g = g_prev;
            return finish(best, DrStatus::PlusInfinity, 0.0,
                          (precision_exhausted ? "objective still increasing when rounding took over, with value "
                                               : "objective still increasing at distance 1e15 with value ") +
                              format_extended(g_prev));
        }
        return finish(best, DrStatus::NotConverged, kInf,
                      bounded_ ? "bounded outcome but search did not settle" : "objective increasing below the blow-up threshold");
    }

    // ---- γ = ∞ -------------------------------------------------------------

    // Largest s with θ̂ + s·u feasible (doubling, then bisection); +∞ if none found below 1e15.
    double radius(const std::vector<double>& u) {
        double hnorm = 0.0, unorm = 0.0;
        for (std::size_t j = 0; j < d_; ++j) {
            hnorm = std::max(hnorm, std::fabs(hat_[j]));
            unorm = std::max(unorm, std::fabs(u[j]));
        }
        const double s_max = 1e15 * (1.0 + hnorm) / unorm;
        double inside = 0.0;
        double s = w0_ / 1024.0 / unorm;
        for (;; s *= 2.0) {
            if (s > s_max) return kInf;
            const ParameterVector p = offset(hat_, u, s);
            if (!dom_.closure_contains(p)) {
                // Crossing the domain edge: the exact edge point may itself be admissible.
                double edge = s;
                for (std::size_t j = 0; j < d_; ++j) {
                    if (u[j] > 0 && std::isfinite(dom_.hi[j])) edge = std::min(edge, (dom_.hi[j] - hat_[j]) / u[j]);
                    if (u[j] < 0 && std::isfinite(dom_.lo[j])) edge = std::min(edge, (dom_.lo[j] - hat_[j]) / u[j]);
                }
                if (edge > inside && feasible(offset(hat_, u, edge))) return edge;
                s = std::max(edge, inside);
                if (s == inside) return inside;
                break;
            }
            if (!feasible(p)) break;
            inside = s;
        }
        return opt::bisect_boundary([&](double t) { return feasible(offset(hat_, u, t)); }, inside, s);
    }

    DrResult run_constrained() {
        Candidate base{hat_, e(hat_)};
        if (!std::isfinite(base.g)) throw NumericalError("E_theta[phi] is not finite at the MLE " + hat_.str());
        return d_ == 1 ? constrained_1d(base) : constrained_nd(base);
    }

    DrResult unbounded_region(Candidate best, const std::vector<double>& dir) {
        // The likelihood region is unbounded along dir; E decides.
        double hnorm = 0.0;
        for (std::size_t j = 0; j < d_; ++j) hnorm = std::max(hnorm, std::fabs(hat_[j]));
        const ParameterVector far = offset(hat_, dir, 1e15 * (1.0 + hnorm));
        const double v = e(far);
        if (!bounded_ && v > cfg_.blowup_threshold && v > best.g) {
            best.g = v;
            return finish(best, DrStatus::PlusInfinity, 0.0, "likelihood region unbounded and E increasing along it");
        }
        return finish(best, DrStatus::NotConverged, kInf, "likelihood region is unbounded");
    }

    DrResult constrained_1d(Candidate best) {
        const double r_hi = radius({1.0});
        const double r_lo = radius({-1.0});
        if (!std::isfinite(r_hi)) return unbounded_region(best, {1.0});
        if (!std::isfinite(r_lo)) return unbounded_region(best, {-1.0});
        const double a = hat_[0] - r_lo, b = hat_[0] + r_hi;
        const int n = cfg_.coarse_grid_points;
        std::vector<double> xs(static_cast<std::size_t>(n)), vals(xs.size());
        for (int i = 0; i < n; ++i) xs[static_cast<std::size_t>(i)] = a + (b - a) * i / (n - 1.0);
        xs.front() = a;
        xs.back() = b;
        opt::parallel_for(xs.size(), cfg_.threads, [&](std::size_t i) { vals[i] = e(ParameterVector{xs[i]}); });
        std::size_t arg = 0;
        for (std::size_t i = 1; i < xs.size(); ++i)
            if (vals[i] > vals[arg]) arg = i;
        Candidate grid_best{ParameterVector{xs[arg]}, vals[arg]};
        if (better(grid_best, best)) best = grid_best;
        double tol = 0.0;
        if (arg != 0 && arg + 1 != xs.size()) {
            auto r = opt::brent_maximize([&](double x) { return e(ParameterVector{x}); }, xs[arg - 1], xs[arg + 1],
                                         cfg_.refine_tolerance);
            Candidate c{ParameterVector{r.x}, r.value};
            if (better(c, best)) best = c;
            tol = r.converged ? r.bracket_width / std::max(1.0, std::fabs(r.x)) : kInf;
        }
        if (tol > 1e3 * cfg_.refine_tolerance) return finish(best, DrStatus::NotConverged, tol, "refinement stalled");
        return finish(best, DrStatus::Finite, tol);
    }

    // u(angles): hyperspherical coordinates; the last angle spans [0, 2π).
    std::vector<double> direction(const std::vector<double>& ang, const std::vector<double>& scale) const {
        std::vector<double> u(d_);
        double s = 1.0;
        for (std::size_t j = 0; j + 1 < d_; ++j) {
            u[j] = s * std::cos(ang[j]);
            s *= std::sin(ang[j]);
        }
        u[d_ - 1] = s;
        for (std::size_t j = 0; j < d_; ++j) u[j] *= scale[j];
        return u;
    }

    DrResult constrained_nd(Candidate best) {
        // Coordinate extents of the region set the radial metric.
        std::vector<double> scale(d_);
        for (std::size_t j = 0; j < d_; ++j) {
            std::vector<double> ej(d_, 0.0);
            ej[j] = 1.0;
            const double rp = radius(ej);
            ej[j] = -1.0;
            const double rm = radius(ej);
            if (!std::isfinite(rp) || !std::isfinite(rm)) {
                ej[j] = std::isfinite(rp) ? -1.0 : 1.0;
                return unbounded_region(best, ej);
            }
            scale[j] = std::max({rp, rm, 1e-300});
        }
        const std::size_t na = d_ - 1;
        const int n_ang = d_ == 2 ? cfg_.coarse_grid_points
                                  : std::max(5, static_cast<int>(std::pow(cfg_.coarse_grid_points * 10.0, 1.0 / na)));
        std::size_t total = 1;
        for (std::size_t j = 0; j < na; ++j) total *= static_cast<std::size_t>(n_ang);
        auto angles_of = [&](std::size_t flat) {
            std::vector<double> ang(na);
            for (std::size_t j = na; j-- > 0;) {
                const int i = static_cast<int>(flat % static_cast<std::size_t>(n_ang));
                flat /= static_cast<std::size_t>(n_ang);
                const bool last = j + 1 == na;
                ang[j] = last ? 2.0 * std::numbers::pi * i / n_ang : std::numbers::pi * i / (n_ang - 1.0);
            }
            return ang;
        };
        const int n_rho = 21;
        std::vector<double> radii(total);
        std::vector<Candidate> cell(total);
        std::vector<double> cell_rho(total, 0.0);
        opt::parallel_for(total, cfg_.threads, [&](std::size_t f) {
            const auto u = direction(angles_of(f), scale);
            radii[f] = radius(u);
            Candidate c{hat_, -kInf};
            if (std::isfinite(radii[f]))
                for (int k = 1; k <= n_rho; ++k) {
                    const double rho = k / static_cast<double>(n_rho);
                    const ParameterVector p = offset(hat_, u, radii[f] * rho);
                    const Candidate cand{p, e(p)};
                    if (better(cand, c)) {
                        c = cand;
                        cell_rho[f] = rho;
                    }
                }
            cell[f] = c;
        });
        for (std::size_t f = 0; f < total; ++f)
            if (!std::isfinite(radii[f])) return unbounded_region(best, direction(angles_of(f), scale));
        std::size_t arg = 0;
        for (std::size_t f = 1; f < total; ++f)
            if (better(cell[f], cell[arg])) arg = f;
        if (better(cell[arg], best)) best = cell[arg];
        // Refine over (angles, ρ), ρ ∈ [0, 1] scaling the radial map.
        auto point = [&](const std::vector<double>& z) {
            std::vector<double> ang(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(na));
            const double rho = z[na];
            const auto u = direction(ang, scale);
            return offset(hat_, u, rho * radius(u));
        };
        auto obj = [&](const std::vector<double>& z) {
            if (z[na] < 0.0 || z[na] > 1.0) return -kInf;
            return e(point(z));
        };
        std::vector<double> z0 = angles_of(arg);
        z0.push_back(cell_rho[arg]);
        std::vector<double> steps(d_, 2.0 * std::numbers::pi / n_ang);
        steps[na] = z0[na] >= 1.0 ? -1.0 / n_rho : 1.0 / n_rho;
        double tol = kInf;
        if (z0[na] >= 1.0) {
            // Boundary optimum: search angles with ρ = 1.
            auto on_boundary = [&](const std::vector<double>& ang) {
                std::vector<double> z = ang;
                z.push_back(1.0);
                return e(point(z));
            };
            std::vector<double> a0(z0.begin(), z0.end() - 1), st(steps.begin(), steps.end() - 1);
            if (na == 1) {
                auto r = opt::brent_maximize([&](double t) { return on_boundary({t}); }, a0[0] - st[0], a0[0] + st[0],
                                             cfg_.refine_tolerance);
                a0[0] = r.x;
                tol = r.converged ? r.bracket_width : kInf;
            } else {
                auto r = opt::nelder_mead_maximize(on_boundary, a0, st, cfg_.refine_tolerance);
                a0 = r.x;
                tol = r.converged ? r.simplex_size : kInf;
            }
            a0.push_back(1.0);
            z0 = a0;
        } else {
            auto r = opt::nelder_mead_maximize(obj, z0, steps, cfg_.refine_tolerance);
            z0 = r.x;
            tol = r.converged ? r.simplex_size : kInf;
        }
        const ParameterVector p = point(z0);
        const Candidate c{p, e(p)};
        if (better(c, best)) best = c;
        if (tol > 1e3 * cfg_.refine_tolerance) return finish(best, DrStatus::NotConverged, tol, "refinement stalled");
        return finish(best, DrStatus::Finite, tol);
    }

    const M& m_;
    V& value_;
    PenaltySpec spec_;
    OptimizerConfig cfg_;
    bool bounded_;
    double osc_;
    ParameterVector hat_;
    ParameterBox dom_;
    std::size_t d_;
    double w0_ = 1.0;
    std::atomic<long> evals_{0};
    int expansions_ = 0;
};

template <class M>
concept OutcomeModel = PenalizedModel<M> && requires(const M& m, const ParameterVector& th, const OutcomeFn& phi) {
    { m.expectation(th, phi) } -> std::convertible_to<double>;
};

} // namespace detail

/// sup_θ { value(θ) − (α(θ)/k)^γ } for an arbitrary value functional θ ↦ value(θ).
/// `value_bounds` (bounds of the outcome, when bounded) rules out +∞ and lets the
/// search prune parameters whose penalty exceeds the outcome's oscillation.
template <PenalizedModel M, class V>
DrResult maximize_penalized(const M& model, V&& value, const PenaltySpec& spec, const OptimizerConfig& cfg = {},
                            std::optional<Bounds> value_bounds = std::nullopt) {
    spec.validate();
    cfg.validate();
    detail::Search<M, std::remove_reference_t<V>> s(model, value, spec, cfg, value_bounds);
    return s.run();
}

template <detail::OutcomeModel M>
DrResult dr_expectation(const M& model, const OutcomeFn& phi, const PenaltySpec& spec, const OptimizerConfig& cfg = {}) {
    if (phi.is_constant()) {
        DrResult r;
        r.value = phi.constant_term();
        r.arg_theta = model.mle();
        r.status = DrStatus::Finite;
        r.tolerance_achieved = 0.0;
        return r;
    }
    auto value = [&](const ParameterVector& th) { return model.expectation(th, phi); };
    return maximize_penalized(model, value, spec, cfg, phi.bounds());
}

inline DrResult dr_expectation(const FamilySpec& f, const Sample& s, const OutcomeFn& phi, const PenaltySpec& spec,
                               const OptimizerConfig& cfg = {}) {
    return dr_expectation(FittedModel(f, s), phi, spec, cfg);
}

/// −E(−φ); an upper +∞ becomes MinusInfinity.
template <detail::OutcomeModel M>
DrResult lower_expectation(const M& model, const OutcomeFn& phi, const PenaltySpec& spec, const OptimizerConfig& cfg = {}) {
    DrResult r = dr_expectation(model, -phi, spec, cfg);
    r.value = -r.value;
    if (r.status == DrStatus::PlusInfinity) r.status = DrStatus::MinusInfinity;
    return r;
}

inline DrResult lower_expectation(const FamilySpec& f, const Sample& s, const OutcomeFn& phi, const PenaltySpec& spec,
                                  const OptimizerConfig& cfg = {}) {
    return lower_expectation(FittedModel(f, s), phi, spec, cfg);
}

struct DrInterval {
    DrResult lower;
    DrResult upper;

    double lo() const { return lower.value; }
    double hi() const { return upper.value; }
    bool converged() const {
        return lower.status != DrStatus::NotConverged && upper.status != DrStatus::NotConverged;
    }
};

template <detail::OutcomeModel M>
DrInterval dr_interval(const M& model, const OutcomeFn& phi, const PenaltySpec& spec, const OptimizerConfig& cfg = {}) {
    return {lower_expectation(model, phi, spec, cfg), dr_expectation(model, phi, spec, cfg)};
}

inline DrInterval dr_interval(const FamilySpec& f, const Sample& s, const OutcomeFn& phi, const PenaltySpec& spec,
                              const OptimizerConfig& cfg = {}) {
    return dr_interval(FittedModel(f, s), phi, spec, cfg);
}

} // namespace drexp
