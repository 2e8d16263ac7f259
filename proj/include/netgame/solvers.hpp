#pragma once

// Numeric equilibrium solvers for the games without closed forms: n ISPs vs n CPs with side
// payments, and the competitive application game in both regimes.

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "netgame/closed_form.hpp"
#include "netgame/equilibrium.hpp"
#include "netgame/field.hpp"
#include "netgame/model.hpp"
#include "netgame/numerics.hpp"

namespace netgame {

struct SolveOptions {
    double residual_tol = 1e-10;
    int multistart_grid = 16;
    double dedupe_radius = 1e-7;
    int max_iters = 200;

    void validate() const {
        if (!(residual_tol > 0.0)) throw std::invalid_argument("SolveOptions: residual_tol must be > 0");
        if (multistart_grid < 4) throw std::invalid_argument("SolveOptions: multistart_grid must be >= 4");
    }
};

/// Prices, demand and margins below this are treated as zero by the admissibility filter.
inline constexpr double kAdmissibleFloor = 1e-9;

// ---------------------------------------------------------------------------
// n ISPs vs n CPs with side payments
// ---------------------------------------------------------------------------

/// First-order conditions in u = x + y, v = x - y (x, y: receiver and payer mean prices,
/// t = |s|).
inline numerics::Vec<2> side_system(const numerics::Vec<2>& uv, double t, int n) {
    const double u = uv[0], v = uv[1];
    return {2.0 * u * (1.0 - u) - 2.0 * n * t * v - n * (u * u + v * v),
            n * u * (t - v) - 2.0 * t * (n + u - 1.0) - u * v + v};
}

namespace detail {

template <std::size_t N>
std::vector<numerics::Vec<N>> dedupe_roots(std::vector<numerics::Vec<N>> roots, double radius) {
    std::sort(roots.begin(), roots.end());
    std::vector<numerics::Vec<N>> out;
    for (const auto& r : roots) {
        bool dup = false;
        for (const auto& o : out) {
            double d = 0.0;
            for (std::size_t k = 0; k < N; ++k) d = std::max(d, std::abs(r[k] - o[k]));
            if (d < radius) dup = true;
        }
        if (!dup) out.push_back(r);
    }
    return out;
}

/// Ratio of the singular values of a 2x2 Jacobian at x (smallest over largest).
template <typename F>
double jacobian_conditioning(F&& fn, const numerics::Vec<2>& x) {
    const auto j = numerics::jacobian<2>(fn, x);
    const double fro2 = j[0][0] * j[0][0] + j[0][1] * j[0][1] + j[1][0] * j[1][0] + j[1][1] * j[1][1];
    const double det = std::abs(j[0][0] * j[1][1] - j[0][1] * j[1][0]);
    const double disc = std::sqrt(std::max(0.0, fro2 * fro2 - 4.0 * det * det));
    const double big = std::sqrt(0.5 * (fro2 + disc));
    return big > 0.0 ? det / (big * big) : 0.0;
}

inline bool admissible_side(const EquilibriumReport& r) {
    const double s = r.params.side;
    if (r.isp_price < kAdmissibleFloor || r.cp_price < kAdmissibleFloor) return false;
    if (r.demand < kAdmissibleFloor) return false;
    if (r.isp_price + s < kAdmissibleFloor || r.cp_price - s < kAdmissibleFloor) return false;
    return own_curvature(Group::Isp, r) < 0.0 && own_curvature(Group::Cp, r) < 0.0;
}

/// Stable root becomes Interior1 and saddle root Interior2; otherwise fall back to ordering by
/// receiver price.
inline void label_interior(std::vector<EquilibriumReport>& roots) {
    std::sort(roots.begin(), roots.end(),
              [](const auto& a, const auto& b) { return a.receiver_price() > b.receiver_price(); });
    const bool by_stability = roots.size() == 2 && roots[0].stability != roots[1].stability &&
                              (roots[0].stability == Stability::Stable || roots[1].stability == Stability::Stable) &&
                              (roots[0].stability == Stability::Saddle || roots[1].stability == Stability::Saddle);
    if (by_stability) {
        for (auto& r : roots)
            r.kind = r.stability == Stability::Stable ? EquilibriumKind::Interior1 : EquilibriumKind::Interior2;
        std::sort(roots.begin(), roots.end(),
                  [](const auto& a, const auto& b) { return a.kind == EquilibriumKind::Interior1 && b.kind != a.kind; });
        return;
    }
    for (std::size_t k = 0; k < roots.size(); ++k)
        roots[k].kind = k == 0 ? EquilibriumKind::Interior1 : EquilibriumKind::Interior2;
}

}  // namespace detail

/// Interior equilibria with n ISPs and n CPs. Damped Newton from a uniform grid of starts over
/// u in (0, 1), v in (-1, 1); converged roots are deduplicated and filtered for positive prices,
/// demand and margins and negative own curvature.
inline std::vector<EquilibriumReport> side_neps_general(double s, int n, const SolveOptions& opts = {}) {
    opts.validate();
    if (n < 2) throw std::invalid_argument("side_neps_general: n must be >= 2");
    if (!std::isfinite(s) || std::abs(s) >= 1.0) throw std::invalid_argument("side_neps_general: need |s| < 1");
    const double t = std::abs(s);
    auto fn = [t, n](const numerics::Vec<2>& x) { return side_system(x, t, n); };
    auto inside = [](const numerics::Vec<2>& x) { return x[0] > -0.5 && x[0] < 1.5 && std::abs(x[1]) < 1.5; };

    std::vector<numerics::Vec<2>> roots;
    double stalled_residual = std::numeric_limits<double>::infinity();
    const int g = opts.multistart_grid;
    for (int i = 0; i < g; ++i) {
        for (int j = 0; j < g; ++j) {
            const numerics::Vec<2> start{(i + 0.5) / g, -1.0 + 2.0 * (j + 0.5) / g};
            const auto sol = numerics::newton<2>(fn, start, opts.residual_tol, opts.max_iters, inside);
            if (sol.converged) {
                roots.push_back(sol.x);
            } else if (sol.residual < 1e-6) {
                // Either a slow approach to a regular root or a near miss at a fold, where the
                // root pair has just vanished and the Jacobian is close to singular.
                const auto more = numerics::newton<2>(fn, sol.x, opts.residual_tol, 10 * opts.max_iters, inside);
                if (more.converged) {
                    roots.push_back(more.x);
                } else if (detail::jacobian_conditioning(fn, more.x) > 1e-2) {
                    stalled_residual = std::min(stalled_residual, more.residual);
                }
            }
        }
    }

    std::vector<EquilibriumReport> out;
    const MarketParams params{n, n, s};
    for (auto uv : detail::dedupe_roots<2>(roots, opts.dedupe_radius)) {
        uv = numerics::polish<2>(fn, uv, inside);
        const double receiver = 0.5 * (uv[0] + uv[1]);
        const double payer = 0.5 * (uv[0] - uv[1]);
        if (receiver < kAdmissibleFloor || payer < kAdmissibleFloor || uv[0] >= 1.0) continue;
        auto r = s >= 0.0 ? make_report(EquilibriumKind::Interior1, params, receiver, payer)
                          : make_report(EquilibriumKind::Interior1, params, payer, receiver);
        if (!detail::admissible_side(r)) continue;
        r.stability = classify_stability(r).label;
        out.push_back(r);
    }
    if (out.empty() && std::isfinite(stalled_residual))
        throw SolverFailure("side_neps_general: Newton still progressing at the iteration cap", stalled_residual);
    detail::label_interior(out);
    return out;
}

/// Supremum of |s| for which interior equilibria exist with n ISPs and n CPs, by bisection on s.
inline double side_threshold_general(int n, double tol = 1e-8, const SolveOptions& opts = {}) {
    if (n < 2) throw std::invalid_argument("side_threshold_general: n must be >= 2");
    double lo = 0.0, hi = 0.1;
    while (!side_neps_general(hi, n, opts).empty()) {
        lo = hi;
        hi = std::min(0.5 * (1.0 + hi), 2.0 * hi);
    }
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (side_neps_general(mid, n, opts).empty())
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

/// Boundary equilibrium: the receiving group prices at zero (living on side payments alone) and
/// the paying group solves its first-order condition, found by bisection.
inline EquilibriumReport boundary_nep(const MarketParams& params) {
    params.validate();
    const double t = std::abs(params.side);
    const bool isp_receives = params.side >= 0.0;
    const int payers = isp_receives ? params.cps : params.isps;
    // [y / (1 - y) - 1/n] (y - t) - t = 0 for the payer's mean price y.
    auto foc = [t, payers](double y) { return (y / (1.0 - y) - 1.0 / payers) * (y - t) - t; };
    const double lo = t > 0.0 ? t : 1e-12;
    const double y = numerics::bisect(foc, lo, 1.0 - 1e-12, 1e-15);
    auto r = isp_receives ? make_report(EquilibriumKind::Boundary, params, 0.0, y)
                          : make_report(EquilibriumKind::Boundary, params, y, 0.0);
    r.stability = Stability::Boundary;
    return r;
}

inline EquilibriumReport boundary_nep_general(double s, int n) {
    if (n < 2) throw std::invalid_argument("boundary_nep_general: n must be >= 2");
    return boundary_nep(MarketParams{n, n, s});
}

// ---------------------------------------------------------------------------
// Competitive application game
// ---------------------------------------------------------------------------

struct LinearSystem3 {
    numerics::Mat<3> matrix;
    numerics::Vec<3> rhs;
};

/// First-order conditions of the neutral game in (p1, p2, p3).
inline LinearSystem3 app_neutral_system(const AppMarketParams& m) {
    const double a = m.alpha();
    return {{{{m.isps + 1.0, a, 1.0 - a}, {1.0, m.web_cps + 1.0, 0.0}, {1.0, 0.0, m.p2p_cps + 1.0}}},
            {a * m.web_max_price + (1.0 - a) * m.p2p_max_price, m.web_max_price, m.p2p_max_price}};
}

namespace detail {

inline bool admissible_app(const AppEquilibriumReport& r) {
    for (double p : {r.isp_web_price, r.isp_p2p_price, r.web_price, r.p2p_price})
        if (p < kAdmissibleFloor) return false;
    if (r.web_demand < kAdmissibleFloor || r.p2p_demand < kAdmissibleFloor) return false;
    for (double c : own_curvatures(r))
        if (!(c < 0.0)) return false;
    return true;
}

}  // namespace detail

/// Neutral competitive equilibrium from the 3x3 linear first-order system.
inline AppEquilibriumReport app_competitive_neutral(const AppMarketParams& m) {
    m.validate();
    const auto sys = app_neutral_system(m);
    const auto p = numerics::solve_linear<3>(sys.matrix, sys.rhs);
    if (!(p[0] >= kAdmissibleFloor && p[1] >= kAdmissibleFloor && p[2] >= kAdmissibleFloor))
        throw NoEquilibrium("neutral application game: no interior equilibrium (negative price)");
    auto r = make_app_report(Regime::Neutral, m, p[0], p[0], p[1], p[2]);
    if (!detail::admissible_app(r)) throw NoEquilibrium("neutral application game: no interior equilibrium");
    r.stability = Stability::Stable;
    return r;
}

/// First-order conditions of the non-neutral ISP in (p12, p13) after eliminating the CP
/// best responses p_k = (p_kmax - p_1k) / (n_k + 1), divided by the ISP's share. Clearing the
/// combined-price denominator instead would add a spurious root at p12 = p13 = 0.
inline numerics::Vec<2> app_nonneutral_system(const numerics::Vec<2>& x, const AppMarketParams& m) {
    const double a = m.alpha();
    const double w = m.combined_weight();
    const double keep = 1.0 - 1.0 / m.isps;
    const double p12 = x[0], p13 = x[1];
    const double p2 = (m.web_max_price - p12) / (m.web_cps + 1.0);
    const double p3 = (m.p2p_max_price - p13) / (m.p2p_cps + 1.0);
    const double room2 = m.web_max_price - p12 - p2;
    const double room3 = m.p2p_max_price - p13 - p3;
    const double blend = a * room2 * p12 + (1.0 - a) * room3 * p13;
    const double pt = w * p12 + (1.0 - w) * p13;
    return {a * (room2 - p12) - keep * w * blend / pt, (1.0 - a) * (room3 - p13) - keep * (1.0 - w) * blend / pt};
}

/// Non-neutral competitive equilibrium by multistart Newton over the valid (p12, p13) box.
/// More than one admissible root is flagged through `admissible_roots`; the report with the
/// highest ISP revenue is returned in that case.
inline AppEquilibriumReport app_competitive_nonneutral(const AppMarketParams& m, const SolveOptions& opts = {}) {
    m.validate();
    opts.validate();
    if (m.alpha() * m.gamma() > 1.0)
        throw std::invalid_argument("non-neutral application game needs alpha * gamma <= 1");
    auto fn = [&m](const numerics::Vec<2>& x) { return app_nonneutral_system(x, m); };
    auto inside = [&m](const numerics::Vec<2>& x) {
        return x[0] > 0.0 && x[1] > 0.0 && x[0] < m.web_max_price && x[1] < m.p2p_max_price;
    };
    std::vector<numerics::Vec<2>> roots;
    double best_residual = std::numeric_limits<double>::infinity();
    const int g = opts.multistart_grid;
    for (int i = 0; i < g; ++i) {
        for (int j = 0; j < g; ++j) {
            const numerics::Vec<2> start{m.web_max_price * (i + 0.5) / g, m.p2p_max_price * (j + 0.5) / g};
            const auto sol = numerics::newton<2>(fn, start, opts.residual_tol, opts.max_iters, inside);
            best_residual = std::min(best_residual, sol.residual);
            if (sol.converged) roots.push_back(sol.x);
        }
    }
    if (roots.empty()) {
        // A residual floor well above zero means the system has no root in the box.
        if (best_residual > 1e-6)
            throw NoEquilibrium("non-neutral application game: no interior root (best residual " +
                                std::to_string(best_residual) + ")");
        throw SolverFailure("non-neutral application game: Newton did not converge", best_residual);
    }
    std::vector<AppEquilibriumReport> admissible;
    for (auto x : detail::dedupe_roots<2>(roots, opts.dedupe_radius)) {
        x = numerics::polish<2>(fn, x, inside);
        const double p2 = (m.web_max_price - x[0]) / (m.web_cps + 1.0);
        const double p3 = (m.p2p_max_price - x[1]) / (m.p2p_cps + 1.0);
        auto r = make_app_report(Regime::NonNeutral, m, x[0], x[1], p2, p3);
        if (detail::admissible_app(r)) admissible.push_back(r);
    }
    if (admissible.empty()) throw NoEquilibrium("non-neutral application game: no admissible root");
    auto best = *std::max_element(admissible.begin(), admissible.end(),
                                  [](const auto& a, const auto& b) { return a.isp_revenue < b.isp_revenue; });
    best.admissible_roots = static_cast<int>(admissible.size());
    best.stability = Stability::Stable;
    return best;
}

/// Either regime; the monopolistic game uses its closed forms.
inline AppEquilibriumReport app_equilibrium(const AppMarketParams& m, Regime regime, const SolveOptions& opts = {}) {
    if (m.monopolistic())
        return regime == Regime::Neutral ? app_monop_neutral(m) : app_monop_nonneutral(m);
    return regime == Regime::Neutral ? app_competitive_neutral(m) : app_competitive_nonneutral(m, opts);
}

/// Largest p3max / p2max keeping an interior neutral equilibrium, for the normalized market
/// (d2 = alpha, d3 = 1 - alpha, p3max = 1), by bisection on the ratio.
inline double app_neutral_max_price_ratio(double alpha, int isps, int web_cps, int p2p_cps, double tol = 1e-9) {
    auto exists = [&](double ratio) {
        try {
            app_equilibrium(AppMarketParams::from_shape(alpha, 1.0 / ratio, isps, web_cps, p2p_cps), Regime::Neutral);
            return true;
        } catch (const NoEquilibrium&) {
            return false;
        }
    };
    double lo = 1.0, hi = 2.0;
    if (!exists(lo)) throw NoEquilibrium("neutral application game has no equilibrium even at equal price caps");
    while (exists(hi)) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e9) throw std::domain_error("app_neutral_max_price_ratio: no finite bound");
    }
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (exists(mid) ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace netgame
