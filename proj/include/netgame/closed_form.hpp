#pragma once

// Equilibria with closed-form solutions: the neutral two-sided game, the 2 ISP / 2 CP
// side-payment game, its boundary equilibrium and the monopolistic application game.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "netgame/equilibrium.hpp"
#include "netgame/field.hpp"
#include "netgame/model.hpp"
#include "netgame/numerics.hpp"

namespace netgame {

/// Neutral (s = 0) equilibrium: p_k = n_{3-k} / (n1 n2 + n1 + n2).
inline EquilibriumReport neutral_nep(int isps, int cps) {
    MarketParams params{isps, cps, 0.0};
    params.validate();
    const double denom = static_cast<double>(isps) * cps + isps + cps;
    auto r = make_report(EquilibriumKind::Interior1, params, cps / denom, isps / denom);
    r.stability = classify_stability(r).label;
    return r;
}

/// Side-payment magnitude as a function of a = s/v + 1/2 in the 2x2 game. Defined on [1/4, 1).
inline double g_of_a(double a) {
    if (!(a > 0.0 && a < 1.0)) throw std::domain_error("g_of_a: a must lie in (0, 1)");
    const double radicand = (1.0 / a - 1.0) * (4.0 * a - 1.0);
    if (radicand < 0.0) {
        if (radicand > -1e-15) return 0.0;
        throw std::domain_error("g_of_a: a must be >= 1/4");
    }
    return std::abs(2.0 * a - 1.0) / 6.0 * std::sqrt(radicand);
}

struct ThresholdResult {
    double a_star = 0.0;
    double s_max = 0.0;
};

/// Largest |s| admitting an interior equilibrium with two ISPs and two CPs.
inline ThresholdResult side_threshold_2x2() {
    const auto best = numerics::golden_max([](double a) { return g_of_a(a); }, 0.25, 0.5, 1e-12);
    return {best.arg, best.value};
}

namespace detail {

inline EquilibriumReport side_report_from_a(double a, double s, EquilibriumKind kind) {
    const double t = std::abs(s);
    const double u = 2.0 / 3.0 * (1.0 - a);
    const double v = t / (a - 0.5);
    double receiver = 0.5 * (u + v);
    double payer = 0.5 * (u - v);
    const MarketParams params{2, 2, s};
    auto r = s >= 0.0 ? make_report(kind, params, receiver, payer) : make_report(kind, params, payer, receiver);
    r.stability = classify_stability(r).label;
    return r;
}

}  // namespace detail

/// Interior equilibria of the 2x2 side-payment game. Inverts |s| = g(a) on each side of the
/// maximizer of g; the root nearer a = 1/4 carries the larger receiver price (Interior1).
/// Negative s swaps the ISP and CP roles. At |s| = s_max a single degenerate report is returned.
inline std::vector<EquilibriumReport> side_neps_2x2(double s) {
    if (!std::isfinite(s) || std::abs(s) >= 1.0) throw std::invalid_argument("side_neps_2x2: need |s| < 1");
    if (s == 0.0) return {neutral_nep(2, 2)};
    const double t = std::abs(s);
    const auto thr = side_threshold_2x2();
    if (t > thr.s_max + 1e-12) return {};
    if (t >= thr.s_max - 1e-12) {
        auto r = detail::side_report_from_a(thr.a_star, s, EquilibriumKind::Interior1);
        r.degenerate = true;
        return {r};
    }
    auto excess = [t](double a) { return g_of_a(a) - t; };
    // Run to full precision: near a = 1/2 the payer/receiver split amplifies errors in a by 1/|s|.
    const double a1 = numerics::bisect(excess, 0.25, thr.a_star, 0.0);
    const double a2 = numerics::bisect(excess, thr.a_star, 0.5, 0.0);
    return {detail::side_report_from_a(a1, s, EquilibriumKind::Interior1),
            detail::side_report_from_a(a2, s, EquilibriumKind::Interior2)};
}

/// Boundary equilibrium of the 2x2 game: the receiving group prices at zero and the paying
/// group charges (1 + |s| + sqrt(s^2 + 14|s| + 1)) / 6.
inline EquilibriumReport boundary_nep_2x2(double s) {
    if (!std::isfinite(s) || std::abs(s) >= 1.0) throw std::invalid_argument("boundary_nep_2x2: need |s| < 1");
    const double t = std::abs(s);
    const double payer = (1.0 + t + std::sqrt(t * t + 14.0 * t + 1.0)) / 6.0;
    const MarketParams params{2, 2, s};
    auto r = s >= 0.0 ? make_report(EquilibriumKind::Boundary, params, 0.0, payer)
                      : make_report(EquilibriumKind::Boundary, params, payer, 0.0);
    r.stability = Stability::Boundary;
    return r;
}

namespace detail {

inline void require_monopolistic(const AppMarketParams& m) {
    m.validate();
    if (!m.monopolistic()) throw std::invalid_argument("monopolistic application game needs one provider per group");
}

inline Stability curvature_label(const AppEquilibriumReport& r) {
    for (double c : own_curvatures(r))
        if (!(c < 0.0)) return Stability::Saddle;
    return Stability::Stable;
}

}  // namespace detail

/// Non-neutral monopoly: the ISP plays two independent ISP-vs-CP games, p_1k = p_k = p_kmax / 3.
inline AppEquilibriumReport app_monop_nonneutral(const AppMarketParams& m) {
    detail::require_monopolistic(m);
    auto r = make_app_report(Regime::NonNeutral, m, m.web_max_price / 3.0, m.p2p_max_price / 3.0,
                             m.web_max_price / 3.0, m.p2p_max_price / 3.0);
    r.stability = detail::curvature_label(r);
    return r;
}

/// Largest p3max / p2max for which the neutral monopoly keeps the Web CP in the game.
inline double app_monop_max_price_ratio(double alpha) { return 1.0 + 2.0 / (1.0 - alpha); }

/// Neutral monopoly: the ISP compromises on p1 = alpha p2max / 3 + (1 - alpha) p3max / 3.
/// Throws NoEquilibrium when p3max >= (1 + 2 / (1 - alpha)) p2max (the Web CP is priced out).
inline AppEquilibriumReport app_monop_neutral(const AppMarketParams& m) {
    detail::require_monopolistic(m);
    const double a = m.alpha();
    const double gap = m.price_gap();
    if (a < 1.0 && !(m.p2p_max_price < app_monop_max_price_ratio(a) * m.web_max_price))
        throw NoEquilibrium("neutral monopoly: P2P price cap too high, Web CP priced out");
    const double p1 = a * m.web_max_price / 3.0 + (1.0 - a) * m.p2p_max_price / 3.0;
    const double p2 = m.web_max_price / 3.0 - (1.0 - a) * gap / 6.0;
    const double p3 = m.p2p_max_price / 3.0 + a * gap / 6.0;
    auto r = make_app_report(Regime::Neutral, m, p1, p1, p2, p3);
    r.stability = detail::curvature_label(r);
    return r;
}

/// Closed-form demands and revenues of the neutral monopoly, used to cross-check the
/// evaluator-based report.
struct MonopNeutralClosedForm {
    double web_demand;
    double p2p_demand;
    double isp_revenue;
    double web_revenue;
    double p2p_revenue;
};

inline MonopNeutralClosedForm app_monop_neutral_closed_form(const AppMarketParams& m) {
    const double mu = m.harmonic_sensitivity();
    const double gap = m.price_gap();
    const double d2max = m.web_max_demand();
    const double d3max = m.p2p_max_demand();
    const double web_factor = 1.0 - mu * gap / (4.0 * d2max);
    const double p2p_factor = 1.0 + mu * gap / (4.0 * d3max);
    return {d2max / 3.0 - mu * gap / 12.0, d3max / 3.0 + mu * gap / 12.0,
            (d2max + d3max) * (d2max + d3max) / (9.0 * (m.web_sensitivity + m.p2p_sensitivity)),
            m.web_max_revenue() / 9.0 * web_factor * web_factor, m.p2p_max_revenue() / 9.0 * p2p_factor * p2p_factor};
}

}  // namespace netgame
