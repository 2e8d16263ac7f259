#pragma once

// Equilibrium reports shared by the closed-form and numeric solvers.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string_view>
#include <vector>

#include "netgame/model.hpp"

namespace netgame {

enum class EquilibriumKind { Interior1, Interior2, Boundary };
enum class Stability { Stable, Saddle, Source, Boundary, Unchecked };

inline const char* to_string(EquilibriumKind k) {
    switch (k) {
        case EquilibriumKind::Interior1: return "Interior1";
        case EquilibriumKind::Interior2: return "Interior2";
        case EquilibriumKind::Boundary: return "Boundary";
    }
    return "?";
}

inline const char* to_string(Stability s) {
    switch (s) {
        case Stability::Stable: return "stable";
        case Stability::Saddle: return "saddle";
        case Stability::Source: return "source";
        case Stability::Boundary: return "boundary";
        case Stability::Unchecked: return "unchecked";
    }
    return "?";
}

inline EquilibriumKind parse_kind(std::string_view s) {
    if (s == "Interior1") return EquilibriumKind::Interior1;
    if (s == "Interior2") return EquilibriumKind::Interior2;
    if (s == "Boundary") return EquilibriumKind::Boundary;
    throw std::invalid_argument("unknown equilibrium kind");
}

/// Symmetric equilibrium of the two-sided game. Prices are group mean prices (fractions of
/// p_max), revenues are per provider (fractions of p_max * D_max).
struct EquilibriumReport {
    EquilibriumKind kind = EquilibriumKind::Interior1;
    MarketParams params{};
    double isp_price = 0.0;
    double cp_price = 0.0;
    double demand = 0.0;
    double isp_revenue = 0.0;
    double cp_revenue = 0.0;
    double foc_residual = 0.0;
    Stability stability = Stability::Unchecked;
    bool degenerate = false;

    PriceProfile profile() const { return PriceProfile::symmetric(params.isps, params.cps, isp_price, cp_price); }

    /// Group receiving side payments (ISPs for s >= 0).
    Group receiver() const { return params.side >= 0.0 ? Group::Isp : Group::Cp; }
    double price_of(Group g) const { return g == Group::Isp ? isp_price : cp_price; }
    double revenue_of(Group g) const { return g == Group::Isp ? isp_revenue : cp_revenue; }
    double receiver_price() const { return price_of(receiver()); }
    double receiver_revenue() const { return revenue_of(receiver()); }
    double payer_revenue() const { return revenue_of(receiver() == Group::Isp ? Group::Cp : Group::Isp); }
};

/// Evaluates demand, revenues and first-order residuals of a symmetric two-sided state through
/// the core evaluators. Zero-priced groups contribute no first-order condition.
inline EquilibriumReport make_report(EquilibriumKind kind, const MarketParams& params, double isp_price,
                                     double cp_price) {
    EquilibriumReport r;
    r.kind = kind;
    r.params = params;
    r.isp_price = isp_price;
    r.cp_price = cp_price;
    const auto profile = r.profile();
    r.demand = demand(isp_price, cp_price).value;
    r.isp_revenue = revenue(Group::Isp, 0, profile, params);
    r.cp_revenue = revenue(Group::Cp, 0, profile, params);
    double res = 0.0;
    if (r.demand > 0.0) {
        if (isp_price > 0.0) res = std::max(res, std::abs(gradient(Group::Isp, 0, profile, params)));
        if (cp_price > 0.0) res = std::max(res, std::abs(gradient(Group::Cp, 0, profile, params)));
    }
    r.foc_residual = res;
    return r;
}

/// Own-price second derivative at a critical point: -2U / (margin * D).
inline double own_curvature(Group g, const EquilibriumReport& r) {
    const double margin = g == Group::Isp ? r.isp_price + r.params.side : r.cp_price - r.params.side;
    return -2.0 * r.revenue_of(g) / (margin * r.demand);
}

/// Symmetric equilibrium of the application game. Prices are raw (same unit as p_kmax).
struct AppEquilibriumReport {
    Regime regime = Regime::Neutral;
    AppMarketParams params{};
    double isp_web_price = 0.0;
    double isp_p2p_price = 0.0;
    double web_price = 0.0;
    double p2p_price = 0.0;
    double web_demand = 0.0;
    double p2p_demand = 0.0;
    double isp_revenue = 0.0;
    double web_revenue = 0.0;
    double p2p_revenue = 0.0;
    double foc_residual = 0.0;
    Stability stability = Stability::Unchecked;
    int admissible_roots = 1;

    AppPriceProfile profile() const {
        return AppPriceProfile::symmetric(params, isp_web_price, isp_p2p_price, web_price, p2p_price);
    }
    double revenue_of(AppGroup g) const {
        switch (g) {
            case AppGroup::Isp: return isp_revenue;
            case AppGroup::WebCp: return web_revenue;
            case AppGroup::P2pCp: return p2p_revenue;
        }
        return 0.0;
    }
};

inline AppEquilibriumReport make_app_report(Regime regime, const AppMarketParams& m, double isp_web,
                                            double isp_p2p, double web, double p2p) {
    AppEquilibriumReport r;
    r.regime = regime;
    r.params = m;
    r.isp_web_price = isp_web;
    r.isp_p2p_price = isp_p2p;
    r.web_price = web;
    r.p2p_price = p2p;
    const auto profile = r.profile();
    r.web_demand = web_demand(isp_web, web, m).value;
    r.p2p_demand = p2p_demand(isp_p2p, p2p, m).value;
    r.isp_revenue = revenue(AppGroup::Isp, 0, profile, m, regime);
    r.web_revenue = revenue(AppGroup::WebCp, 0, profile, m, regime);
    r.p2p_revenue = revenue(AppGroup::P2pCp, 0, profile, m, regime);
    if (r.web_demand > 0.0 && r.p2p_demand > 0.0 && isp_web > 0.0 && isp_p2p > 0.0 && web > 0.0 && p2p > 0.0) {
        double res = 0.0;
        auto acc = [&](AppPrice v) { res = std::max(res, std::abs(gradient(v, 0, profile, m, regime))); };
        if (regime == Regime::Neutral) {
            acc(AppPrice::Isp);
        } else {
            acc(AppPrice::IspWeb);
            acc(AppPrice::IspP2p);
        }
        acc(AppPrice::Web);
        acc(AppPrice::P2p);
        r.foc_residual = res;
    } else {
        r.foc_residual = std::numeric_limits<double>::quiet_NaN();
    }
    return r;
}

/// Own-price second derivatives at a critical point of the application game, in the order
/// (ISP prices..., Web CP, P2P CP). The non-neutral ISP contributes one entry per price.
inline std::vector<double> own_curvatures(const AppEquilibriumReport& r) {
    const auto& m = r.params;
    const double a = m.alpha();
    const double web_room = r.web_demand / m.web_sensitivity;  // p2max - p12 - p2
    const double p2p_room = r.p2p_demand / m.p2p_sensitivity;
    std::vector<double> out;
    if (r.regime == Regime::Neutral) {
        out.push_back(-2.0 * r.isp_revenue / (r.isp_web_price * (a * web_room + (1.0 - a) * p2p_room)));
    } else {
        const double blend = a * web_room * r.isp_web_price + (1.0 - a) * p2p_room * r.isp_p2p_price;
        out.push_back(-2.0 * a * r.isp_revenue / blend);
        out.push_back(-2.0 * (1.0 - a) * r.isp_revenue / blend);
    }
    out.push_back(-2.0 * r.web_revenue / (r.web_price * web_room));
    out.push_back(-2.0 * r.p2p_revenue / (r.p2p_price * p2p_room));
    return out;
}

}  // namespace netgame
