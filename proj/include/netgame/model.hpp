#pragma once

// Demand response, customer stickiness and revenue evaluators for the
// usage-priced ISP/CP games. Two-sided prices are normalized so that
// p_max = D_max = d = 1; the application game keeps its sensitivities and
// price caps explicit.

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace netgame {

/// Raised when a game has no interior equilibrium for the given parameters.
class NoEquilibrium : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when an iterative solver fails to converge. Carries the best residual seen.
class SolverFailure : public std::runtime_error {
public:
    SolverFailure(const std::string& what, double best_residual)
        : std::runtime_error(what), best_residual_(best_residual) {}
    double best_residual() const noexcept { return best_residual_; }

private:
    double best_residual_;
};

enum class Group { Isp, Cp };

inline const char* to_string(Group g) { return g == Group::Isp ? "isp" : "cp"; }

/// Two-sided game: n1 ISPs, n2 CPs and a regulated side-payment rate s (fraction of p_max,
/// positive when CPs pay ISPs).
struct MarketParams {
    int isps = 2;
    int cps = 2;
    double side = 0.0;

    static MarketParams symmetric(int n, double side = 0.0) { return {n, n, side}; }

    void validate() const {
        if (isps < 1 || cps < 1) throw std::invalid_argument("provider counts must be >= 1");
        if (!std::isfinite(side) || std::abs(side) >= 1.0)
            throw std::invalid_argument("side-payment rate must satisfy |s| < 1");
    }
};

/// Three-sided game: ISPs, Web CPs and P2P CPs with per-application demand
/// D_k = d_k (p_kmax - p_1k - p_k).
struct AppMarketParams {
    int isps = 1;
    int web_cps = 1;
    int p2p_cps = 1;
    double web_sensitivity = 0.8;   // d2
    double p2p_sensitivity = 0.2;   // d3
    double web_max_price = 0.4;     // p2max
    double p2p_max_price = 1.0;     // p3max

    /// Normalized shorthand: d2 = alpha, d3 = 1 - alpha, p3max = 1, p2max = gamma.
    static AppMarketParams from_shape(double alpha, double gamma, int isps = 1, int web_cps = 1,
                                      int p2p_cps = 1) {
        AppMarketParams p{isps, web_cps, p2p_cps, alpha, 1.0 - alpha, gamma, 1.0};
        p.validate();
        return p;
    }

    double alpha() const { return web_sensitivity / (web_sensitivity + p2p_sensitivity); }
    double gamma() const { return web_max_price / p2p_max_price; }
    double price_gap() const { return p2p_max_price - web_max_price; }
    double harmonic_sensitivity() const {
        return 2.0 / (1.0 / web_sensitivity + 1.0 / p2p_sensitivity);
    }
    double web_max_demand() const { return web_sensitivity * web_max_price; }
    double p2p_max_demand() const { return p2p_sensitivity * p2p_max_price; }
    double web_max_revenue() const { return web_max_price * web_max_demand(); }
    double p2p_max_revenue() const { return p2p_max_price * p2p_max_demand(); }
    /// Weight of the web price in the ISP's combined price.
    double combined_weight() const { return std::sqrt(alpha() * gamma()); }
    bool monopolistic() const { return isps == 1 && web_cps == 1 && p2p_cps == 1; }

    void validate() const {
        if (isps < 1 || web_cps < 1 || p2p_cps < 1)
            throw std::invalid_argument("provider counts must be >= 1");
        auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
        if (!positive(web_sensitivity) || !positive(p2p_sensitivity))
            throw std::invalid_argument("demand sensitivities must be > 0");
        if (!positive(web_max_price) || !positive(p2p_max_price))
            throw std::invalid_argument("maximum prices must be > 0");
    }

    /// Operating assumptions the analysis relies on but does not enforce.
    std::vector<std::string> warnings() const {
        std::vector<std::string> out;
        if (alpha() < 0.5) out.emplace_back("alpha < 1/2: web demand less price-sensitive than P2P");
        if (gamma() >= 1.0) out.emplace_back("gamma >= 1: web price cap not below P2P price cap");
        if (alpha() * gamma() > 1.0)
            out.emplace_back("alpha*gamma > 1: combined ISP price is not a convex combination");
        return out;
    }
};

struct Demand {
    double value = 0.0;
    bool clamped = false;
};

inline Demand clamp_demand(double raw) { return raw < 0.0 ? Demand{0.0, true} : Demand{raw, false}; }

/// Normalized two-sided demand max(0, 1 - p_isp - p_cp).
inline Demand demand(double p_isp, double p_cp) { return clamp_demand(1.0 - p_isp - p_cp); }

/// Inverse-price market share of provider i. Zero prices take the pointwise limit:
/// all mass is split evenly among the zero-priced providers.
inline double stickiness(std::size_t i, std::span<const double> prices) {
    if (prices.empty()) throw std::invalid_argument("stickiness: empty price vector");
    if (i >= prices.size()) throw std::out_of_range("stickiness: provider index out of range");
    std::size_t zeros = 0;
    double inv_sum = 0.0;
    for (double p : prices) {
        if (p < 0.0 || !std::isfinite(p)) throw std::invalid_argument("stickiness: invalid price");
        if (p == 0.0)
            ++zeros;
        else
            inv_sum += 1.0 / p;
    }
    if (zeros > 0) return prices[i] == 0.0 ? 1.0 / static_cast<double>(zeros) : 0.0;
    return (1.0 / prices[i]) / inv_sum;
}

/// Harmonic mean of strictly positive prices.
inline double mean_price(std::span<const double> prices) {
    if (prices.empty()) throw std::invalid_argument("mean_price: empty price vector");
    double inv_sum = 0.0;
    for (double p : prices) {
        if (!(p > 0.0)) throw std::invalid_argument("mean_price: harmonic mean needs positive prices");
        inv_sum += 1.0 / p;
    }
    return static_cast<double>(prices.size()) / inv_sum;
}

/// Share-weighted price sum_i sigma_i p_i. Equals mean_price for positive prices and is
/// zero when any provider charges nothing.
inline double expected_price(std::span<const double> prices) {
    double total = 0.0;
    for (std::size_t i = 0; i < prices.size(); ++i) total += stickiness(i, prices) * prices[i];
    return total;
}

/// Share-weighted average of `values` under stickiness computed from `share_prices`.
inline double weighted_by_share(std::span<const double> share_prices, std::span<const double> values) {
    double total = 0.0;
    for (std::size_t i = 0; i < share_prices.size(); ++i)
        total += stickiness(i, share_prices) * values[i];
    return total;
}

// ---------------------------------------------------------------------------
// Two-sided game
// ---------------------------------------------------------------------------

struct PriceProfile {
    std::vector<double> isp;
    std::vector<double> cp;

    static PriceProfile symmetric(int isps, int cps, double p_isp, double p_cp) {
        return {std::vector<double>(static_cast<std::size_t>(isps), p_isp),
                std::vector<double>(static_cast<std::size_t>(cps), p_cp)};
    }

    std::vector<double>& prices(Group g) { return g == Group::Isp ? isp : cp; }
    const std::vector<double>& prices(Group g) const { return g == Group::Isp ? isp : cp; }

    void validate() const {
        if (isp.empty() || cp.empty()) throw std::invalid_argument("profile: empty provider group");
        for (const auto* v : {&isp, &cp})
            for (double p : *v)
                if (!(p >= 0.0) || !std::isfinite(p))
                    throw std::invalid_argument("profile: prices must be finite and >= 0");
    }
};

namespace detail {

struct TwoSidedTerms {
    double share;
    Demand demand;
    double margin;
};

inline TwoSidedTerms two_sided_terms(Group g, std::size_t i, const PriceProfile& profile,
                                     const MarketParams& params) {
    const auto& own = profile.prices(g);
    const auto& other = profile.prices(g == Group::Isp ? Group::Cp : Group::Isp);
    const double p = own.at(i);
    const double share = stickiness(i, own);
    const Demand d = demand(p, expected_price(other));
    const double margin = g == Group::Isp ? p + params.side : p - params.side;
    return {share, d, margin};
}

}  // namespace detail

/// Usage-based revenue of provider i of group g, in units of p_max * D_max. ISPs receive the
/// side payment, CPs pay it.
inline double revenue(Group g, std::size_t i, const PriceProfile& profile, const MarketParams& params) {
    const auto t = detail::two_sided_terms(g, i, profile, params);
    return t.share * t.demand.value * t.margin;
}

/// d U / d p for provider i's own price. Requires a positive own price and positive demand.
inline double gradient(Group g, std::size_t i, const PriceProfile& profile, const MarketParams& params) {
    const auto t = detail::two_sided_terms(g, i, profile, params);
    const double p = profile.prices(g).at(i);
    if (!(p > 0.0)) throw std::domain_error("gradient: own price must be positive");
    if (t.demand.clamped || t.demand.value <= 0.0) throw std::domain_error("gradient: demand is zero");
    const double dshare = -t.share * (1.0 - t.share) / p;
    return dshare * t.demand.value * t.margin - t.share * t.margin + t.share * t.demand.value;
}

// ---------------------------------------------------------------------------
// Application game (ISP, Web CP, P2P CP)
// ---------------------------------------------------------------------------

enum class Regime { Neutral, NonNeutral };
enum class AppGroup { Isp, WebCp, P2pCp };

/// Decision variables of the application game. `Isp` is the single neutral ISP price; the
/// non-neutral ISP controls `IspWeb` and `IspP2p` separately.
enum class AppPrice { Isp, IspWeb, IspP2p, Web, P2p };

inline const char* to_string(Regime r) { return r == Regime::Neutral ? "neutral" : "nonneutral"; }
inline const char* to_string(AppGroup g) {
    switch (g) {
        case AppGroup::Isp: return "isp";
        case AppGroup::WebCp: return "web";
        case AppGroup::P2pCp: return "p2p";
    }
    return "?";
}

/// Application-game prices. In the neutral regime isp_web and isp_p2p must coincide.
struct AppPriceProfile {
    std::vector<double> isp_web;
    std::vector<double> isp_p2p;
    std::vector<double> web;
    std::vector<double> p2p;

    static AppPriceProfile symmetric(const AppMarketParams& m, double p_isp_web, double p_isp_p2p,
                                     double p_web, double p_p2p) {
        auto n = [](int k) { return static_cast<std::size_t>(k); };
        return {std::vector<double>(n(m.isps), p_isp_web), std::vector<double>(n(m.isps), p_isp_p2p),
                std::vector<double>(n(m.web_cps), p_web), std::vector<double>(n(m.p2p_cps), p_p2p)};
    }

    void validate(Regime regime) const {
        if (isp_web.empty() || web.empty() || p2p.empty() || isp_p2p.size() != isp_web.size())
            throw std::invalid_argument("app profile: malformed provider groups");
        for (const auto* v : {&isp_web, &isp_p2p, &web, &p2p})
            for (double p : *v)
                if (!(p >= 0.0) || !std::isfinite(p))
                    throw std::invalid_argument("app profile: prices must be finite and >= 0");
        if (regime == Regime::Neutral && isp_web != isp_p2p)
            throw std::invalid_argument("app profile: neutral ISPs must charge one price");
    }
};

/// Combined ISP price used for stickiness in the non-neutral regime.
inline double combined_price(double p_web, double p_p2p, const AppMarketParams& params) {
    const double w = params.combined_weight();
    return w * p_web + (1.0 - w) * p_p2p;
}

/// Prices that drive ISP stickiness: the single price when neutral, the combined price otherwise.
inline std::vector<double> isp_share_prices(const AppPriceProfile& profile, const AppMarketParams& params,
                                            Regime regime) {
    if (regime == Regime::Neutral) return profile.isp_web;
    std::vector<double> out(profile.isp_web.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = combined_price(profile.isp_web[i], profile.isp_p2p[i], params);
    return out;
}

inline Demand web_demand(double p_isp, double p_web, const AppMarketParams& m) {
    return clamp_demand(m.web_sensitivity * (m.web_max_price - p_isp - p_web));
}

inline Demand p2p_demand(double p_isp, double p_p2p, const AppMarketParams& m) {
    return clamp_demand(m.p2p_sensitivity * (m.p2p_max_price - p_isp - p_p2p));
}

namespace detail {

struct AppIspTerms {
    double share;
    double share_price;
    Demand web;
    Demand p2p;
};

inline AppIspTerms app_isp_terms(std::size_t i, const AppPriceProfile& profile, const AppMarketParams& m,
                                 Regime regime) {
    const auto share_prices = isp_share_prices(profile, m, regime);
    const double share = stickiness(i, share_prices);
    return {share, share_prices[i], web_demand(profile.isp_web.at(i), expected_price(profile.web), m),
            p2p_demand(profile.isp_p2p.at(i), expected_price(profile.p2p), m)};
}

struct AppCpTerms {
    double share;
    double price;
    Demand demand;
    double sensitivity;
};

inline AppCpTerms app_cp_terms(AppGroup g, std::size_t i, const AppPriceProfile& profile,
                               const AppMarketParams& m, Regime regime) {
    const auto share_prices = isp_share_prices(profile, m, regime);
    if (g == AppGroup::WebCp) {
        const double p = profile.web.at(i);
        const double isp_mean = weighted_by_share(share_prices, profile.isp_web);
        return {stickiness(i, profile.web), p, web_demand(isp_mean, p, m), m.web_sensitivity};
    }
    const double p = profile.p2p.at(i);
    const double isp_mean = weighted_by_share(share_prices, profile.isp_p2p);
    return {stickiness(i, profile.p2p), p, p2p_demand(isp_mean, p, m), m.p2p_sensitivity};
}

}  // namespace detail

/// Revenue of provider i of group g (raw units: price times demand).
inline double revenue(AppGroup g, std::size_t i, const AppPriceProfile& profile, const AppMarketParams& m,
                      Regime regime) {
    if (g == AppGroup::Isp) {
        const auto t = detail::app_isp_terms(i, profile, m, regime);
        return t.share * (t.web.value * profile.isp_web[i] + t.p2p.value * profile.isp_p2p[i]);
    }
    const auto t = detail::app_cp_terms(g, i, profile, m, regime);
    return t.share * t.demand.value * t.price;
}

/// d U / d p for one of provider i's own prices. `Isp` moves both ISP prices together and is
/// only meaningful in the neutral regime; `IspWeb`/`IspP2p` only in the non-neutral one.
inline double gradient(AppPrice var, std::size_t i, const AppPriceProfile& profile, const AppMarketParams& m,
                       Regime regime) {
    const bool isp_var = var == AppPrice::Isp || var == AppPrice::IspWeb || var == AppPrice::IspP2p;
    if (isp_var) {
        if ((var == AppPrice::Isp) != (regime == Regime::Neutral))
            throw std::invalid_argument("gradient: ISP price variable does not match the regime");
        const auto t = detail::app_isp_terms(i, profile, m, regime);
        if (!(t.share_price > 0.0)) throw std::domain_error("gradient: own price must be positive");
        if (t.web.value <= 0.0 || t.p2p.value <= 0.0) throw std::domain_error("gradient: demand is zero");
        const double p12 = profile.isp_web[i];
        const double p13 = profile.isp_p2p[i];
        const double income = t.web.value * p12 + t.p2p.value * p13;
        const double dshare_dprice = -t.share * (1.0 - t.share) / t.share_price;
        const double w = m.combined_weight();
        switch (var) {
            case AppPrice::Isp:
                return dshare_dprice * income +
                       t.share * (t.web.value + t.p2p.value - (m.web_sensitivity + m.p2p_sensitivity) * p12);
            case AppPrice::IspWeb:
                return dshare_dprice * w * income + t.share * (t.web.value - m.web_sensitivity * p12);
            default:
                return dshare_dprice * (1.0 - w) * income + t.share * (t.p2p.value - m.p2p_sensitivity * p13);
        }
    }
    const auto t = detail::app_cp_terms(var == AppPrice::Web ? AppGroup::WebCp : AppGroup::P2pCp, i, profile,
                                        m, regime);
    if (!(t.price > 0.0)) throw std::domain_error("gradient: own price must be positive");
    if (t.demand.value <= 0.0) throw std::domain_error("gradient: demand is zero");
    const double dshare = -t.share * (1.0 - t.share) / t.price;
    return dshare * t.demand.value * t.price + t.share * (t.demand.value - t.sensitivity * t.price);
}

}  // namespace netgame
