#pragma once

// Brute-force Nash check: every provider scans its own price range with all other prices held
// fixed and reports the best unilateral revenue gain.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "netgame/model.hpp"
#include "netgame/numerics.hpp"

namespace netgame {

struct OracleOptions {
    double epsilon = 1e-6;
    int grid = 2001;
};

struct OracleVerdict {
    bool is_nash = true;
    std::string worst_group;
    std::size_t worst_index = 0;
    double improvement = 0.0;
    std::size_t grid_size = 0;  // candidate prices scanned in total

    std::string worst_player() const { return worst_group + "[" + std::to_string(worst_index) + "]"; }
};

namespace detail {

/// Best value of f over a uniform grid on [0, hi], polished by golden-section search in the
/// cells around the best grid point.
template <typename F>
double scan_max(F&& f, double hi, int grid, std::size_t& scanned) {
    hi = std::max(hi, 1e-12);
    const double h = hi / (grid - 1);
    double best = -std::numeric_limits<double>::infinity();
    int best_k = 0;
    for (int k = 0; k < grid; ++k) {
        const double v = f(k * h);
        if (v > best) {
            best = v;
            best_k = k;
        }
    }
    scanned += static_cast<std::size_t>(grid);
    const double lo = std::max(0.0, (best_k - 1) * h);
    const double up = std::min(hi, (best_k + 1) * h);
    const auto refined = numerics::golden_max(f, lo, up, 1e-13);
    return std::max(best, refined.value);
}

/// Indices whose price vector entry differs from every earlier entry. Providers charging the
/// same price face the same deviation problem, so one representative suffices.
inline std::vector<std::size_t> distinct_players(std::span<const double> a, std::span<const double> b = {}) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < a.size(); ++i) {
        bool seen = false;
        for (std::size_t j : out)
            if (a[j] == a[i] && (b.empty() || b[j] == b[i])) seen = true;
        if (!seen) out.push_back(i);
    }
    return out;
}

inline void record(OracleVerdict& v, const char* group, std::size_t i, double gain) {
    if (v.worst_group.empty() || gain > v.improvement) {
        v.improvement = gain;
        v.worst_group = group;
        v.worst_index = i;
    }
}

}  // namespace detail

/// Nash check for the two-sided game over the full per-provider profile.
inline OracleVerdict oracle_verify(const PriceProfile& profile, const MarketParams& params,
                                   const OracleOptions& opts = {}) {
    profile.validate();
    params.validate();
    OracleVerdict v;
    v.improvement = -std::numeric_limits<double>::infinity();
    for (Group g : {Group::Isp, Group::Cp}) {
        const Group other = g == Group::Isp ? Group::Cp : Group::Isp;
        const double headroom = 1.0 - expected_price(profile.prices(other));
        for (std::size_t i : detail::distinct_players(profile.prices(g))) {
            const double current = revenue(g, i, profile, params);
            PriceProfile trial = profile;
            auto f = [&](double p) {
                trial.prices(g)[i] = p;
                return revenue(g, i, trial, params);
            };
            const double best = detail::scan_max(f, headroom, opts.grid, v.grid_size);
            detail::record(v, to_string(g), i, best - current);
        }
    }
    v.is_nash = v.improvement <= opts.epsilon;
    return v;
}

/// Nash check for the application game. Non-neutral ISPs deviate in both prices jointly over a
/// grid x grid lattice, polished by alternating golden-section passes.
inline OracleVerdict oracle_verify(const AppPriceProfile& profile, const AppMarketParams& m, Regime regime,
                                   const OracleOptions& opts = {}) {
    profile.validate(regime);
    m.validate();
    OracleVerdict v;
    v.improvement = -std::numeric_limits<double>::infinity();
    const double web_mean = expected_price(profile.web);
    const double p2p_mean = expected_price(profile.p2p);
    const double web_room = m.web_max_price - web_mean;
    const double p2p_room = m.p2p_max_price - p2p_mean;

    for (std::size_t i : detail::distinct_players(profile.isp_web, profile.isp_p2p)) {
        const double current = revenue(AppGroup::Isp, i, profile, m, regime);
        if (regime == Regime::Neutral) {
            AppPriceProfile trial = profile;
            auto f = [&](double p) {
                trial.isp_web[i] = p;
                trial.isp_p2p[i] = p;
                return revenue(AppGroup::Isp, i, trial, m, regime);
            };
            const double best = detail::scan_max(f, std::max(web_room, p2p_room), opts.grid, v.grid_size);
            detail::record(v, "isp", i, best - current);
            continue;
        }
        // Closed-form deviation revenue: only the deviator's own combined price moves.
        const auto share_prices = isp_share_prices(profile, m, regime);
        std::size_t others_zero = 0;
        double others_inv = 0.0;
        for (std::size_t k = 0; k < share_prices.size(); ++k) {
            if (k == i) continue;
            if (share_prices[k] == 0.0)
                ++others_zero;
            else
                others_inv += 1.0 / share_prices[k];
        }
        auto f2 = [&](double p12, double p13) {
            const double pt = combined_price(p12, p13, m);
            double share;
            if (others_zero > 0)
                share = pt == 0.0 ? 1.0 / static_cast<double>(others_zero + 1) : 0.0;
            else
                share = pt == 0.0 ? 1.0 : (1.0 / pt) / (1.0 / pt + others_inv);
            return share * (web_demand(p12, web_mean, m).value * p12 + p2p_demand(p13, p2p_mean, m).value * p13);
        };
        if (std::abs(f2(profile.isp_web[i], profile.isp_p2p[i]) - current) > 1e-12 * std::max(1.0, std::abs(current)))
            throw std::logic_error("oracle: deviation revenue disagrees with the revenue evaluator");
        const double g = opts.grid;
        const double h12 = std::max(web_room, 1e-12) / (g - 1);
        const double h13 = std::max(p2p_room, 1e-12) / (g - 1);
        double best = -std::numeric_limits<double>::infinity();
        double b12 = 0.0, b13 = 0.0;
        for (int a = 0; a < opts.grid; ++a) {
            for (int b = 0; b < opts.grid; ++b) {
                const double val = f2(a * h12, b * h13);
                if (val > best) {
                    best = val;
                    b12 = a * h12;
                    b13 = b * h13;
                }
            }
        }
        v.grid_size += static_cast<std::size_t>(opts.grid) * static_cast<std::size_t>(opts.grid);
        for (int pass = 0; pass < 8; ++pass) {
            const auto r12 = numerics::golden_max([&](double x) { return f2(x, b13); }, std::max(0.0, b12 - h12),
                                                  std::min(web_room, b12 + h12), 1e-13);
            if (r12.value > best) {
                best = r12.value;
                b12 = r12.arg;
            }
            const auto r13 = numerics::golden_max([&](double x) { return f2(b12, x); }, std::max(0.0, b13 - h13),
                                                  std::min(p2p_room, b13 + h13), 1e-13);
            if (r13.value > best) {
                best = r13.value;
                b13 = r13.arg;
            }
        }
        detail::record(v, "isp", i, best - current);
    }

    const auto share_prices = isp_share_prices(profile, m, regime);
    const double isp_web_mean = weighted_by_share(share_prices, profile.isp_web);
    const double isp_p2p_mean = weighted_by_share(share_prices, profile.isp_p2p);
    for (AppGroup g : {AppGroup::WebCp, AppGroup::P2pCp}) {
        const bool web = g == AppGroup::WebCp;
        const auto& own = web ? profile.web : profile.p2p;
        const double room = web ? m.web_max_price - isp_web_mean : m.p2p_max_price - isp_p2p_mean;
        for (std::size_t i : detail::distinct_players(own)) {
            const double current = revenue(g, i, profile, m, regime);
            AppPriceProfile trial = profile;
            auto& slot = web ? trial.web[i] : trial.p2p[i];
            auto f = [&](double p) {
                slot = p;
                return revenue(g, i, trial, m, regime);
            };
            const double best = detail::scan_max(f, room, opts.grid, v.grid_size);
            detail::record(v, to_string(g), i, best - current);
        }
    }
    v.is_nash = v.improvement <= opts.epsilon;
    return v;
}

}  // namespace netgame
