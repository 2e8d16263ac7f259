#pragma once

// Mean-field price dynamics of the two-sided game: the symmetric revenue-gradient field,
// its local stability and a sampled grid of it.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <vector>

#include "netgame/equilibrium.hpp"
#include "netgame/model.hpp"
#include "netgame/numerics.hpp"

namespace netgame {

/// Smallest price used when evaluating the field; keeps stickiness finite on the p = 0 edge.
inline constexpr double kPriceFloor = 1e-9;

using Rates = std::array<double, 2>;

/// (dU_isp/dp_isp, dU_cp/dp_cp) at the symmetric profile where every ISP charges p_isp and
/// every CP charges p_cp.
inline Rates vector_field(double p_isp, double p_cp, const MarketParams& params) {
    const auto profile = PriceProfile::symmetric(params.isps, params.cps, p_isp, p_cp);
    return {gradient(Group::Isp, 0, profile, params), gradient(Group::Cp, 0, profile, params)};
}

struct StabilityLabel {
    Stability label = Stability::Unchecked;
    std::array<std::complex<double>, 2> eigenvalues{};
};

/// Linearization of the field at (p_isp, p_cp) by central differences.
inline StabilityLabel classify_stability(double p_isp, double p_cp, const MarketParams& params,
                                         double step = 1e-6) {
    auto field = [&](const numerics::Vec<2>& x) { return vector_field(x[0], x[1], params); };
    // Keep the stencil inside the positive quadrant near the axes.
    const double h = std::min(step, 0.25 * std::min(p_isp, p_cp));
    const auto jac = numerics::jacobian<2>(field, numerics::Vec<2>{p_isp, p_cp}, h);
    const double tr = jac[0][0] + jac[1][1];
    const double det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
    const std::complex<double> disc = std::sqrt(std::complex<double>(tr * tr - 4.0 * det, 0.0));
    StabilityLabel out;
    out.eigenvalues = {(tr + disc) / 2.0, (tr - disc) / 2.0};
    const double re0 = out.eigenvalues[0].real();
    const double re1 = out.eigenvalues[1].real();
    if (re0 < 0.0 && re1 < 0.0)
        out.label = Stability::Stable;
    else if ((re0 < 0.0) != (re1 < 0.0))
        out.label = Stability::Saddle;
    else
        out.label = Stability::Source;
    return out;
}

inline StabilityLabel classify_stability(const EquilibriumReport& report) {
    if (report.kind == EquilibriumKind::Boundary)
        throw std::invalid_argument("classify_stability: boundary equilibria have no interior linearization");
    return classify_stability(report.isp_price, report.cp_price, report.params);
}

struct FieldSample {
    double p_isp = 0.0;
    double p_cp = 0.0;
    std::optional<Rates> rates;  // empty where demand would be zero
};

/// Field sampled at (i/r, j/r), i, j = 0..r, ISP index outermost. Points with
/// p_isp + p_cp >= 1 have no sample; zero prices are evaluated at kPriceFloor.
inline std::vector<FieldSample> field_grid(const MarketParams& params, int resolution) {
    if (resolution < 2) throw std::invalid_argument("field_grid: resolution must be >= 2");
    std::vector<FieldSample> out;
    out.reserve(static_cast<std::size_t>((resolution + 1) * (resolution + 1)));
    for (int i = 0; i <= resolution; ++i) {
        for (int j = 0; j <= resolution; ++j) {
            FieldSample s{static_cast<double>(i) / resolution, static_cast<double>(j) / resolution, std::nullopt};
            if (s.p_isp + s.p_cp < 1.0 - 1e-12)
                s.rates = vector_field(std::max(s.p_isp, kPriceFloor), std::max(s.p_cp, kPriceFloor), params);
            out.push_back(s);
        }
    }
    return out;
}

/// Interior zeros of the field: cells of the grid where both components change sign are
/// refined with Newton's method and kept if the zero lies within one cell of the flagged cell.
inline std::vector<std::array<double, 2>> field_zeros(const std::vector<FieldSample>& grid, int resolution,
                                                      const MarketParams& params) {
    const auto at = [&](int i, int j) -> const FieldSample& {
        return grid[static_cast<std::size_t>(i * (resolution + 1) + j)];
    };
    const double h = 1.0 / resolution;
    std::vector<std::array<double, 2>> zeros;
    for (int i = 1; i < resolution; ++i) {
        for (int j = 1; j < resolution; ++j) {
            const FieldSample* corners[] = {&at(i, j), &at(i + 1, j), &at(i, j + 1), &at(i + 1, j + 1)};
            bool valid = true;
            bool pos[2] = {false, false}, neg[2] = {false, false};
            for (const auto* c : corners) {
                if (!c->rates) {
                    valid = false;
                    break;
                }
                for (int k = 0; k < 2; ++k) {
                    if ((*c->rates)[k] >= 0.0) pos[k] = true;
                    if ((*c->rates)[k] <= 0.0) neg[k] = true;
                }
            }
            if (!valid || !(pos[0] && neg[0] && pos[1] && neg[1])) continue;
            const double cx = (i + 0.5) * h, cy = (j + 0.5) * h;
            auto field = [&](const numerics::Vec<2>& x) { return vector_field(x[0], x[1], params); };
            auto inside = [](const numerics::Vec<2>& x) {
                return x[0] > kPriceFloor && x[1] > kPriceFloor && x[0] + x[1] < 1.0;
            };
            const auto sol = numerics::newton<2>(field, numerics::Vec<2>{cx, cy}, 1e-13, 100, inside);
            if (!sol.converged) continue;
            if (std::abs(sol.x[0] - cx) > 1.5 * h || std::abs(sol.x[1] - cy) > 1.5 * h) continue;
            bool dup = false;
            for (const auto& z : zeros)
                if (std::abs(z[0] - sol.x[0]) < 1e-8 && std::abs(z[1] - sol.x[1]) < 1e-8) dup = true;
            if (!dup) zeros.push_back({sol.x[0], sol.x[1]});
        }
    }
    return zeros;
}

}  // namespace netgame
