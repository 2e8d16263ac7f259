#pragma once

// Projected gradient-ascent dynamics on symmetric mean prices, attractor classification and
// location of the basin boundary between the stable interior and boundary equilibria.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "netgame/closed_form.hpp"
#include "netgame/field.hpp"
#include "netgame/solvers.hpp"

namespace netgame {

enum class Attractor { Interior1, Interior2, Boundary, None };

inline const char* to_string(Attractor a) {
    switch (a) {
        case Attractor::Interior1: return "Interior1";
        case Attractor::Interior2: return "Interior2";
        case Attractor::Boundary: return "Boundary";
        case Attractor::None: return "none";
    }
    return "?";
}

using PricePoint = std::array<double, 2>;  // (ISP mean price, CP mean price)

struct SimulateOptions {
    double step = 0.05;
    long max_iters = 1'000'000;
    double displacement_tol = 1e-10;
    double proximity = 1e-4;
    long record_stride = 1;  // keep every k-th state; the final state is always kept
};

struct DynamicsTrace {
    std::vector<PricePoint> states;
    Attractor attractor = Attractor::None;
    long steps_to_converge = 0;
    double step_size = 0.0;
};

/// Equilibria a trajectory can settle on.
struct AttractorSet {
    MarketParams params;
    std::optional<EquilibriumReport> interior1;
    std::optional<EquilibriumReport> interior2;
    EquilibriumReport boundary;
};

inline AttractorSet attractors_for(const MarketParams& params, const SolveOptions& opts = {}) {
    params.validate();
    AttractorSet out{params, std::nullopt, std::nullopt, boundary_nep(params)};
    std::vector<EquilibriumReport> interior;
    if (params.side == 0.0)
        interior = {neutral_nep(params.isps, params.cps)};
    else if (params.isps == params.cps)
        interior = side_neps_general(params.side, params.isps, opts);
    else
        throw std::invalid_argument("dynamics with side payments need equal ISP and CP counts");
    for (const auto& r : interior) {
        if (r.kind == EquilibriumKind::Interior1) out.interior1 = r;
        if (r.kind == EquilibriumKind::Interior2) out.interior2 = r;
    }
    return out;
}

namespace detail {

inline PricePoint project(PricePoint p) {
    p[0] = std::clamp(p[0], kPriceFloor, 1.0);
    p[1] = std::clamp(p[1], kPriceFloor, 1.0);
    const double excess = p[0] + p[1] - (1.0 - kPriceFloor);
    if (excess > 0.0) {
        p[0] = std::max(kPriceFloor, p[0] - 0.5 * excess);
        p[1] = std::max(kPriceFloor, 1.0 - kPriceFloor - p[0]);
    }
    return p;
}

inline bool near(const PricePoint& p, const EquilibriumReport& r, double radius) {
    return std::abs(p[0] - r.isp_price) < radius && std::abs(p[1] - r.cp_price) < radius;
}

inline Attractor classify_endpoint(const PricePoint& p, const AttractorSet& set, double radius) {
    if (set.interior1 && near(p, *set.interior1, radius)) return Attractor::Interior1;
    if (set.interior2 && near(p, *set.interior2, radius)) return Attractor::Interior2;
    if (near(p, set.boundary, radius)) return Attractor::Boundary;
    return Attractor::None;
}

}  // namespace detail

/// Iterates p <- project(p + step * field(p)) until the per-step displacement drops below
/// the tolerance or the iteration cap is hit.
inline DynamicsTrace simulate(PricePoint start, const AttractorSet& set, const SimulateOptions& opts = {}) {
    if (!(start[0] >= 0.0 && start[1] >= 0.0 && start[0] + start[1] < 1.0))
        throw std::invalid_argument("simulate: start must have positive demand");
    DynamicsTrace trace;
    trace.step_size = opts.step;
    PricePoint p = detail::project(start);
    trace.states.push_back(p);
    bool converged = false;
    long k = 0;
    for (; k < opts.max_iters; ++k) {
        const Rates f = vector_field(p[0], p[1], set.params);
        const PricePoint next = detail::project({p[0] + opts.step * f[0], p[1] + opts.step * f[1]});
        const double disp = std::max(std::abs(next[0] - p[0]), std::abs(next[1] - p[1]));
        if (disp < opts.displacement_tol) {
            converged = true;
            break;
        }
        p = next;
        if ((k + 1) % opts.record_stride == 0) trace.states.push_back(p);
    }
    if (trace.states.back() != p) trace.states.push_back(p);
    trace.steps_to_converge = k;
    trace.attractor = converged ? detail::classify_endpoint(p, set, opts.proximity) : Attractor::None;
    return trace;
}

inline DynamicsTrace simulate(PricePoint start, const MarketParams& params, const SimulateOptions& opts = {}) {
    return simulate(start, attractors_for(params), opts);
}

/// Receiver price separating starts attracted to the boundary equilibrium (below) from starts
/// attracted to Interior1 (above), along the line where the payer charges its Interior2 price.
inline double basin_boundary(const MarketParams& params, const SimulateOptions& opts = {}, double tol = 1e-7) {
    if (params.side == 0.0) throw std::invalid_argument("basin_boundary: needs a non-zero side payment");
    const auto set = attractors_for(params);
    if (!set.interior1 || !set.interior2) throw NoEquilibrium("basin_boundary: no interior equilibria at this s");
    const bool isp_receives = params.side > 0.0;
    const double payer = isp_receives ? set.interior2->cp_price : set.interior2->isp_price;
    auto start = [&](double receiver) {
        return isp_receives ? PricePoint{receiver, payer} : PricePoint{payer, receiver};
    };
    auto attractor = [&](double receiver) { return simulate(start(receiver), set, opts).attractor; };
    double lo = 1e-6;
    double hi = set.interior1->receiver_price();
    if (attractor(lo) != Attractor::Boundary || attractor(hi) != Attractor::Interior1)
        throw std::runtime_error("basin_boundary: bracket does not separate the two attractors");
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        const auto a = attractor(mid);
        if (a == Attractor::Boundary)
            lo = mid;
        else if (a == Attractor::Interior1)
            hi = mid;
        else
            break;  // landed on the saddle itself
    }
    return 0.5 * (lo + hi);
}

}  // namespace netgame
