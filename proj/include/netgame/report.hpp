#pragma once

// Dataset builders behind the command-line tool and the verifier that re-solves every row and
// checks it with the Nash oracle.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "netgame/closed_form.hpp"
#include "netgame/dataset.hpp"
#include "netgame/dynamics.hpp"
#include "netgame/oracle.hpp"
#include "netgame/solvers.hpp"

namespace netgame::report {

/// Evaluates fn(0..count-1) on a small worker pool. Results keep index order, so output does not
/// depend on scheduling; the first exception in index order is rethrown.
template <typename F>
auto parallel_map(std::size_t count, F&& fn) -> std::vector<decltype(fn(std::size_t{}))> {
    using R = decltype(fn(std::size_t{}));
    std::vector<std::optional<R>> slots(count);
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t k = next++; k < count; k = next++) {
            try {
                slots[k].emplace(fn(k));
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    const std::size_t workers = std::min<std::size_t>(count, std::max(1u, std::thread::hardware_concurrency()));
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
        work();
    }
    std::vector<R> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        if (errors[k]) std::rethrow_exception(errors[k]);
        out.push_back(std::move(*slots[k]));
    }
    return out;
}

/// start, ..., stop in `steps` evenly spaced points (just start when steps == 1).
inline std::vector<double> linspace(double start, double stop, int steps) {
    if (steps < 1) throw std::invalid_argument("steps must be >= 1");
    std::vector<double> out;
    for (int k = 0; k < steps; ++k)
        out.push_back(steps == 1 ? start : k == steps - 1 ? stop : start + (stop - start) * k / (steps - 1));
    return out;
}

inline void require_range(const char* what, int lo, int hi, int min) {
    if (lo < min || hi < lo)
        throw std::invalid_argument(std::string(what) + ": need " + std::to_string(min) + " <= min <= max");
}

// ---------------------------------------------------------------------------
// Two-sided game rows (neutral-sweep and side-sweep share the column set)
// ---------------------------------------------------------------------------

inline const std::vector<std::string> kSideColumns = {
    "isps",       "cps",        "side",   "kind",         "status",    "isp_price", "cp_price",
    "demand",     "isp_revenue", "cp_revenue", "foc_residual", "stability", "degenerate"};

inline void add_side_row(Dataset& d, const EquilibriumReport& r) {
    d.row()
        .set("isps", r.params.isps)
        .set("cps", r.params.cps)
        .set("side", r.params.side)
        .set("kind", to_string(r.kind))
        .set("status", "ok")
        .set("isp_price", r.isp_price)
        .set("cp_price", r.cp_price)
        .set("demand", r.demand)
        .set("isp_revenue", r.isp_revenue)
        .set("cp_revenue", r.cp_revenue)
        .set("foc_residual", r.foc_residual)
        .set("stability", to_string(r.stability))
        .set("degenerate", r.degenerate)
        .done();
}

/// Interior equilibria at (n, s) followed by the boundary equilibrium. At s = 0 the interior set
/// is the neutral equilibrium alone.
inline std::vector<EquilibriumReport> side_equilibria(int n, double s) {
    std::vector<EquilibriumReport> out =
        s == 0.0 ? std::vector<EquilibriumReport>{neutral_nep(n, n)} : side_neps_general(s, n);
    out.push_back(boundary_nep_general(s, n));
    return out;
}

struct NeutralSweepArgs {
    int n1_min = 1, n1_max = 9;
    int n2_min = 1, n2_max = 9;
};

inline Dataset neutral_sweep(const NeutralSweepArgs& a) {
    require_range("isps", a.n1_min, a.n1_max, 1);
    require_range("cps", a.n2_min, a.n2_max, 1);
    Dataset d;
    d.command = "neutral-sweep";
    d.params = {{"isps_min", a.n1_min}, {"isps_max", a.n1_max}, {"cps_min", a.n2_min}, {"cps_max", a.n2_max}};
    d.columns = kSideColumns;
    const int span2 = a.n2_max - a.n2_min + 1;
    const auto count = static_cast<std::size_t>((a.n1_max - a.n1_min + 1) * span2);
    const auto reports = parallel_map(count, [&](std::size_t k) {
        const int i = static_cast<int>(k) / span2, j = static_cast<int>(k) % span2;
        return neutral_nep(a.n1_min + i, a.n2_min + j);
    });
    for (const auto& r : reports) add_side_row(d, r);
    return d;
}

struct SideSweepArgs {
    int n = 2;
    double s_start = 0.0;
    double s_stop = 0.05;
    int steps = 51;
};

/// Rows for every equilibrium at each s: Interior1, Interior2 while they exist, then Boundary.
/// A solver failure becomes a row with status "solver_failure" and no values.
inline Dataset side_sweep(const SideSweepArgs& a, bool* any_failure = nullptr) {
    if (a.n < 2) throw std::invalid_argument("side-sweep: n must be >= 2");
    const auto grid = linspace(a.s_start, a.s_stop, a.steps);
    for (double s : grid)
        if (!(std::abs(s) < 1.0)) throw std::invalid_argument("side-sweep: need |s| < 1");
    Dataset d;
    d.command = "side-sweep";
    d.params = {{"n", a.n}, {"s_start", a.s_start}, {"s_stop", a.s_stop}, {"steps", a.steps}};
    d.columns = kSideColumns;
    struct Point {
        std::vector<EquilibriumReport> reports;
        bool failed = false;
    };
    const auto points = parallel_map(grid.size(), [&](std::size_t k) {
        Point p;
        try {
            p.reports = side_equilibria(a.n, grid[k]);
        } catch (const SolverFailure&) {
            p.failed = true;
        }
        return p;
    });
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (points[k].failed) {
            d.row().set("isps", a.n).set("cps", a.n).set("side", grid[k]).set("status", "solver_failure").done();
            if (any_failure) *any_failure = true;
            continue;
        }
        for (const auto& r : points[k].reports) add_side_row(d, r);
    }
    return d;
}

// ---------------------------------------------------------------------------
// Impact of n on equilibrium properties
// ---------------------------------------------------------------------------

/// Published reference values for n = 2..9: max|s|, min D, max D, max mean price, max
/// per-provider revenue, all as fractions of their maxima.
struct ReferenceRow {
    int n;
    double values[5];
};
inline constexpr ReferenceRow kReferenceTable[] = {
    {2, {0.047, 0.50, 0.66, 0.36, 0.11}},     {3, {0.022, 0.60, 0.75, 0.27, 0.062}},
    {4, {0.013, 0.67, 0.80, 0.22, 0.040}},    {5, {0.0083, 0.71, 0.83, 0.19, 0.028}},
    {6, {0.0059, 0.75, 0.86, 0.16, 0.020}},   {7, {0.0044, 0.77, 0.87, 0.14, 0.016}},
    {8, {0.0034, 0.80, 0.88, 0.13, 0.013}},   {9, {0.0027, 0.81, 0.90, 0.11, 0.010}},
};
inline constexpr const char* kTableQuantities[] = {"max_side", "min_demand", "max_demand", "max_price",
                                                   "max_revenue"};

inline std::optional<double> reference_value(int n, int column) {
    for (const auto& r : kReferenceTable)
        if (r.n == n) return r.values[column];
    return std::nullopt;
}

/// True when the percentage `value`, rounded or truncated to two significant digits, equals the
/// reference percentage.
inline bool two_digit_match(double value, double reference) {
    const double x = 100.0 * value, ref = 100.0 * reference;
    if (!(x > 0.0)) return false;
    const double unit = std::pow(10.0, std::floor(std::log10(x)) - 1.0);
    const double rounded_x = std::round(x / unit) * unit;
    const double truncated_x = std::floor(x / unit * (1.0 + 1e-12)) * unit;
    const double eps = 1e-9 * ref;
    return std::abs(rounded_x - ref) < eps || std::abs(truncated_x - ref) < eps;
}

/// Equilibrium families an extremum may range over.
struct Family {
    const char* name;
    bool (*contains)(EquilibriumKind);
};
inline constexpr Family kFamilies[] = {
    {"Interior1", [](EquilibriumKind k) { return k == EquilibriumKind::Interior1; }},
    {"Interior2", [](EquilibriumKind k) { return k == EquilibriumKind::Interior2; }},
    {"Interior", [](EquilibriumKind k) { return k != EquilibriumKind::Boundary; }},
    {"Boundary", [](EquilibriumKind k) { return k == EquilibriumKind::Boundary; }},
    {"All", [](EquilibriumKind) { return true; }},
};
inline constexpr std::size_t kFamilyCount = std::size(kFamilies);

struct Extremum {
    double value = std::numeric_limits<double>::quiet_NaN();
    EquilibriumKind kind = EquilibriumKind::Interior1;
    double side = 0.0;
    std::optional<Group> group;
};

/// Value of a table quantity (1..4) at an equilibrium; the group attaining it for prices and
/// revenues.
inline std::pair<double, std::optional<Group>> table_quantity(int q, const EquilibriumReport& r) {
    switch (q) {
        case 1:
        case 2: return {r.demand, std::nullopt};
        case 3: return r.isp_price >= r.cp_price ? std::pair{r.isp_price, std::optional{Group::Isp}}
                                                 : std::pair{r.cp_price, std::optional{Group::Cp}};
        default:
            return r.isp_revenue >= r.cp_revenue ? std::pair{r.isp_revenue, std::optional{Group::Isp}}
                                                 : std::pair{r.cp_revenue, std::optional{Group::Cp}};
    }
}

struct TableEntry {
    int n = 0;
    double threshold = 0.0;
    int samples = 0;
    int skipped = 0;
    Extremum best[5][kFamilyCount];  // [quantity 1..4][family]
};

/// Side payments sampled at 0, thr*1e-6, thr*k/K (k = 1..K-1) and thr*(1 - 1e-6).
inline std::vector<double> table_grid(double threshold, int samples) {
    std::vector<double> out{0.0, threshold * 1e-6};
    for (int k = 1; k < samples; ++k) out.push_back(threshold * k / samples);
    out.push_back(threshold * (1.0 - 1e-6));
    return out;
}

inline TableEntry table_entry(int n, int samples) {
    TableEntry e;
    e.n = n;
    e.threshold = side_threshold_general(n);
    const auto grid = table_grid(e.threshold, samples);
    e.samples = static_cast<int>(grid.size());
    for (double s : grid) {
        std::vector<EquilibriumReport> eqs;
        try {
            eqs = side_equilibria(n, s);
        } catch (const SolverFailure&) {
            ++e.skipped;
            continue;
        }
        for (const auto& r : eqs) {
            for (int q = 1; q <= 4; ++q) {
                const auto [v, group] = table_quantity(q, r);
                for (std::size_t f = 0; f < kFamilyCount; ++f) {
                    if (!kFamilies[f].contains(r.kind)) continue;
                    auto& b = e.best[q][f];
                    const bool better = std::isnan(b.value) || (q == 1 ? v < b.value : v > b.value);
                    if (better) b = {v, r.kind, s, group};
                }
            }
        }
    }
    return e;
}

struct SideTableArgs {
    int n_min = 2, n_max = 9;
    int samples = 200;
};

/// One row per n: the interior-existence threshold and the extrema of demand, mean price and
/// revenue, each with the family, equilibrium kind and side payment attaining it, next to the
/// reference values. Which family defines each extremum is chosen by matching the reference
/// rows in range: the first family (in kFamilies order) matching every reference row, else the
/// one matching most. The choice and the per-family match counts are recorded in params.
inline Dataset side_table(const SideTableArgs& a) {
    require_range("n", a.n_min, a.n_max, 2);
    if (a.samples < 2) throw std::invalid_argument("side-table: samples must be >= 2");
    const auto entries = parallel_map(static_cast<std::size_t>(a.n_max - a.n_min + 1),
                                      [&](std::size_t k) { return table_entry(a.n_min + static_cast<int>(k), a.samples); });

    nlohmann::ordered_json definition = nlohmann::ordered_json::object();
    std::size_t chosen[5] = {0, 0, 0, 0, 0};
    for (int q = 1; q <= 4; ++q) {
        int counts[kFamilyCount] = {};
        int refs = 0;
        for (const auto& e : entries) {
            const auto ref = reference_value(e.n, q);
            if (!ref) continue;
            ++refs;
            for (std::size_t f = 0; f < kFamilyCount; ++f)
                if (!std::isnan(e.best[q][f].value) && two_digit_match(e.best[q][f].value, *ref)) ++counts[f];
        }
        std::size_t pick = kFamilyCount - 1;  // "All" when there is nothing to match against
        if (refs > 0) {
            pick = 0;
            for (std::size_t f = 0; f < kFamilyCount; ++f) {
                if (counts[f] == refs) {
                    pick = f;
                    break;
                }
                if (counts[f] > counts[pick]) pick = f;
            }
        }
        chosen[q] = pick;
        nlohmann::ordered_json matches = nlohmann::ordered_json::object();
        for (std::size_t f = 0; f < kFamilyCount; ++f) matches[kFamilies[f].name] = counts[f];
        definition[kTableQuantities[q]] = {{"family", kFamilies[pick].name},
                                           {"extremum", q == 1 ? "min" : "max"},
                                           {"reference_rows", refs},
                                           {"matches", matches}};
    }

    Dataset d;
    d.command = "side-table";
    d.params = {{"n_min", a.n_min},
                {"n_max", a.n_max},
                {"samples", a.samples},
                {"side_grid", "0, thr*1e-6, thr*k/samples for k=1..samples-1, thr*(1-1e-6)"},
                {"threshold_tol", 1e-8},
                {"match_rule", "percentage rounded or truncated to 2 significant digits"},
                {"family_order", {"Interior1", "Interior2", "Interior", "Boundary", "All"}},
                {"definition", definition}};
    d.columns = {"n", "samples", "skipped", "max_side", "max_side_ref", "max_side_match"};
    for (int q = 1; q <= 4; ++q)
        for (const char* suffix : {"", "_family", "_kind", "_s", "_group", "_ref", "_match"})
            d.columns.push_back(std::string(kTableQuantities[q]) + suffix);

    for (const auto& e : entries) {
        auto row = d.row();
        row.set("n", e.n).set("samples", e.samples).set("skipped", e.skipped).set("max_side", e.threshold);
        if (const auto ref = reference_value(e.n, 0))
            row.set("max_side_ref", *ref).set("max_side_match", two_digit_match(e.threshold, *ref));
        for (int q = 1; q <= 4; ++q) {
            const std::string name = kTableQuantities[q];
            const auto& b = e.best[q][chosen[q]];
            if (std::isnan(b.value)) continue;
            row.set(name, b.value)
                .set(name + "_family", kFamilies[chosen[q]].name)
                .set(name + "_kind", to_string(b.kind))
                .set(name + "_s", b.side);
            if (b.group) row.set(name + "_group", to_string(*b.group));
            if (const auto ref = reference_value(e.n, q))
                row.set(name + "_ref", *ref).set(name + "_match", two_digit_match(b.value, *ref));
        }
        row.done();
    }
    return d;
}

// ---------------------------------------------------------------------------
// Price dynamics
// ---------------------------------------------------------------------------

struct DynamicsArgs {
    int n = 2;
    double side = 0.04;
    int resolution = 50;
    int random_starts = 8;
    unsigned long long seed = 1;
    long stride = 25;
    double step = 0.05;
};

inline std::vector<PricePoint> dynamics_starts(const DynamicsArgs& a) {
    std::vector<PricePoint> out{{0.45, 0.3}, {0.05, 0.3}};
    std::mt19937_64 gen(a.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < a.random_starts; ++k) {
        double x, y;
        do {
            x = u(gen);
            y = u(gen);
        } while (!(x > 1e-3 && y > 1e-3 && x + y < 0.999));
        out.push_back({x, y});
    }
    return out;
}

/// One dataset with a `record` column: "field" samples of the gradient field, its "zero"s,
/// the "equilibrium" points and "trajectory" states (every stride-th step and the last one).
inline Dataset dynamics(const DynamicsArgs& a) {
    if (a.n < 2) throw std::invalid_argument("dynamics: n must be >= 2");
    if (a.random_starts < 0) throw std::invalid_argument("dynamics: trajectories must be >= 0");
    if (a.stride < 1) throw std::invalid_argument("dynamics: stride must be >= 1");
    if (!(a.step > 0.0)) throw std::invalid_argument("dynamics: step must be > 0");
    const MarketParams params{a.n, a.n, a.side};
    params.validate();
    const auto set = attractors_for(params);
    const auto grid = field_grid(params, a.resolution);
    const auto zeros = field_zeros(grid, a.resolution, params);
    const auto starts = dynamics_starts(a);
    SimulateOptions opts;
    opts.step = a.step;
    opts.record_stride = a.stride;
    const auto traces =
        parallel_map(starts.size(), [&](std::size_t k) { return simulate(starts[k], set, opts); });

    Dataset d;
    d.command = "dynamics";
    d.params = {{"n", a.n},         {"side", a.side},        {"resolution", a.resolution},
                {"random_starts", a.random_starts}, {"seed", a.seed}, {"stride", a.stride},
                {"step", a.step},   {"fixed_starts", {{0.45, 0.3}, {0.05, 0.3}}}};
    d.columns = {"record", "isps", "cps", "side", "index", "step", "isp_price", "cp_price",
                 "isp_rate", "cp_rate", "kind", "stability", "attractor"};
    auto base = [&](const char* record) {
        auto r = d.row();
        r.set("record", record).set("isps", a.n).set("cps", a.n).set("side", a.side);
        return r;
    };
    for (std::size_t k = 0; k < grid.size(); ++k) {
        auto r = base("field");
        r.set("index", static_cast<int>(k)).set("isp_price", grid[k].p_isp).set("cp_price", grid[k].p_cp);
        if (grid[k].rates) r.set("isp_rate", (*grid[k].rates)[0]).set("cp_rate", (*grid[k].rates)[1]);
        r.done();
    }
    for (std::size_t k = 0; k < zeros.size(); ++k)
        base("zero").set("index", static_cast<int>(k)).set("isp_price", zeros[k][0]).set("cp_price", zeros[k][1]).done();
    std::vector<EquilibriumReport> eqs;
    if (set.interior1) eqs.push_back(*set.interior1);
    if (set.interior2) eqs.push_back(*set.interior2);
    eqs.push_back(set.boundary);
    for (std::size_t k = 0; k < eqs.size(); ++k)
        base("equilibrium")
            .set("index", static_cast<int>(k))
            .set("isp_price", eqs[k].isp_price)
            .set("cp_price", eqs[k].cp_price)
            .set("kind", to_string(eqs[k].kind))
            .set("stability", to_string(eqs[k].stability))
            .done();
    for (std::size_t t = 0; t < traces.size(); ++t) {
        const auto& tr = traces[t];
        for (std::size_t k = 0; k < tr.states.size(); ++k) {
            const long step = k + 1 == tr.states.size() ? tr.steps_to_converge : static_cast<long>(k) * a.stride;
            base("trajectory")
                .set("index", static_cast<int>(t))
                .set("step", Cell{static_cast<long long>(step)})
                .set("isp_price", tr.states[k][0])
                .set("cp_price", tr.states[k][1])
                .set("attractor", to_string(tr.attractor))
                .done();
        }
    }
    return d;
}

// ---------------------------------------------------------------------------
// Application game
// ---------------------------------------------------------------------------

enum class CountSweep { All, Isps, Cps };

struct AppArgs {
    AppMarketParams market = AppMarketParams::from_shape(0.8, 0.3);  // counts below override
    int n_min = 1, n_max = 5;
    CountSweep vary = CountSweep::All;
    int isps = 1, web_cps = 1, p2p_cps = 1;  // counts held fixed when not swept
    bool neutral = true, nonneutral = true;
};

inline const char* to_string(CountSweep v) {
    return v == CountSweep::All ? "all" : v == CountSweep::Isps ? "isps" : "cps";
}

inline AppMarketParams app_market_at(const AppArgs& a, int n) {
    AppMarketParams m = a.market;
    m.isps = a.vary == CountSweep::Cps ? a.isps : n;
    m.web_cps = a.vary == CountSweep::Isps ? a.web_cps : n;
    m.p2p_cps = a.vary == CountSweep::Isps ? a.p2p_cps : n;
    return m;
}

struct AppOutcome {
    std::optional<AppEquilibriumReport> report;
    std::string status = "ok";
};

inline AppOutcome solve_app(const AppMarketParams& m, Regime regime) {
    AppOutcome out;
    try {
        out.report = app_equilibrium(m, regime);
    } catch (const NoEquilibrium&) {
        out.status = "no_equilibrium";
    } catch (const SolverFailure&) {
        out.status = "solver_failure";
    }
    return out;
}

inline double relative_change(double after, double before) { return (after - before) / before; }

/// Per n and regime: prices, demands, revenues; non-neutral rows also carry the relative
/// revenue change against the neutral row at the same n when both exist.
inline Dataset app(const AppArgs& a, bool* any_failure = nullptr) {
    require_range("n", a.n_min, a.n_max, 1);
    if (!a.neutral && !a.nonneutral) throw std::invalid_argument("app: no regime selected");
    a.market.validate();
    Dataset d;
    d.command = "app";
    d.params = {{"alpha", a.market.alpha()},
                {"gamma", a.market.gamma()},
                {"web_sensitivity", a.market.web_sensitivity},
                {"p2p_sensitivity", a.market.p2p_sensitivity},
                {"web_max_price", a.market.web_max_price},
                {"p2p_max_price", a.market.p2p_max_price},
                {"n_min", a.n_min},
                {"n_max", a.n_max},
                {"vary", to_string(a.vary)},
                {"isps", a.isps},
                {"web_cps", a.web_cps},
                {"p2p_cps", a.p2p_cps},
                {"regime", a.neutral && a.nonneutral ? "both" : a.neutral ? "neutral" : "nonneutral"}};
    d.columns = {"regime",      "isps",          "web_cps",       "p2p_cps",     "d2",          "d3",
                 "p2max",       "p3max",         "alpha",         "gamma",       "status",      "isp_web_price",
                 "isp_p2p_price", "web_price",   "p2p_price",     "web_demand",  "p2p_demand",  "isp_revenue",
                 "web_revenue", "p2p_revenue",   "foc_residual",  "admissible_roots", "isp_change", "web_change",
                 "p2p_change"};
    struct Point {
        AppMarketParams market;
        std::optional<AppOutcome> neutral, nonneutral;
    };
    const auto points = parallel_map(static_cast<std::size_t>(a.n_max - a.n_min + 1), [&](std::size_t k) {
        Point p{app_market_at(a, a.n_min + static_cast<int>(k)), std::nullopt, std::nullopt};
        if (a.neutral) p.neutral = solve_app(p.market, Regime::Neutral);
        if (a.nonneutral) p.nonneutral = solve_app(p.market, Regime::NonNeutral);
        return p;
    });
    auto emit = [&](const AppMarketParams& m, Regime regime, const AppOutcome& o, const AppOutcome* base) {
        auto row = d.row();
        row.set("regime", to_string(regime))
            .set("isps", m.isps)
            .set("web_cps", m.web_cps)
            .set("p2p_cps", m.p2p_cps)
            .set("d2", m.web_sensitivity)
            .set("d3", m.p2p_sensitivity)
            .set("p2max", m.web_max_price)
            .set("p3max", m.p2p_max_price)
            .set("alpha", m.alpha())
            .set("gamma", m.gamma())
            .set("status", o.status);
        if (o.status == "solver_failure" && any_failure) *any_failure = true;
        if (o.report) {
            const auto& r = *o.report;
            row.set("isp_web_price", r.isp_web_price)
                .set("isp_p2p_price", r.isp_p2p_price)
                .set("web_price", r.web_price)
                .set("p2p_price", r.p2p_price)
                .set("web_demand", r.web_demand)
                .set("p2p_demand", r.p2p_demand)
                .set("isp_revenue", r.isp_revenue)
                .set("web_revenue", r.web_revenue)
                .set("p2p_revenue", r.p2p_revenue)
                .set("foc_residual", r.foc_residual)
                .set("admissible_roots", r.admissible_roots);
            if (base && base->report) {
                const auto& b = *base->report;
                row.set("isp_change", relative_change(r.isp_revenue, b.isp_revenue))
                    .set("web_change", relative_change(r.web_revenue, b.web_revenue))
                    .set("p2p_change", relative_change(r.p2p_revenue, b.p2p_revenue));
            }
        }
        row.done();
    };
    for (const auto& p : points) {
        if (p.neutral) emit(p.market, Regime::Neutral, *p.neutral, nullptr);
        if (p.nonneutral) emit(p.market, Regime::NonNeutral, *p.nonneutral, p.neutral ? &*p.neutral : nullptr);
    }
    return d;
}

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

struct VerifyResult {
    std::size_t rows = 0;
    std::size_t failed_rows = 0;
    std::vector<std::string> failures;  // one line per failing row
    std::string summary;                 // printable table

    bool ok() const { return rows > 0 && failed_rows == 0; }
};

namespace detail {

inline std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

/// Outcome of the checks on one row.
struct RowCheck {
    std::string label;
    std::string category;
    double deviation = 0.0;   // recorded vs re-solved
    double gain = 0.0;        // best unilateral improvement found by the oracle
    double residual = 0.0;    // first-order residual at the recorded values
    std::vector<std::string> problems;

    /// Absolute comparison for values of order one; large values are compared relatively.
    void compare(const std::string& what, double recorded, double resolved, double tol) {
        const double dev = std::abs(recorded - resolved) / std::max(1.0, std::abs(resolved));
        if (std::isnan(dev)) {
            problems.push_back(what + " is not a number");
            return;
        }
        deviation = std::max(deviation, dev);
        if (dev > tol) problems.push_back(what + " deviates by " + sci(dev) + " from the re-solved value");
    }
    void oracle(const OracleVerdict& v, double tol) {
        gain = std::max(gain, v.improvement);
        if (!v.is_nash || v.improvement > tol)
            problems.push_back("oracle: " + v.worst_player() + " gains " + sci(v.improvement) + " by deviating");
    }
    void foc(double r, double tol) {
        if (std::isnan(r)) return;
        residual = std::max(residual, r);
        if (r > tol) problems.push_back("first-order residual " + sci(r));
    }
};

struct CategoryStats {
    std::size_t rows = 0, failed = 0;
    double deviation = 0.0, gain = 0.0, residual = 0.0;
};

/// Re-solved two-sided equilibrium of a given kind, or an empty optional if it does not exist.
inline std::optional<EquilibriumReport> resolve_side(int isps, int cps, double s, EquilibriumKind kind) {
    const MarketParams params{isps, cps, s};
    params.validate();
    if (kind == EquilibriumKind::Boundary) return boundary_nep(params);
    if (s == 0.0) {
        if (kind == EquilibriumKind::Interior1) return neutral_nep(isps, cps);
        return std::nullopt;
    }
    if (isps != cps) throw MalformedDataset("side payments need equal ISP and CP counts");
    for (const auto& r : side_neps_general(s, isps))
        if (r.kind == kind) return r;
    return std::nullopt;
}

inline void check_side_equilibrium(RowCheck& c, const EquilibriumReport& recorded, double tol,
                                   const std::function<void(const EquilibriumReport&)>& compare_more = {}) {
    const auto resolved = resolve_side(recorded.params.isps, recorded.params.cps, recorded.params.side, recorded.kind);
    if (!resolved) {
        c.problems.push_back(std::string(to_string(recorded.kind)) + " no longer exists at these parameters");
        return;
    }
    c.compare("isp_price", recorded.isp_price, resolved->isp_price, tol);
    c.compare("cp_price", recorded.cp_price, resolved->cp_price, tol);
    if (compare_more) compare_more(*resolved);
    OracleOptions o;
    o.epsilon = tol;
    c.oracle(oracle_verify(recorded.profile(), recorded.params, o), tol);
    c.foc(make_report(recorded.kind, recorded.params, recorded.isp_price, recorded.cp_price).foc_residual, tol);
}

inline RowCheck check_side_row(const RowView& row, double tol) {
    RowCheck c;
    const int isps = row.integer("isps"), cps = row.integer("cps");
    const double s = row.num("side");
    const std::string status = row.str("status");
    c.label = "isps=" + std::to_string(isps) + " cps=" + std::to_string(cps) + " s=" + format_number(s);
    if (status != "ok") {
        c.category = status;
        c.problems.push_back("status " + status);
        return c;
    }
    const auto kind = parse_kind(row.str("kind"));
    c.category = to_string(kind);
    c.label = std::string(to_string(kind)) + " " + c.label;
    EquilibriumReport rec = make_report(kind, MarketParams{isps, cps, s}, row.num("isp_price"), row.num("cp_price"));
    check_side_equilibrium(c, rec, tol, [&](const EquilibriumReport& r) {
        c.compare("demand", row.num("demand"), r.demand, tol);
        c.compare("isp_revenue", row.num("isp_revenue"), r.isp_revenue, tol);
        c.compare("cp_revenue", row.num("cp_revenue"), r.cp_revenue, tol);
    });
    return c;
}

inline RowCheck check_table_row(const RowView& row, double tol) {
    RowCheck c;
    const int n = row.integer("n");
    c.label = "n=" + std::to_string(n);
    c.category = "table";
    c.compare("max_side", row.num("max_side"), side_threshold_general(n), tol);
    for (int q = 1; q <= 4; ++q) {
        const std::string name = kTableQuantities[q];
        if (!row.present(name)) {
            c.problems.push_back(name + " is missing");
            continue;
        }
        const auto kind = parse_kind(row.str(name + "_kind"));
        const double s = row.num(name + "_s");
        const auto resolved = resolve_side(n, n, s, kind);
        if (!resolved) {
            c.problems.push_back(name + ": " + to_string(kind) + " does not exist at s=" + format_number(s));
            continue;
        }
        c.compare(name, row.num(name), table_quantity(q, *resolved).first, tol);
        OracleOptions o;
        o.epsilon = tol;
        c.oracle(oracle_verify(resolved->profile(), resolved->params, o), tol);
    }
    return c;
}

inline AppMarketParams app_market_of(const RowView& row) {
    AppMarketParams m{row.integer("isps"), row.integer("web_cps"), row.integer("p2p_cps"),
                      row.num("d2"),       row.num("d3"),          row.num("p2max"),
                      row.num("p3max")};
    m.validate();
    return m;
}

inline RowCheck check_app_row(const Dataset& d, const RowView& row, double tol) {
    RowCheck c;
    const auto m = app_market_of(row);
    const std::string regime_name = row.str("regime");
    if (regime_name != "neutral" && regime_name != "nonneutral") throw MalformedDataset("unknown regime " + regime_name);
    const Regime regime = regime_name == "neutral" ? Regime::Neutral : Regime::NonNeutral;
    const std::string status = row.str("status");
    c.category = regime_name;
    c.label = regime_name + " counts=(" + std::to_string(m.isps) + "," + std::to_string(m.web_cps) + "," +
              std::to_string(m.p2p_cps) + ")";
    const auto resolved = solve_app(m, regime);
    if (status != resolved.status) {
        c.problems.push_back("status " + status + " but re-solving gives " + resolved.status);
        return c;
    }
    if (status != "ok") {
        if (status == "solver_failure") c.problems.push_back("status solver_failure");
        return c;
    }
    const auto& r = *resolved.report;
    for (auto [col, v] : std::initializer_list<std::pair<const char*, double>>{
             {"isp_web_price", r.isp_web_price}, {"isp_p2p_price", r.isp_p2p_price}, {"web_price", r.web_price},
             {"p2p_price", r.p2p_price},         {"web_demand", r.web_demand},       {"p2p_demand", r.p2p_demand},
             {"isp_revenue", r.isp_revenue},     {"web_revenue", r.web_revenue},     {"p2p_revenue", r.p2p_revenue}})
        c.compare(col, row.num(col), v, tol);
    const auto recorded = make_app_report(regime, m, row.num("isp_web_price"), row.num("isp_p2p_price"),
                                          row.num("web_price"), row.num("p2p_price"));
    OracleOptions o;
    o.epsilon = tol;
    c.oracle(oracle_verify(recorded.profile(), m, regime, o), tol);
    c.foc(recorded.foc_residual, tol);
    if (row.present("isp_change")) {
        // The matching neutral row at the same market.
        for (std::size_t k = 0; k < d.rows.size(); ++k) {
            const RowView other(d, k);
            if (other.str("regime") != "neutral" || other.str("status") != "ok") continue;
            const auto om = app_market_of(other);
            if (om.isps != m.isps || om.web_cps != m.web_cps || om.p2p_cps != m.p2p_cps) continue;
            const auto base = app_equilibrium(om, Regime::Neutral);
            c.compare("isp_change", row.num("isp_change"), relative_change(r.isp_revenue, base.isp_revenue), tol);
            c.compare("web_change", row.num("web_change"), relative_change(r.web_revenue, base.web_revenue), tol);
            c.compare("p2p_change", row.num("p2p_change"), relative_change(r.p2p_revenue, base.p2p_revenue), tol);
            break;
        }
    }
    return c;
}

/// Dynamics rows are checked per record; trajectories are re-simulated once per index.
struct DynamicsCache {
    std::map<std::tuple<int, double>, AttractorSet> sets;
    std::map<std::tuple<int, double, long long>, DynamicsTrace> traces;
    std::map<std::tuple<int, double, long long>, std::size_t> positions;
};

inline RowCheck check_dynamics_row(const Dataset& d, const RowView& row, double tol, DynamicsCache& cache) {
    RowCheck c;
    const std::string record = row.str("record");
    const int n = row.integer("isps");
    if (row.integer("cps") != n) throw MalformedDataset("dynamics rows need equal ISP and CP counts");
    const double s = row.num("side");
    const MarketParams params{n, n, s};
    params.validate();
    const double x = row.num("isp_price"), y = row.num("cp_price");
    c.category = record;
    c.label = record + " " + std::to_string(row.integer("index")) + " at (" + format_number(x) + ", " +
              format_number(y) + ")";
    auto set_it = cache.sets.find({n, s});
    if (set_it == cache.sets.end()) set_it = cache.sets.emplace(std::tuple{n, s}, attractors_for(params)).first;
    const AttractorSet& set = set_it->second;

    if (record == "field") {
        if (row.present("isp_rate")) {
            const Rates f = vector_field(std::max(x, kPriceFloor), std::max(y, kPriceFloor), params);
            c.compare("isp_rate", row.num("isp_rate"), f[0], tol);
            c.compare("cp_rate", row.num("cp_rate"), f[1], tol);
        } else if (x + y < 1.0 - 1e-12) {
            c.problems.push_back("field sample missing where demand is positive");
        }
    } else if (record == "zero") {
        const Rates f = vector_field(x, y, params);
        c.foc(std::max(std::abs(f[0]), std::abs(f[1])), tol);
    } else if (record == "equilibrium") {
        const auto kind = parse_kind(row.str("kind"));
        check_side_equilibrium(c, make_report(kind, params, x, y), tol);
        if (kind != EquilibriumKind::Boundary && row.str("stability") != to_string(classify_stability(x, y, params).label))
            c.problems.push_back("stability label differs from the linearization");
    } else if (record == "trajectory") {
        const long long index = row.integer("index");
        const auto key = std::tuple{n, s, index};
        std::size_t& pos = cache.positions[key];
        auto it = cache.traces.find(key);
        if (it == cache.traces.end()) {
            // This is the first state; the next state of the same trajectory gives the stride.
            SimulateOptions opts;
            for (std::size_t k = row.index() + 1; k < d.rows.size(); ++k) {
                const RowView v(d, k);
                if (v.str("record") != "trajectory" || v.integer("index") != index) continue;
                const double st = v.num("step");
                if (st >= 1.0) opts.record_stride = static_cast<long>(st);
                break;
            }
            it = cache.traces.emplace(key, simulate({x, y}, set, opts)).first;
        }
        const DynamicsTrace& tr = it->second;
        const std::string attractor = row.str("attractor");
        if (attractor != to_string(tr.attractor))
            c.problems.push_back("attractor " + attractor + " but re-simulation reaches " + to_string(tr.attractor));
        if (pos < tr.states.size()) {
            c.compare("isp_price", x, tr.states[pos][0], tol);
            c.compare("cp_price", y, tr.states[pos][1], tol);
            if (pos + 1 == tr.states.size() && row.num("step") != static_cast<double>(tr.steps_to_converge))
                c.problems.push_back("final step differs from the re-simulation");
        } else {
            c.problems.push_back("trajectory has more states than the re-simulation");
        }
        ++pos;
    } else {
        throw MalformedDataset("unknown record type '" + record + "'");
    }
    return c;
}

}  // namespace detail

/// Re-solves every row, runs the oracle on each equilibrium and compares recorded values with
/// tolerance `tol`. Throws MalformedDataset for datasets it cannot interpret.
inline VerifyResult verify(const Dataset& d, double tol = 1e-6) {
    if (d.rows.empty()) throw MalformedDataset("dataset has no rows");
    for (const auto& r : d.rows)
        if (r.size() != d.columns.size()) throw MalformedDataset("row width does not match the header");
    VerifyResult out;
    std::map<std::string, detail::CategoryStats> stats;
    std::vector<std::string> order;
    detail::DynamicsCache cache;
    std::vector<detail::RowCheck> checks;

    if (d.command == "dynamics") {
        // Trajectories share a cache, so these rows are checked in order.
        for (std::size_t k = 0; k < d.rows.size(); ++k)
            checks.push_back(detail::check_dynamics_row(d, RowView(d, k), tol, cache));
    } else {
        std::function<detail::RowCheck(const RowView&)> check;
        if (d.command == "neutral-sweep" || d.command == "side-sweep")
            check = [tol](const RowView& r) { return detail::check_side_row(r, tol); };
        else if (d.command == "side-table")
            check = [tol](const RowView& r) { return detail::check_table_row(r, tol); };
        else if (d.command == "app")
            check = [tol, &d](const RowView& r) { return detail::check_app_row(d, r, tol); };
        else
            throw MalformedDataset("unknown dataset '" + d.command + "'");
        try {
            checks = parallel_map(d.rows.size(), [&](std::size_t k) { return check(RowView(d, k)); });
        } catch (const std::invalid_argument& e) {
            throw MalformedDataset(e.what());
        }
    }

    for (std::size_t k = 0; k < checks.size(); ++k) {
        const auto& c = checks[k];
        if (!stats.count(c.category)) order.push_back(c.category);
        auto& s = stats[c.category];
        ++s.rows;
        s.deviation = std::max(s.deviation, c.deviation);
        s.gain = std::max(s.gain, c.gain);
        s.residual = std::max(s.residual, c.residual);
        ++out.rows;
        if (!c.problems.empty()) {
            ++s.failed;
            ++out.failed_rows;
            std::string line = "FAIL row " + std::to_string(k) + " [" + c.label + "]:";
            for (std::size_t p = 0; p < c.problems.size(); ++p) line += (p ? "; " : " ") + c.problems[p];
            out.failures.push_back(line);
        }
    }

    char buf[160];
    std::snprintf(buf, sizeof buf, "%-16s %7s %7s %12s %12s %12s\n", "category", "rows", "failed", "max_dev",
                  "oracle_gain", "residual");
    out.summary = buf;
    for (const auto& name : order) {
        const auto& s = stats[name];
        std::snprintf(buf, sizeof buf, "%-16s %7zu %7zu %12.3g %12.3g %12.3g\n", name.c_str(), s.rows, s.failed,
                      s.deviation, s.gain, s.residual);
        out.summary += buf;
    }
    std::snprintf(buf, sizeof buf, "%s: %zu rows, %zu failed (tol %g)\n", d.command.c_str(), out.rows,
                  out.failed_rows, tol);
    out.summary += buf;
    return out;
}

}  // namespace netgame::report
