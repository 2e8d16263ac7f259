// Command-line front end: equilibrium sweeps, the n-impact table, price dynamics, the
// application game and verification of any dataset it writes.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "netgame/report.hpp"

using namespace netgame;

namespace {

enum Exit { kOk = 0, kFailure = 1, kUsage = 2 };

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool flag_given(const std::vector<std::string>& args, const std::string& key) {
    const std::string flag = "--" + key;
    for (const auto& a : args)
        if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    return false;
}

/// Appends `--key=value` for every config entry whose flag is not already on the command line.
/// Lines are key=value; blank lines and lines starting with '#' are ignored.
void apply_config(std::vector<std::string>& args, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CLI::FileError::Missing(path);
    std::string line;
    std::vector<std::string> extra;
    for (int lineno = 1; std::getline(in, line); ++lineno) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw CLI::ConversionError(path + ":" + std::to_string(lineno) + ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        if (key == "config") continue;
        if (!flag_given(args, key)) extra.push_back("--" + key + "=" + trim(line.substr(eq + 1)));
    }
    args.insert(args.end(), extra.begin(), extra.end());
}

std::string config_path(const std::vector<std::string>& args) {
    for (std::size_t k = 0; k < args.size(); ++k) {
        if (args[k] == "--config" && k + 1 < args.size()) return args[k + 1];
        if (args[k].rfind("--config=", 0) == 0) return args[k].substr(9);
    }
    return {};
}

struct Global {
    std::string out = "-";
    std::string format = "csv";
    double tol = 1e-6;
    unsigned long long seed = 1;
    std::string config;
};

int write_output(const std::string& text, const std::string& path) {
    if (path == "-") {
        std::cout << text << std::flush;
        return std::cout ? kOk : kUsage;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        std::cerr << "error: cannot write " << path << "\n";
        return kUsage;
    }
    out << text;
    out.close();
    if (!out) {
        std::cerr << "error: failed writing " << path << "\n";
        return kUsage;
    }
    return kOk;
}

int emit(const Dataset& d, const Global& g, bool failed) {
    const int rc = write_output(g.format == "json" ? to_json(d) : to_csv(d), g.out);
    if (rc != kOk) return rc;
    if (failed) std::cerr << "error: some points failed to solve (see status column)\n";
    return failed ? kFailure : kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Equilibria of usage-priced ISP/content-provider markets"};
    app.require_subcommand(1);
    app.fallthrough();

    Global g;
    app.add_option("--out", g.out, "Output path ('-' for stdout)")->capture_default_str();
    app.add_option("--format", g.format, "Dataset format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    app.add_option("--tol", g.tol, "Verification tolerance")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--seed", g.seed, "Seed for random trajectory starts")->capture_default_str();
    app.add_option("--config", g.config, "key=value file; command-line flags take precedence");

    report::NeutralSweepArgs ns;
    auto* neutral = app.add_subcommand("neutral-sweep", "Neutral equilibria over ISP and CP counts");
    neutral->add_option("--isps-min", ns.n1_min)->capture_default_str();
    neutral->add_option("--isps-max", ns.n1_max)->capture_default_str();
    neutral->add_option("--cps-min", ns.n2_min)->capture_default_str();
    neutral->add_option("--cps-max", ns.n2_max)->capture_default_str();

    report::SideSweepArgs ss;
    auto* side = app.add_subcommand("side-sweep", "Interior and boundary equilibria across side payments");
    side->add_option("-n,--n", ss.n, "ISPs = CPs")->capture_default_str();
    side->add_option("--s-start", ss.s_start)->capture_default_str();
    side->add_option("--s-stop", ss.s_stop)->capture_default_str();
    side->add_option("--steps", ss.steps)->capture_default_str();

    report::SideTableArgs st;
    auto* table = app.add_subcommand("side-table", "Threshold and equilibrium extrema per n");
    table->add_option("--n-min", st.n_min)->capture_default_str();
    table->add_option("--n-max", st.n_max)->capture_default_str();
    table->add_option("--samples", st.samples, "Side-payment samples per n")->capture_default_str();

    report::DynamicsArgs dy;
    auto* dyn = app.add_subcommand("dynamics", "Gradient field, its zeros, equilibria and trajectories");
    dyn->add_option("-n,--n", dy.n, "ISPs = CPs")->capture_default_str();
    dyn->add_option("-s,--s", dy.side, "Side-payment rate")->capture_default_str();
    dyn->add_option("--resolution", dy.resolution)->capture_default_str();
    dyn->add_option("--trajectories", dy.random_starts, "Random starts besides the two fixed ones")
        ->capture_default_str();
    dyn->add_option("--stride", dy.stride, "Record every k-th state")->capture_default_str();
    dyn->add_option("--step", dy.step, "Gradient step size")->capture_default_str();

    double alpha = 0.8, gamma = 0.3;
    std::optional<double> d2, d3, p2max, p3max;
    std::string regime = "both", vary = "all";
    report::AppArgs ap;
    auto* appgame = app.add_subcommand("app", "Application game, neutral and non-neutral");
    appgame->add_option("--alpha", alpha, "d2 / (d2 + d3)")->capture_default_str();
    appgame->add_option("--gamma", gamma, "p2max / p3max")->capture_default_str();
    appgame->add_option("--d2", d2, "Web demand sensitivity (overrides the shorthand)");
    appgame->add_option("--d3", d3, "P2P demand sensitivity");
    appgame->add_option("--p2max", p2max, "Web price cap");
    appgame->add_option("--p3max", p3max, "P2P price cap");
    appgame->add_option("--n-min", ap.n_min)->capture_default_str();
    appgame->add_option("--n-max", ap.n_max)->capture_default_str();
    appgame->add_option("--regime", regime)->check(CLI::IsMember({"neutral", "nonneutral", "both"}))->capture_default_str();
    appgame->add_option("--vary", vary, "Counts following n")
        ->check(CLI::IsMember({"all", "isps", "cps"}))
        ->capture_default_str();
    appgame->add_option("--isps", ap.isps, "ISP count when not varied")->capture_default_str();
    appgame->add_option("--web-cps", ap.web_cps, "Web CP count when not varied")->capture_default_str();
    appgame->add_option("--p2p-cps", ap.p2p_cps, "P2P CP count when not varied")->capture_default_str();

    std::string dataset_path;
    auto* verify = app.add_subcommand("verify", "Re-solve and oracle-check every row of a dataset");
    verify->add_option("dataset", dataset_path, "CSV or JSON dataset")->required();

    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        if (const auto path = config_path(args); !path.empty()) apply_config(args, path);
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (*neutral) return emit(report::neutral_sweep(ns), g, false);
        if (*side) {
            bool failed = false;
            const auto d = report::side_sweep(ss, &failed);
            return emit(d, g, failed);
        }
        if (*table) return emit(report::side_table(st), g, false);
        if (*dyn) {
            dy.seed = g.seed;
            return emit(report::dynamics(dy), g, false);
        }
        if (*appgame) {
            if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
            if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be > 0");
            AppMarketParams m = AppMarketParams::from_shape(alpha, gamma);
            if (d2) m.web_sensitivity = *d2;
            if (d3) m.p2p_sensitivity = *d3;
            if (p2max) m.web_max_price = *p2max;
            if (p3max) m.p2p_max_price = *p3max;
            ap.market = m;
            ap.neutral = regime != "nonneutral";
            ap.nonneutral = regime != "neutral";
            ap.vary = vary == "all" ? report::CountSweep::All
                      : vary == "isps" ? report::CountSweep::Isps
                                       : report::CountSweep::Cps;
            bool failed = false;
            const auto d = report::app(ap, &failed);
            return emit(d, g, failed);
        }
        if (*verify) {
            const auto d = read_dataset(dataset_path);
            const auto result = report::verify(d, g.tol);
            std::ostringstream text;
            for (const auto& f : result.failures) text << f << "\n";
            text << result.summary;
            const int rc = write_output(text.str(), g.out);
            if (rc != kOk) return rc;
            return result.ok() ? kOk : kFailure;
        }
    } catch (const MalformedDataset& e) {
        std::cerr << "error: malformed dataset: " << e.what() << "\n";
        return kUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kUsage;
}
