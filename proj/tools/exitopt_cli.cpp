// Command-line driver wiring the solver engines together: solve, verify,
// converge, fd, mc and report subcommands with JSON configuration and
// machine-readable CSV/JSON output.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "exitopt/exitopt.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitTrivial = 2;
constexpr int kExitConverge = 3;
constexpr int kExitVerify = 4;
constexpr int kExitFd = 5;
constexpr int kExitMc = 6;

struct Cli {
    std::string config_path;
    std::optional<double> alpha, sigma, r, gamma, K, I;
    std::optional<double> cap, tol;
    std::optional<int> n;
    std::optional<std::int64_t> n_paths;
    std::optional<double> dt, horizon;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string format = "json";
};

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream f(path);
    if (!f) throw exitopt::ConfigError{"cannot open config file " + path};
    json j;
    try {
        f >> j;
    } catch (const json::parse_error& e) {
        throw exitopt::ConfigError{std::string("config parse error: ") + e.what()};
    }
    return j;
}

exitopt::ModelParams resolve_params(const Cli& cli, const json& cfg) {
    exitopt::ModelParams p;
    if (!cfg.empty()) {
        p = exitopt::parse_params(cfg);
    } else if (!(cli.alpha && cli.sigma && cli.r && cli.gamma && cli.K)) {
        throw exitopt::ConfigError{
            "parameters required: --config or all of --alpha --sigma --r --gamma --K"};
    }
    if (cli.alpha) p.alpha = *cli.alpha;
    if (cli.sigma) p.sigma = *cli.sigma;
    if (cli.r) p.r = *cli.r;
    if (cli.gamma) p.gamma = *cli.gamma;
    if (cli.K) p.K = *cli.K;
    if (cli.I) p.I = *cli.I;
    return p;
}

exitopt::SimConfig resolve_sim(const Cli& cli, const json& cfg) {
    exitopt::SimConfig sim{100000, 1e-3, 200.0, 42, false};
    sim = exitopt::parse_sim_config(cfg, sim);
    if (cli.n_paths) sim.n_paths = *cli.n_paths;
    if (cli.dt) sim.dt = *cli.dt;
    if (cli.horizon) sim.horizon = *cli.horizon;
    if (cli.seed) sim.seed = *cli.seed;
    return sim;
}

void emit(const Cli& cli, const std::string& content) {
    if (!cli.out.empty()) exitopt::write_file(cli.out, content);
    std::cout << content;
    if (!content.empty() && content.back() != '\n') std::cout << '\n';
}

// Returns the classification exit code for trivial/inadmissible parameters,
// printing the classification, or nullopt when admissible.
std::optional<int> classify_or_report(const exitopt::ModelParams& p, const Cli& cli) {
    const auto rep = exitopt::check_admissibility(p);
    const exitopt::ReducedParams rp = exitopt::reduce_sunk_cost(p);
    std::string cls;
    if (rep.status == exitopt::Admissibility::TrivialNeverExit) cls = "TrivialNeverExit";
    else if (rep.status == exitopt::Admissibility::TrivialInfinite) cls = "TrivialInfinite";
    else if (rp.trivial_never_exit()) cls = "TrivialNeverExit";
    else return std::nullopt;
    json j{{"admissibility", cls}, {"margin", rep.margin}, {"K_eff", rp.K_eff}};
    emit(cli, j.dump(2));
    return kExitTrivial;
}

int cmd_solve(const Cli& cli) {
    const json cfg = load_config(cli.config_path);
    const exitopt::ModelParams p = resolve_params(cli, cfg);
    if (auto code = classify_or_report(p, cli)) return *code;
    const exitopt::ReducedParams rp = exitopt::reduce_sunk_cost(p);
    const exitopt::ClosedFormSolution sol = exitopt::closed_form(rp);
    json j{{"admissibility", "Admissible"},
           {"D1", sol.roots.d1},
           {"D2", sol.roots.d2},
           {"B", sol.b_coeff},
           {"x_star", sol.x_star},
           {"A2", sol.a2},
           {"K_eff", rp.K_eff},
           {"offset", rp.value_offset}};
    emit(cli, j.dump(2));
    return kExitOk;
}

int cmd_verify(const Cli& cli, double perturb_a2) {
    const json cfg = load_config(cli.config_path);
    const exitopt::ModelParams p = resolve_params(cli, cfg);
    if (auto code = classify_or_report(p, cli)) return *code;
    const exitopt::ReducedParams rp = exitopt::reduce_sunk_cost(p);
    exitopt::ClosedFormSolution sol = exitopt::closed_form(rp);
    sol.a2 *= 1.0 + perturb_a2;  // fault-injection self-test hook
    const auto grid = exitopt::geometric_grid(sol.x_star / 10.0, 10.0 * sol.x_star, 2000);
    const double tol = cli.tol ? *cli.tol : 1e-9;
    const auto rep = exitopt::hjb_residual(sol, grid, tol);
    const bool pass = rep.pass(tol, rp.K_eff / rp.r);
    json j = exitopt::to_json(rep);
    j["pass"] = pass;
    j["x_star"] = sol.x_star;
    emit(cli, j.dump(2));
    if (!pass) {
        std::cerr << "verify: residual check failed (max continuation residual "
                  << exitopt::num(rep.max_continuation_residual) << ", smooth fit "
                  << exitopt::num(rep.smooth_fit_violation) << ")\n";
        return kExitVerify;
    }
    return kExitOk;
}

int cmd_converge(const Cli& cli, std::vector<double> caps) {
    const json cfg = load_config(cli.config_path);
    const exitopt::ModelParams p = resolve_params(cli, cfg);
    if (auto code = classify_or_report(p, cli)) return *code;
    const exitopt::ReducedParams rp = exitopt::reduce_sunk_cost(p);
    if (caps.empty()) {
        const double xs = exitopt::closed_form(rp).x_star;
        for (double m : {4.0, 8.0, 16.0, 32.0, 64.0}) caps.push_back(m * xs);
    }
    const auto table = exitopt::convergence_study(rp, caps);
    if (cli.format == "csv") {
        std::string csv = exitopt::to_csv(table);
        json meta{{"rate", table.fitted_rate ? json(*table.fitted_rate) : json(nullptr)},
                  {"x_star_limit", table.x_star_limit},
                  {"A2_limit", table.a2_limit}};
        emit(cli, csv + meta.dump());
    } else {
        emit(cli, exitopt::to_json(table).dump(2));
    }
    for (const auto& row : table.rows)
        if (!row.ok) {
            std::cerr << "converge: row C=" << exitopt::num(row.cap) << " failed: " << row.error
                      << "\n";
            return kExitConverge;
        }
    if (!table.gaps_monotone()) {
        std::cerr << "converge: gap columns not monotone\n";
        return kExitConverge;
    }
    return kExitOk;
}

int cmd_fd(const Cli& cli, const std::vector<int>& refine, double omega) {
    const json cfg = load_config(cli.config_path);
    const exitopt::ModelParams p = resolve_params(cli, cfg);
    if (auto code = classify_or_report(p, cli)) return *code;
    const exitopt::ReducedParams rp = exitopt::reduce_sunk_cost(p);
    const double cap = cli.cap ? *cli.cap : 10.0;
    const int n = cli.n ? *cli.n : 4000;
    const double tol = cli.tol ? *cli.tol : 5e-3;
    exitopt::SchemeOptions opts;
    opts.omega = omega;
    try {
        if (!refine.empty()) {
            const auto rep = exitopt::grid_refinement_study(rp, cap, refine, opts);
            emit(cli, exitopt::to_json(rep).dump(2));
            return kExitOk;
        }
        const exitopt::ValueGrid grid = exitopt::solve_obstacle(rp, cap, n, opts);
        const exitopt::TruncatedSolution analytic = exitopt::solve_truncated(rp, cap);
        double gap = 0.0;
        for (int i = 0; i <= grid.n; ++i)
            gap = std::max(gap,
                           std::abs(grid.values[i] - exitopt::truncated_value(analytic, grid.x(i))));
        const double scale = rp.K_eff / rp.r;
        json summary{{"C", cap},
                     {"n", n},
                     {"sup_gap", gap},
                     {"sup_gap_relative", gap / scale},
                     {"tolerance", tol},
                     {"free_boundary_index", grid.free_boundary_index},
                     {"x_star_C", analytic.x_star},
                     {"sweeps", grid.sweeps}};
        if (cli.format == "csv")
            emit(cli, exitopt::to_csv(grid) + summary.dump());
        else
            emit(cli, summary.dump(2));
        if (gap > tol * scale) {
            std::cerr << "fd: sup-norm gap " << exitopt::num(gap / scale)
                      << " (scale-relative) exceeds tolerance " << exitopt::num(tol) << "\n";
            return kExitFd;
        }
    } catch (const exitopt::IterationLimit& e) {
        std::cerr << "fd: " << e.what() << "\n";
        return kExitFd;
    }
    return kExitOk;
}

int cmd_mc(const Cli& cli, std::optional<double> b_opt, const std::vector<double>& sweep,
           bool sunk, double x0, bool antithetic, double bias_allowance) {
    const json cfg = load_config(cli.config_path);
    const exitopt::ModelParams p = resolve_params(cli, cfg);
    if (auto code = classify_or_report(p, cli)) return *code;
    const exitopt::ReducedParams rp = exitopt::reduce_sunk_cost(p);
    exitopt::SimConfig sim = resolve_sim(cli, cfg);
    sim.antithetic = antithetic || sim.antithetic;
    if (exitopt::horizon_warning(sim, rp.r))
        std::cerr << "mc: warning: r*T = " << exitopt::num(rp.r * sim.horizon)
                  << " < 20; discounted tail not negligible\n";
    const exitopt::ClosedFormSolution sol = exitopt::closed_form(rp);
    bool all_pass = true;

    if (sunk) {
        const auto rep = exitopt::sunk_cost_consistency(p, x0, sim, bias_allowance);
        json j{{"mode", "sunk_cost_consistency"},
               {"estimate", exitopt::to_json(rep.full)},
               {"analytic", rep.analytic},
               {"threshold", rep.threshold},
               {"diff", rep.diff},
               {"tolerance", rep.tolerance},
               {"pass", rep.pass}};
        emit(cli, j.dump(2));
        all_pass = rep.pass;
    } else if (!sweep.empty()) {
        const auto results = exitopt::threshold_sweep(rp, x0, sweep, sim);
        std::string csv = exitopt::to_csv(results);
        json checks = json::array();
        for (const auto& [b, est] : results) {
            const double analytic = exitopt::threshold_policy_value(rp, b, x0);
            const double tol = 3.0 * est.std_error + est.tail_bound + bias_allowance;
            const bool pass = std::abs(est.mean - analytic) <= tol;
            checks.push_back({{"b", b}, {"analytic", analytic}, {"pass", pass}});
            all_pass = all_pass && pass;
        }
        emit(cli, csv + json{{"checks", checks}}.dump());
    } else {
        const double b = b_opt ? *b_opt : sol.x_star;
        const auto est = exitopt::simulate_threshold_value(rp, x0, b, sim);
        const double analytic = b > 0.0 ? exitopt::threshold_policy_value(rp, b, x0)
                                        : exitopt::perpetual_value(rp, x0);
        const double tol = 3.0 * est.std_error + est.tail_bound + bias_allowance;
        all_pass = std::abs(est.mean - analytic) <= tol;
        json j{{"mode", "threshold"},
               {"b", b},
               {"x0", x0},
               {"estimate", exitopt::to_json(est)},
               {"analytic", analytic},
               {"tolerance", tol},
               {"pass", all_pass}};
        emit(cli, j.dump(2));
    }
    if (!all_pass) {
        std::cerr << "mc: closed-form comparison outside tolerance\n";
        return kExitMc;
    }
    return kExitOk;
}

int cmd_report(const Cli& cli) {
    const json cfg = load_config(cli.config_path);
    const exitopt::ModelParams p = resolve_params(cli, cfg);
    if (auto code = classify_or_report(p, cli)) return *code;
    const exitopt::ReducedParams rp = exitopt::reduce_sunk_cost(p);
    const exitopt::ClosedFormSolution sol = exitopt::closed_form(rp);
    const auto grid = exitopt::geometric_grid(sol.x_star / 10.0, 10.0 * sol.x_star, 2000);
    const auto rep = exitopt::hjb_residual(sol, grid);
    json j{{"solution",
            {{"D1", sol.roots.d1},
             {"D2", sol.roots.d2},
             {"B", sol.b_coeff},
             {"x_star", sol.x_star},
             {"A2", sol.a2},
             {"K_eff", rp.K_eff},
             {"offset", rp.value_offset}}},
           {"verification", exitopt::to_json(rep)},
           {"verification_pass", rep.pass(1e-9, rp.K_eff / rp.r)}};
    emit(cli, j.dump(2));
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optimal market-exit solver: closed form, truncation, finite differences, "
                 "Monte Carlo"};
    app.require_subcommand(1);

    Cli cli;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", cli.config_path, "JSON parameter file");
        sub->add_option("--alpha", cli.alpha, "drift");
        sub->add_option("--sigma", cli.sigma, "volatility");
        sub->add_option("--r", cli.r, "discount rate");
        sub->add_option("--gamma", cli.gamma, "inverse-demand slope");
        sub->add_option("--K", cli.K, "fixed cost");
        sub->add_option("--I", cli.I, "exit sunk cost");
        sub->add_option("--out", cli.out, "output file path");
        sub->add_option("--format", cli.format, "output format: csv or json")
            ->check(CLI::IsMember({"csv", "json"}));
    };

    auto* solve = app.add_subcommand("solve", "closed-form limit solution");
    add_common(solve);

    auto* verify = app.add_subcommand("verify", "HJB residual verification of the closed form");
    add_common(verify);
    double perturb_a2 = 0.0;
    verify->add_option("--perturb-a2", perturb_a2, "fault injection: scale A2 by (1 + f)");
    verify->add_option("--tol", cli.tol, "continuation residual tolerance (relative)");

    auto* converge = app.add_subcommand("converge", "truncation convergence study");
    add_common(converge);
    std::vector<double> caps;
    converge->add_option("--caps", caps, "cap levels C")->delimiter(',');

    auto* fd = app.add_subcommand("fd", "finite-difference obstacle-problem cross-check");
    add_common(fd);
    fd->add_option("--C", cli.cap, "truncation cap");
    fd->add_option("--n", cli.n, "grid cells");
    fd->add_option("--tol", cli.tol, "sup-norm tolerance, relative to K_eff/r");
    std::vector<int> refine;
    fd->add_option("--refine", refine, "grid sizes for a refinement study")->delimiter(',');
    double omega = 0.0;
    fd->add_option("--omega", omega, "PSOR relaxation (default: grid-adaptive)");

    auto* mc = app.add_subcommand("mc", "Monte Carlo threshold-policy valuation");
    add_common(mc);
    std::optional<double> b_opt;
    std::vector<double> sweep;
    bool sunk = false, antithetic = false;
    double x0 = 1.0, bias_allowance = 0.05;
    mc->add_option("--b", b_opt, "exit threshold (default: x_star; 0 = never exit)");
    mc->add_option("--sweep", sweep, "threshold sweep values")->delimiter(',');
    mc->add_flag("--sunk", sunk, "run the sunk-cost consistency check");
    mc->add_option("--x0", x0, "initial demand level");
    mc->add_flag("--antithetic", antithetic, "antithetic variates");
    mc->add_option("--bias-allowance", bias_allowance, "flat dt-bias allowance in comparisons");
    mc->add_option("--n-paths", cli.n_paths, "path count");
    mc->add_option("--dt", cli.dt, "time step");
    mc->add_option("--horizon", cli.horizon, "simulation horizon T");
    mc->add_option("--seed", cli.seed, "RNG seed");

    auto* report = app.add_subcommand("report", "solution plus verification in one document");
    add_common(report);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitConfig;
    }

    try {
        if (solve->parsed()) return cmd_solve(cli);
        if (verify->parsed()) return cmd_verify(cli, perturb_a2);
        if (converge->parsed()) return cmd_converge(cli, caps);
        if (fd->parsed()) return cmd_fd(cli, refine, omega);
        if (mc->parsed()) return cmd_mc(cli, b_opt, sweep, sunk, x0, antithetic, bias_allowance);
        if (report->parsed()) return cmd_report(cli);
    } catch (const exitopt::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const exitopt::NewtonDiverged& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConverge;
    } catch (const exitopt::CapTooSmall& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConverge;
    } catch (const exitopt::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}
