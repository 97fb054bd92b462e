// Acceptance gate: one criterion per invocation, selected by argv[1] (1..7).
// Each criterion prints exactly one PASS/FAIL line; the process exits 0 only
// when its criterion passes, including the runtime budget.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "exitopt/exitopt.hpp"

using namespace exitopt;
namespace fs = std::filesystem;

namespace {

const ReducedParams kRef{0.02, 0.2, 0.1, 1.0, 1.0, 0.0};

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

int report(int id, const char* label, bool pass, double elapsed, double budget,
           const std::string& detail) {
    const bool ok = pass && elapsed < budget;
    std::printf("%s criterion %d (%s): %s [%.2f s / budget %.0f s]\n", ok ? "PASS" : "FAIL", id,
                label, detail.c_str(), elapsed, budget);
    return ok ? 0 : 1;
}

// 200 admissible parameter sets drawn as in the sampling recipe shared by
// criteria 1 and 2: the margin r - sigma^2 - 2 alpha is sampled directly.
std::vector<ReducedParams> sample_params() {
    std::vector<ReducedParams> out;
    std::mt19937_64 rng(20260826);
    std::uniform_real_distribution<double> ua(-0.1, 0.04), us(0.05, 0.5), um(0.01, 0.5);
    auto logu = [&rng](double lo, double hi) {
        std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
        return std::exp(u(rng));
    };
    while (out.size() < 200) {
        ReducedParams p{ua(rng), us(rng), 0.0, logu(0.1, 10.0), logu(0.01, 100.0), 0.0};
        p.r = p.sigma * p.sigma + 2.0 * p.alpha + um(rng);
        if (p.r > 0.0) out.push_back(p);
    }
    return out;
}

int criterion1() {
    Timer t;
    bool pass = true;
    double worst_fit = 0.0, worst_res = 0.0;
    for (const ReducedParams& p : sample_params()) {
        const ClosedFormSolution sol = closed_form(p);
        const double scale = p.K_eff / p.r;
        const auto grid = geometric_grid(sol.x_star / 10.0, 10.0 * sol.x_star, 2000);
        const auto rep = hjb_residual(sol, grid);
        worst_fit = std::max(worst_fit, rep.smooth_fit_violation / scale);
        worst_res = std::max(worst_res, rep.max_continuation_residual);
        if (rep.smooth_fit_violation >= 1e-10 * scale) pass = false;
        if (rep.max_continuation_residual >= 1e-9) pass = false;
        if (rep.corollary_violation > 0.0) pass = false;
        if (!(sol.x_star <= 2.0 * std::sqrt(p.K_eff) / p.gamma * (1.0 + 1e-14))) pass = false;
    }
    std::ostringstream d;
    d << "worst fit " << worst_fit << ", worst residual " << worst_res << " over 200 sets";
    return report(1, "closed-form consistency", pass, t.seconds(), 5.0, d.str());
}

int criterion2() {
    Timer t;
    bool pass = true;
    double worst = 0.0;
    for (const ReducedParams& p : sample_params()) {
        const ClosedFormSolution sol = closed_form(p);
        const double b = maximize_threshold(p, 3.0 * sol.x_star);
        worst = std::max(worst, std::abs(b - sol.x_star) / sol.x_star);
        if (std::abs(b - sol.x_star) >= 1e-8 * sol.x_star) pass = false;
    }
    std::ostringstream d;
    d << "worst relative boundary gap " << worst << " over 200 sets";
    return report(2, "two-oracle boundary agreement", pass, t.seconds(), 5.0, d.str());
}

int criterion3() {
    Timer t;
    const ClosedFormSolution limit = closed_form(kRef);
    std::vector<double> caps;
    for (double m : {4.0, 8.0, 16.0, 32.0, 64.0, 128.0}) caps.push_back(m * limit.x_star);
    const ConvergenceTable table = convergence_study(kRef, caps);
    bool converged = true, monotone = table.gaps_monotone();
    int max_iters = 0;
    for (const auto& row : table.rows) {
        if (!row.ok) converged = false;
    }
    for (double C : caps) {
        const TruncatedSolution sol = solve_truncated(kRef, C);
        max_iters = std::max(max_iters, sol.diagnostics.iterations);
    }
    const double final_gap = table.rows.back().gap_x;
    const bool tight = final_gap < 1e-6;
    const bool pass = converged && max_iters <= 25 && monotone && tight;
    std::ostringstream d;
    d << "max iterations " << max_iters << ", gaps monotone " << (monotone ? "yes" : "no")
      << ", gap at C=128x* " << final_gap << " (required < 1e-6; the gap decays like"
      << " C^-(D1-2) ~ C^-0.236, so this bound is out of reach at C = 128 x*)";
    return report(3, "truncation convergence", pass, t.seconds(), 1.0, d.str());
}

int criterion4() {
    Timer t;
    const double cap = 10.0;
    const ValueGrid g = solve_obstacle(kRef, cap, 4000);
    const TruncatedSolution analytic = solve_truncated(kRef, cap);
    double sup = 0.0;
    for (int i = 0; i <= g.n; ++i)
        sup = std::max(sup, std::abs(g.values[i] - truncated_value(analytic, g.x(i))));
    const double scale = kRef.K_eff / kRef.r;
    const bool close = sup < 5e-3 * scale;
    const bool fb_ok = std::abs(g.x(g.free_boundary_index) - analytic.x_star) <= 2.0 * g.h();
    const std::vector<int> sizes{500, 1000, 2000, 4000};
    const RefinementReport ref = grid_refinement_study(kRef, cap, sizes);
    const bool order_ok = ref.fitted_order >= 1.0;
    std::ostringstream d;
    d << "sup gap " << sup / scale << " (scale-relative), boundary offset "
      << std::abs(g.x(g.free_boundary_index) - analytic.x_star) / g.h()
      << " cells, refinement order " << ref.fitted_order;
    return report(4, "finite-difference cross-validation", close && fb_ok && order_ok,
                  t.seconds(), 30.0, d.str());
}

int criterion5() {
    Timer t;
    SimConfig cfg{100000, 1e-3, 200.0, 42, false};
    const ClosedFormSolution sol = closed_form(kRef);
    auto within = [](const MCEstimate& e, double target) {
        return std::abs(e.mean - target) < 3.0 * e.std_error + e.tail_bound + 0.05;
    };

    const MCEstimate never = simulate_threshold_value(kRef, 1.0, 0.0, cfg);
    const bool a = within(never, perpetual_value(kRef, 1.0));

    const MCEstimate opt = simulate_threshold_value(kRef, 1.0, sol.x_star, cfg);
    const bool b = within(opt, value(sol, 1.0));

    // spacing chosen so adjacent policy-value gaps (>= 0.3) clear the CRN
    // noise floor; with 0.05-spaced thresholds the ~0.015 gaps are not
    // resolvable at this path count (the payoff variance at these parameters
    // grows like e^{(4 alpha + 3 sigma^2 - r) T})
    const std::vector<double> bs{0.4, 0.52, sol.x_star, 0.78, 0.9};
    const auto sweep = threshold_sweep(kRef, 1.0, bs, cfg);
    std::size_t best = 0;
    for (std::size_t i = 1; i < sweep.size(); ++i)
        if (sweep[i].second.mean > sweep[best].second.mean) best = i;
    const bool c = sweep[best].first == sol.x_star;

    bool d = true;
    for (double I : {5.0, -2.0}) {
        const ModelParams full{kRef.alpha, kRef.sigma, kRef.r, kRef.gamma, kRef.K_eff, I};
        const ConsistencyReport rep = sunk_cost_consistency(full, 1.0, cfg);
        d = d && rep.pass;
    }

    std::ostringstream det;
    det << "never-exit " << (a ? "ok" : "off") << " (" << never.mean << " vs "
        << perpetual_value(kRef, 1.0) << "), optimal " << (b ? "ok" : "off") << " (" << opt.mean
        << " vs " << value(sol, 1.0) << "), sweep argmax " << (c ? "ok" : "off")
        << ", sunk-cost " << (d ? "ok" : "off");
    return report(5, "Monte Carlo validation", a && b && c && d, t.seconds(), 300.0, det.str());
}

#ifndef EXITOPT_CLI_PATH
#define EXITOPT_CLI_PATH "exitopt_cli"
#endif

std::string write_ref_config(const fs::path& dir) {
    const fs::path p = dir / "params.json";
    std::ofstream f(p);
    f << R"({"alpha":0.02,"sigma":0.2,"r":0.1,"gamma":1.0,"K":1.0,)"
      << R"("mc":{"n_paths":2000,"dt":0.01,"horizon":200.0,"seed":7}})";
    return p.string();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(EXITOPT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

int criterion6() {
    Timer t;
    const fs::path dir = fs::temp_directory_path() / "exitopt_acceptance6";
    fs::create_directories(dir);
    const std::string cfg = write_ref_config(dir);

    const int clean = run_cli("verify --config " + cfg);
    const int corrupted = run_cli("verify --config " + cfg + " --perturb-a2 0.01");
    const bool cli_ok = clean == 0 && corrupted == 4;

    bool solver_ok = false;
    try {
        SolveOptions opts;
        opts.bias_equation = 1;
        opts.bias_amount = 0.01;
        solve_truncated(kRef, 10.0, opts);
    } catch (const InvariantViolation&) {
        solver_ok = true;
    }
    std::ostringstream d;
    d << "verify exit codes " << clean << "/" << corrupted
      << " (want 0/4), biased Newton rejected " << (solver_ok ? "yes" : "no");
    return report(6, "fault injection", cli_ok && solver_ok, t.seconds(), 1.0, d.str());
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

int criterion7() {
    Timer t;
    const fs::path dir = fs::temp_directory_path() / "exitopt_acceptance7";
    fs::create_directories(dir);
    const std::string cfg = write_ref_config(dir);

    const std::vector<std::pair<std::string, std::string>> runs{
        {"solve", "solve --config " + cfg},
        {"verify", "verify --config " + cfg},
        {"converge", "converge --config " + cfg + " --format csv"},
        {"fd", "fd --config " + cfg + " --C 10 --n 500 --format csv"},
        {"mc", "mc --config " + cfg + " --b 0.65 --bias-allowance 0.3"},
        {"mc-sweep", "mc --config " + cfg + " --sweep 0.5,0.65,0.8 --bias-allowance 0.3"},
        {"report", "report --config " + cfg},
    };
    bool pass = true;
    std::string failed;
    for (const auto& [name, args] : runs) {
        const fs::path o1 = dir / (name + ".1"), o2 = dir / (name + ".2");
        const int r1 = run_cli(args + " --out " + o1.string());
        const int r2 = run_cli(args + " --out " + o2.string());
        const bool same = r1 == r2 && r1 >= 0 && slurp(o1) == slurp(o2) && !slurp(o1).empty();
        if (!same) {
            pass = false;
            failed += (failed.empty() ? "" : ", ") + name;
        }
    }
    std::ostringstream d;
    d << "byte-identical repeated outputs for " << runs.size() << " subcommands"
      << (failed.empty() ? "" : " (failed: " + failed + ")");
    return report(7, "determinism", pass, t.seconds(), 600.0, d.str());
}

} // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::fprintf(stderr, "usage: %s <criterion 1..7>\n", argv[0]);
        return 2;
    }
    switch (std::atoi(argv[1])) {
        case 1: return criterion1();
        case 2: return criterion2();
        case 3: return criterion3();
        case 4: return criterion4();
        case 5: return criterion5();
        case 6: return criterion6();
        case 7: return criterion7();
        default:
            std::fprintf(stderr, "usage: %s <criterion 1..7>\n", argv[0]);
            return 2;
    }
}
