#ifndef EXITOPT_TRUNCATED_HPP
#define EXITOPT_TRUNCATED_HPP

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "exitopt/closed_form.hpp"
#include "exitopt/errors.hpp"
#include "exitopt/hjb.hpp"
#include "exitopt/model.hpp"
#include "exitopt/roots.hpp"

namespace exitopt {

struct NewtonDiagnostics {
    int iterations = 0;
    double residual_norm = 0.0;
    bool used_continuation = false;
};

/// Solution of the finite-cap problem: value branch
/// v(x) = a1 x^{d1} + a2 x^{d2} + B x^2 - K_eff/r on [x_star, C], zero below.
struct TruncatedSolution {
    ReducedParams params;
    CharacteristicRoots roots;
    double b_coeff = 0.0;
    double cap = 0.0;
    double a1 = 0.0;
    double a2 = 0.0;
    double x_star = 0.0;
    NewtonDiagnostics diagnostics;
};

struct SolveOptions {
    int max_iterations = 50;
    double tol = 1e-12;           ///< scaled Newton convergence tolerance
    int bias_equation = -1;       ///< test hook: corrupt this equation (0..2)
    double bias_amount = 0.0;     ///< bias in units of K_eff/r
};

/// Raw residuals of the three terminal/fit equations at (a1, a2, x):
/// v(C), v(x), v'(x) scaled by x (all in value units).
inline std::array<double, 3> newton_system_residual(const ReducedParams& p, double cap,
                                                    double a1, double a2, double x) {
    if (!(x > 0.0) || !(x < cap)) throw DomainError{"x must lie in (0, C)"};
    const CharacteristicRoots roots = compute_roots(p);
    const double B = particular_coefficient(p.alpha, p.sigma, p.r, p.gamma);
    const double kr = p.K_eff / p.r;
    const double p1C = std::pow(cap, roots.d1), p2C = std::pow(cap, roots.d2);
    const double p1x = std::pow(x, roots.d1), p2x = std::pow(x, roots.d2);
    return {a1 * p1C + a2 * p2C + B * cap * cap - kr,
            a1 * p1x + a2 * p2x + B * x * x - kr,
            a1 * roots.d1 * p1x + a2 * roots.d2 * p2x + 2.0 * B * x * x};
}

namespace detail {

// Scaled system of the implicit-function-theorem argument: the terminal
// equation is divided by C^{d1} so its coefficients stay O(1) for large C.
struct ScaledSystem {
    ReducedParams p;
    CharacteristicRoots roots;
    double B = 0.0, kr = 0.0, cap = 0.0, eps1 = 0.0, eps2 = 0.0;
    int bias_equation = -1;
    double bias = 0.0;

    ScaledSystem(const ReducedParams& params, double C, const SolveOptions& opts)
        : p(params), roots(compute_roots(params)),
          B(particular_coefficient(params.alpha, params.sigma, params.r, params.gamma)),
          kr(params.K_eff / params.r), cap(C),
          eps1(std::pow(C, roots.d2 - roots.d1)),
          eps2(B * std::pow(C, 2.0 - roots.d1) - kr * std::pow(C, -roots.d1)),
          bias_equation(opts.bias_equation), bias(opts.bias_amount * kr) {}

    std::array<double, 3> residual(double a1, double a2, double x) const {
        const double p1 = std::pow(x, roots.d1), p2 = std::pow(x, roots.d2);
        std::array<double, 3> g{a1 + eps1 * a2 + eps2,
                                a1 * p1 + a2 * p2 + B * x * x - kr,
                                a1 * roots.d1 * p1 + a2 * roots.d2 * p2 + 2.0 * B * x * x};
        if (bias_equation >= 0 && bias_equation < 3) g[bias_equation] += bias;
        return g;
    }

    // rows: d(g_i)/d(a1, a2, x)
    std::array<std::array<double, 3>, 3> jacobian(double a1, double a2, double x) const {
        const double p1 = std::pow(x, roots.d1), p2 = std::pow(x, roots.d2);
        const double d1 = roots.d1, d2 = roots.d2;
        return {{{1.0, eps1, 0.0},
                 {p1, p2, a1 * d1 * p1 / x + a2 * d2 * p2 / x + 2.0 * B * x},
                 {d1 * p1, d2 * p2,
                  a1 * d1 * d1 * p1 / x + a2 * d2 * d2 * p2 / x + 4.0 * B * x}}};
    }

    double norm(const std::array<double, 3>& g, double a1_scale) const {
        return std::max({std::abs(g[0]) / a1_scale, std::abs(g[1]) / kr, std::abs(g[2]) / kr});
    }
};

// 3x3 linear solve, Gaussian elimination with partial pivoting.
inline bool solve3(std::array<std::array<double, 3>, 3> A, std::array<double, 3> b,
                   std::array<double, 3>& out) {
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int i = col + 1; i < 3; ++i)
            if (std::abs(A[i][col]) > std::abs(A[piv][col])) piv = i;
        if (A[piv][col] == 0.0 || !std::isfinite(A[piv][col])) return false;
        std::swap(A[col], A[piv]);
        std::swap(b[col], b[piv]);
        for (int i = col + 1; i < 3; ++i) {
            const double f = A[i][col] / A[col][col];
            for (int j = col; j < 3; ++j) A[i][j] -= f * A[col][j];
            b[i] -= f * b[col];
        }
    }
    for (int i = 2; i >= 0; --i) {
        double s = b[i];
        for (int j = i + 1; j < 3; ++j) s -= A[i][j] * out[j];
        out[i] = s / A[i][i];
    }
    return std::isfinite(out[0]) && std::isfinite(out[1]) && std::isfinite(out[2]);
}

struct NewtonResult {
    double a1 = 0.0, a2 = 0.0, x = 0.0;
    int iterations = 0;
    double residual_norm = 0.0;
    bool converged = false;
};

// Damped Newton on the scaled system: Armijo backtracking on the residual
// norm, factor 0.5, at most 40 halvings per step.
inline NewtonResult newton_solve(const ScaledSystem& sys, double a1, double a2, double x,
                                 const SolveOptions& opts) {
    NewtonResult res;
    const double a1_scale = 1.0 + std::abs(sys.eps2);
    auto g = sys.residual(a1, a2, x);
    double gn = sys.norm(g, a1_scale);
    for (int it = 0; it < opts.max_iterations; ++it) {
        if (gn < opts.tol) {
            res = {a1, a2, x, it, gn, true};
            return res;
        }
        std::array<double, 3> step{};
        if (!solve3(sys.jacobian(a1, a2, x), {-g[0], -g[1], -g[2]}, step)) break;
        double lambda = 1.0;
        bool accepted = false;
        for (int h = 0; h < 40; ++h) {
            const double xt = x + lambda * step[2];
            if (xt > 0.0 && xt < sys.cap) {
                const double a1t = a1 + lambda * step[0];
                const double a2t = a2 + lambda * step[1];
                const auto gt = sys.residual(a1t, a2t, xt);
                const double gtn = sys.norm(gt, a1_scale);
                if (gtn <= (1.0 - 1e-4 * lambda) * gn) {
                    a1 = a1t; a2 = a2t; x = xt; g = gt; gn = gtn;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if (!accepted) break;
    }
    res = {a1, a2, x, opts.max_iterations, gn, gn < opts.tol};
    return res;
}

} // namespace detail

inline double truncated_value(const TruncatedSolution& sol, double x);

namespace detail {

inline void validate_solution(const TruncatedSolution& sol) {
    const ReducedParams& p = sol.params;
    const double kr = p.K_eff / p.r;
    if (!(sol.x_star > 0.0 && sol.x_star < sol.cap))
        throw InvariantViolation{"free boundary outside (0, C)"};
    // raw fit/terminal residuals, relative to the sum of term magnitudes
    const auto f = newton_system_residual(p, sol.cap, sol.a1, sol.a2, sol.x_star);
    const CharacteristicRoots& rt = sol.roots;
    const double B = sol.b_coeff;
    const auto scale_at = [&](double x) {
        return std::abs(sol.a1) * std::pow(x, rt.d1) + std::abs(sol.a2) * std::pow(x, rt.d2) +
               B * x * x + std::abs(kr);
    };
    if (std::abs(f[0]) > 1e-10 * scale_at(sol.cap) ||
        std::abs(f[1]) > 1e-10 * scale_at(sol.x_star) ||
        std::abs(f[2]) > 1e-10 * (std::abs(rt.d1) + std::abs(rt.d2) + 2.0) * scale_at(sol.x_star))
        throw InvariantViolation{"fit/terminal residuals exceed tolerance"};
    if (sol.x_star > 2.0 * std::sqrt(p.K_eff) / p.gamma * (1.0 + 1e-12))
        throw InvariantViolation{"free boundary violates x* <= 2 sqrt(K)/gamma"};
    // positivity scan on (x_star, C), 1000 interior points
    const int n = 1000;
    const double h = (sol.cap - sol.x_star) / (n + 1);
    for (int i = 1; i <= n; ++i) {
        const double x = sol.x_star + i * h;
        if (!(truncated_value(sol, x) > 0.0))
            throw InvariantViolation{"value not positive on the continuation region"};
    }
}

} // namespace detail

/// Solves the truncated problem at cap C by damped Newton on the scaled
/// system, initialized at the closed-form limit; falls back to geometric
/// continuation in C if the direct solve fails.
inline TruncatedSolution solve_truncated(const ReducedParams& p, double cap,
                                         const SolveOptions& opts = {}) {
    if (!admissible(p)) throw InadmissibleParams{};
    if (p.trivial_never_exit()) throw TrivialProblem{};
    const ClosedFormSolution limit = closed_form(p);
    // below the zero-profit level the killed problem degenerates to v = 0:
    // profit is negative on all of [0, C], so exiting immediately is optimal
    // and no interior free boundary exists
    if (!(cap > 2.0 * std::sqrt(p.K_eff) / p.gamma * (1.0 + 1e-9))) throw CapTooSmall{};

    auto attempt = [&](double C, double a1, double a2, double x) {
        const detail::ScaledSystem sys(p, C, opts);
        return detail::newton_solve(sys, a1, a2, x, opts);
    };

    detail::NewtonResult res = attempt(cap, 0.0, limit.a2, limit.x_star);
    bool continuation = false;
    if (!res.converged || !(res.x > 0.0 && res.x < cap)) {
        // continuation: track the solution branch from a moderate cap upward
        continuation = true;
        double C = std::min(cap, 4.0 * limit.x_star);
        double a1 = 0.0, a2 = limit.a2, x = limit.x_star;
        int total_iters = res.iterations;
        while (true) {
            detail::NewtonResult step = attempt(C, a1, a2, x);
            total_iters += step.iterations;
            if (!step.converged || !(step.x > 0.0 && step.x < C))
                throw NewtonDiverged{"continuation failed at C = " + std::to_string(C)};
            a1 = step.a1; a2 = step.a2; x = step.x;
            if (C == cap) {
                res = step;
                res.iterations = total_iters;
                break;
            }
            C = std::min(cap, 2.0 * C);
        }
    }

    TruncatedSolution sol;
    sol.params = p;
    sol.roots = limit.roots;
    sol.b_coeff = limit.b_coeff;
    sol.cap = cap;
    sol.a1 = res.a1;
    sol.a2 = res.a2;
    sol.x_star = res.x;
    sol.diagnostics = {res.iterations, res.residual_norm, continuation};
    detail::validate_solution(sol);
    return sol;
}

/// Truncated value function: 0 below the boundary, the ODE branch on
/// [x_star, C], exactly 0 at the cap.
inline double truncated_value(const TruncatedSolution& sol, double x) {
    if (x < 0.0 || x > sol.cap) throw OutOfDomain{};
    if (x <= sol.x_star) return 0.0;
    if (x == sol.cap) return 0.0;
    return sol.a1 * std::pow(x, sol.roots.d1) + sol.a2 * std::pow(x, sol.roots.d2) +
           sol.b_coeff * x * x - sol.params.K_eff / sol.params.r;
}

/// HJB residual scan of a truncated solution on (0, C).
inline ResidualReport hjb_residual(const TruncatedSolution& sol, std::span<const double> grid,
                                   double tol_rel = 1e-9) {
    auto branch = [&sol](double x) {
        const double p1 = sol.a1 * std::pow(x, sol.roots.d1);
        const double p2 = sol.a2 * std::pow(x, sol.roots.d2);
        const double d1 = sol.roots.d1, d2 = sol.roots.d2, B = sol.b_coeff;
        Derivatives d;
        d.v = p1 + p2 + B * x * x - sol.params.K_eff / sol.params.r;
        d.dv = d1 * p1 / x + d2 * p2 / x + 2.0 * B * x;
        d.d2v = d1 * (d1 - 1.0) * p1 / (x * x) + d2 * (d2 - 1.0) * p2 / (x * x) + 2.0 * B;
        if (x == sol.x_star) d.v = 0.0;
        return d;
    };
    // clip the scan at the cap; v(C) = 0 is the terminal condition, not an
    // interior continuation point
    std::vector<double> interior;
    interior.reserve(grid.size());
    for (double x : grid)
        if (x < sol.cap) interior.push_back(x);
    auto rep = detail::hjb_residual_scan(sol.params, sol.x_star, branch, interior, tol_rel);
    // smooth fit at x_star from the raw branch (without the fit shortcut)
    const double p1 = sol.a1 * std::pow(sol.x_star, sol.roots.d1);
    const double p2 = sol.a2 * std::pow(sol.x_star, sol.roots.d2);
    const double v = p1 + p2 + sol.b_coeff * sol.x_star * sol.x_star -
                     sol.params.K_eff / sol.params.r;
    const double dv = sol.roots.d1 * p1 / sol.x_star + sol.roots.d2 * p2 / sol.x_star +
                      2.0 * sol.b_coeff * sol.x_star;
    rep.smooth_fit_violation = std::max(std::abs(v), std::abs(dv));
    return rep;
}

struct ConvergenceRow {
    double cap = 0.0;
    double a1 = 0.0, a2 = 0.0, x_star = 0.0;
    double gap_x = 0.0, gap_a2 = 0.0;
    bool ok = false;
    std::string error;
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;
    std::optional<double> fitted_rate;  ///< rho in gap_x ~ c C^{-rho}
    double x_star_limit = 0.0, a2_limit = 0.0;

    bool gaps_monotone(double slack = 1e-13) const {
        for (std::size_t i = 1; i < rows.size(); ++i) {
            if (!rows[i].ok || !rows[i - 1].ok) continue;
            if (rows[i].gap_x > rows[i - 1].gap_x + slack) return false;
            if (rows[i].gap_a2 > rows[i - 1].gap_a2 + slack) return false;
        }
        return true;
    }
};

/// Solves the truncated problem along an ascending list of caps and tabulates
/// the gaps to the limit solution, with a log-log least-squares rate fit.
inline ConvergenceTable convergence_study(const ReducedParams& p, std::span<const double> caps) {
    const ClosedFormSolution limit = closed_form(p);
    ConvergenceTable table;
    table.x_star_limit = limit.x_star;
    table.a2_limit = limit.a2;
    for (double C : caps) {
        ConvergenceRow row;
        row.cap = C;
        try {
            const TruncatedSolution sol = solve_truncated(p, C);
            row.a1 = sol.a1;
            row.a2 = sol.a2;
            row.x_star = sol.x_star;
            row.gap_x = std::abs(sol.x_star - limit.x_star);
            row.gap_a2 = std::abs(sol.a2 - limit.a2);
            row.ok = true;
        } catch (const Error& e) {
            row.error = e.what();
        }
        table.rows.push_back(row);
    }
    // least squares on log gap_x vs log C
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (const auto& row : table.rows) {
        if (!row.ok || !(row.gap_x > 0.0)) continue;
        const double lx = std::log(row.cap), ly = std::log(row.gap_x);
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
        ++m;
    }
    if (m >= 2) {
        const double denom = m * sxx - sx * sx;
        if (denom > 0.0) table.fitted_rate = -(m * sxy - sx * sy) / denom;
    }
    return table;
}

} // namespace exitopt

#endif
