#ifndef EXITOPT_FD_HPP
#define EXITOPT_FD_HPP

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "exitopt/errors.hpp"
#include "exitopt/model.hpp"
#include "exitopt/truncated.hpp"

namespace exitopt {

struct SchemeOptions {
    double omega = 0.0;          ///< PSOR relaxation; 0 selects grid-adaptive near-optimal
    double tol = 1e-11;          ///< successive-iterate sup-norm tolerance (scale-relative)
    long max_sweep_factor = 200; ///< iteration cap = factor * n
};

/// Discretized value function of the truncated obstacle problem on [0, C].
struct ValueGrid {
    double cap = 0.0;
    int n = 0;                        ///< number of cells; n+1 nodes, h = C/n
    std::vector<double> values;
    int free_boundary_index = 0;      ///< first node with value > 0
    long sweeps = 0;

    double h() const { return cap / n; }
    double x(int i) const { return cap * i / n; }
};

namespace detail {

struct Tridiag {
    std::vector<double> lo, di, up, rhs;
};

// Second-order central differences; upwind switching on the drift term at any
// node where central differencing would produce a positive off-diagonal.
inline Tridiag assemble_operator(const ReducedParams& p, double cap, int n) {
    const double h = cap / n;
    Tridiag t;
    t.lo.assign(n + 1, 0.0);
    t.di.assign(n + 1, 0.0);
    t.up.assign(n + 1, 0.0);
    t.rhs.assign(n + 1, 0.0);
    for (int i = 1; i < n; ++i) {
        const double x = cap * i / n;
        const double s = 0.5 * p.sigma * p.sigma * x * x / (h * h);
        const double u = p.alpha * x / (2.0 * h);
        double lo = u - s, di = p.r + 2.0 * s, up = -u - s;
        if (lo > 0.0 || up > 0.0) {
            if (p.alpha > 0.0) {  // forward difference on -alpha x V'
                lo = -s;
                di = p.r + 2.0 * s + p.alpha * x / h;
                up = -s - p.alpha * x / h;
            } else {
                lo = -s + p.alpha * x / h;
                di = p.r + 2.0 * s - p.alpha * x / h;
                up = -s;
            }
        }
        t.lo[i] = lo;
        t.di[i] = di;
        t.up[i] = up;
        t.rhs[i] = profit(p, x);
    }
    return t;
}

inline double auto_omega(int n) {
    const double w = 2.0 / (1.0 + std::sin(std::numbers::pi / n));
    return std::clamp(w, 1.0, 1.995);
}

} // namespace detail

/// Residuals of the discrete operator L V - Pi at every node (boundary nodes 0).
inline std::vector<double> discrete_residual(const ReducedParams& p, const ValueGrid& g) {
    const detail::Tridiag t = detail::assemble_operator(p, g.cap, g.n);
    std::vector<double> res(g.n + 1, 0.0);
    for (int i = 1; i < g.n; ++i)
        res[i] = t.lo[i] * g.values[i - 1] + t.di[i] * g.values[i] + t.up[i] * g.values[i + 1] -
                 t.rhs[i];
    return res;
}

/// Solves the discrete linear complementarity problem
///   min{L V - Pi, V} = 0 on (0, C),  V(0) = V(C) = 0
/// by projected SOR.
inline ValueGrid solve_obstacle(const ReducedParams& p, double cap, int n,
                                const SchemeOptions& opts = {}) {
    if (n < 100) throw InvalidConfig{"n must be >= 100"};
    if (!(cap > 0.0)) throw InvalidConfig{"C must be > 0"};
    if (!admissible(p)) throw InadmissibleParams{};
    if (opts.omega != 0.0 && !(opts.omega >= 1.0 && opts.omega < 2.0))
        throw InvalidConfig{"omega must lie in [1.0, 2.0)"};
    const double omega = opts.omega != 0.0 ? opts.omega : detail::auto_omega(n);
    const detail::Tridiag t = detail::assemble_operator(p, cap, n);

    ValueGrid g;
    g.cap = cap;
    g.n = n;
    g.values.assign(n + 1, 0.0);
    std::vector<double>& V = g.values;

    const long max_sweeps = opts.max_sweep_factor * static_cast<long>(n);
    double vmax = 0.0;
    long sweep = 0;
    for (; sweep < max_sweeps; ++sweep) {
        double change = 0.0;
        vmax = 0.0;
        for (int i = 1; i < n; ++i) {
            const double gs = (t.rhs[i] - t.lo[i] * V[i - 1] - t.up[i] * V[i + 1]) / t.di[i];
            double vn = V[i] + omega * (gs - V[i]);
            if (vn < 0.0) vn = 0.0;
            change = std::max(change, std::abs(vn - V[i]));
            V[i] = vn;
            vmax = std::max(vmax, vn);
        }
        if (change < opts.tol * (1.0 + vmax)) break;
    }
    if (sweep >= max_sweeps) throw IterationLimit{};
    g.sweeps = sweep + 1;
    g.free_boundary_index = n;
    for (int i = 0; i <= n; ++i)
        if (V[i] > 0.0) {
            g.free_boundary_index = i;
            break;
        }
    return g;
}

struct RefinementRow {
    int n = 0;
    double sup_error = 0.0;  ///< sup-norm gap to the analytic truncated value
};

struct RefinementReport {
    std::vector<RefinementRow> rows;
    double fitted_order = 0.0;  ///< log-log least-squares slope of error vs h
};

/// Sup-norm errors against the analytic truncated solution over a list of grid
/// sizes, with a fitted convergence order.
inline RefinementReport grid_refinement_study(const ReducedParams& p, double cap,
                                              std::span<const int> n_list,
                                              const SchemeOptions& opts = {}) {
    const TruncatedSolution analytic = solve_truncated(p, cap);
    RefinementReport rep;
    for (int n : n_list) {
        const ValueGrid g = solve_obstacle(p, cap, n, opts);
        double err = 0.0;
        for (int i = 0; i <= n; ++i)
            err = std::max(err, std::abs(g.values[i] - truncated_value(analytic, g.x(i))));
        rep.rows.push_back({n, err});
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (const auto& row : rep.rows) {
        if (!(row.sup_error > 0.0)) continue;
        const double lx = std::log(static_cast<double>(row.n)), ly = std::log(row.sup_error);
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
        ++m;
    }
    if (m >= 2) {
        const double denom = m * sxx - sx * sx;
        if (denom > 0.0) rep.fitted_order = -(m * sxy - sx * sy) / denom;
    }
    return rep;
}

} // namespace exitopt

#endif
