#ifndef EXITOPT_HJB_HPP
#define EXITOPT_HJB_HPP

#include <cmath>
#include <span>
#include <vector>

#include "exitopt/closed_form.hpp"
#include "exitopt/model.hpp"

namespace exitopt {

struct PointDiagnostic {
    double x = 0.0;
    double v = 0.0;
    double L = 0.0;   ///< r v - alpha x v' - sigma^2 x^2/2 v'' - Pi(x)
    char region = 'C';  ///< 'C' continuation, 'S' stopping
    bool ok = true;
};

/// Per-grid-point verification of the variational inequality
/// min{L(x), v(x)} = 0 plus the smooth-fit conditions at the boundary.
struct ResidualReport {
    double max_continuation_residual = 0.0;  ///< max |L|/(1+|v|) over x > x_star
    double max_stopping_violation = 0.0;     ///< max(0, Pi(x)) over x < x_star, and |v| there
    double smooth_fit_violation = 0.0;       ///< max(|v(x*)|, |v'(x*)|) of the ODE branch
    double corollary_violation = 0.0;        ///< max(0, x_star - 2 sqrt(K_eff)/gamma)
    std::vector<PointDiagnostic> per_point;

    bool pass(double tol_rel, double scale) const {
        return max_continuation_residual <= tol_rel &&
               max_stopping_violation <= tol_rel * scale &&
               smooth_fit_violation <= 1e-10 * scale &&
               corollary_violation <= 0.0;
    }
};

namespace detail {

/// Shared residual scan; `branch` must return the ODE-branch derivatives at x.
template <class Branch>
ResidualReport hjb_residual_scan(const ReducedParams& p, double x_star, Branch&& branch,
                                 std::span<const double> grid, double tol_rel) {
    ResidualReport rep;
    rep.per_point.reserve(grid.size());
    const double scale = p.K_eff / p.r;
    for (double x : grid) {
        PointDiagnostic d;
        d.x = x;
        if (x > x_star) {
            d.region = 'C';
            const Derivatives dv = branch(x);
            d.v = dv.v;
            d.L = p.r * dv.v - p.alpha * x * dv.dv -
                  0.5 * p.sigma * p.sigma * x * x * dv.d2v - profit(p, x);
            const double rel = std::abs(d.L) / (1.0 + std::abs(d.v));
            d.ok = rel <= tol_rel && d.v > 0.0;
            rep.max_continuation_residual = std::max(rep.max_continuation_residual, rel);
            if (!(d.v > 0.0))
                rep.max_stopping_violation = std::max(rep.max_stopping_violation, scale);
        } else {
            d.region = 'S';
            d.v = 0.0;
            d.L = -profit(p, x);  // stopped region: v == 0, need L = -Pi >= 0
            const double viol = std::max(0.0, profit(p, x));
            d.ok = viol <= tol_rel * scale;
            rep.max_stopping_violation = std::max(rep.max_stopping_violation, viol);
        }
        rep.per_point.push_back(d);
    }
    const Derivatives at_star = branch(x_star);
    rep.smooth_fit_violation = std::max(std::abs(at_star.v), std::abs(at_star.dv));
    rep.corollary_violation =
        std::max(0.0, x_star - 2.0 * std::sqrt(std::max(p.K_eff, 0.0)) / p.gamma);
    return rep;
}

} // namespace detail

/// Verification-theorem check of the closed-form solution on a grid of
/// positive demand levels.
inline ResidualReport hjb_residual(const ClosedFormSolution& sol, std::span<const double> grid,
                                   double tol_rel = 1e-9) {
    auto branch = [&sol](double x) {
        const double d2 = sol.roots.d2;
        const double pw = sol.a2 * std::pow(x, d2);
        Derivatives d;
        d.v = pw + sol.b_coeff * x * x - sol.params.K_eff / sol.params.r;
        d.dv = d2 * pw / x + 2.0 * sol.b_coeff * x;
        d.d2v = d2 * (d2 - 1.0) * pw / (x * x) + 2.0 * sol.b_coeff;
        return d;
    };
    return detail::hjb_residual_scan(sol.params, sol.x_star, branch, grid, tol_rel);
}

/// Geometric grid of n points spanning [lo, hi], both positive.
inline std::vector<double> geometric_grid(double lo, double hi, int n) {
    std::vector<double> g(n);
    const double ratio = std::log(hi / lo) / (n - 1);
    for (int i = 0; i < n; ++i) g[i] = lo * std::exp(ratio * i);
    return g;
}

} // namespace exitopt

#endif
