#ifndef EXITOPT_CLOSED_FORM_HPP
#define EXITOPT_CLOSED_FORM_HPP

#include <cmath>

#include "exitopt/errors.hpp"
#include "exitopt/model.hpp"
#include "exitopt/roots.hpp"

namespace exitopt {

/// Limit solution of the exit problem: free boundary x_star and the
/// coefficient a2 of x^{d2}; the growing-mode coefficient is identically 0.
/// Above x_star the value is a2 x^{d2} + b_coeff x^2 - K_eff/r, below it 0.
struct ClosedFormSolution {
    ReducedParams params;
    CharacteristicRoots roots;
    double b_coeff = 0.0;  ///< particular coefficient B
    double x_star = 0.0;   ///< exit threshold
    double a2 = 0.0;       ///< coefficient of x^{d2}
};

inline ClosedFormSolution closed_form(const ReducedParams& p) {
    if (!admissible(p)) throw InadmissibleParams{};
    if (p.trivial_never_exit()) throw TrivialProblem{};
    ClosedFormSolution sol;
    sol.params = p;
    sol.roots = compute_roots(p);
    sol.b_coeff = particular_coefficient(p.alpha, p.sigma, p.r, p.gamma);
    const double d2 = sol.roots.d2;
    const double kr = p.K_eff / p.r;
    sol.x_star = std::sqrt(-d2 / (2.0 - d2) * kr / sol.b_coeff);
    sol.a2 = 2.0 / (2.0 - d2) * kr * std::pow(sol.x_star, -d2);
    return sol;
}

/// Continuation-branch value a2 x^{d2} + B x^2 - K_eff/r without the
/// stopping-region short circuit. Used for smooth-fit diagnostics.
inline double continuation_branch(const ClosedFormSolution& sol, double x) {
    return sol.a2 * std::pow(x, sol.roots.d2) + sol.b_coeff * x * x -
           sol.params.K_eff / sol.params.r;
}

/// Value function of the original problem: 0 on [0, x_star), the ODE branch on
/// [x_star, inf). x = x_star itself is classified as stopping and returns 0.
inline double value(const ClosedFormSolution& sol, double x) {
    if (x < 0.0) throw NegativeDemand{};
    if (x <= sol.x_star) return 0.0;
    return continuation_branch(sol, x);
}

struct Derivatives {
    double v = 0.0;
    double dv = 0.0;
    double d2v = 0.0;
};

/// Analytic derivatives of the piecewise value; at x = x_star the one-sided
/// right derivatives of the ODE branch are returned.
inline Derivatives value_derivatives(const ClosedFormSolution& sol, double x) {
    if (x < 0.0) throw NegativeDemand{};
    if (x < sol.x_star) return {0.0, 0.0, 0.0};
    const double d2 = sol.roots.d2;
    const double pw = sol.a2 * std::pow(x, d2);
    const double B = sol.b_coeff;
    Derivatives d;
    d.v = pw + B * x * x - sol.params.K_eff / sol.params.r;
    d.dv = d2 * pw / x + 2.0 * B * x;
    d.d2v = d2 * (d2 - 1.0) * pw / (x * x) + 2.0 * B;
    if (x == sol.x_star) d.v = 0.0;  // fit condition holds exactly by construction
    return d;
}

/// Exact expected discounted profit of the stationary threshold policy
/// "exit at the first time demand falls to b", J_b(x) for x >= b.
inline double threshold_policy_value(const ReducedParams& p, double b, double x) {
    if (!admissible(p)) throw InadmissibleParams{};
    if (!(b > 0.0) || b > x) throw ThresholdAboveState{};
    const CharacteristicRoots roots = compute_roots(p);
    const double B = particular_coefficient(p.alpha, p.sigma, p.r, p.gamma);
    const double kr = p.K_eff / p.r;
    const double cb = (kr - B * b * b) * std::pow(b, -roots.d2);
    return B * x * x - kr + cb * std::pow(x, roots.d2);
}

/// Slope of the policy value in the threshold, at fixed state x >= b.
inline double threshold_policy_slope(const ReducedParams& p, double b, double x) {
    if (!admissible(p)) throw InadmissibleParams{};
    if (!(b > 0.0) || b > x) throw ThresholdAboveState{};
    const CharacteristicRoots roots = compute_roots(p);
    const double B = particular_coefficient(p.alpha, p.sigma, p.r, p.gamma);
    const double kr = p.K_eff / p.r;
    const double d2 = roots.d2;
    // d/db [(kr - B b^2) b^{-d2}] * x^{d2}
    return std::pow(b, -d2 - 1.0) * (-2.0 * B * b * b - d2 * (kr - B * b * b)) *
           std::pow(x, d2);
}

/// Maximization of b -> threshold_policy_value(p, b, x) over (0, x]: a
/// golden-section pass localizes the peak, then sign bisection on the
/// analytic slope refines it. Function-value comparisons alone bottom out
/// near sqrt(eps) * b because the objective is quadratically flat at the
/// maximizer; the slope has a clean sign change there.
inline double maximize_threshold(const ReducedParams& p, double x, double tol = 1e-10) {
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double lo = 1e-12 * x, hi = x;
    double m1 = hi - gr * (hi - lo);
    double m2 = lo + gr * (hi - lo);
    double f1 = threshold_policy_value(p, m1, x);
    double f2 = threshold_policy_value(p, m2, x);
    while (hi - lo > 1e-4 * x) {
        if (f1 < f2) {
            lo = m1; m1 = m2; f1 = f2;
            m2 = lo + gr * (hi - lo);
            f2 = threshold_policy_value(p, m2, x);
        } else {
            hi = m2; m2 = m1; f2 = f1;
            m1 = hi - gr * (hi - lo);
            f1 = threshold_policy_value(p, m1, x);
        }
    }
    // widen so the slope sign change is bracketed even if the golden-section
    // bracket drifted in the flat region
    lo = std::max(1e-12 * x, lo - 0.1 * (hi - lo));
    hi = std::min(x, hi + 0.1 * (hi - lo));
    if (threshold_policy_slope(p, lo, x) <= 0.0 || threshold_policy_slope(p, hi, x) >= 0.0) {
        lo = 1e-12 * x;
        hi = x;
    }
    while (hi - lo > tol * 1e-3 * x) {
        const double mid = 0.5 * (lo + hi);
        if (threshold_policy_slope(p, mid, x) > 0.0) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace exitopt

#endif
