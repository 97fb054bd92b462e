#ifndef EXITOPT_MODEL_HPP
#define EXITOPT_MODEL_HPP

#include <cmath>

#include "exitopt/errors.hpp"

namespace exitopt {

/// Economic and diffusion parameters of the exit problem.
///
/// Demand follows dX = alpha*X dt + sigma*X dW; the firm's running profit at
/// demand level x is gamma^2 x^2 / 4 - K; exiting costs the lump sum I
/// (negative I is a salvage value).
struct ModelParams {
    double alpha = 0.0;  ///< drift per unit time
    double sigma = 0.0;  ///< volatility per sqrt(unit time), > 0
    double r = 0.0;      ///< discount rate per unit time, > 0
    double gamma = 0.0;  ///< inverse-demand slope, > 0
    double K = 0.0;      ///< fixed cost per unit time
    double I = 0.0;      ///< exit sunk cost (may be negative)
};

/// Parameters of the sunk-cost-reduced problem (I folded into K).
struct ReducedParams {
    double alpha = 0.0;
    double sigma = 0.0;
    double r = 0.0;
    double gamma = 0.0;
    double K_eff = 0.0;         ///< effective fixed cost, K - r*I
    double value_offset = 0.0;  ///< additive constant restoring the full value, -I

    bool trivial_never_exit() const { return K_eff <= 0.0; }
};

enum class Admissibility {
    Admissible,       ///< r > sigma^2 + 2*alpha and K > 0
    TrivialInfinite,  ///< discounted profit integral diverges, tau = infinity, value +inf
    TrivialNeverExit  ///< K <= 0: profit never negative, never exit
};

struct AdmissibilityReport {
    Admissibility status = Admissibility::Admissible;
    double margin = 0.0;  ///< r - sigma^2 - 2*alpha

    bool admissible() const { return status == Admissibility::Admissible; }
};

inline void validate(const ModelParams& p) {
    if (!(std::isfinite(p.alpha) && std::isfinite(p.sigma) && std::isfinite(p.r) &&
          std::isfinite(p.gamma) && std::isfinite(p.K) && std::isfinite(p.I)))
        throw NonFiniteParameter{};
    if (!(p.sigma > 0.0)) throw NonPositiveSigma{};
    if (!(p.r > 0.0)) throw NonPositiveRate{};
    if (!(p.gamma > 0.0)) throw NonPositiveGamma{};
}

inline double admissibility_margin(double alpha, double sigma, double r) {
    return r - sigma * sigma - 2.0 * alpha;
}

inline bool admissible(const ReducedParams& p) {
    return admissibility_margin(p.alpha, p.sigma, p.r) > 0.0;
}

/// Classifies the parameter set: admissible, trivially infinite value, or
/// trivially never-exit.
inline AdmissibilityReport check_admissibility(const ModelParams& p) {
    validate(p);
    AdmissibilityReport rep;
    rep.margin = admissibility_margin(p.alpha, p.sigma, p.r);
    if (p.K <= 0.0)
        rep.status = Admissibility::TrivialNeverExit;
    else if (rep.margin <= 0.0)
        rep.status = Admissibility::TrivialInfinite;
    else
        rep.status = Admissibility::Admissible;
    return rep;
}

/// Profit-maximizing production quantity at demand level x: gamma*x/2.
inline double optimal_quantity(const ModelParams& p, double x) {
    if (x < 0.0) throw NegativeDemand{};
    return 0.5 * p.gamma * x;
}

/// Maximum profit rate at demand level x: gamma^2 x^2 / 4 - K.
inline double profit(const ModelParams& p, double x) {
    if (x < 0.0) throw NegativeDemand{};
    return 0.25 * p.gamma * p.gamma * x * x - p.K;
}

inline double profit(const ReducedParams& p, double x) {
    if (x < 0.0) throw NegativeDemand{};
    return 0.25 * p.gamma * p.gamma * x * x - p.K_eff;
}

/// Folds the exit sunk cost into the running cost: K_eff = K - r*I and the
/// full value satisfies V_full(x) = V_reduced(x; K_eff) - I.
inline ReducedParams reduce_sunk_cost(const ModelParams& p) {
    validate(p);
    return ReducedParams{p.alpha, p.sigma, p.r, p.gamma, p.K - p.r * p.I, 0.0 - p.I};
}

/// Coefficient of x^2 in the perpetual-operation value,
/// B = gamma^2 / (4 (r - 2 alpha - sigma^2)).
inline double particular_coefficient(double alpha, double sigma, double r, double gamma) {
    return gamma * gamma / (4.0 * admissibility_margin(alpha, sigma, r));
}

/// Expected discounted profit of never exiting: B x^2 - K/r.
inline double perpetual_value(const ReducedParams& p, double x) {
    if (x < 0.0) throw NegativeDemand{};
    if (!admissible(p)) throw InadmissibleParams{};
    return particular_coefficient(p.alpha, p.sigma, p.r, p.gamma) * x * x - p.K_eff / p.r;
}

inline double perpetual_value(const ModelParams& p, double x) {
    if (x < 0.0) throw NegativeDemand{};
    validate(p);
    if (admissibility_margin(p.alpha, p.sigma, p.r) <= 0.0) throw InadmissibleParams{};
    return particular_coefficient(p.alpha, p.sigma, p.r, p.gamma) * x * x - p.K / p.r;
}

} // namespace exitopt

#endif
