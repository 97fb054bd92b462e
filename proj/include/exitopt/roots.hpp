#ifndef EXITOPT_ROOTS_HPP
#define EXITOPT_ROOTS_HPP

#include <cmath>

#include "exitopt/errors.hpp"
#include "exitopt/model.hpp"

namespace exitopt {

/// Roots of the characteristic quadratic
///   -sigma^2/2 D^2 + (sigma^2/2 - alpha) D + r = 0
/// of the pricing ODE. d2 < 0 < d1 always; d1 > 2 under admissibility.
struct CharacteristicRoots {
    double d1 = 0.0;  ///< positive root
    double d2 = 0.0;  ///< negative root
};

/// Computes both characteristic roots with the numerically stable quadratic
/// formula: the larger-magnitude root first, the other via the product of
/// roots -2r/sigma^2.
inline CharacteristicRoots compute_roots(const ReducedParams& p) {
    if (!(p.sigma > 0.0)) throw NonPositiveSigma{};
    if (!(p.r > 0.0)) throw NonPositiveRate{};
    // Normalized: D^2 - (1 - 2 alpha/sigma^2) D - 2 r/sigma^2 = 0
    const double s2 = p.sigma * p.sigma;
    const double b = -(1.0 - 2.0 * p.alpha / s2);
    const double c = -2.0 * p.r / s2;   // product of roots, < 0
    const double disc = std::sqrt(b * b - 4.0 * c);
    const double q = -0.5 * (b + std::copysign(disc, b));
    const double r1 = q;
    const double r2 = c / q;
    CharacteristicRoots roots;
    roots.d1 = std::max(r1, r2);
    roots.d2 = std::min(r1, r2);
    return roots;
}

} // namespace exitopt

#endif
