#ifndef DRFD_BOUNDS_HPP
#define DRFD_BOUNDS_HPP

#include <optional>

#include "drfd/ambiguity.hpp"
#include "drfd/sdp.hpp"

namespace drfd {

/// Ellipsoidal acceptance region {xi : xi^T M xi <= 1}; M = 0 is all of R^n.
struct EllipsoidRegion {
    SymMatrix m;
};

enum class BoundBranch { SmallDeviation, LargeDeviation, Saturated };

struct BoundResult {
    double value = 0.0;  ///< worst-case tail probability, in [0,1]
    BoundBranch branch = BoundBranch::SmallDeviation;
    std::optional<double> tau0_used;
    std::optional<SdpSolution> certificate;
};

/// Improvement factor c_alpha = (2/(alpha+2))^(2/alpha); 1 for infinite alpha.
double improvement_factor(double alpha);

/// Worst-case tail over the moment-only ambiguity set (unbounded support):
/// min{gamma2 * Tr(M S0), 1}. This bound is an equality.
BoundResult chebyshev_bound(const EllipsoidRegion& region, const AmbiguitySet& amb);

/// Closed-form alpha-unimodal tail bound for unbounded support. Falls back to
/// the Chebyshev bound when alpha is infinite.
BoundResult gauss_bound(const EllipsoidRegion& region, const AmbiguitySet& amb);

/// Tail bound for a fixed linearization point tau0 >= 1 (the two case
/// functions of the tau0-relaxation); gauss_bound equals its minimum over tau0.
BoundResult gauss_bound_tau(const EllipsoidRegion& region, const AmbiguitySet& amb,
                            double tau0);

/// Closed-form alpha-unimodal tail bound for the hypercube of half-width
/// kappa*sigma with isotropic second moment (cross-check only; independent of n).
double hypercube_gauss_bound(double kappa, double alpha, int n);

/// tau0 = max{1/sqrt(c_alpha), sqrt(gamma2 * Tr(M S0_alpha))}.
double default_tau0(const EllipsoidRegion& region, const AmbiguitySet& amb);

/// SDP tail bound under bounded ellipsoidal-intersection support. With the
/// default tau0 it never exceeds gauss_bound. Infinite alpha drops the
/// unimodality corner block and gives the support-aware Chebyshev bound.
BoundResult bounded_gauss_bound(const EllipsoidRegion& region, const AmbiguitySet& amb,
                                std::optional<double> tau0 = std::nullopt);

/// Tr(A * B) for symmetric A, B.
double trace_prod(const Matrix& a, const Matrix& b);

}  // namespace drfd

#endif  // DRFD_BOUNDS_HPP
