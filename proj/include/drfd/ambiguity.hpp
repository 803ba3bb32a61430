#ifndef DRFD_AMBIGUITY_HPP
#define DRFD_AMBIGUITY_HPP

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "drfd/linalg.hpp"

namespace drfd {

/// Sentinel for "no unimodality restriction".
inline constexpr double kAlphaInf = std::numeric_limits<double>::infinity();

/// One ellipsoid constraint (xi - a)^T Theta (xi - a) <= 1. A rank-deficient
/// Theta encodes a slab.
struct Ellipsoid {
    Vector a;
    SymMatrix theta;
};

/// Support set as an intersection of ellipsoids; empty list means R^n.
struct SupportSet {
    std::vector<Ellipsoid> ellipsoids;
    bool unbounded() const { return ellipsoids.empty(); }
    /// True iff every ellipsoid constraint holds at xi.
    bool contains(const Vector& xi, double slack = 0.0) const;
};

/// Moment ambiguity set with optional unimodality degree and support.
/// The mean is fixed to zero library-wide; data are centered at ingestion.
/// gamma1 is stored and validated but consumed by no implemented bound
/// (with mu0 = 0 every implemented result depends on gamma2 only).
class AmbiguitySet {
  public:
    AmbiguitySet(SymMatrix s0, double gamma1, double gamma2,
                 double alpha = kAlphaInf, SupportSet support = {});

    const SymMatrix& s0() const { return s0_; }
    double gamma1() const { return gamma1_; }
    double gamma2() const { return gamma2_; }
    double alpha() const { return alpha_; }
    bool alpha_finite() const { return std::isfinite(alpha_); }
    const SupportSet& support() const { return support_; }
    Eigen::Index dim() const { return s0_.dim(); }

    /// Second-moment matrix of the Choquet mixing distribution,
    /// ((alpha+2)/alpha) * S0; equals S0 when alpha is infinite.
    Matrix s0_alpha() const;

  private:
    SymMatrix s0_;
    double gamma1_;
    double gamma2_;
    double alpha_;
    SupportSet support_;
};

/// Sample mean and (N-1)-normalized scatter about it. Requires N >= n+1 and a
/// positive definite scatter.
std::pair<Vector, SymMatrix> estimate_moments(const Matrix& samples);

/// Percentile bootstrap for the ambiguity radii. Deterministic given the seed.
std::pair<double, double> bootstrap_gamma(const Matrix& samples, double confidence,
                                          int n_boot, std::uint64_t seed = 1);

/// Axis-aligned box support from coordinate-wise sample maxima, encoded as
/// rank-1 slab ellipsoids with half-width inflate * max|xi_i|.
SupportSet box_support_from_samples(const Matrix& samples, double inflate);

/// JSON round-trip ({mu0, S0, gamma1, gamma2, alpha, support:[{a,Theta}]}).
/// alpha = infinity serializes as the string "inf".
std::string ambiguity_to_json(const AmbiguitySet& amb);
AmbiguitySet ambiguity_from_json(const std::string& text);

}  // namespace drfd

#endif  // DRFD_AMBIGUITY_HPP
