#ifndef DRFD_DESIGN_HPP
#define DRFD_DESIGN_HPP

#include <optional>
#include <string>
#include <vector>

#include "drfd/bounds.hpp"

namespace drfd {

/// Design scheme: closed-form (unbounded support) or SDP (bounded support),
/// with or without a finite unimodality degree.
enum class Scheme { UnboundedMoment, UnboundedUnimodal, BoundedMoment, BoundedUnimodal };

enum class MetricKind {
    Frobenius,  ///< squared Frobenius fault-to-residual gain ||P V||_F^2
    PseudoDet   ///< log pseudo-determinant of the fault-space gain V^T P^T P V
};

struct DetectabilityMetric {
    MetricKind kind = MetricKind::Frobenius;
    int m_f = 0;  ///< rank of V; 0 = derive from the compact SVD
};

struct DesignResult {
    Matrix p;                 ///< residual evaluation matrix (rows x n_v)
    double objective = 0.0;   ///< value of the chosen detectability metric
    BoundResult certified_far;
    Scheme scheme = Scheme::UnboundedMoment;
    double epsilon = 0.0;
    std::optional<double> tau0;
    std::string diagnostics;
};

/// Rank-one design maximizing the worst-direction fault gain subject to a
/// worst-case false alarm rate <= epsilon (closed form, unbounded support).
DesignResult frobenius_design(const Matrix& w, const Matrix& v, const AmbiguitySet& amb,
                              double epsilon);

/// Scaled likelihood-ratio-style projector design (closed form, unbounded
/// support); maximizes the volume-type metric.
DesignResult glrt_design(const Matrix& w, const Matrix& v, const AmbiguitySet& amb,
                         double epsilon);

/// SDP design exploiting bounded support; searches a grid of linearization
/// points (default: 15 log-spaced around the closed-form design's natural
/// point) and keeps the best certified design.
DesignResult bounded_design(const Matrix& w, const Matrix& v, const AmbiguitySet& amb,
                            double epsilon, DetectabilityMetric metric,
                            std::vector<double> tau0_grid = {});

/// Smallest threshold J such that the worst-case probability of
/// xi^T M xi > J stays below epsilon. Uses the support-aware SDP when the
/// ambiguity set has bounded support and finite alpha; otherwise the
/// closed-form unbounded-support threshold.
struct ThresholdResult {
    double j_th = 0.0;
    std::optional<double> tau0;
    std::optional<SdpSolution> certificate;
};
ThresholdResult safe_threshold(const SymMatrix& m, const AmbiguitySet& amb,
                               double epsilon, std::optional<double> tau0 = std::nullopt);

/// Worst-case false alarm rate of the detector ||P W xi||^2 > 1, dispatching
/// on the ambiguity set's support and unimodality flags.
BoundResult worst_case_far(const Matrix& p, const Matrix& w, const AmbiguitySet& amb);

}  // namespace drfd

#endif  // DRFD_DESIGN_HPP
