#ifndef DRFD_VERIFY_HPP
#define DRFD_VERIFY_HPP

#include <cstdint>
#include <vector>

#include "drfd/bounds.hpp"

namespace drfd {

/// Finite mixture of radial distributions: P = sum_j p_j * delta^alpha_[0,w_j],
/// where delta^alpha_[0,w] puts mass lambda^alpha on the segment [0, lambda*w].
struct RadialMixture {
    struct Atom {
        Vector w;
        double p;
    };
    std::vector<Atom> atoms;
    double alpha = 1.0;
};

struct McEstimate {
    double value = 0.0;
    long long n_samples = 0;
    double std_error = 0.0;
};

/// One draw lambda * w with lambda = U^(1/alpha); E[lambda] = alpha/(alpha+1),
/// E[lambda^2] = alpha/(alpha+2). Infinite alpha returns w itself.
Vector sample_radial(const Vector& w, double alpha, std::uint64_t rng_seed);

/// Symmetric atom-pair mixture whose mixing second moment equals
/// gamma2 * ((alpha+2)/alpha) * target_s0 exactly, so the drawn xi has mean 0
/// and covariance gamma2 * target_s0. Requires n_atoms >= 2 * dim.
RadialMixture calibrated_mixture(const SymMatrix& target_s0, double gamma2, double alpha,
                                 int n_atoms, std::uint64_t rng_seed);

/// Empirical frequency of xi^T M xi > j_th over n_samples draws, with
/// binomial standard error. Requires n_samples >= 10^4.
McEstimate monte_carlo_tail(const RadialMixture& mixture, const EllipsoidRegion& m,
                            double j_th, long long n_samples, std::uint64_t seed);

struct FarFdr {
    double far = 0.0;
    double fdr = 0.0;
};

/// Alarm frequencies of ||P v||^2 > j_th split by label (0 = healthy for FAR,
/// 1 = faulty for FDR). Both classes must be nonempty.
FarFdr evaluate_far_fdr(const Matrix& p, const Matrix& v_samples,
                        const Eigen::VectorXi& labels, double j_th);

/// Regularized lower incomplete gamma CDF of the chi-square distribution.
double chi2_cdf(int df, double x);
/// Quantile of the chi-square distribution (inverse CDF), p in (0, 1).
double chi2_quantile(int df, double p);

}  // namespace drfd

#endif  // DRFD_VERIFY_HPP
