#include "drfd/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace drfd {

Vector sample_radial(const Vector& w, double alpha, std::uint64_t rng_seed) {
    if (!(alpha > 0.0)) throw InvalidAlpha("sample_radial: alpha must be positive");
    if (!std::isfinite(alpha)) return w;
    std::mt19937_64 rng(rng_seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    return std::pow(unif(rng), 1.0 / alpha) * w;
}

RadialMixture calibrated_mixture(const SymMatrix& target_s0, double gamma2, double alpha,
                                 int n_atoms, std::uint64_t rng_seed) {
    if (!(alpha > 0.0)) throw InvalidAlpha("calibrated_mixture: alpha must be positive");
    if (!(gamma2 >= 0.0)) throw InvalidInput("calibrated_mixture: gamma2 must be >= 0");
    const Eigen::Index n = target_s0.dim();
    if (n < 1) throw InvalidInput("calibrated_mixture: empty target");
    if (n_atoms < 2 * n)
        throw InvalidInput("calibrated_mixture: need at least 2*dim atoms");

    // Mixing second moment to realize exactly.
    const double factor = std::isfinite(alpha) ? (alpha + 2.0) / alpha : 1.0;
    Matrix target = gamma2 * factor * target_s0.mat();
    auto [vals, vecs] = sym_eig(SymMatrix::symmetrize(target));
    const double vmax = std::max(vals.cwiseAbs().maxCoeff(), 1.0);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (vals(i) < -1e-10 * vmax)
            throw CalibrationFailed("calibrated_mixture: target is not PSD");
        vals(i) = std::max(vals(i), 0.0);
    }

    RadialMixture out;
    out.alpha = alpha;
    const int n_pairs = n_atoms / 2;
    const double p_atom = 1.0 / (2.0 * n_pairs);

    // Assign pairs round-robin over eigendirections, shuffled by the seed so
    // repeated calls with different seeds explore different splits.
    std::vector<int> dir_of_pair(static_cast<size_t>(n_pairs));
    for (int i = 0; i < n_pairs; ++i) dir_of_pair[static_cast<size_t>(i)] = i % static_cast<int>(n);
    std::mt19937_64 rng(rng_seed);
    std::shuffle(dir_of_pair.begin(), dir_of_pair.end(), rng);
    std::vector<int> pairs_per_dir(static_cast<size_t>(n), 0);
    for (int d : dir_of_pair) ++pairs_per_dir[static_cast<size_t>(d)];

    // Within a direction, split the required second moment over its pairs
    // with alternating magnitude multipliers that average to one, keeping the
    // aggregate moment exact while spreading atom radii.
    std::vector<int> seen(static_cast<size_t>(n), 0);
    for (int i = 0; i < n_pairs; ++i) {
        const int dir = dir_of_pair[static_cast<size_t>(i)];
        const int m_k = pairs_per_dir[static_cast<size_t>(dir)];
        const int idx = seen[static_cast<size_t>(dir)]++;
        double tilt = 1.0;
        if (m_k >= 2 && idx < 2 * (m_k / 2)) tilt = (idx % 2 == 0) ? 0.8 : 1.2;
        const double c2 = vals(dir) * tilt / (2.0 * p_atom * m_k);
        Vector w = std::sqrt(std::max(c2, 0.0)) * vecs.col(dir);
        out.atoms.push_back({w, p_atom});
        out.atoms.push_back({-w, p_atom});
    }
    return out;
}

McEstimate monte_carlo_tail(const RadialMixture& mixture, const EllipsoidRegion& m,
                            double j_th, long long n_samples, std::uint64_t seed) {
    if (n_samples < 10000)
        throw InvalidInput("monte_carlo_tail: need at least 10^4 samples");
    if (mixture.atoms.empty())
        throw InvalidInput("monte_carlo_tail: empty mixture");
    double psum = 0.0;
    for (const auto& a : mixture.atoms) {
        if (!(a.p >= 0.0)) throw InvalidInput("monte_carlo_tail: negative atom weight");
        psum += a.p;
    }
    if (std::abs(psum - 1.0) > 1e-9)
        throw InvalidInput("monte_carlo_tail: atom weights must sum to 1");

    // Per-atom exceedance rule on the radial coordinate: with a = w^T M w,
    // lambda^2 a > J  <=>  U > (J/a)^(alpha/2); precomputing the U-threshold
    // reduces each sample to two uniform draws and a compare.
    const double alpha = mixture.alpha;
    const bool finite_alpha = std::isfinite(alpha);
    std::vector<double> cum, u_thresh;
    cum.reserve(mixture.atoms.size());
    u_thresh.reserve(mixture.atoms.size());
    double acc = 0.0;
    for (const auto& a : mixture.atoms) {
        acc += a.p;
        cum.push_back(acc);
        const double quad = a.w.dot(m.m.mat() * a.w);
        double t;  // exceed iff the radial uniform U > t; t = 2 means never
        if (j_th < 0.0)
            t = 0.0;
        else if (!(quad > 0.0))
            t = 2.0;
        else if (!finite_alpha)
            t = quad > j_th ? 0.0 : 2.0;
        else
            t = std::min(std::pow(j_th / quad, alpha / 2.0), 2.0);
        u_thresh.push_back(t);
    }
    cum.back() = 1.0;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    long long hits = 0;
    for (long long i = 0; i < n_samples; ++i) {
        const double ua = unif(rng);
        const size_t idx = static_cast<size_t>(
            std::lower_bound(cum.begin(), cum.end(), ua) - cum.begin());
        const double ur = unif(rng);
        if (ur > u_thresh[std::min(idx, u_thresh.size() - 1)]) ++hits;
    }
    McEstimate est;
    est.n_samples = n_samples;
    est.value = static_cast<double>(hits) / static_cast<double>(n_samples);
    est.std_error = std::sqrt(est.value * (1.0 - est.value) /
                              static_cast<double>(n_samples));
    return est;
}

FarFdr evaluate_far_fdr(const Matrix& p, const Matrix& v_samples,
                        const Eigen::VectorXi& labels, double j_th) {
    if (v_samples.rows() != labels.size())
        throw InvalidDataset("evaluate_far_fdr: label count must match sample count");
    if (p.cols() != v_samples.cols())
        throw InvalidDataset("evaluate_far_fdr: P width must match residual dimension");
    long long n0 = 0, n1 = 0, a0 = 0, a1 = 0;
    for (Eigen::Index i = 0; i < v_samples.rows(); ++i) {
        const double stat = (p * v_samples.row(i).transpose()).squaredNorm();
        const bool alarm = stat > j_th;
        if (labels(i) == 0) {
            ++n0;
            if (alarm) ++a0;
        } else {
            ++n1;
            if (alarm) ++a1;
        }
    }
    if (n0 == 0 || n1 == 0)
        throw InvalidDataset("evaluate_far_fdr: both label classes must be nonempty");
    return {static_cast<double>(a0) / static_cast<double>(n0),
            static_cast<double>(a1) / static_cast<double>(n1)};
}

namespace {

/// Regularized lower incomplete gamma P(a, x) via series (x < a+1) or the
/// Lentz continued fraction for the complement.
double gamma_p(double a, double x) {
    if (x <= 0.0) return 0.0;
    const double gln = std::lgamma(a);
    if (x < a + 1.0) {
        double ap = a, sum = 1.0 / a, del = sum;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::abs(del) < std::abs(sum) * 1e-15) break;
        }
        return sum * std::exp(-x + a * std::log(x) - gln);
    }
    double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
    for (int i = 1; i < 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < 1e-300) d = 1e-300;
        c = b + an / c;
        if (std::abs(c) < 1e-300) c = 1e-300;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-15) break;
    }
    return 1.0 - std::exp(-x + a * std::log(x) - gln) * h;
}

}  // namespace

double chi2_cdf(int df, double x) {
    if (df < 1) throw InvalidInput("chi2_cdf: df must be >= 1");
    return gamma_p(0.5 * df, 0.5 * x);
}

double chi2_quantile(int df, double p) {
    if (df < 1) throw InvalidInput("chi2_quantile: df must be >= 1");
    if (!(p > 0.0 && p < 1.0)) throw InvalidInput("chi2_quantile: p must lie in (0, 1)");
    double lo = 0.0, hi = 1.0;
    while (chi2_cdf(df, hi) < p) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (chi2_cdf(df, mid) < p)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace drfd
