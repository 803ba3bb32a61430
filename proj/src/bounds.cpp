#include "drfd/bounds.hpp"

#include <algorithm>
#include <cmath>

namespace drfd {

namespace {

void check_region(const EllipsoidRegion& region, const AmbiguitySet& amb) {
    if (region.m.dim() != amb.dim())
        throw InvalidInput("bound: region/ambiguity dimension mismatch");
    Eigen::SelfAdjointEigenSolver<Matrix> es(region.m.mat(), Eigen::EigenvaluesOnly);
    const double vmax = std::max(es.eigenvalues().cwiseAbs().maxCoeff(), 1.0);
    if (es.eigenvalues().minCoeff() < -1e-10 * vmax)
        throw NotPsd("bound: region matrix must be PSD");
}

/// Shape matrix of one support ellipsoid lifted to the homogeneous (n+1)
/// quadratic form: [[Theta, -Theta a], [-a^T Theta, a^T Theta a - 1]].
Matrix lifted_ellipsoid(const Ellipsoid& e) {
    const Eigen::Index n = e.a.size();
    Matrix phi(n + 1, n + 1);
    phi.topLeftCorner(n, n) = e.theta.mat();
    Vector ta = e.theta.mat() * e.a;
    phi.block(0, n, n, 1) = -ta;
    phi.block(n, 0, 1, n) = -ta.transpose();
    phi(n, n) = e.a.dot(ta) - 1.0;
    return phi;
}

}  // namespace

double trace_prod(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw InvalidInput("trace_prod: dimension mismatch");
    return a.transpose().cwiseProduct(b).sum();
}

double improvement_factor(double alpha) {
    if (!(alpha > 0.0)) throw InvalidAlpha("improvement_factor: alpha must be positive");
    if (!std::isfinite(alpha)) return 1.0;
    return std::pow(2.0 / (alpha + 2.0), 2.0 / alpha);
}

BoundResult chebyshev_bound(const EllipsoidRegion& region, const AmbiguitySet& amb) {
    check_region(region, amb);
    const double raw = amb.gamma2() * trace_prod(region.m.mat(), amb.s0().mat());
    BoundResult out;
    if (raw >= 1.0) {
        out.value = 1.0;
        out.branch = BoundBranch::Saturated;
    } else {
        out.value = std::max(raw, 0.0);
        out.branch = BoundBranch::SmallDeviation;
    }
    return out;
}

BoundResult gauss_bound(const EllipsoidRegion& region, const AmbiguitySet& amb) {
    check_region(region, amb);
    if (!amb.alpha_finite()) return chebyshev_bound(region, amb);
    const double alpha = amb.alpha();
    const double c = improvement_factor(alpha);
    const double t = amb.gamma2() * trace_prod(region.m.mat(), amb.s0().mat());
    const double small = c * t;
    BoundResult out;
    if (small <= alpha / (alpha + 2.0)) {
        out.value = std::max(small, 0.0);
        out.branch = BoundBranch::SmallDeviation;
    } else {
        const double ta = amb.gamma2() * trace_prod(region.m.mat(), amb.s0_alpha());
        out.value = 1.0 - std::pow(ta, -alpha / 2.0);
        out.branch = BoundBranch::LargeDeviation;
    }
    return out;
}

BoundResult gauss_bound_tau(const EllipsoidRegion& region, const AmbiguitySet& amb,
                            double tau0) {
    check_region(region, amb);
    if (!amb.alpha_finite())
        throw InvalidAlpha("gauss_bound_tau: requires finite alpha");
    if (!(tau0 >= 1.0))
        throw InvalidInput("gauss_bound_tau: tau0 must be >= 1");
    const double alpha = amb.alpha();
    const double a2 = amb.gamma2() * trace_prod(region.m.mat(), amb.s0_alpha());
    const double sqrt_a2 = std::sqrt(a2);
    const double t_ma = std::pow(tau0, -alpha);        // tau0^{-alpha}
    const double t_ma1 = std::pow(tau0, -alpha - 1.0); // tau0^{-alpha-1}
    BoundResult out;
    out.tau0_used = tau0;
    double raw;
    if ((alpha + 1.0) * t_ma <= 1.0 + 0.5 * alpha * t_ma1 * sqrt_a2) {
        raw = alpha * t_ma1 * sqrt_a2 - (alpha + 1.0) * t_ma + 1.0;
        out.branch = BoundBranch::LargeDeviation;
    } else {
        const double denom = (alpha + 1.0) * t_ma - 1.0;
        if (!(denom > 0.0))
            throw InvalidBranch("gauss_bound_tau: degenerate relaxation denominator");
        raw = alpha * alpha * std::pow(tau0, -2.0 * alpha - 2.0) * a2 / (4.0 * denom);
        out.branch = BoundBranch::SmallDeviation;
    }
    if (raw >= 1.0) {
        out.value = 1.0;
        out.branch = BoundBranch::Saturated;
    } else {
        out.value = std::max(raw, 0.0);
    }
    return out;
}

double hypercube_gauss_bound(double kappa, double alpha, int n) {
    if (!(kappa > 0.0)) throw InvalidInput("hypercube_gauss_bound: kappa must be positive");
    if (!(alpha > 0.0)) throw InvalidAlpha("hypercube_gauss_bound: alpha must be positive");
    if (n < 1) throw InvalidInput("hypercube_gauss_bound: n must be >= 1");
    if (!std::isfinite(alpha)) return std::min(1.0 / (kappa * kappa), 1.0);
    const double c = improvement_factor(alpha);
    if (kappa > std::sqrt(c * (alpha + 2.0) / alpha)) return c / (kappa * kappa);
    return 1.0 - std::pow(alpha / (alpha + 2.0), alpha / 2.0) * std::pow(kappa, alpha);
}

double default_tau0(const EllipsoidRegion& region, const AmbiguitySet& amb) {
    check_region(region, amb);
    const double c = improvement_factor(amb.alpha());
    const double a2 = amb.gamma2() * trace_prod(region.m.mat(), amb.s0_alpha());
    return std::max(1.0 / std::sqrt(c), std::sqrt(a2));
}

BoundResult bounded_gauss_bound(const EllipsoidRegion& region, const AmbiguitySet& amb,
                                std::optional<double> tau0) {
    check_region(region, amb);
    if (amb.support().unbounded())
        throw InvalidInput("bounded_gauss_bound: requires support constraints");
    const Eigen::Index n = amb.dim();
    const bool finite_alpha = amb.alpha_finite();
    const double alpha = amb.alpha();
    const double tau = tau0 ? *tau0 : default_tau0(region, amb);
    if (!(tau > 0.0)) throw InvalidInput("bounded_gauss_bound: tau0 must be positive");

    SdpProblem prob;
    const SymVarHandle qmat = prob.add_sym("Q", static_cast<int>(n));
    const int qvec = prob.add_scalar("q0_component");
    for (Eigen::Index i = 1; i < n; ++i) prob.add_scalar("q_component");
    const int q0 = prob.add_scalar("q0");
    const int eta = prob.add_scalar("eta");
    const auto ne = amb.support().ellipsoids.size();
    std::vector<int> beta, tbeta;
    for (size_t j = 0; j < ne; ++j) beta.push_back(prob.add_scalar("beta"));
    for (size_t j = 0; j < ne; ++j) tbeta.push_back(prob.add_scalar("beta_tilde"));

    std::vector<Matrix> phi;
    phi.reserve(ne);
    for (const auto& e : amb.support().ellipsoids) phi.push_back(lifted_ellipsoid(e));

    // Objective: minimize gamma2 <Q, S0_alpha> + q0.
    const Matrix s0a = amb.s0_alpha();
    Vector c = Vector::Zero(prob.num_vars());
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i <= j; ++i)
            c(qmat.index(static_cast<int>(i), static_cast<int>(j))) =
                amb.gamma2() * s0a(i, j) * (i == j ? 1.0 : 2.0);
    c(q0) = 1.0;
    prob.set_objective(c, 0.0, /*maximize=*/false);

    const Matrix& m = region.m.mat();
    const int ni = static_cast<int>(n);

    // Tail-side block: certifies the quadratic majorizes the relaxed indicator
    // of {xi^T M xi > 1} over the support set.
    {
        const int bdim = finite_alpha ? ni + 2 : ni + 1;
        MatExpr& b1 = prob.add_block(bdim, "tail_majorization");
        b1.add_sym_var(qmat, 0);
        for (int jj = 0; jj < ni; ++jj)
            for (int ii = 0; ii <= jj; ++ii)
                if (m(ii, jj) != 0.0) b1.add_entry(eta, ii, jj, -m(ii, jj));
        b1.add_vec_var(qvec, ni, 0, ni);
        b1.add_entry(q0, ni, ni, 1.0);
        if (finite_alpha) {
            b1.f0(ni, ni) += (alpha + 1.0) * std::pow(tau, -alpha) - 1.0;
            const double corner = -0.5 * alpha * std::pow(tau, -alpha - 1.0);
            b1.f0(ni, ni + 1) += corner;
            b1.f0(ni + 1, ni) += corner;
            b1.add_entry(eta, ni + 1, ni + 1, 1.0);
        } else {
            b1.f0(ni, ni) += -1.0;
            b1.add_entry(eta, ni, ni, 1.0);
        }
        for (size_t j = 0; j < ne; ++j)
            for (int jj = 0; jj <= ni; ++jj)
                for (int ii = 0; ii <= jj; ++ii)
                    if (phi[j](ii, jj) != 0.0) b1.add_entry(beta[j], ii, jj, phi[j](ii, jj));
    }

    // Nonnegativity-side block: the quadratic is nonnegative over the support.
    {
        MatExpr& b2 = prob.add_block(ni + 1, "nonnegativity");
        b2.add_sym_var(qmat, 0);
        b2.add_vec_var(qvec, ni, 0, ni);
        b2.add_entry(q0, ni, ni, 1.0);
        for (size_t j = 0; j < ne; ++j)
            for (int jj = 0; jj <= ni; ++jj)
                for (int ii = 0; ii <= jj; ++ii)
                    if (phi[j](ii, jj) != 0.0) b2.add_entry(tbeta[j], ii, jj, phi[j](ii, jj));
    }

    prob.add_block(ni, "Q_psd").add_sym_var(qmat, 0);
    prob.add_scalar_block("eta_nonneg").add_entry(eta, 0, 0, 1.0);
    for (size_t j = 0; j < ne; ++j)
        prob.add_scalar_block("beta_nonneg").add_entry(beta[j], 0, 0, 1.0);
    for (size_t j = 0; j < ne; ++j)
        prob.add_scalar_block("beta_tilde_nonneg").add_entry(tbeta[j], 0, 0, 1.0);

    SdpSolution sol = solve_sdp(prob, 1e-9);
    if (sol.status != SdpSolution::Status::Optimal)
        throw SolverError("bounded_gauss_bound: SDP did not reach optimality: " +
                          sol.diagnostics);

    BoundResult out;
    const double raw = sol.objective;
    if (raw >= 1.0) {
        out.value = 1.0;
        out.branch = BoundBranch::Saturated;
    } else {
        out.value = std::max(raw, 0.0);
        const double split = finite_alpha ? alpha / (alpha + 2.0) : 1.0;
        out.branch = out.value <= split ? BoundBranch::SmallDeviation
                                        : BoundBranch::LargeDeviation;
    }
    if (finite_alpha) out.tau0_used = tau;
    out.certificate = std::move(sol);
    return out;
}

}  // namespace drfd
