#include "drfd/linalg.hpp"

#include <cmath>

namespace drfd {

SymMatrix::SymMatrix(const Matrix& a) {
    if (a.rows() != a.cols())
        throw NotSymmetric("SymMatrix: matrix is not square");
    if (!a.allFinite())
        throw InvalidInput("SymMatrix: non-finite entries");
    const double scale = a.norm();
    const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * std::max(scale, 1.0))
        throw NotSymmetric("SymMatrix: asymmetry " + std::to_string(asym) +
                           " exceeds tolerance");
    m_ = 0.5 * (a + a.transpose());
}

SymMatrix SymMatrix::symmetrize(const Matrix& a) {
    if (a.rows() != a.cols())
        throw NotSymmetric("SymMatrix: matrix is not square");
    if (!a.allFinite())
        throw InvalidInput("SymMatrix: non-finite entries");
    SymMatrix s;
    s.m_ = 0.5 * (a + a.transpose());
    return s;
}

std::pair<Vector, Matrix> sym_eig(const SymMatrix& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(a.mat());
    if (es.info() != Eigen::Success)
        throw InvalidInput("sym_eig: eigensolver failed");
    // Eigen returns ascending order; flip to descending.
    const Eigen::Index n = a.dim();
    Vector vals(n);
    Matrix vecs(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        vals(i) = es.eigenvalues()(n - 1 - i);
        vecs.col(i) = es.eigenvectors().col(n - 1 - i);
    }
    return {vals, vecs};
}

std::pair<double, Vector> gen_eig_largest(const SymMatrix& a, const SymMatrix& b) {
    if (a.dim() != b.dim())
        throw InvalidInput("gen_eig_largest: dimension mismatch");
    Eigen::SelfAdjointEigenSolver<Matrix> bs(b.mat());
    const double bmax = bs.eigenvalues().cwiseAbs().maxCoeff();
    if (bs.eigenvalues().minCoeff() <= 1e-12 * std::max(bmax, 1.0))
        throw SingularB("gen_eig_largest: B is singular beyond tolerance");
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(a.mat(), b.mat(),
                                                         Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
    if (ges.info() != Eigen::Success)
        throw InvalidInput("gen_eig_largest: solver failed");
    const Eigen::Index n = a.dim();
    const double omega = ges.eigenvalues()(n - 1);
    Vector p = ges.eigenvectors().col(n - 1);
    // Eigen normalizes p^T B p = 1 already; renormalize to be safe.
    const double pbp = p.dot(b.mat() * p);
    p /= std::sqrt(pbp);
    return {omega, p};
}

std::pair<Matrix, Matrix> psd_sqrt_inv(const SymMatrix& a) {
    auto [vals, vecs] = sym_eig(a);
    const double vmax = vals.size() ? std::abs(vals(0)) : 0.0;
    if (vals.size() && vals.minCoeff() < -1e-10 * std::max(vmax, 1.0))
        throw NotPsd("psd_sqrt_inv: indefinite input");
    if (vals.size() == 0 || vals.minCoeff() <= 1e-12 * std::max(vmax, 1.0))
        throw SingularInput("psd_sqrt_inv: singular input for inverse branch");
    Vector shalf = vals.cwiseMax(0.0).cwiseSqrt();
    Matrix root = vecs * shalf.asDiagonal() * vecs.transpose();
    Matrix inv_root = vecs * shalf.cwiseInverse().asDiagonal() * vecs.transpose();
    return {root, inv_root};
}

Matrix psd_sqrt(const SymMatrix& a) {
    auto [vals, vecs] = sym_eig(a);
    const double vmax = vals.size() ? std::abs(vals(0)) : 0.0;
    if (vals.size() && vals.minCoeff() < -1e-8 * std::max(vmax, 1.0))
        throw NotPsd("psd_sqrt: indefinite input");
    Vector shalf = vals.cwiseMax(0.0).cwiseSqrt();
    return vecs * shalf.asDiagonal() * vecs.transpose();
}

double pseudo_det(const SymMatrix& a, bool log_domain) {
    auto [vals, vecs] = sym_eig(a);
    (void)vecs;
    const double vmax = vals.size() ? vals.cwiseAbs().maxCoeff() : 0.0;
    if (vmax == 0.0)
        throw ZeroMatrix("pseudo_det: all-zero matrix");
    if (vals.minCoeff() < -1e-10 * vmax)
        throw NotPsd("pseudo_det: indefinite input");
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < vals.size(); ++i)
        if (vals(i) > kRankCutoff * vmax) logdet += std::log(vals(i));
    return log_domain ? logdet : std::exp(logdet);
}

Matrix psd_pinv(const SymMatrix& a) {
    auto [vals, vecs] = sym_eig(a);
    const double vmax = vals.size() ? vals.cwiseAbs().maxCoeff() : 0.0;
    Vector inv = Vector::Zero(vals.size());
    for (Eigen::Index i = 0; i < vals.size(); ++i)
        if (vals(i) > kRankCutoff * vmax) inv(i) = 1.0 / vals(i);
    return vecs * inv.asDiagonal() * vecs.transpose();
}

CompactSvd compact_svd(const Matrix& v) {
    if (!v.allFinite())
        throw InvalidInput("compact_svd: non-finite entries");
    Eigen::JacobiSVD<Matrix> svd(v, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sv = svd.singularValues();
    const double smax = sv.size() ? sv(0) : 0.0;
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > kRankCutoff * smax) ++rank;
    CompactSvd out;
    out.u1 = svd.matrixU().leftCols(rank);
    out.sigma = sv.head(rank);
    out.u2 = svd.matrixV().leftCols(rank);
    return out;
}

}  // namespace drfd
