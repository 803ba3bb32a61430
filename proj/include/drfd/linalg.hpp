#ifndef DRFD_LINALG_HPP
#define DRFD_LINALG_HPP

#include <Eigen/Dense>
#include <utility>

#include "drfd/errors.hpp"

namespace drfd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Dense symmetric matrix. Construction checks max|A - A^T| <= 1e-12*||A||
/// and finiteness, then symmetrizes the storage exactly.
class SymMatrix {
  public:
    SymMatrix() = default;
    explicit SymMatrix(const Matrix& a);

    /// Build from a matrix already known to be symmetric up to roundoff
    /// (symmetrizes unconditionally, still rejects non-finite entries).
    static SymMatrix symmetrize(const Matrix& a);

    Eigen::Index dim() const { return m_.rows(); }
    const Matrix& mat() const { return m_; }
    operator const Matrix&() const { return m_; }
    double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

  private:
    Matrix m_;
};

struct CompactSvd {
    Matrix u1;      ///< orthonormal columns, left factor
    Vector sigma;   ///< strictly positive, descending
    Matrix u2;      ///< orthonormal columns, right factor
    Eigen::Index rank() const { return sigma.size(); }
};

/// Relative rank cutoff shared by pseudo_det, pseudo-inverses and compact_svd.
inline constexpr double kRankCutoff = 1e-12;

/// Eigendecomposition of a symmetric matrix; eigenvalues descending.
std::pair<Vector, Matrix> sym_eig(const SymMatrix& a);

/// Largest generalized eigenvalue/eigenvector of the pencil (A, B) with B PD.
/// The eigenvector is normalized so that p^T B p = 1.
std::pair<double, Vector> gen_eig_largest(const SymMatrix& a, const SymMatrix& b);

/// PSD square root; second element is the inverse square root (requires PD).
std::pair<Matrix, Matrix> psd_sqrt_inv(const SymMatrix& a);

/// PSD square root only (input may be singular).
Matrix psd_sqrt(const SymMatrix& a);

/// Product of eigenvalues above 1e-12 * lambda_max of a PSD matrix.
double pseudo_det(const SymMatrix& a, bool log_domain = false);

/// Moore-Penrose pseudo-inverse of a symmetric PSD matrix.
Matrix psd_pinv(const SymMatrix& a);

/// Compact SVD V = U1 * diag(sigma) * U2^T keeping singular values above
/// 1e-12 * sigma_max.
CompactSvd compact_svd(const Matrix& v);

}  // namespace drfd

#endif  // DRFD_LINALG_HPP
