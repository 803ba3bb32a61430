#ifndef DRFD_SDP_HPP
#define DRFD_SDP_HPP

#include <string>
#include <vector>

#include "drfd/linalg.hpp"

namespace drfd {

/// Handle to a symmetric matrix variable; entries are packed column-major
/// over the upper triangle into the scalar decision vector.
struct SymVarHandle {
    int start = 0;
    int dim = 0;
    /// Scalar index of entry (i, j); order of i, j irrelevant.
    int index(int i, int j) const {
        if (i > j) std::swap(i, j);
        return start + j * (j + 1) / 2 + i;
    }
    int count() const { return dim * (dim + 1) / 2; }
};

/// Affine symmetric matrix expression F0 + sum_i x_i Fi, stored entrywise.
/// Also used for LMI constraint blocks (expression required PSD).
struct MatExpr {
    struct Term {
        int var;
        int r, c;
        double val;
    };
    int dim = 0;
    Matrix f0;  // dim x dim
    std::vector<Term> terms;
    std::string name;

    /// Adds val * x_var at entry (r, c), mirrored to (c, r) when off-diagonal.
    void add_entry(int var, int r, int c, double val);
    /// Adds the constant sym matrix m at diagonal offset (off, off).
    void add_const(const Matrix& m, int off = 0);
    /// Places a symmetric matrix variable at diagonal offset, scaled.
    void add_sym_var(const SymVarHandle& h, int off, double scale = 1.0);
    /// Contributes scale * sum_ij coeff(i,j) X(i,j) at entry (r, c), i.e. a
    /// scalar linear functional <coeff, X> of a matrix variable.
    void add_weighted_sym(const SymVarHandle& h, const Matrix& coeff, int r, int c,
                          double scale = 1.0);
    /// Places a vector variable x[start..start+len) at column (rows off..off+len-1,
    /// column c), mirrored.
    void add_vec_var(int start, int len, int row_off, int col, double scale = 1.0);

    /// Evaluates the expression at x.
    Matrix eval(const Vector& x) const;
};

struct SdpSolution {
    enum class Status { Optimal, Infeasible, Unbounded, NumericalTrouble };
    Status status = Status::NumericalTrouble;
    Vector x;
    double objective = 0.0;  ///< in the problem's stated sense
    struct Kkt {
        double primal_residual = 1.0;
        double dual_residual = 1.0;
        double duality_gap = 1.0;
    } kkt;
    int iterations = 0;
    std::string diagnostics;

    double scalar(int var) const { return x(var); }
    Matrix sym(const SymVarHandle& h) const;
};

/// Linear SDP in LMI form: optimize c^T x + c0 subject to a list of affine
/// symmetric expressions being PSD. Scalar inequalities are 1x1 blocks.
class SdpProblem {
  public:
    int add_scalar(const std::string& name);
    SymVarHandle add_sym(const std::string& name, int dim);
    MatExpr& add_block(int dim, const std::string& name);
    /// 1x1 convenience block: expr >= 0.
    MatExpr& add_scalar_block(const std::string& name);

    void set_objective(Vector c, double constant, bool maximize);
    const Vector& objective_coeffs() const { return c_; }
    double objective_constant() const { return c0_; }
    bool maximize() const { return maximize_; }
    Vector& mutable_objective() { return c_; }

    int num_vars() const { return num_vars_; }
    const std::vector<MatExpr>& blocks() const { return blocks_; }

    /// Human-readable dump of variables and blocks for debugging.
    std::string dump() const;

  private:
    int num_vars_ = 0;
    std::vector<std::string> var_names_;
    std::vector<MatExpr> blocks_;
    Vector c_;
    double c0_ = 0.0;
    bool maximize_ = false;
};

/// Dense primal-dual interior-point solve. Deterministic.
SdpSolution solve_sdp(const SdpProblem& problem, double tol = 1e-9);

/// Maximizes (linear objective) + log det(logdet_arg(x)) by sequential
/// linearization of the concave log-det term with a monotone line search.
/// The problem's objective sense must be maximize. k_init seeds the first
/// gradient; a singular iterate is regularized with 1e-9*I and flagged in
/// diagnostics.
SdpSolution maxdet_iterate(const SdpProblem& problem, const MatExpr& logdet_arg,
                           const Matrix& k_init, double tol = 1e-7);

}  // namespace drfd

#endif  // DRFD_SDP_HPP
