#ifndef DRFD_SYSMODEL_HPP
#define DRFD_SYSMODEL_HPP

#include <cstdint>
#include <string>

#include "drfd/linalg.hpp"

namespace drfd {

/// Discrete-time LTI plant with control, disturbance and fault channels:
/// x(k+1) = A x + B u + B_d d + B_f f,  y(k) = C x + D u + D_d d + D_f f.
struct LtiSystem {
    Matrix a, b, b_d, b_f;
    Matrix c, d, d_d, d_f;
    double dt = 1.0;  ///< sample time in seconds

    Eigen::Index n_x() const { return a.rows(); }
    Eigen::Index n_u() const { return b.cols(); }
    Eigen::Index n_d() const { return b_d.cols(); }
    Eigen::Index n_f() const { return b_f.cols(); }
    Eigen::Index n_y() const { return c.rows(); }
};

/// Parity-space residual design form v(k) = W d_s(k) + V f_s(k), where the
/// stacked windows run oldest-first over s+1 steps. basis maps stacked
/// outputs to residuals; h_u removes the known-input contribution.
struct ResidualModel {
    Matrix w;      ///< n_r x (s+1)*n_d
    Matrix v;      ///< n_r x (s+1)*n_f
    Matrix basis;  ///< n_r x (s+1)*n_y, orthonormal rows annihilating Gamma_s
    Matrix h_u;    ///< (s+1)*n_y x (s+1)*n_u stacked input map
    int s = 0;
    Eigen::Index n() const { return w.cols(); }
    Eigen::Index n_r() const { return w.rows(); }
    std::string note;  ///< non-fatal construction warnings
};

/// Simulates the recursion for `horizon` steps from x0 (default zero).
/// Input sequences are row-per-time-step matrices with at least `horizon` rows.
Matrix simulate_lti(const LtiSystem& sys, const Matrix& u, const Matrix& d,
                    const Matrix& f, int horizon, const Vector& x0 = Vector());

/// Builds the parity-space residual model of stacking order s >= n_x.
ResidualModel parity_residual_model(const LtiSystem& sys, int s);

/// Keeps the n_r parity directions with the largest disturbance gain
/// (principal directions of W W^T).
ResidualModel reduce_residual_model(const ResidualModel& rm, int n_r);

/// Residual sequence from measured outputs/inputs; row k corresponds to time
/// s + k. y and u are row-per-time matrices of equal length > s.
Matrix residual_sequence(const ResidualModel& rm, const Matrix& y, const Matrix& u);

struct BenchmarkConfig {
    std::uint64_t seed = 1;
    int n_train = 2000;
    int n_test = 2000;
    int fault_onset = 200;       ///< index into the test segment
    double fault_magnitude = 0.6;
    std::string disturbance_family = "gaussian_scale_mixture";
    int n_r = 9;                 ///< reduced residual dimension; 0 keeps the full space
    int s = 6;
};

struct Benchmark {
    LtiSystem sys;
    ResidualModel rm;
    Matrix train;            ///< n_train x n_r fault-free residual samples
    Matrix test;             ///< n_test x n_r residual samples
    Eigen::VectorXi labels;  ///< 0 = healthy, 1 = faulty (per test row)
};

/// Synthetic three-tank-style benchmark: 3 states, 2 inputs, 2 outputs,
/// 5-second sampling, parity residuals, a leak-like step fault on state 3 and
/// a configurable unimodal disturbance family ("gaussian",
/// "gaussian_scale_mixture", "uniform"). Deterministic given the seed.
Benchmark three_tank_benchmark(const BenchmarkConfig& config);

}  // namespace drfd

#endif  // DRFD_SYSMODEL_HPP
