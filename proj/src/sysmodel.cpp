#include "drfd/sysmodel.hpp"

#include <cmath>
#include <random>

namespace drfd {

namespace {

void check_system(const LtiSystem& sys) {
    const auto nx = sys.n_x(), ny = sys.n_y();
    if (nx == 0 || sys.a.cols() != nx)
        throw InvalidInput("LtiSystem: A must be square and nonempty");
    if (sys.b.rows() != nx || sys.b_d.rows() != nx || sys.b_f.rows() != nx)
        throw InvalidInput("LtiSystem: state-update input matrices must have n_x rows");
    if (ny == 0 || sys.c.cols() != nx)
        throw InvalidInput("LtiSystem: C must have n_x columns");
    if (sys.d.rows() != ny || sys.d.cols() != sys.n_u() ||
        sys.d_d.rows() != ny || sys.d_d.cols() != sys.n_d() ||
        sys.d_f.rows() != ny || sys.d_f.cols() != sys.n_f())
        throw InvalidInput("LtiSystem: feedthrough matrix dimensions inconsistent");
}

}  // namespace

Matrix simulate_lti(const LtiSystem& sys, const Matrix& u, const Matrix& d,
                    const Matrix& f, int horizon, const Vector& x0) {
    check_system(sys);
    if (horizon < 1) throw InvalidInput("simulate_lti: horizon must be >= 1");
    if (u.rows() < horizon || d.rows() < horizon || f.rows() < horizon)
        throw InvalidInput("simulate_lti: input sequences shorter than horizon");
    if (u.cols() != sys.n_u() || d.cols() != sys.n_d() || f.cols() != sys.n_f())
        throw InvalidInput("simulate_lti: input sequence widths inconsistent");
    Vector x = x0.size() == 0 ? Vector(Vector::Zero(sys.n_x())) : x0;
    if (x.size() != sys.n_x())
        throw InvalidInput("simulate_lti: x0 dimension mismatch");
    Matrix y(horizon, sys.n_y());
    for (int k = 0; k < horizon; ++k) {
        y.row(k) = (sys.c * x + sys.d * u.row(k).transpose() +
                    sys.d_d * d.row(k).transpose() + sys.d_f * f.row(k).transpose())
                       .transpose();
        x = sys.a * x + sys.b * u.row(k).transpose() + sys.b_d * d.row(k).transpose() +
            sys.b_f * f.row(k).transpose();
    }
    return y;
}

namespace {

/// Block Toeplitz map from a stacked channel window (oldest first) to the
/// stacked output window: block (i, j) = D_* if i == j, C A^{i-j-1} B_* if
/// i > j, zero above the diagonal.
Matrix stacked_channel_map(const LtiSystem& sys, const Matrix& bmat, const Matrix& dmat,
                           int s) {
    const auto ny = sys.n_y();
    const auto nc = bmat.cols();
    Matrix h = Matrix::Zero((s + 1) * ny, (s + 1) * nc);
    std::vector<Matrix> powers(static_cast<size_t>(s) + 1);
    powers[0] = Matrix::Identity(sys.n_x(), sys.n_x());
    for (int i = 1; i <= s; ++i) powers[static_cast<size_t>(i)] = sys.a * powers[static_cast<size_t>(i - 1)];
    for (int i = 0; i <= s; ++i) {
        for (int j = 0; j <= i; ++j) {
            if (i == j)
                h.block(i * ny, j * nc, ny, nc) = dmat;
            else
                h.block(i * ny, j * nc, ny, nc) =
                    sys.c * powers[static_cast<size_t>(i - j - 1)] * bmat;
        }
    }
    return h;
}

}  // namespace

ResidualModel parity_residual_model(const LtiSystem& sys, int s) {
    check_system(sys);
    const auto nx = sys.n_x(), ny = sys.n_y();
    if (s < nx)
        throw InvalidInput("parity_residual_model: stacking order must be >= n_x");

    Matrix obsv(nx * ny, nx);
    Matrix cak = sys.c;
    for (Eigen::Index i = 0; i < nx; ++i) {
        obsv.block(i * ny, 0, ny, nx) = cak;
        cak = cak * sys.a;
    }
    Eigen::JacobiSVD<Matrix> obsv_svd(obsv);
    const double osig = obsv_svd.singularValues()(0);
    Eigen::Index orank = 0;
    for (Eigen::Index i = 0; i < obsv_svd.singularValues().size(); ++i)
        if (obsv_svd.singularValues()(i) > kRankCutoff * osig) ++orank;
    if (orank < nx)
        throw NotObservable("parity_residual_model: (C, A) is not observable");

    Matrix gamma((s + 1) * ny, nx);
    Matrix cai = sys.c;
    for (int i = 0; i <= s; ++i) {
        gamma.block(i * ny, 0, ny, nx) = cai;
        cai = cai * sys.a;
    }
    Eigen::JacobiSVD<Matrix> svd(gamma, Eigen::ComputeFullU);
    const double smax = svd.singularValues()(0);
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()(i) > kRankCutoff * smax) ++rank;
    const Eigen::Index n_r = (s + 1) * ny - rank;
    if (n_r < 1)
        throw NoParityVectors("parity_residual_model: left null space of Gamma_s is empty");

    ResidualModel rm;
    rm.s = s;
    rm.basis = svd.matrixU().rightCols(n_r).transpose();
    rm.h_u = stacked_channel_map(sys, sys.b, sys.d, s);
    rm.w = rm.basis * stacked_channel_map(sys, sys.b_d, sys.d_d, s);
    rm.v = rm.basis * stacked_channel_map(sys, sys.b_f, sys.d_f, s);
    if (s == nx)
        rm.note = "stacking order equals the state dimension; the parity space is minimal";
    return rm;
}

ResidualModel reduce_residual_model(const ResidualModel& rm, int n_r) {
    if (n_r < 1 || n_r > rm.n_r())
        throw InvalidInput("reduce_residual_model: requested dimension out of range");
    if (n_r == rm.n_r()) return rm;
    SymMatrix gain = SymMatrix::symmetrize(rm.w * rm.w.transpose());
    auto [vals, vecs] = sym_eig(gain);  // descending
    Matrix t = vecs.leftCols(n_r).transpose();
    ResidualModel out;
    out.s = rm.s;
    out.basis = t * rm.basis;
    out.h_u = rm.h_u;
    out.w = t * rm.w;
    out.v = t * rm.v;
    out.note = rm.note;
    return out;
}

Matrix residual_sequence(const ResidualModel& rm, const Matrix& y, const Matrix& u) {
    const auto steps = y.rows();
    if (u.rows() != steps)
        throw InvalidInput("residual_sequence: y and u must cover the same steps");
    const int s = rm.s;
    if (steps <= s)
        throw InvalidInput("residual_sequence: need more than s samples");
    const auto ny = y.cols(), nu = u.cols();
    if (rm.basis.cols() != (s + 1) * ny || rm.h_u.cols() != (s + 1) * nu)
        throw InvalidInput("residual_sequence: dimension mismatch with the model");
    Matrix out(steps - s, rm.n_r());
    Vector ys((s + 1) * ny), us((s + 1) * nu);
    for (Eigen::Index k = s; k < steps; ++k) {
        for (int i = 0; i <= s; ++i) {
            ys.segment(i * ny, ny) = y.row(k - s + i).transpose();
            us.segment(i * nu, nu) = u.row(k - s + i).transpose();
        }
        out.row(k - s) = (rm.basis * (ys - rm.h_u * us)).transpose();
    }
    return out;
}

namespace {

/// Fixed synthetic linearized tank-network model. The coefficients are
/// in-repo constants chosen for a stable, observable 3-state plant with the
/// benchmark's channel layout; they are not measurements of any physical rig.
LtiSystem tank_model() {
    LtiSystem sys;
    sys.dt = 5.0;
    sys.a = (Matrix(3, 3) << 0.92, 0.00, 0.05,
                              0.00, 0.91, 0.06,
                              0.05, 0.06, 0.86).finished();
    sys.b = (Matrix(3, 2) << 0.55, 0.00,
                              0.00, 0.52,
                              0.02, 0.03).finished();
    sys.b_d = (Matrix(3, 2) << 0.35, 0.00,
                                0.00, 0.33,
                                0.01, 0.02).finished();
    sys.b_f = (Matrix(3, 1) << 0.0, 0.0, -0.40).finished();
    sys.c = (Matrix(2, 3) << 1, 0, 0,
                              0, 0, 1).finished();
    sys.d = Matrix::Zero(2, 2);
    sys.d_d = (Matrix(2, 2) << 0.02, 0.00,
                                0.00, 0.01).finished();
    sys.d_f = (Matrix(2, 1) << 0.0, -0.05).finished();
    return sys;
}

}  // namespace

Benchmark three_tank_benchmark(const BenchmarkConfig& config) {
    if (config.n_train < 10 || config.n_test < 10)
        throw InvalidConfig("three_tank_benchmark: need at least 10 train/test samples");
    if (config.fault_onset < 0 || config.fault_onset >= config.n_test)
        throw InvalidConfig("three_tank_benchmark: fault_onset must lie inside the test segment");
    if (config.s < 3)
        throw InvalidConfig("three_tank_benchmark: stacking order must be >= n_x = 3");

    Benchmark out;
    out.sys = tank_model();
    out.rm = parity_residual_model(out.sys, config.s);
    if (config.n_r > 0 && config.n_r < out.rm.n_r())
        out.rm = reduce_residual_model(out.rm, config.n_r);

    const int s = config.s;
    const int total = s + config.n_train + config.n_test;
    const auto nu = out.sys.n_u(), nd = out.sys.n_d(), nf = out.sys.n_f();

    Matrix u(total, nu);
    for (int k = 0; k < total; ++k) {
        u(k, 0) = 0.8 * std::sin(0.011 * k) + 0.3 * std::cos(0.041 * k);
        u(k, 1) = 0.6 * std::cos(0.017 * k) - 0.2 * std::sin(0.053 * k);
    }

    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Matrix d(total, nd);
    if (config.disturbance_family == "gaussian") {
        for (int k = 0; k < total; ++k)
            for (Eigen::Index j = 0; j < nd; ++j) d(k, j) = gauss(rng);
    } else if (config.disturbance_family == "gaussian_scale_mixture") {
        // Zero-mean scale mixture of Gaussians: unimodal but heavy-tailed, so
        // Gaussian-quantile thresholds under-estimate the false alarm rate.
        for (int k = 0; k < total; ++k) {
            const double sigma = unif(rng) < 0.75 ? 0.6 : 2.2;
            for (Eigen::Index j = 0; j < nd; ++j) d(k, j) = sigma * gauss(rng);
        }
    } else if (config.disturbance_family == "uniform") {
        const double half = std::sqrt(3.0);  // unit variance
        for (int k = 0; k < total; ++k)
            for (Eigen::Index j = 0; j < nd; ++j) d(k, j) = half * (2.0 * unif(rng) - 1.0);
    } else {
        throw InvalidConfig("three_tank_benchmark: unknown disturbance family '" +
                            config.disturbance_family + "'");
    }

    Matrix f = Matrix::Zero(total, nf);
    const int fault_step = s + config.n_train + config.fault_onset;
    for (int k = fault_step; k < total; ++k) f(k, 0) = config.fault_magnitude;

    Matrix y = simulate_lti(out.sys, u, d, f, total);
    Matrix v = residual_sequence(out.rm, y, u);  // rows map to steps s..total-1

    out.train = v.topRows(config.n_train);
    out.test = v.middleRows(config.n_train, config.n_test);
    out.labels = Eigen::VectorXi::Zero(config.n_test);
    for (int i = config.fault_onset; i < config.n_test; ++i) out.labels(i) = 1;
    return out;
}

}  // namespace drfd
