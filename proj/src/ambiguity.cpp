#include "drfd/ambiguity.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

namespace drfd {

using json = nlohmann::json;

bool SupportSet::contains(const Vector& xi, double slack) const {
    for (const auto& e : ellipsoids) {
        const Vector d = xi - e.a;
        if (d.dot(e.theta.mat() * d) > 1.0 + slack) return false;
    }
    return true;
}

AmbiguitySet::AmbiguitySet(SymMatrix s0, double gamma1, double gamma2,
                           double alpha, SupportSet support)
    : s0_(std::move(s0)), gamma1_(gamma1), gamma2_(gamma2), alpha_(alpha),
      support_(std::move(support)) {
    if (!(gamma1_ >= 0.0))
        throw InvalidAmbiguity("gamma1 must be nonnegative");
    if (!(gamma2_ >= std::max(gamma1_, 1.0)))
        throw InvalidAmbiguity("gamma2 must satisfy gamma2 >= max{gamma1, 1}");
    if (!(alpha_ > 0.0))
        throw InvalidAlpha("alpha must be positive (or infinite)");
    Eigen::SelfAdjointEigenSolver<Matrix> es(s0_.mat(), Eigen::EigenvaluesOnly);
    const double vmax = es.eigenvalues().cwiseAbs().maxCoeff();
    if (es.eigenvalues().minCoeff() <= 1e-12 * std::max(vmax, 1.0))
        throw InvalidAmbiguity("S0 must be positive definite");
    for (const auto& e : support_.ellipsoids) {
        if (e.a.size() != s0_.dim() || e.theta.dim() != s0_.dim())
            throw InvalidAmbiguity("support ellipsoid dimension mismatch");
        Eigen::SelfAdjointEigenSolver<Matrix> et(e.theta.mat(), Eigen::EigenvaluesOnly);
        const double tmax = et.eigenvalues().cwiseAbs().maxCoeff();
        if (et.eigenvalues().minCoeff() < -1e-10 * std::max(tmax, 1.0))
            throw InvalidAmbiguity("support ellipsoid shape matrix must be PSD");
    }
}

Matrix AmbiguitySet::s0_alpha() const {
    if (!alpha_finite()) return s0_.mat();
    return ((alpha_ + 2.0) / alpha_) * s0_.mat();
}

std::pair<Vector, SymMatrix> estimate_moments(const Matrix& samples) {
    const Eigen::Index N = samples.rows(), n = samples.cols();
    if (!samples.allFinite())
        throw InvalidInput("estimate_moments: non-finite samples");
    if (N < n + 1)
        throw InsufficientData("estimate_moments: need at least n+1 samples");
    Vector mu = samples.colwise().mean();
    Matrix centered = samples.rowwise() - mu.transpose();
    Matrix scatter = centered.transpose() * centered / double(N - 1);
    SymMatrix s0 = SymMatrix::symmetrize(scatter);
    Eigen::SelfAdjointEigenSolver<Matrix> es(s0.mat(), Eigen::EigenvaluesOnly);
    const double vmax = std::max(es.eigenvalues().cwiseAbs().maxCoeff(), 1.0);
    if (es.eigenvalues().minCoeff() <= 1e-10 * vmax)
        throw DegenerateCovariance("estimate_moments: scatter matrix is rank deficient");
    return {mu, s0};
}

std::pair<double, double> bootstrap_gamma(const Matrix& samples, double confidence,
                                          int n_boot, std::uint64_t seed) {
    if (!(confidence > 0.0 && confidence < 1.0))
        throw InvalidInput("bootstrap_gamma: confidence must lie in (0,1)");
    if (n_boot < 100)
        throw InvalidInput("bootstrap_gamma: need at least 100 resamples");
    auto [mu0, s0] = estimate_moments(samples);
    const Eigen::Index N = samples.rows(), n = samples.cols();

    Eigen::LLT<Matrix> llt(s0.mat());
    Matrix s0_inv = llt.solve(Matrix::Identity(n, n));
    Eigen::SelfAdjointEigenSolver<Matrix> es(s0.mat());
    Matrix s0_inv_half = es.operatorInverseSqrt();

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Eigen::Index> pick(0, N - 1);
    std::vector<double> g1_stats, g2_stats;
    g1_stats.reserve(n_boot);
    g2_stats.reserve(n_boot);
    Matrix resample(N, n);
    for (int b = 0; b < n_boot; ++b) {
        for (Eigen::Index i = 0; i < N; ++i) resample.row(i) = samples.row(pick(rng));
        Vector mu_b = resample.colwise().mean();
        Matrix centered = resample.rowwise() - mu_b.transpose();
        Matrix s_b = centered.transpose() * centered / double(N - 1);
        Vector d = mu_b - mu0;
        g1_stats.push_back(d.dot(s0_inv * d));
        Matrix shifted = s_b + d * d.transpose();
        Matrix whitened = s0_inv_half * shifted * s0_inv_half;
        Eigen::SelfAdjointEigenSolver<Matrix> ew(0.5 * (whitened + whitened.transpose()),
                                                 Eigen::EigenvaluesOnly);
        g2_stats.push_back(ew.eigenvalues().maxCoeff());
    }
    std::sort(g1_stats.begin(), g1_stats.end());
    std::sort(g2_stats.begin(), g2_stats.end());
    // k-th smallest with k = max(1, ceil(confidence * B)).
    const int k = std::max(1, static_cast<int>(std::ceil(confidence * n_boot)));
    double gamma1 = g1_stats[static_cast<size_t>(k - 1)];
    double gamma2 = std::max({g2_stats[static_cast<size_t>(k - 1)], gamma1, 1.0});
    return {gamma1, gamma2};
}

SupportSet box_support_from_samples(const Matrix& samples, double inflate) {
    if (samples.rows() == 0)
        throw InvalidInput("box_support_from_samples: empty sample set");
    if (!(inflate >= 1.0))
        throw InvalidInput("box_support_from_samples: inflate must be >= 1");
    const Eigen::Index n = samples.cols();
    Vector absmax = samples.cwiseAbs().colwise().maxCoeff();
    SupportSet out;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (absmax(i) == 0.0)
            throw ZeroWidthAxis("box_support_from_samples: coordinate " +
                                std::to_string(i) + " has zero width");
        const double half_width = inflate * absmax(i);
        Matrix theta = Matrix::Zero(n, n);
        theta(i, i) = 1.0 / (half_width * half_width);
        out.ellipsoids.push_back({Vector::Zero(n), SymMatrix(theta)});
    }
    return out;
}

namespace {

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

Matrix matrix_from_json(const json& j) {
    const auto r = j.size();
    if (r == 0) return Matrix(0, 0);
    const auto c = j.at(0).size();
    Matrix m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    for (size_t i = 0; i < r; ++i)
        for (size_t k = 0; k < c; ++k)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
                j.at(i).at(k).get<double>();
    return m;
}

json vector_to_json(const Vector& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

Vector vector_from_json(const json& j) {
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j.at(i).get<double>();
    return v;
}

}  // namespace

std::string ambiguity_to_json(const AmbiguitySet& amb) {
    json j;
    j["mu0"] = vector_to_json(Vector::Zero(amb.dim()));
    j["S0"] = matrix_to_json(amb.s0().mat());
    j["gamma1"] = amb.gamma1();
    j["gamma2"] = amb.gamma2();
    if (amb.alpha_finite())
        j["alpha"] = amb.alpha();
    else
        j["alpha"] = "inf";
    json support = json::array();
    for (const auto& e : amb.support().ellipsoids) {
        support.push_back({{"a", vector_to_json(e.a)},
                           {"Theta", matrix_to_json(e.theta.mat())}});
    }
    j["support"] = support;
    return j.dump(2);
}

AmbiguitySet ambiguity_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("ambiguity_from_json: ") + e.what());
    }
    try {
        SymMatrix s0{matrix_from_json(j.at("S0"))};
        double gamma1 = j.at("gamma1").get<double>();
        double gamma2 = j.at("gamma2").get<double>();
        double alpha = kAlphaInf;
        if (j.at("alpha").is_number()) alpha = j.at("alpha").get<double>();
        SupportSet support;
        for (const auto& e : j.at("support")) {
            support.ellipsoids.push_back(
                {vector_from_json(e.at("a")), SymMatrix(matrix_from_json(e.at("Theta")))});
        }
        return AmbiguitySet(std::move(s0), gamma1, gamma2, alpha, std::move(support));
    } catch (const json::exception& e) {
        throw ParseError(std::string("ambiguity_from_json: ") + e.what());
    }
}

}  // namespace drfd
