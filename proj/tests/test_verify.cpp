#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "drfd/design.hpp"
#include "drfd/verify.hpp"
#include "test_util.hpp"

using namespace drfd;

namespace {

EllipsoidRegion scalar_region(double m) {
    Matrix mm(1, 1);
    mm << m;
    return EllipsoidRegion{SymMatrix{mm}};
}

Matrix mixture_second_moment(const RadialMixture& mix) {
    const Eigen::Index n = mix.atoms.front().w.size();
    Matrix s = Matrix::Zero(n, n);
    const double shrink = std::isfinite(mix.alpha) ? mix.alpha / (mix.alpha + 2.0) : 1.0;
    for (const auto& a : mix.atoms) s += a.p * shrink * a.w * a.w.transpose();
    return s;
}

}  // namespace

TEST_CASE("radial draws have the prescribed moments") {
    Vector w(1);
    w << 1.0;
    const long long n = 1000000;
    for (double alpha : {1.0, 2.0}) {
        double sum = 0.0, sum2 = 0.0;
        for (long long i = 0; i < n; ++i) {
            const double lam = sample_radial(w, alpha, static_cast<std::uint64_t>(i))(0);
            sum += lam;
            sum2 += lam * lam;
        }
        const double mean = sum / n, mean2 = sum2 / n;
        CHECK(std::abs(mean - alpha / (alpha + 1.0)) < 3.0 / std::sqrt(double(n)));
        CHECK(std::abs(mean2 - alpha / (alpha + 2.0)) < 3.0 / std::sqrt(double(n)));
    }
    // huge degree degenerates to the boundary point
    CHECK(sample_radial(w, 1e6, 5)(0) == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(sample_radial(w, kAlphaInf, 5)(0) == 1.0);
    CHECK_THROWS_AS(sample_radial(w, 0.0, 5), InvalidAlpha);
}

TEST_CASE("calibrated mixtures match the target moments exactly") {
    SUBCASE("scalar target") {
        Matrix s0(1, 1);
        s0 << 2.0;
        RadialMixture mix = calibrated_mixture(SymMatrix{s0}, 1.5, 1.0, 2, 3);
        REQUIRE(mix.atoms.size() == 2);
        const double expect = std::sqrt(3.0 * 1.5 * 2.0);  // sqrt(gamma2 * 3 * s0)
        CHECK(std::abs(mix.atoms[0].w(0)) == doctest::Approx(expect).epsilon(1e-12));
        CHECK(mix.atoms[0].w(0) == doctest::Approx(-mix.atoms[1].w(0)));
        Matrix sm = mixture_second_moment(mix);
        CHECK(sm(0, 0) == doctest::Approx(3.0).epsilon(1e-12));  // gamma2 * s0
    }
    SUBCASE("matrix targets across degrees and atom counts") {
        std::mt19937_64 rng(77);
        for (int trial = 0; trial < 20; ++trial) {
            const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng() % 4);
            Matrix s0 = testutil::random_pd(rng, n);
            const double alpha = (trial % 2) ? 3.0 : 9.0;
            const double gamma2 = 1.0 + 0.1 * (trial % 3);
            const int n_atoms = static_cast<int>(2 * n) + 2 * (trial % 5);
            RadialMixture mix = calibrated_mixture(SymMatrix::symmetrize(s0), gamma2,
                                                   alpha, n_atoms, trial);
            Matrix sm = mixture_second_moment(mix);
            CHECK((sm - gamma2 * s0).norm() <= 1e-9 * s0.norm());
            double mass = 0.0;
            Vector mean = Vector::Zero(n);
            for (const auto& a : mix.atoms) {
                mass += a.p;
                mean += a.p * a.w;
            }
            CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(mean.norm() < 1e-12);
        }
    }
    SUBCASE("sampled covariance agrees in two dimensions") {
        Matrix s0 = Matrix::Identity(2, 2);
        RadialMixture mix = calibrated_mixture(SymMatrix{s0}, 1.0, 2.0, 8, 11);
        std::mt19937_64 rng(123);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        std::vector<double> cum;
        double acc = 0.0;
        for (const auto& a : mix.atoms) cum.push_back(acc += a.p);
        const long long n = 1000000;
        Matrix sum = Matrix::Zero(2, 2);
        for (long long i = 0; i < n; ++i) {
            const double ua = unif(rng);
            size_t idx = static_cast<size_t>(
                std::lower_bound(cum.begin(), cum.end(), ua) - cum.begin());
            idx = std::min(idx, mix.atoms.size() - 1);
            const double lam = std::pow(unif(rng), 1.0 / mix.alpha);
            Vector xi = lam * mix.atoms[idx].w;
            sum += xi * xi.transpose();
        }
        Matrix cov = sum / double(n);
        CHECK((cov - s0).norm() < 3.0 * 3.0 / std::sqrt(double(n)));
    }
    Matrix s0(2, 2);
    s0 << 1, 0, 0, 1;
    CHECK_THROWS_AS(calibrated_mixture(SymMatrix{s0}, 1.0, 1.0, 3, 1), InvalidInput);
    CHECK_THROWS_AS(calibrated_mixture(SymMatrix{s0}, -1.0, 1.0, 4, 1), InvalidInput);
    CHECK_THROWS_AS(calibrated_mixture(SymMatrix{s0}, 1.0, -1.0, 4, 1), InvalidAlpha);
}

TEST_CASE("mixture density is radially nonincreasing per direction") {
    // at degree 1 each atom contributes a flat density on [0, |w|], so the
    // histogram of |xi| must decay away from zero
    Matrix s0(1, 1);
    s0 << 1.0;
    RadialMixture mix = calibrated_mixture(SymMatrix{s0}, 1.0, 1.0, 6, 5);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> cum;
    double acc = 0.0;
    for (const auto& a : mix.atoms) cum.push_back(acc += a.p);
    double wmax = 0.0;
    for (const auto& a : mix.atoms) wmax = std::max(wmax, std::abs(a.w(0)));
    std::vector<long long> bins(20, 0);
    const long long n = 400000;
    for (long long i = 0; i < n; ++i) {
        const double ua = unif(rng);
        size_t idx = static_cast<size_t>(
            std::lower_bound(cum.begin(), cum.end(), ua) - cum.begin());
        idx = std::min(idx, mix.atoms.size() - 1);
        const double x = std::abs(std::pow(unif(rng), 1.0 / mix.alpha) * mix.atoms[idx].w(0));
        const size_t b = std::min<size_t>(static_cast<size_t>(20.0 * x / wmax), 19);
        ++bins[b];
    }
    int inversions = 0;
    for (size_t b = 1; b < bins.size(); ++b)
        if (bins[b] > bins[b - 1] + 3 * static_cast<long long>(std::sqrt(double(bins[b - 1] + 1))))
            ++inversions;
    CHECK(inversions <= 2);
}

TEST_CASE("tail frequency estimator") {
    Matrix s0(1, 1);
    s0 << 1.0;
    RadialMixture mix = calibrated_mixture(SymMatrix{s0}, 1.0, 1.0, 2, 1);

    // zero statistic never alarms
    McEstimate zero = monte_carlo_tail(mix, scalar_region(0.0), 1.0, 10000, 1);
    CHECK(zero.value == 0.0);
    // negative threshold always alarms
    McEstimate all = monte_carlo_tail(mix, scalar_region(1.0), -1.0, 10000, 1);
    CHECK(all.value == 1.0);
    CHECK_THROWS_AS(monte_carlo_tail(mix, scalar_region(1.0), 1.0, 100, 1), InvalidInput);
    CHECK_THROWS_AS(monte_carlo_tail(RadialMixture{}, scalar_region(1.0), 1.0, 10000, 1),
                    InvalidInput);

    // closed-form tail of a symmetric two-atom mixture: atoms at +-sqrt(3),
    // so lambda^2 * 3 > 1 iff lambda > 1/sqrt(3); P = 1 - 1/sqrt(3) at alpha=1
    McEstimate est = monte_carlo_tail(mix, scalar_region(1.0), 1.0, 2000000, 42);
    const double exact = 1.0 - 1.0 / std::sqrt(3.0);
    CHECK(std::abs(est.value - exact) < 3.0 * est.std_error + 1e-9);
    CHECK(est.std_error < 1e-3);
    CHECK(est.n_samples == 2000000);

    SUBCASE("deterministic in the seed") {
        McEstimate again = monte_carlo_tail(mix, scalar_region(1.0), 1.0, 2000000, 42);
        CHECK(again.value == est.value);
    }
}

TEST_CASE("sampled tails never violate the certified bounds") {
    std::mt19937_64 rng(500);
    for (double alpha : {1.0, 3.0, 9.0, 27.0}) {
        for (int trial = 0; trial < 12; ++trial) {
            const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng() % 3);
            Matrix s0 = testutil::random_pd(rng, n);
            Matrix m = testutil::random_psd(rng, n);
            m *= 0.6 / std::max(1e-9, (m * s0).trace());
            const double gamma2 = 1.0 + 0.2 * (trial % 2);
            AmbiguitySet amb(SymMatrix::symmetrize(s0), 0.0, gamma2, alpha);
            EllipsoidRegion region{SymMatrix::symmetrize(m)};
            const double bound = gauss_bound(region, amb).value;
            RadialMixture mix = calibrated_mixture(amb.s0(), gamma2, alpha,
                                                   static_cast<int>(2 * n) + 4, trial);
            McEstimate est = monte_carlo_tail(mix, region, 1.0, 200000, trial + 1);
            CHECK(est.value <= bound + 3.0 * est.std_error + 1e-9);
        }
    }
}

TEST_CASE("moment-only bound is sharp for a two-atom mixture") {
    // P(xi^2 * m > 1) with atoms at +-sqrt(gamma2 * s0) and alpha -> inf:
    // mass gamma2*Tr(m s0) exactly matches the bound when placed on the boundary
    const double m = 0.25, s0 = 1.0, gamma2 = 1.0;
    AmbiguitySet amb(SymMatrix{(Matrix(1, 1) << s0).finished()}, 0.0, gamma2, kAlphaInf);
    const double bound = chebyshev_bound(scalar_region(m), amb).value;
    // two-point distribution: mass p at +-1/sqrt(m) (just outside the region),
    // remainder at the origin, with second moment p/m = gamma2 * s0
    const double p = gamma2 * s0 * m;
    RadialMixture sharp;
    sharp.alpha = kAlphaInf;
    Vector w(1);
    w << (1.0 + 1e-9) / std::sqrt(m);
    sharp.atoms.push_back({w, p / 2.0});
    sharp.atoms.push_back({-w, p / 2.0});
    sharp.atoms.push_back({Vector::Zero(1), 1.0 - p});
    McEstimate est = monte_carlo_tail(sharp, scalar_region(m), 1.0, 1000000, 3);
    CHECK(std::abs(est.value - bound) < 3.0 * est.std_error + 1e-9);
}

TEST_CASE("alarm-rate evaluation by label") {
    Matrix v(4, 2);
    v << 0.1, 0.0, 3.0, 0.0, 0.2, 0.0, 4.0, 0.0;
    Eigen::VectorXi labels(4);
    labels << 0, 0, 1, 1;
    Matrix p = Matrix::Identity(2, 2);
    FarFdr r = evaluate_far_fdr(p, v, labels, 1.0);
    CHECK(r.far == doctest::Approx(0.5));  // only the 3.0 healthy row alarms
    CHECK(r.fdr == doctest::Approx(0.5));  // only the 4.0 faulty row alarms

    // zero detector never alarms; zero threshold alarms on any nonzero stat
    FarFdr none = evaluate_far_fdr(Matrix::Zero(2, 2), v, labels, 0.0);
    CHECK(none.far == 0.0);
    CHECK(none.fdr == 0.0);
    FarFdr loose = evaluate_far_fdr(p, v, labels, 0.0);
    CHECK(loose.far == 1.0);
    CHECK(loose.fdr == 1.0);

    Eigen::VectorXi bad(3);
    bad << 0, 0, 1;
    CHECK_THROWS_AS(evaluate_far_fdr(p, v, bad, 1.0), InvalidDataset);
    Eigen::VectorXi ones(4);
    ones << 1, 1, 1, 1;
    CHECK_THROWS_AS(evaluate_far_fdr(p, v, ones, 1.0), InvalidDataset);
    CHECK_THROWS_AS(evaluate_far_fdr(Matrix::Identity(3, 3), v, labels, 1.0),
                    InvalidDataset);
}

TEST_CASE("chi-square distribution helpers") {
    // df = 2 has the closed form CDF 1 - exp(-x/2)
    for (double x : {0.5, 1.0, 3.0, 8.0}) {
        CHECK(chi2_cdf(2, x) == doctest::Approx(1.0 - std::exp(-0.5 * x)).epsilon(1e-12));
    }
    // df = 1: P(X <= x) = erf(sqrt(x/2))
    CHECK(chi2_cdf(1, 1.0) == doctest::Approx(std::erf(std::sqrt(0.5))).epsilon(1e-12));
    // median of chi2_2 is 2 ln 2
    CHECK(chi2_quantile(2, 0.5) == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-10));
    // round trip
    for (int df : {1, 3, 9}) {
        for (double p : {0.05, 0.5, 0.95, 0.999}) {
            CHECK(chi2_cdf(df, chi2_quantile(df, p)) == doctest::Approx(p).epsilon(1e-9));
        }
    }
    CHECK_THROWS_AS(chi2_cdf(0, 1.0), InvalidInput);
    CHECK_THROWS_AS(chi2_quantile(2, 0.0), InvalidInput);
    CHECK_THROWS_AS(chi2_quantile(2, 1.0), InvalidInput);
}
