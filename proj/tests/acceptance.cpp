// End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
// exits with the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include "drfd/bounds.hpp"
#include "drfd/design.hpp"
#include "drfd/sysmodel.hpp"
#include "drfd/verify.hpp"

using namespace drfd;

namespace {

int g_failures = 0;

void report(int criterion, bool ok, const char* what, double seconds) {
    std::printf("%s criterion %2d: %s (%.1fs)\n", ok ? "PASS" : "FAIL", criterion, what,
                seconds);
    if (!ok) ++g_failures;
}

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    }
};

Matrix scalar_mat(double v) {
    Matrix m(1, 1);
    m << v;
    return m;
}

AmbiguitySet scalar_set(double s0, double gamma2, double alpha,
                        SupportSet support = {}) {
    return AmbiguitySet(SymMatrix{scalar_mat(s0)}, 0.0, gamma2, alpha,
                        std::move(support));
}

EllipsoidRegion scalar_region(double m) { return EllipsoidRegion{SymMatrix{scalar_mat(m)}}; }

SupportSet box_support(const Vector& half_widths) {
    SupportSet s;
    const Eigen::Index n = half_widths.size();
    for (Eigen::Index i = 0; i < n; ++i) {
        Matrix theta = Matrix::Zero(n, n);
        theta(i, i) = 1.0 / (half_widths(i) * half_widths(i));
        s.ellipsoids.push_back({Vector::Zero(n), SymMatrix{theta}});
    }
    return s;
}

Matrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = g(rng);
    return m;
}

Matrix random_psd(std::mt19937_64& rng, Eigen::Index n, double ridge = 0.0) {
    Matrix a = random_matrix(rng, n, n);
    return a * a.transpose() / double(n) + ridge * Matrix::Identity(n, n);
}

// ------------------------------------------------------------------------
// 1. One-dimensional recovery of the classic bound at degree 1.
void criterion1() {
    Timer t;
    bool ok = true;
    const double kappas[] = {0.5, 1.0, 2.0 / std::sqrt(3.0), 2.0, 5.0};
    AmbiguitySet amb = scalar_set(1.0, 1.0, 1.0);
    for (double k : kappas) {
        const double got = gauss_bound(scalar_region(1.0 / (k * k)), amb).value;
        const double want = (k >= 2.0 / std::sqrt(3.0)) ? 4.0 / (9.0 * k * k)
                                                        : 1.0 - k / std::sqrt(3.0);
        if (std::abs(got - want) > 1e-12) ok = false;
    }
    report(1, ok, "degree-1 bound matches the classic one-dimensional form", t.seconds());
}

// 2. Improvement-factor anchors and monotonicity.
void criterion2() {
    Timer t;
    bool ok = std::abs(improvement_factor(1.0) - 4.0 / 9.0) < 1e-15;
    double prev = 0.0;
    for (int i = 0; i <= 400; ++i) {
        const double alpha = std::pow(2.0, 10.0 * i / 400.0);  // 1..1024
        const double c = improvement_factor(alpha);
        if (i > 0 && !(c > prev)) ok = false;
        prev = c;
    }
    if (std::abs(improvement_factor(1e8) - 1.0) > 1e-6) ok = false;
    report(2, ok, "improvement factor anchors and strict growth", t.seconds());
}

// 3. Dominance over the moment-only bound on 1000 seeded instances.
void criterion3() {
    Timer t;
    bool ok = true;
    std::mt19937_64 rng(1001);
    std::uniform_real_distribution<double> alpha_dist(0.5, 100.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng() % 12);
        Matrix s0 = random_psd(rng, n, 0.1);
        Matrix m = random_psd(rng, n);
        m *= 1.0 / (1.0 + (m * s0).trace());
        AmbiguitySet amb(SymMatrix::symmetrize(s0), 0.0, 1.0 + 0.3 * (trial % 3),
                         alpha_dist(rng));
        EllipsoidRegion region{SymMatrix::symmetrize(m)};
        const double g = gauss_bound(region, amb).value;
        const double c = chebyshev_bound(region, amb).value;
        if (g > c + 1e-12) ok = false;
        if (c < 1.0 - 1e-9 && c > 1e-12 && !(g < c)) ok = false;
    }
    report(3, ok, "unimodal bound dominates the moment-only bound", t.seconds());
}

// 4. The closed form equals the minimum of the fixed-linearization family.
void criterion4() {
    Timer t;
    bool ok = true;
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> alpha_dist(0.5, 50.0);
    std::uniform_real_distribution<double> m_dist(0.02, 1.2);
    std::uniform_real_distribution<double> g_dist(1.0, 1.5);
    for (int trial = 0; trial < 200; ++trial) {
        const double alpha = alpha_dist(rng);
        AmbiguitySet amb = scalar_set(1.0, g_dist(rng), alpha);
        EllipsoidRegion region{SymMatrix{scalar_mat(m_dist(rng))}};
        const double closed = gauss_bound(region, amb).value;
        const double tau_star = default_tau0(region, amb);
        // 2000-point log grid spanning two decades around the natural point,
        // then a golden-section polish inside the bracketing cell
        const double lo = std::max(1.0, tau_star / 10.0), hi = tau_star * 10.0;
        double best = 1.0;
        int best_i = 0;
        auto tau_at = [&](int i) {
            return lo * std::pow(hi / lo, static_cast<double>(i) / 1999.0);
        };
        for (int i = 0; i < 2000; ++i) {
            const double v = gauss_bound_tau(region, amb, tau_at(i)).value;
            if (v < best) {
                best = v;
                best_i = i;
            }
            if (v < closed - 1e-9) ok = false;  // never below the closed form
        }
        double a = tau_at(std::max(0, best_i - 1));
        double b = tau_at(std::min(1999, best_i + 1));
        const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
        double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
        double f1 = gauss_bound_tau(region, amb, x1).value;
        double f2 = gauss_bound_tau(region, amb, x2).value;
        for (int it = 0; it < 80; ++it) {
            if (f1 <= f2) {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - gr * (b - a);
                f1 = gauss_bound_tau(region, amb, x1).value;
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + gr * (b - a);
                f2 = gauss_bound_tau(region, amb, x2).value;
            }
        }
        best = std::min({best, f1, f2});
        if (std::abs(best - closed) > 1e-6) ok = false;
    }
    report(4, ok, "closed form equals the optimized linearization family", t.seconds());
}

// 5. Support information never hurts: SDP bound <= closed form + 1e-6.
void criterion5() {
    Timer t;
    bool ok = true;
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> hw(0.8, 6.0);
    for (int trial = 0; trial < 100 && ok; ++trial) {
        const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng() % 9);
        Matrix s0 = random_psd(rng, n, 0.1);
        Matrix m = random_psd(rng, n);
        m *= 0.6 / std::max(1e-9, (m * s0).trace());
        Vector widths(n);
        for (Eigen::Index i = 0; i < n; ++i)
            widths(i) = hw(rng) * std::sqrt(s0(i, i));
        const double alpha = 1.0 + (trial % 9);
        AmbiguitySet bounded(SymMatrix::symmetrize(s0), 0.0, 1.1, alpha,
                             box_support(widths));
        AmbiguitySet unbounded(SymMatrix::symmetrize(s0), 0.0, 1.1, alpha);
        EllipsoidRegion region{SymMatrix::symmetrize(m)};
        BoundResult bb = bounded_gauss_bound(region, bounded);
        if (bb.value > gauss_bound(region, unbounded).value + 1e-6) ok = false;
        if (bb.certificate &&
            (bb.certificate->kkt.primal_residual > 1e-7 ||
             bb.certificate->kkt.dual_residual > 1e-7 ||
             bb.certificate->kkt.duality_gap > 1e-7))
            ok = false;
    }
    report(5, ok, "support-aware bound never exceeds the closed form", t.seconds());
}

// 6. Monte-Carlo validity and moment-bound sharpness.
void criterion6() {
    Timer t;
    bool ok = true;
    std::mt19937_64 rng(321);
    for (double alpha : {1.0, 3.0, 9.0, 27.0}) {
        for (int trial = 0; trial < 50 && ok; ++trial) {
            const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng() % 3);
            Matrix s0 = random_psd(rng, n, 0.1);
            Matrix m = random_psd(rng, n);
            m *= 0.7 / std::max(1e-9, (m * s0).trace());
            const double gamma2 = 1.0 + 0.2 * (trial % 2);
            AmbiguitySet amb(SymMatrix::symmetrize(s0), 0.0, gamma2, alpha);
            EllipsoidRegion region{SymMatrix::symmetrize(m)};
            const double bound = gauss_bound(region, amb).value;
            RadialMixture mix = calibrated_mixture(amb.s0(), gamma2, alpha,
                                                   static_cast<int>(2 * n) + 4,
                                                   static_cast<std::uint64_t>(trial));
            McEstimate est = monte_carlo_tail(mix, region, 1.0, 1000000,
                                              static_cast<std::uint64_t>(trial) + 9);
            if (est.value > bound + 3.0 * est.std_error + 1e-9) ok = false;
        }
    }
    // sharpness of the moment-only bound: a two-point distribution just outside
    // the region attains it; its tail mass is available in closed form
    {
        const double m = 0.3, gamma2 = 1.2;
        AmbiguitySet amb = scalar_set(1.0, gamma2, kAlphaInf);
        const double bound = chebyshev_bound(scalar_region(m), amb).value;
        const double p = gamma2 * m;  // mass placed at +-(1+)/sqrt(m)
        if (std::abs(p - bound) > 1e-9) ok = false;
    }
    report(6, ok, "sampled tails respect the bounds; moment bound is sharp",
           t.seconds());
}

// 7. Design exactness, feasibility of all four schemes, and the unimodality
// pay-off ratio.
void criterion7() {
    Timer t;
    bool ok = true;
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> eps_dist(0.01, 0.2);
    std::uniform_real_distribution<double> hw(2.0, 5.0);
    for (int trial = 0; trial < 50 && ok; ++trial) {
        const Eigen::Index n = 3 + static_cast<Eigen::Index>(rng() % 2);
        const Eigen::Index nv = 2;
        Matrix w = random_matrix(rng, nv, n);
        Matrix v = random_matrix(rng, nv, 2);
        Matrix s0 = random_psd(rng, n, 0.1);
        const double alpha = 1.0 + (trial % 9);
        const double eps = eps_dist(rng);
        Vector widths(n);
        for (Eigen::Index i = 0; i < n; ++i) widths(i) = hw(rng) * std::sqrt(s0(i, i));
        AmbiguitySet uni(SymMatrix::symmetrize(s0), 0.0, 1.1, alpha);
        AmbiguitySet mom(SymMatrix::symmetrize(s0), 0.0, 1.1, kAlphaInf);
        AmbiguitySet uni_b(SymMatrix::symmetrize(s0), 0.0, 1.1, alpha,
                           box_support(widths));
        AmbiguitySet mom_b(SymMatrix::symmetrize(s0), 0.0, 1.1, kAlphaInf,
                           box_support(widths));

        DesignResult du = frobenius_design(w, v, mom, eps);
        DesignResult dua = frobenius_design(w, v, uni, eps);
        DesignResult dg = glrt_design(w, v, uni, eps);
        // exactness of the scaling in the small-tolerance branch
        for (const DesignResult* d : {&dua, &dg}) {
            const Matrix mm = w.transpose() * d->p.transpose() * d->p * w;
            const double traced = improvement_factor(alpha) * 1.1 * (mm * s0).trace();
            if (std::abs(traced - eps) > 1e-9) ok = false;
        }
        // the unimodality pay-off on the trace metric is exactly 1/c_alpha
        if (std::abs(dua.objective / du.objective - 1.0 / improvement_factor(alpha)) >
            1e-9)
            ok = false;
        // all four schemes stay within the tolerance
        DesignResult db = bounded_design(w, v, mom_b, eps, {MetricKind::Frobenius});
        DesignResult dba = bounded_design(w, v, uni_b, eps, {MetricKind::Frobenius},
                                          {0.5, 1.0, 2.0});
        for (const DesignResult* d : {&du, &dua, &db, &dba}) {
            if (d->certified_far.value > eps + 1e-7) ok = false;
        }
        if (worst_case_far(du.p, w, mom).value > eps + 1e-9) ok = false;
        if (worst_case_far(dua.p, w, uni).value > eps + 1e-9) ok = false;
    }
    report(7, ok, "designs are exact, feasible, and price unimodality correctly",
           t.seconds());
}

// The benchmark ambiguity set lives in residual space (the training rows),
// so detector designs use the identity disturbance map.
struct BenchmarkSetup {
    Benchmark bm;
    AmbiguitySet amb;
    Matrix w;  // identity on residual space
    BenchmarkSetup(BenchmarkConfig cfg, double inflate)
        : bm(three_tank_benchmark(cfg)),
          amb(build_ambiguity(bm, inflate)),
          w(Matrix::Identity(bm.train.cols(), bm.train.cols())) {}
    static AmbiguitySet build_ambiguity(const Benchmark& bm, double inflate) {
        auto [mu, s0] = estimate_moments(bm.train);
        Matrix centered = bm.train.rowwise() - mu.transpose();
        return AmbiguitySet(s0, 0.0, 1.1, 9.0,
                            box_support_from_samples(centered, inflate));
    }
};

// 8. Benchmark ordering of the four schemes over the tolerance sweep.
void criterion8() {
    Timer t;
    bool ok = true;
    BenchmarkConfig cfg;
    cfg.n_train = 2000;
    cfg.n_test = 10;
    cfg.fault_onset = 5;
    BenchmarkSetup setup(cfg, 1.2);
    const Matrix& w = setup.w;
    const Matrix& v = setup.bm.rm.v;
    const AmbiguitySet& amb = setup.amb;
    AmbiguitySet uni(amb.s0(), 0.0, amb.gamma2(), 9.0);
    AmbiguitySet mom(amb.s0(), 0.0, amb.gamma2(), kAlphaInf);
    AmbiguitySet mom_b(amb.s0(), 0.0, amb.gamma2(), kAlphaInf, amb.support());

    for (MetricKind kind : {MetricKind::Frobenius, MetricKind::PseudoDet}) {
        const bool rho1 = kind == MetricKind::Frobenius;
        for (double eps : {0.01, 0.02, 0.05, 0.1, 0.2}) {
            const double o_u = (rho1 ? frobenius_design(w, v, mom, eps)
                                     : glrt_design(w, v, mom, eps))
                                   .objective;
            const double o_ua = (rho1 ? frobenius_design(w, v, uni, eps)
                                      : glrt_design(w, v, uni, eps))
                                    .objective;
            const double o_b = bounded_design(w, v, mom_b, eps, {kind}).objective;
            const double o_ba = bounded_design(w, v, amb, eps, {kind}).objective;
            if (!(o_ua >= o_u - 1e-9)) ok = false;
            if (!(o_ba >= std::max(o_ua, o_b) - 1e-6)) ok = false;
        }
    }
    report(8, ok, "benchmark scheme ordering across the tolerance sweep", t.seconds());
}

// 9. Empirical false alarm control at scale, and the failure of the
// Gaussian-quantile baseline on a heavy-tailed family.
void criterion9() {
    Timer t;
    bool ok = true;
    BenchmarkConfig cfg;
    cfg.n_train = 2000;
    cfg.n_test = 10000;
    cfg.fault_onset = 9999;  // keep 9999 held-out fault-free samples
    BenchmarkSetup setup(cfg, 1.2);
    const Matrix& w = setup.w;
    const Matrix& v = setup.bm.rm.v;
    const AmbiguitySet& amb = setup.amb;
    AmbiguitySet uni(amb.s0(), 0.0, amb.gamma2(), 9.0);
    AmbiguitySet mom(amb.s0(), 0.0, amb.gamma2(), kAlphaInf);
    AmbiguitySet mom_b(amb.s0(), 0.0, amb.gamma2(), kAlphaInf, amb.support());

    const double eps = 0.05;
    const double sigma_mc = std::sqrt(eps * (1.0 - eps) / 9999.0);
    std::vector<Matrix> designs;
    designs.push_back(frobenius_design(w, v, mom, eps).p);
    designs.push_back(frobenius_design(w, v, uni, eps).p);
    designs.push_back(bounded_design(w, v, mom_b, eps, {MetricKind::Frobenius}).p);
    designs.push_back(
        bounded_design(w, v, amb, eps, {MetricKind::Frobenius}, {0.5, 1.0, 2.0}).p);
    for (const Matrix& p : designs) {
        FarFdr ff = evaluate_far_fdr(p, setup.bm.test, setup.bm.labels, 1.0);
        if (ff.far > eps + 3.0 * sigma_mc) ok = false;
    }

    // chi-square-calibrated whitened detector on the scale-mixture family:
    // heavy tails push the realized false alarm rate above the tolerance
    SymMatrix sbar = SymMatrix::symmetrize(w * amb.s0().mat() * w.transpose());
    auto [sqrt_s, inv_sqrt_s] = psd_sqrt_inv(sbar);
    (void)sqrt_s;
    const double q = chi2_quantile(static_cast<int>(w.rows()), 1.0 - eps);
    FarFdr chi = evaluate_far_fdr(inv_sqrt_s, setup.bm.test, setup.bm.labels, q);
    if (!(chi.far > eps)) ok = false;
    report(9, ok, "robust schemes hold the tolerance where the Gaussian baseline fails",
           t.seconds());
}

// 10. Solver contract: tight KKT residuals and bit-identical re-solves.
void criterion10() {
    Timer t;
    bool ok = true;
    Matrix s0(2, 2);
    s0 << 1.0, 0.2, 0.2, 1.0;
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = 0.5;
    m(1, 1) = 0.3;
    AmbiguitySet amb(SymMatrix{s0}, 0.0, 1.1, 9.0,
                     box_support(Vector::Constant(2, 2.0)));
    EllipsoidRegion region{SymMatrix{m}};
    BoundResult b1 = bounded_gauss_bound(region, amb);
    BoundResult b2 = bounded_gauss_bound(region, amb);
    if (!b1.certificate || !b2.certificate) ok = false;
    if (ok) {
        if (b1.value != b2.value) ok = false;
        if (b1.certificate->iterations != b2.certificate->iterations) ok = false;
        if ((b1.certificate->x - b2.certificate->x).norm() != 0.0) ok = false;
        if (b1.certificate->kkt.primal_residual > 1e-7 ||
            b1.certificate->kkt.dual_residual > 1e-7 ||
            b1.certificate->kkt.duality_gap > 1e-7)
            ok = false;
    }
    report(10, ok, "interior-point certificates are tight and deterministic",
           t.seconds());
}

}  // namespace

int main() {
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    criterion9();
    criterion10();
    if (g_failures == 0)
        std::printf("all acceptance criteria passed\n");
    else
        std::printf("%d acceptance criteria FAILED\n", g_failures);
    return g_failures;
}
