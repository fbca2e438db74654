#include <cmath>

#include <doctest.h>

#include "fph/errors.hpp"
#include "fph/estimators.hpp"

using namespace fph;
using doctest::Approx;

namespace {

double threshold(double kappa, double th, double ld) {
    const double a = kappa + 4 * th * th;
    return (a * a + 4 * kappa * ld + 4 * ld * ld + 4 * th * th) / (4 * th * kappa);
}

}  // namespace

TEST_CASE("estimator names round-trip") {
    for (auto k : {EstimatorKind::None, EstimatorKind::Fractional, EstimatorKind::Adaptive})
        CHECK(parse_estimator(to_string(k)) == k);
    CHECK_THROWS_AS(parse_estimator("kalman"), ConfigError);
}

TEST_CASE("gain certificate") {
    const Mat I = Mat::Identity(2, 2);
    const double kappa = 1.0, th = 1.5, ld = 0.5;
    const double thr = threshold(kappa, th, ld);
    CHECK(thr == Approx((100.0 + 2.0 + 1.0 + 9.0) / 6.0));

    SUBCASE("consistent gains pass") {
        const Mat Ks1 = 25.0 * I, Ks2 = 20.0 * I;
        const auto c = check_gains(Ks1, Ks2, 12.5 * I, th * Ks2, kappa, th, ld, 0.5);
        CHECK(c.pass);
        CHECK(c.ks2_threshold == Approx(thr));
        CHECK(c.ks2_margin == Approx(20.0 - thr));
        CHECK_FALSE(c.mu_warning);
    }
    SUBCASE("threshold is inclusive") {
        const Mat Ks2 = thr * I;
        CHECK(check_gains(25.0 * I, Ks2, 12.5 * I, th * Ks2, kappa, th, ld).ks2_ok);
        const Mat below = (thr - 1e-6) * I;
        CHECK_FALSE(check_gains(25.0 * I, below, 12.5 * I, th * below, kappa, th, ld).ks2_ok);
    }
    SUBCASE("the smallest eigenvalue decides") {
        Mat Ks2 = 30.0 * I;
        Ks2(1, 1) = thr - 0.1;
        const auto c = check_gains(25.0 * I, Ks2, 12.5 * I, th * Ks2, kappa, th, ld);
        CHECK_FALSE(c.ks2_ok);
        CHECK_FALSE(c.pass);
    }
    SUBCASE("observer gain couplings") {
        const Mat Ks2 = 20.0 * I;
        CHECK_FALSE(check_gains(25.0 * I, Ks2, 12.0 * I, th * Ks2, kappa, th, ld).ke1_ok);
        CHECK_FALSE(check_gains(25.0 * I, Ks2, 12.5 * I, Ks2, kappa, th, ld).ke2_ok);
    }
    SUBCASE("mu other than one half is flagged") {
        const Mat Ks2 = 20.0 * I;
        CHECK(check_gains(25.0 * I, Ks2, 12.5 * I, th * Ks2, kappa, th, ld, 0.75).mu_warning);
    }
}

TEST_CASE("adaptive observer converges to a constant disturbance") {
    const int n = 2;
    AdaptiveEstimatorConfig cfg;
    cfg.Ke1 = 12.5 * Mat::Identity(n, n);
    cfg.Ke2 = 7.5 * Mat::Identity(n, n);
    AdaptiveEstimator est(n, cfg);

    Vec d(n);
    d << 3.0, -1.5;
    PHState x{Vec::Zero(n), Vec::Zero(n), 0.0};
    EstimatorInput in{&x, Vec::Zero(n), Vec::Zero(n)};
    Vec d_hat;
    for (int k = 0; k < 3000; ++k) {
        d_hat = est.estimate(in);
        if (k == 0) CHECK(d_hat.norm() == 0.0);
        est.advance(in, Vec::Zero(n));
        x.p += cfg.step * d;  // p' = d with no potential and no input
    }
    CHECK((d_hat - d).norm() < 1e-10);

    est.reset(x);
    CHECK(est.estimate(in).norm() < 1e-12);
}

TEST_CASE("fractional estimator on a held sliding variable") {
    const int n = 2;
    FracEstimatorConfig cfg;
    cfg.Ks3 = 15.0 * Mat::Identity(n, n);
    cfg.Ks4 = 10.0 * Mat::Identity(n, n);
    FracEstimator est(n, cfg);
    Vec s(n);
    s << 0.01, -0.04;
    Vec d_hat;
    const int N = 1000;
    for (int k = 0; k < N; ++k) d_hat = est.frac_estimate(s);
    const Vec reach = 15.0 * s + 10.0 * spow(s, 0.75);
    CHECK((d_hat - reach * (N * cfg.step) / cfg.rho).norm() < 1e-9);

    est.reset(PHState{});
    CHECK(est.frac_estimate(Vec::Zero(n)).norm() == 0.0);

    cfg.rho = 0.0;
    CHECK_THROWS_AS(FracEstimator(n, cfg), ConfigError);
}

TEST_CASE("null estimator") {
    NullEstimator e(3);
    PHState x{Vec::Zero(3), Vec::Zero(3), 0.0};
    CHECK(e.estimate({&x, Vec::Zero(3), Vec::Zero(3)}).norm() == 0.0);
    CHECK(e.kind() == EstimatorKind::None);
}
