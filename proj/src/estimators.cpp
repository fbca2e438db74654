#include "fph/estimators.hpp"

#include <cmath>

#include "fph/errors.hpp"

namespace fph {

EstimatorKind parse_estimator(const std::string& s) {
    if (s == "none") return EstimatorKind::None;
    if (s == "fractional") return EstimatorKind::Fractional;
    if (s == "adaptive") return EstimatorKind::Adaptive;
    throw ConfigError("unknown estimator '" + s + "' (none|fractional|adaptive)");
}

std::string to_string(EstimatorKind k) {
    switch (k) {
        case EstimatorKind::None: return "none";
        case EstimatorKind::Fractional: return "fractional";
        case EstimatorKind::Adaptive: return "adaptive";
    }
    return "none";
}

FracEstimator::FracEstimator(int n, const FracEstimatorConfig& c)
    : cfg_(c),
      Dint_(-1.0, c.step, static_cast<std::size_t>(n), c.window),
      D1s_(1.0 - c.sigma, c.step, static_cast<std::size_t>(n), c.window) {
    if (!(c.rho > 0.0)) throw ConfigError("fractional estimator: rho must be positive");
}

Vec FracEstimator::frac_estimate(const Vec& s) {
    const Vec reach = cfg_.Ks3 * s + cfg_.Ks4 * spow(s, cfg_.mu);
    return (Dint_.push(reach) + D1s_.push(s)) / cfg_.rho;
}

Vec FracEstimator::estimate(const EstimatorInput& in) { return frac_estimate(in.s); }

void FracEstimator::reset(const PHState&) {
    Dint_.reset();
    D1s_.reset();
}

AdaptiveEstimator::AdaptiveEstimator(int n, const AdaptiveEstimatorConfig& c)
    : cfg_(c), phi_(Vec::Zero(n)), d_hat_(Vec::Zero(n)) {}

Vec AdaptiveEstimator::estimate(const EstimatorInput& in) {
    if (!init_) reset(*in.x);
    d_hat_ = phi_ + cfg_.Ke1 * in.x->p;
    return d_hat_;
}

void AdaptiveEstimator::advance(const EstimatorInput& in, const Vec& u) {
    const Vec phidot = -cfg_.Ke1 * (-in.grad_q_H + u + d_hat_) + cfg_.Ke2 * ssign(in.s, cfg_.eps);
    phi_ += cfg_.step * phidot;
}

void AdaptiveEstimator::reset(const PHState& x) {
    phi_ = -cfg_.Ke1 * x.p;
    d_hat_.setZero();
    init_ = true;
}

namespace {

double lambda_min(const Mat& A) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (A + A.transpose()));
    return es.eigenvalues().minCoeff();
}

}  // namespace

GainCertificate check_gains(const Mat& Ks1, const Mat& Ks2, const Mat& Ke1, const Mat& Ke2,
                            double kappa, double vartheta, double l_d, double mu, double tol) {
    GainCertificate c;
    c.kappa = kappa;
    c.vartheta = vartheta;
    c.l_d = l_d;
    c.ke1_ok = (Ke1 - 0.5 * Ks1).cwiseAbs().maxCoeff() <= tol * (1.0 + Ks1.cwiseAbs().maxCoeff());
    c.ke2_ok = (Ke2 - vartheta * Ks2).cwiseAbs().maxCoeff() <= tol * (1.0 + Ke2.cwiseAbs().maxCoeff());
    const double a = kappa + 4.0 * vartheta * vartheta;
    c.ks2_threshold =
        (a * a + 4.0 * kappa * l_d + 4.0 * l_d * l_d + 4.0 * vartheta * vartheta) / (4.0 * vartheta * kappa);
    c.ks2_margin = lambda_min(Ks2) - c.ks2_threshold;
    c.ks2_ok = c.ks2_margin >= -tol * (1.0 + std::abs(c.ks2_threshold));
    c.mu_warning = std::abs(mu - 0.5) > 1e-12;
    c.pass = c.ke1_ok && c.ke2_ok && c.ks2_ok;
    return c;
}

}  // namespace fph
