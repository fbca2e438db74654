#pragma once

#include <string>

#include "fph/controller.hpp"

namespace fph {

enum class EstimatorKind { None, Fractional, Adaptive };

EstimatorKind parse_estimator(const std::string& s);
std::string to_string(EstimatorKind k);

// Everything an estimator may look at during one sample.
struct EstimatorInput {
    const PHState* x = nullptr;
    Vec grad_q_H;  // dH/dq at x
    Vec s;         // sliding variable at this sample
};

class Estimator {
public:
    virtual ~Estimator() = default;
    virtual EstimatorKind kind() const = 0;
    // Estimate for the current sample.
    virtual Vec estimate(const EstimatorInput& in) = 0;
    // Advance internal state once tau for this sample is known.
    virtual void advance(const EstimatorInput&, const Vec& /*u*/) {}
    virtual void reset(const PHState& x_plus) = 0;
};

class NullEstimator final : public Estimator {
public:
    explicit NullEstimator(int n) : n_(n) {}
    EstimatorKind kind() const override { return EstimatorKind::None; }
    Vec estimate(const EstimatorInput&) override { return Vec::Zero(n_); }
    void reset(const PHState&) override {}

private:
    int n_;
};

struct FracEstimatorConfig {
    double rho = 0.1;
    double sigma = 0.85;
    double mu = 0.75;
    Mat Ks3, Ks4;
    double step = 1e-3;
    std::size_t window = FracOp::kDefaultWindow;
};

// d_hat = (1/rho) [D^-1 (Ks3 s + Ks4 spow(s, mu)) + D^(1-sigma) s]
class FracEstimator final : public Estimator {
public:
    FracEstimator(int n, const FracEstimatorConfig& c);
    EstimatorKind kind() const override { return EstimatorKind::Fractional; }
    Vec estimate(const EstimatorInput& in) override;
    void reset(const PHState&) override;

    Vec frac_estimate(const Vec& s);

private:
    FracEstimatorConfig cfg_;
    FracOp Dint_, D1s_;
};

struct AdaptiveEstimatorConfig {
    Mat Ke1, Ke2;
    double eps = 0.05;
    double step = 1e-3;
};

// d_hat = phi + Ke1 p, phi' = -Ke1 (-dH/dq + B tau + d_hat) + Ke2 ssign(s)
class AdaptiveEstimator final : public Estimator {
public:
    AdaptiveEstimator(int n, const AdaptiveEstimatorConfig& c);
    EstimatorKind kind() const override { return EstimatorKind::Adaptive; }
    Vec estimate(const EstimatorInput& in) override;
    void advance(const EstimatorInput& in, const Vec& u) override;
    void reset(const PHState& x_plus) override;

    const Vec& phi() const { return phi_; }

private:
    AdaptiveEstimatorConfig cfg_;
    Vec phi_;
    Vec d_hat_;
    bool init_ = false;
};

struct GainCertificate {
    double kappa = 0.0;
    double vartheta = 0.0;
    double l_d = 0.0;
    bool ke1_ok = false;
    bool ke2_ok = false;
    bool ks2_ok = false;
    double ks2_threshold = 0.0;
    double ks2_margin = 0.0;  // lambda_min(Ks2) - threshold
    bool mu_warning = false;  // mu != 0.5
    bool pass = false;
};

GainCertificate check_gains(const Mat& Ks1, const Mat& Ks2, const Mat& Ke1, const Mat& Ke2,
                            double kappa, double vartheta, double l_d, double mu = 0.5,
                            double tol = 1e-12);

}  // namespace fph
