#include "fph/controller.hpp"

#include <cmath>

#include "fph/errors.hpp"

namespace fph {

double spow(double e, double z) {
    return e == 0.0 ? 0.0 : std::copysign(std::pow(std::abs(e), z), e);
}

Vec spow(const Vec& e, double z) {
    return e.unaryExpr([z](double x) { return spow(x, z); });
}

Vec ssign(const Vec& e, double eps) {
    if (eps <= 0.0) return e.unaryExpr([](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
    return e.unaryExpr([eps](double x) { return std::tanh(x / eps); });
}

ControllerConfig ControllerConfig::defaults(int n) {
    const Mat I = Mat::Identity(n, n);
    ControllerConfig c;
    c.outer = {40.0 * I, 5.0 * I, 15.0 * I, 0.75};
    c.surface = {0.85, 0.5, 25.0 * I, 5.0 * I};
    c.inner = {15.0 * I, 10.0 * I, 0.75, 1.75, I};
    return c;
}

Controller::Controller(const RobotModel& model, const ControllerConfig& cfg)
    : model_(model), cfg_(cfg) {
    const auto n = static_cast<std::size_t>(model.n());
    const Mat& B = model.B();
    if (cfg.shaping == Shaping::Implicit && (!cfg.surface.Ks1.isDiagonal() || !cfg.surface.Ks2.isDiagonal()))
        throw ConfigError("controller: implicit shaping needs diagonal Ks1 and Ks2");
    Eigen::FullPivLU<Mat> lu(B.transpose() * B);
    if (!lu.isInvertible()) throw ActuationError("controller: B has deficient column rank");
    Bp_ = lu.solve(B.transpose());

    const double h = cfg.step;
    const double a = cfg.outer.alpha;
    const double sig = cfg.surface.sigma;
    Dd_ = FracOp(a, h, n, cfg.window);
    Di_ = FracOp(-a, h, n, cfg.window);
    Dsig_ = FracOp(sig, h, n, cfg.window);
    Dint_ = FracOp(-1.0, h, n, cfg.window);
    // Unanchored so that D^(sigma-1) D^(1-sigma) is the identity on the shaping term.
    D1s_ = FracOp(1.0 - sig, h, n, cfg.window, Anchor::None);

    gamma_ = (cfg.outer.Kp + std::pow(h, -a) * cfg.outer.Kd + std::pow(h, a) * cfg.outer.Ki).diagonal();
}

Vec Controller::outer_filter(const Vec& e_x) {
    const auto& g = cfg_.outer;
    return g.Kp * e_x + g.Kd * Dd_.push(e_x) + g.Ki * Di_.push(e_x);
}

Vec Controller::outer_peek(const Vec& e_x) const {
    const auto& g = cfg_.outer;
    return g.Kp * e_x + g.Kd * Dd_.peek(e_x) + g.Ki * Di_.peek(e_x);
}

Vec Controller::sliding_surface(const Vec& e_v) {
    const auto& g = cfg_.surface;
    const Vec f = Dsig_.push(e_v) + g.Ks1 * spow(e_v, g.zeta) + g.Ks2 * ssign(e_v, cfg_.eps);
    return Dint_.push(f);
}

ControlOutput Controller::equivalent_control(const PHState& x, const Reference& now,
                                             const Reference& next, const Vec& d_hat) {
    const auto& sg = cfg_.surface;
    const auto& ig = cfg_.inner;
    const double h = cfg_.step;

    ControlOutput out;
    out.e_x = x.q - now.q;
    out.v = outer_filter(out.e_x);
    const Mat M = model_.mass_matrix(x.q);
    const Eigen::LDLT<Mat> Mf(M);
    out.p_ref = M * (now.qdot - out.v);
    out.e_v = x.p - out.p_ref;
    out.s = sliding_surface(out.e_v);

    const Vec reach = ig.Ks3 * out.s + ig.Ks4 * spow(out.s, ig.mu);
    Vec e_shape = out.e_v;
    if (cfg_.shaping == Shaping::Implicit) {
        // e_v(k+1) = e_v - h surf, with the newest D^(1-sigma) weight carrying h^(sigma-1)
        const double c = std::pow(h, sg.sigma);
        Vec z = out.e_v - h * D1s_.peek(Vec::Zero(model_.n()));
        z -= cfg_.form == LawForm::Outside ? Vec(h * reach) : Vec(c * reach);
        e_shape = implicit_error(z, c);
    }
    const Vec sh = shape(e_shape);
    out.surf = cfg_.form == LawForm::Outside ? Vec(D1s_.push(sh) + reach) : D1s_.push(sh + reach);

    // Reference-rate feedforward: fixed point of the one-step-ahead momentum
    // reference under the predicted closed-loop motion.
    const Vec gH = model_.grad_q_hamiltonian(x);
    const Vec qdot = Mf.solve(x.p);
    const Mat& B = model_.B();
    const Mat P = B * Bp_;
    const auto dM = model_.mass_partials(x.q);
    Vec Mdot_qdot = Vec::Zero(model_.n());
    for (int i = 0; i < model_.n(); ++i) Mdot_qdot += dM[static_cast<std::size_t>(i)] * (qdot[i] * qdot);
    // The input is held over the step, so it cancels the step average of the
    // gradient (trapezoid with the predicted next sample).
    Vec g_avg = gH;
    Vec rate = Vec::Zero(model_.n());
    for (int it = 0; it < cfg_.rate_iterations; ++it) {
        const Vec pdot = -g_avg + P * (g_avg - out.surf + rate - d_hat) + d_hat;
        // qddot = M^-1 (pdot - Mdot qdot)
        const Vec qn = x.q + h * qdot + 0.5 * h * h * Mf.solve(pdot - Mdot_qdot);
        const Vec vn = outer_peek(qn - next.q);
        const Vec F = (model_.mass_matrix(qn) * (next.qdot - vn) - out.p_ref) / h;
        rate.array() -= (rate - F).array() / (1.0 + 0.5 * h * gamma_.array());
        g_avg = 0.5 * (gH + model_.grad_q_hamiltonian({qn, x.p + h * pdot, x.t + h}));
    }
    out.rate = rate;

    const Vec bracket = -g_avg + out.surf - rate;
    out.tau_eq = -Bp_ * bracket;
    out.tau = out.tau_eq;
    out.V_s = lyapunov(out.s);
    return out;
}

Vec Controller::shape(const Vec& e_v) const {
    const auto& sg = cfg_.surface;
    return sg.Ks1 * spow(e_v, sg.zeta) + sg.Ks2 * ssign(e_v, cfg_.eps);
}

Vec Controller::implicit_error(const Vec& z, double c) const {
    const auto& sg = cfg_.surface;
    Vec e(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        const double k1 = sg.Ks1(i, i), k2 = sg.Ks2(i, i);
        auto g = [&](double x) {
            const double sgn = cfg_.eps > 0.0 ? std::tanh(x / cfg_.eps) : (x > 0.0) - (x < 0.0);
            return x + c * (k1 * spow(x, sg.zeta) + k2 * sgn);
        };
        // g is increasing with g(0) = 0, so the root lies between 0 and z
        double lo = std::min(0.0, z[i]), hi = std::max(0.0, z[i]);
        for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + std::abs(z[i])); ++it) {
            const double mid = 0.5 * (lo + hi);
            (g(mid) < z[i] ? lo : hi) = mid;
        }
        e[i] = 0.5 * (lo + hi);
    }
    return e;
}

Vec Controller::total_control(const Vec& tau_eq, const Vec& d_hat) const {
    return tau_eq - Bp_ * d_hat;
}

double Controller::lyapunov(const Vec& s) const {
    return std::pow(s.dot(cfg_.inner.Y * s), cfg_.inner.beta);
}

void Controller::reset() {
    Dd_.reset();
    Di_.reset();
    Dsig_.reset();
    Dint_.reset();
    D1s_.reset();
}

namespace {

double lambda_min(const Mat& A) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (A + A.transpose()));
    return es.eigenvalues().minCoeff();
}

}  // namespace

double reaching_time_bound(double V_s0, const InnerGains& g) {
    if (V_s0 <= 0.0) return 0.0;
    const double k3 = lambda_min(g.Ks3);
    const double k4 = lambda_min(g.Ks4);
    return std::log((k3 * std::pow(V_s0, (1.0 - g.mu) / g.beta) + k4) / k4) /
           (2.0 * k3 * (1.0 - g.mu));
}

std::vector<double> outer_sliding_response(double Kp, double Kd, double Ki, double alpha,
                                           double e0, double step, double horizon) {
    const auto n = static_cast<std::size_t>(std::llround(horizon / step)) + 1;
    const auto wd = gl_coefficients(alpha, n);
    const auto wi = gl_coefficients(-alpha, n);
    const double cd = Kd * std::pow(step, -alpha);
    const double ci = Ki * std::pow(step, alpha);
    std::vector<double> e(n);
    e[0] = e0;
    for (std::size_t k = 1; k < n; ++k) {
        // history part of both GL sums, newest sample unknown
        double hd = 0.0, hi = 0.0;
        for (std::size_t j = 1; j <= k; ++j) {
            hd += wd[j] * e[k - j];
            hi += wi[j] * e[k - j];
        }
        e[k] = -(cd * hd + ci * hi) / (Kp + cd + ci);
    }
    return e;
}

double settling_time(const std::vector<double>& e, double step, double band) {
    const double tol = band * std::abs(e.front());
    for (std::size_t k = e.size(); k-- > 0;)
        if (std::abs(e[k]) > tol) return static_cast<double>(std::min(k + 1, e.size() - 1)) * step;
    return 0.0;
}

}  // namespace fph
