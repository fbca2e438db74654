#pragma once

#include "fph/gait.hpp"
#include "fph/phmodel.hpp"

namespace fph {

// Elementwise |e|^z sign(e)
Vec spow(const Vec& e, double z);
double spow(double e, double z);
// tanh(e / eps), or exact sign when eps <= 0
Vec ssign(const Vec& e, double eps);

struct OuterGains {
    Mat Kp, Kd, Ki;
    double alpha = 0.75;
};

struct SurfaceGains {
    double sigma = 0.85;
    double zeta = 0.5;
    Mat Ks1, Ks2;
};

struct InnerGains {
    Mat Ks3, Ks4;
    double mu = 0.75;
    double beta = 1.75;
    Mat Y;
};

// How the Ks3/Ks4 reaching terms enter the law: outside the D^(1-sigma)
// operator, or inside it, which gives s' = -Ks3 s - Ks4 spow(s, mu).
enum class LawForm { Outside, Inside };

// Sample at which the shaping term Ks1 spow + Ks2 ssign is evaluated: the
// measured e_v, or the e_v it predicts for the next sample (backward Euler,
// which removes the period-2 cycle the fractional power causes at e_v = 0).
// Implicit evaluation needs diagonal Ks1 and Ks2.
enum class Shaping { Explicit, Implicit };

struct ControllerConfig {
    OuterGains outer;
    SurfaceGains surface;
    InnerGains inner;
    double eps = 0.05;  // sign smoothing width
    double step = 1e-3;
    std::size_t window = FracOp::kDefaultWindow;
    LawForm form = LawForm::Inside;
    Shaping shaping = Shaping::Implicit;
    int rate_iterations = 8;

    // Section 4 gains, all scaled identities of size n
    static ControllerConfig defaults(int n);
};

struct ControlOutput {
    Vec e_x, e_v, v, s, tau_eq, tau;
    Vec rate;     // predicted momentum-reference rate
    Vec p_ref;
    Vec surf;     // D^(1-sigma)(...) + reaching terms as used in the law
    double V_s = 0.0;
};

class Controller {
public:
    Controller(const RobotModel& model, const ControllerConfig& cfg);

    const ControllerConfig& config() const { return cfg_; }

    // v = Kp e + Kd D^a e + Ki D^-a e, committing e to the operator memories
    Vec outer_filter(const Vec& e_x);
    // s = D^-1 [D^sigma e_v + Ks1 spow(e_v) + Ks2 ssign(e_v)], committing
    Vec sliding_surface(const Vec& e_v);

    // Equivalent control. `ref_now` and `ref_next` are the references at t
    // and t + h; d_hat enters only through the predicted plant motion.
    ControlOutput equivalent_control(const PHState& x, const Reference& ref_now,
                                     const Reference& ref_next, const Vec& d_hat);
    // tau = tau_eq - B^+ d_hat
    Vec total_control(const Vec& tau_eq, const Vec& d_hat) const;

    double lyapunov(const Vec& s) const;
    void reset();

    const Mat& B_pinv() const { return Bp_; }

private:
    Vec outer_peek(const Vec& e_x) const;
    Vec shape(const Vec& e_v) const;
    // e solving e + c shape(e) = z, channel by channel
    Vec implicit_error(const Vec& z, double c) const;

    const RobotModel& model_;
    ControllerConfig cfg_;
    Mat Bp_;
    Vec gamma_;  // per-channel discrete outer-filter gain
    FracOp Dd_, Di_, Dsig_, Dint_, D1s_;
};

// Eq. (24)-style bound on the time to reach s = 0 from V_s0.
double reaching_time_bound(double V_s0, const InnerGains& g);

// Scalar v = 0 sliding dynamics Kp e + Kd D^a e + Ki D^-a e = 0 with e(0) = e0,
// solved implicitly per step with plain GL operators. Returns e(t).
std::vector<double> outer_sliding_response(double Kp, double Kd, double Ki, double alpha,
                                           double e0, double step, double horizon);
// First time after which |e| stays inside band * |e0|; horizon if never.
double settling_time(const std::vector<double>& e, double step, double band = 0.02);

}  // namespace fph
