#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fph/controller.hpp"
#include "fph/estimators.hpp"
#include "fph/gait.hpp"
#include "fph/phmodel.hpp"

namespace fph {

struct IntegratorConfig {
    double step = 1e-3;
    double horizon = 10.0;
    double event_tolerance = 1e-9;
    int max_impacts = 1000;
    int chatter_steps = 10;
    // Return a partial trace with `error` set instead of throwing.
    bool capture_errors = false;
};

struct TraceRow {
    double t = 0.0;
    Vec q, p, qdot;
    Vec q_d, qdot_d;
    Vec e_x, e_v, v, s;
    Vec tau;  // actuator torques (m)
    Vec u;    // generalized input B tau (n)
    Vec d, d_hat;
    double H = 0.0;
    double V_s = 0.0;
};

struct HybridTrace {
    int n = 0;
    int m = 0;
    std::vector<TraceRow> rows;
    std::vector<double> impacts;
    std::string error;  // empty unless the run stopped early

    bool ok() const { return error.empty(); }
};

using Flow = std::function<Vec(double, const Vec&)>;
using Disturbance = std::function<Vec(double, const PHState&)>;

// Classical fourth-order Runge-Kutta step.
Vec step_rk4(const Flow& f, double t, const Vec& y, double h);

// Bisection for the guard crossing on [lo, hi]. `guard_at(t)` evaluates the
// guard of the flow at time t. Returns nothing when the guard is armed neither
// at `hi` nor at the refined crossing; throws EventError when armed at `hi`
// without a sign change.
std::optional<double> locate_event(const std::function<GuardValue(double)>& guard_at, double lo,
                                   double hi, double tol);

// Something that closes the loop once per sample (zero-order hold).
class Agent {
public:
    virtual ~Agent() = default;
    // Fill the control-side fields of `row` and return u = B tau.
    virtual Vec act(const PHState& x, const Vec& d_true, TraceRow& row) = 0;
    virtual void on_impact(const PHState& x_plus) = 0;
};

class ZeroInput final : public Agent {
public:
    explicit ZeroInput(const RobotModel& m) : model_(m) {}
    Vec act(const PHState& x, const Vec& d, TraceRow& row) override;
    void on_impact(const PHState&) override {}

private:
    const RobotModel& model_;
};

using ReferenceFn = std::function<Reference(double phase)>;

class ClosedLoop final : public Agent {
public:
    ClosedLoop(const RobotModel& model, Controller& ctrl, Estimator& est, ReferenceFn ref,
               const GaitConfig& gait, double step);
    Vec act(const PHState& x, const Vec& d, TraceRow& row) override;
    void on_impact(const PHState& x_plus) override;

private:
    const RobotModel& model_;
    Controller& ctrl_;
    Estimator& est_;
    ReferenceFn ref_;
    GaitClock clock_;
    double step_;
    Vec d_hat_prev_;
};

HybridTrace simulate(const RobotModel& model, Agent& agent, const Disturbance& dist,
                     const PHState& x0, const IntegratorConfig& cfg);

HybridTrace simulate(const RobotModel& model, Controller& ctrl, Estimator& est,
                     const Disturbance& dist, const ReferenceFn& ref, const GaitConfig& gait,
                     const PHState& x0, const IntegratorConfig& cfg);

}  // namespace fph
