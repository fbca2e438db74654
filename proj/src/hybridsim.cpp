#include "fph/hybridsim.hpp"

#include <cmath>

#include <fmt/format.h>

#include "fph/errors.hpp"

namespace fph {

Vec step_rk4(const Flow& f, double t, const Vec& y, double h) {
    const Vec k1 = f(t, y);
    const Vec k2 = f(t + 0.5 * h, y + 0.5 * h * k1);
    const Vec k3 = f(t + 0.5 * h, y + 0.5 * h * k2);
    const Vec k4 = f(t + h, y + h * k3);
    if (!(k1.allFinite() && k2.allFinite() && k3.allFinite() && k4.allFinite()))
        throw IntegrationError(fmt::format("non-finite derivative at t = {:.9f}", t));
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

std::optional<double> locate_event(const std::function<GuardValue(double)>& guard_at, double lo,
                                   double hi, double tol) {
    const GuardValue gh = guard_at(hi);
    const GuardValue gl = guard_at(lo);
    if (!(gl.value > 0.0 && gh.value <= 0.0)) {
        if (!gh.armed) return std::nullopt;
        throw EventError(fmt::format("no guard sign change on [{}, {}]", lo, hi));
    }
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (guard_at(mid).value > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    // A planned touchdown has zero approach speed, so the sampled descent rate
    // at the bracket end can be noise; accept arming at the crossing itself.
    if (!gh.armed && !guard_at(hi).armed) return std::nullopt;
    return hi;
}

Vec ZeroInput::act(const PHState&, const Vec&, TraceRow& row) {
    const int n = model_.n();
    row.tau = Vec::Zero(model_.m());
    row.u = Vec::Zero(n);
    row.q_d = row.qdot_d = row.e_x = row.e_v = row.v = row.s = row.d_hat = Vec::Zero(n);
    row.V_s = 0.0;
    return row.u;
}

ClosedLoop::ClosedLoop(const RobotModel& model, Controller& ctrl, Estimator& est, ReferenceFn ref,
                       const GaitConfig& gait, double step)
    : model_(model), ctrl_(ctrl), est_(est), ref_(std::move(ref)), clock_(gait), step_(step) {}

Vec ClosedLoop::act(const PHState& x, const Vec&, TraceRow& row) {
    const double ph = clock_.phase(x.t);
    const Reference now = ref_(ph);
    const Reference next = ref_(ph + step_);

    EstimatorInput in;
    in.x = &x;
    in.grad_q_H = model_.grad_q_hamiltonian(x);

    // The rate prediction uses the previous estimate; the estimate for this
    // sample needs this sample's surface.
    if (d_hat_prev_.size() != model_.n()) d_hat_prev_ = Vec::Zero(model_.n());
    const ControlOutput co = ctrl_.equivalent_control(x, now, next, d_hat_prev_);
    in.s = co.s;
    const Vec d_hat = est_.estimate(in);
    const Vec tau = ctrl_.total_control(co.tau_eq, d_hat);
    const Vec u = model_.B() * tau;
    est_.advance(in, u);
    d_hat_prev_ = d_hat;

    row.q_d = now.q;
    row.qdot_d = now.qdot;
    row.e_x = co.e_x;
    row.e_v = co.e_v;
    row.v = co.v;
    row.s = co.s;
    row.tau = tau;
    row.u = u;
    row.d_hat = d_hat;
    row.V_s = co.V_s;
    return u;
}

void ClosedLoop::on_impact(const PHState& x_plus) {
    clock_.on_impact(x_plus.t);
    ctrl_.reset();
    est_.reset(x_plus);
    d_hat_prev_.setZero();
}

HybridTrace simulate(const RobotModel& model, Agent& agent, const Disturbance& dist,
                     const PHState& x0, const IntegratorConfig& cfg) {
    const int n = model.n();
    HybridTrace tr;
    tr.n = n;
    tr.m = model.m();
    const auto steps = static_cast<long>(std::llround(cfg.horizon / cfg.step));
    tr.rows.reserve(static_cast<std::size_t>(steps) + 1);

    auto disturbance = [&](double t, const PHState& x) -> Vec {
        return dist ? dist(t, x) : Vec::Zero(n);
    };
    auto split = [n](const Vec& y, double t) { return PHState{y.head(n), y.tail(n), t}; };

    Vec y(2 * n);
    y << x0.q, x0.p;
    int cooldown = 0;

    try {
        for (long k = 0; k <= steps; ++k) {
            const double t = static_cast<double>(k) * cfg.step;
            const PHState x = split(y, t);

            TraceRow row;
            row.t = t;
            row.q = x.q;
            row.p = x.p;
            row.qdot = model.velocity(x);
            row.H = model.hamiltonian(x);
            row.d = disturbance(t, x);
            Vec u = agent.act(x, row.d, row);
            tr.rows.push_back(std::move(row));
            if (k == steps) break;

            Flow f = [&](double tt, const Vec& yy) {
                const PHState xs = split(yy, tt);
                Vec dy(2 * n);
                dy << model.velocity(xs), -model.grad_q_hamiltonian(xs) + u + disturbance(tt, xs);
                return dy;
            };
            Vec y1 = step_rk4(f, t, y, cfg.step);

            std::optional<double> te;
            if (cooldown > 0) {
                --cooldown;
            } else if (model.guard(x).value > 0.0 && model.guard(split(y1, t + cfg.step)).value <= 0.0) {
                auto guard_at = [&](double tt) {
                    const double dt = tt - t;
                    return model.guard(split(dt > 0.0 ? step_rk4(f, t, y, dt) : y, tt));
                };
                te = locate_event(guard_at, t, t + cfg.step, cfg.event_tolerance);
            }

            if (te) {
                const Vec ye = step_rk4(f, t, y, *te - t);
                const PHState xp = model.impact_map(split(ye, *te));
                tr.impacts.push_back(*te);
                agent.on_impact(xp);
                // actuators stay on their joints; relabel the held input
                u = model.delta_n() * u;
                Vec yp(2 * n);
                yp << xp.q, xp.p;
                y = step_rk4(f, *te, yp, t + cfg.step - *te);
                cooldown = cfg.chatter_steps;
                if (static_cast<int>(tr.impacts.size()) >= cfg.max_impacts) {
                    const PHState xe = split(y, t + cfg.step);
                    TraceRow last;
                    last.t = xe.t;
                    last.q = xe.q;
                    last.p = xe.p;
                    last.qdot = model.velocity(xe);
                    last.H = model.hamiltonian(xe);
                    last.d = disturbance(xe.t, xe);
                    agent.act(xe, last.d, last);
                    tr.rows.push_back(std::move(last));
                    break;
                }
            } else {
                y = std::move(y1);
            }
        }
    } catch (const Error& e) {
        const double t = tr.rows.empty() ? 0.0 : tr.rows.back().t;
        tr.error = fmt::format("t = {:.6f}: {}", t, e.what());
        if (!cfg.capture_errors) throw IntegrationError(tr.error);
    }
    return tr;
}

HybridTrace simulate(const RobotModel& model, Controller& ctrl, Estimator& est,
                     const Disturbance& dist, const ReferenceFn& ref, const GaitConfig& gait,
                     const PHState& x0, const IntegratorConfig& cfg) {
    ClosedLoop loop(model, ctrl, est, ref, gait, cfg.step);
    return simulate(model, loop, dist, x0, cfg);
}

}  // namespace fph
