#include "fph/gait.hpp"

#include <algorithm>
#include <cmath>

#include "fph/errors.hpp"

namespace fph {

namespace {

struct Scaling {
    double s, ds;  // value and derivative w.r.t. time
};

// 10s^3 - 15s^4 + 6s^5
Scaling quintic(double tau, double T) {
    const double s = std::clamp(tau / T, 0.0, 1.0);
    const double v = s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
    const double dv = 30.0 * s * s * (1.0 - s) * (1.0 - s) / T;
    return {v, dv};
}

}  // namespace

double GaitClock::phase(double t) const {
    if (cfg_.phase_reset) return t - anchor_;
    return std::fmod(t, cfg_.swing_duration);
}

int GaitClock::stride(double t) const {
    if (cfg_.phase_reset) return strides_;
    return static_cast<int>(std::floor(t / cfg_.swing_duration));
}

void GaitClock::on_impact(double t) {
    anchor_ = t;
    ++strides_;
}

Reference two_link_reference(double phase, const GaitConfig& c) {
    const double T = c.swing_duration;
    const double span = c.q_high - c.q_low;
    const auto [sq, dsq] = quintic(phase, T);
    const double s = std::clamp(phase / T, 0.0, 1.0);

    // odd about mid-swing, vanishes at both ends
    const double w = s * (1.0 - s);
    const double bump = c.clearance * w * w * (2.0 * s - 1.0);
    const double dbump = (phase > 0.0 && phase < T)
                             ? c.clearance * (2.0 * w * (1.0 - 2.0 * s) * (2.0 * s - 1.0) + 2.0 * w * w) / T
                             : 0.0;

    Reference r{Vec(2), Vec(2)};
    r.q << c.q_low + span * sq, c.q_high - span * sq - bump;
    r.qdot << span * dsq, -span * dsq - dbump;
    if (phase > T) {
        const double x = phase - T;
        r.q[0] += 0.5 * c.overrun * x * x;
        r.qdot[0] += c.overrun * x;
    }
    return r;
}

CartesianPlan rabbit_plan(double phase, const GaitConfig& c, int stride) {
    const double T = c.swing_duration;
    const double S = c.step_length;
    const double speed = S / T;
    const auto [sq, dsq] = quintic(phase, T);
    const double s = std::clamp(phase / T, 0.0, 1.0);

    CartesianPlan p;
    const double x0 = c.hip_start_x + S * stride;
    p.hip = {x0 + speed * phase, c.hip_height};
    p.hip_vel = {speed, 0.0};
    p.stance_foot = {x0 + 0.5 * S, 0.0};

    // 16 s^2 (1-s)^2 lift profile, zero slope at both ends
    const double w = s * (1.0 - s);
    const double lift = 16.0 * c.foot_lift * w * w;
    const double dlift = (phase > 0.0 && phase < T) ? 32.0 * c.foot_lift * w * (1.0 - 2.0 * s) / T : 0.0;
    p.swing_foot = {x0 - 0.5 * S + 2.0 * S * sq, lift};
    p.swing_foot_vel = {2.0 * S * dsq, dlift};
    if (phase > T) {
        const double x = phase - T;
        p.swing_foot.y() -= 0.5 * c.foot_overrun * x * x;
        p.swing_foot_vel.y() -= c.foot_overrun * x;
    }
    return p;
}

LegAngles inverse_kinematics(const Eigen::Vector2d& hip, const Eigen::Vector2d& foot, double L) {
    const Eigen::Vector2d r = foot - hip;
    const double D = r.norm();
    if (D > 2.0 * L * (1.0 + 1e-12)) throw UnreachableError("inverse_kinematics: target out of reach");
    const double gam = std::atan2(r.x(), -r.y());
    const double del = std::acos(std::min(1.0, D / (2.0 * L)));
    return {gam + del, -2.0 * del};
}

Eigen::Vector2d forward_kinematics(const LegAngles& a, double L) {
    const double th = a.hip;
    const double sh = a.hip + a.knee;
    return {L * (std::sin(th) + std::sin(sh)), -L * (std::cos(th) + std::cos(sh))};
}

Eigen::Vector2d leg_rates(const Eigen::Vector2d& r, const Eigen::Vector2d& rv, double L) {
    const double D2 = r.squaredNorm();
    const double D = std::sqrt(D2);
    const double dgam = (-r.y() * rv.x() + r.x() * rv.y()) / D2;
    const double dD = r.dot(rv) / D;
    const double del = std::acos(std::min(1.0, D / (2.0 * L)));
    const double sd = std::sin(del);
    if (sd < 1e-12) throw UnreachableError("leg_rates: singular at full extension");
    const double ddel = -dD / (2.0 * L * sd);
    return {dgam + ddel, -2.0 * ddel};
}

Reference rabbit_reference(double phase, const GaitConfig& c, double L) {
    const CartesianPlan p = rabbit_plan(phase, c, 0);
    const LegAngles st = inverse_kinematics(p.hip, p.stance_foot, L);
    const LegAngles sw = inverse_kinematics(p.hip, p.swing_foot, L);
    const Eigen::Vector2d dst = leg_rates(p.stance_foot - p.hip, -p.hip_vel, L);
    const Eigen::Vector2d dsw = leg_rates(p.swing_foot - p.hip, p.swing_foot_vel - p.hip_vel, L);
    Reference r{Vec(5), Vec(5)};
    r.q << st.hip, sw.hip, st.knee, sw.knee, 0.0;
    r.qdot << dst[0], dsw[0], dst[1], dsw[1], 0.0;
    return r;
}

}  // namespace fph
