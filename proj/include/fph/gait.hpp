#pragma once

#include "fph/phmodel.hpp"

namespace fph {

struct GaitConfig {
    double swing_duration = 1.0;
    // two-link joint span, radians
    double q_low = -27.5 * 3.14159265358979323846 / 180.0;
    double q_high = 12.5 * 3.14159265358979323846 / 180.0;
    // swing-leg clearance bump amplitude (rad) on the two-link profile
    double clearance = 4.2;
    // stance-angle acceleration past the nominal touchdown (rad/s^2)
    double overrun = 2.0;
    // RABBIT plan, meters
    double hip_height = 0.6;
    double step_length = 0.2;
    double hip_start_x = 0.1;
    double foot_lift = 0.05;
    // swing-foot descent acceleration past the nominal touchdown (m/s^2)
    double foot_overrun = 0.5;
    bool phase_reset = true;
};

struct Reference {
    Vec q;
    Vec qdot;
};

// Phase time since the last stride start. Without phase reset the stride
// clock wraps at the nominal swing duration.
class GaitClock {
public:
    explicit GaitClock(const GaitConfig& c) : cfg_(c) {}
    double phase(double t) const;
    int stride(double t) const;
    void on_impact(double t);

private:
    GaitConfig cfg_;
    double anchor_ = 0.0;
    int strides_ = 0;
};

Reference two_link_reference(double phase, const GaitConfig& c);

struct CartesianPlan {
    Eigen::Vector2d hip, hip_vel;
    Eigen::Vector2d swing_foot, swing_foot_vel;
    Eigen::Vector2d stance_foot;
};

// World-frame plan for stride `stride` at phase time `phase`.
CartesianPlan rabbit_plan(double phase, const GaitConfig& c, int stride = 0);

struct LegAngles {
    double hip;   // thigh angle relative to the torso (torso upright)
    double knee;  // shank relative to thigh, knee-forward branch (<= 0)
};

// Leg with equal thigh/shank length L reaching from `hip` to `foot`.
LegAngles inverse_kinematics(const Eigen::Vector2d& hip, const Eigen::Vector2d& foot, double L);
// Foot position for the given angles with the hip at the origin.
Eigen::Vector2d forward_kinematics(const LegAngles& a, double L);
// d(hip, knee)/dt for relative foot velocity `rel_vel` = d(foot - hip)/dt.
Eigen::Vector2d leg_rates(const Eigen::Vector2d& rel, const Eigen::Vector2d& rel_vel, double L);

Reference rabbit_reference(double phase, const GaitConfig& c, double L);

}  // namespace fph
