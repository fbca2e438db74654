#pragma once

#include <memory>
#include <string>
#include <vector>

#include "fph/fracalc.hpp"

namespace fph {

struct PHState {
    Vec q;
    Vec p;
    double t = 0.0;
};

struct GuardValue {
    double value = 0.0;
    bool armed = false;
};

struct TwoLinkParams {
    double a = 0.5;
    double b = 0.5;
    double m1 = 5.0;
    double m2 = 5.0;
    double mH = 10.0;
    double g = 9.81;
    double slope = 7.5 * 3.14159265358979323846 / 180.0;

    double l() const { return a + b; }
};

struct RabbitParams {
    double L_T = 0.63;
    double L = 0.4;
    double m_T = 12.0;
    double m_t = 6.8;
    double m_s = 3.2;
    double I_T = 1.33;
    double I_t = 0.47;
    double I_s = 0.20;
    double I_a = 0.83;
    double g = 9.81;
};

class RobotModel {
public:
    virtual ~RobotModel() = default;

    virtual std::string name() const = 0;
    virtual int n() const = 0;
    int m() const { return static_cast<int>(B_.cols()); }
    const Mat& B() const { return B_; }

    virtual Mat mass_matrix(const Vec& q) const = 0;
    // dM/dq_i for i = 0..n-1
    virtual std::vector<Mat> mass_partials(const Vec& q) const = 0;
    virtual double potential(const Vec& q) const = 0;
    // dV/dq
    virtual Vec gravity(const Vec& q) const = 0;

    virtual GuardValue guard(const PHState& x) const = 0;
    virtual Mat delta_n() const = 0;
    // Matrix taking pre-impact joint velocities to post-impact velocities in
    // the relabelled coordinates.
    virtual Mat velocity_map(const Vec& q_minus) const = 0;

    Mat coriolis(const Vec& q, const Vec& qdot) const;
    Vec velocity(const PHState& x) const;
    double hamiltonian(const PHState& x) const;
    // [dH/dq; dH/dp]
    Vec grad_hamiltonian(const PHState& x) const;
    Vec grad_q_hamiltonian(const PHState& x) const;
    // Zero-input momentum rate from the Lagrangian terms: Mdot qdot - C qdot - G.
    Vec drift(const PHState& x) const;
    // qddot from M qddot + C qdot + G = tau_joint
    Vec lagrangian_accel(const Vec& q, const Vec& qdot, const Vec& tau_joint) const;
    PHState impact_map(const PHState& x_minus) const;

protected:
    Mat B_;
};

class TwoLinkWalker final : public RobotModel {
public:
    explicit TwoLinkWalker(const TwoLinkParams& p = {});

    std::string name() const override { return "two_link"; }
    int n() const override { return 2; }
    const TwoLinkParams& params() const { return par_; }

    Mat mass_matrix(const Vec& q) const override;
    std::vector<Mat> mass_partials(const Vec& q) const override;
    double potential(const Vec& q) const override;
    Vec gravity(const Vec& q) const override;
    GuardValue guard(const PHState& x) const override;
    Mat delta_n() const override;
    Mat velocity_map(const Vec& q_minus) const override;

    // Swing-foot horizontal offset from the stance foot (positive ahead).
    double swing_x(const Vec& q) const;
    // The legs pass each other with the swing foot at surface height; contact
    // counts only once the foot is this fraction of a leg length ahead.
    static constexpr double kScuffMargin = 0.25;
    // Q+ and Q- of the angular momentum balance, coordinates (stance, swing).
    Mat q_plus(const Vec& q_minus) const;
    Mat q_minus(const Vec& q_minus) const;

private:
    TwoLinkParams par_;
};

// Planar five-link biped with pinned stance foot.
// q = (stance hip, swing hip, stance knee, swing knee) relative, q5 torso absolute.
// Leg segment angles are measured from the downward vertical, positive forward.
class RabbitBiped final : public RobotModel {
public:
    enum class Actuation { Underactuated, Full };

    explicit RabbitBiped(const RabbitParams& p = {}, Actuation act = Actuation::Underactuated);

    std::string name() const override { return "rabbit"; }
    int n() const override { return 5; }
    const RabbitParams& params() const { return par_; }
    Actuation actuation() const { return act_; }

    Mat mass_matrix(const Vec& q) const override;
    std::vector<Mat> mass_partials(const Vec& q) const override;
    double potential(const Vec& q) const override;
    Vec gravity(const Vec& q) const override;
    GuardValue guard(const PHState& x) const override;
    Mat delta_n() const override;
    Mat velocity_map(const Vec& q_minus) const override;

    Eigen::Vector2d hip(const Vec& q) const;
    Eigen::Vector2d swing_foot(const Vec& q) const;
    Mat swing_foot_jacobian(const Vec& q) const;
    // I - M^-1 J^T (J M^-1 J^T)^-1 J, pre-impact labels
    Mat delta_s(const Vec& q_minus) const;

    struct Term {
        Vec a;        // segment angle = a^T q
        double r;     // length factor
        double sy;    // +1: (sin, cos), -1: (sin, -cos)
    };
    struct Body {
        double mass;
        double inertia;
        Vec angle;    // body angle = angle^T q
        std::vector<Term> com;
    };

private:
    Eigen::Vector2d point(const std::vector<Term>& pt, const Vec& q) const;
    Mat jacobian(const std::vector<Term>& pt, const Vec& q) const;

    RabbitParams par_;
    Actuation act_;
    std::vector<Body> bodies_;
    std::vector<Term> hip_, foot_;
    double v0_ = 0.0;
};

std::unique_ptr<RobotModel> make_two_link(const TwoLinkParams& p = {});
std::unique_ptr<RobotModel> make_rabbit(const RabbitParams& p = {},
                                        RabbitBiped::Actuation act = RabbitBiped::Actuation::Underactuated);

}  // namespace fph
