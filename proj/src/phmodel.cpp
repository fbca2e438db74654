#include "fph/phmodel.hpp"

#include <cmath>

#include "fph/errors.hpp"

namespace fph {

namespace {

constexpr double kMaxCondition = 1e12;

Eigen::LDLT<Mat> factor_mass(const Mat& M) {
    Eigen::LDLT<Mat> ldlt(M);
    if (ldlt.info() != Eigen::Success || !(ldlt.rcond() > 1.0 / kMaxCondition))
        throw SingularMassError("mass matrix numerically singular");
    return ldlt;
}

}  // namespace

// ---------------------------------------------------------------- generic

Mat RobotModel::coriolis(const Vec& q, const Vec& qdot) const {
    const auto dM = mass_partials(q);
    const int N = n();
    Mat C = Mat::Zero(N, N);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            for (int k = 0; k < N; ++k)
                C(i, j) += 0.5 * (dM[k](i, j) + dM[j](i, k) - dM[i](j, k)) * qdot[k];
    return C;
}

Vec RobotModel::velocity(const PHState& x) const {
    return factor_mass(mass_matrix(x.q)).solve(x.p);
}

double RobotModel::hamiltonian(const PHState& x) const {
    return 0.5 * x.p.dot(velocity(x)) + potential(x.q);
}

Vec RobotModel::grad_q_hamiltonian(const PHState& x) const {
    const Vec qd = velocity(x);
    const auto dM = mass_partials(x.q);
    Vec g = gravity(x.q);
    // d/dq_i of 1/2 p^T M^-1 p = -1/2 qdot^T dM_i qdot
    for (int i = 0; i < n(); ++i) g[i] -= 0.5 * qd.dot(dM[i] * qd);
    return g;
}

Vec RobotModel::grad_hamiltonian(const PHState& x) const {
    Vec out(2 * n());
    out << grad_q_hamiltonian(x), velocity(x);
    return out;
}

Vec RobotModel::drift(const PHState& x) const {
    const Vec qd = velocity(x);
    const auto dM = mass_partials(x.q);
    Mat Mdot = Mat::Zero(n(), n());
    for (int i = 0; i < n(); ++i) Mdot += dM[i] * qd[i];
    return Mdot * qd - coriolis(x.q, qd) * qd - gravity(x.q);
}

Vec RobotModel::lagrangian_accel(const Vec& q, const Vec& qdot, const Vec& tau_joint) const {
    return factor_mass(mass_matrix(q)).solve(tau_joint - coriolis(q, qdot) * qdot - gravity(q));
}

PHState RobotModel::impact_map(const PHState& x) const {
    const Vec qd_minus = velocity(x);
    PHState out;
    out.t = x.t;
    out.q = delta_n() * x.q;
    const Vec qd_plus = velocity_map(x.q) * qd_minus;
    out.p = mass_matrix(out.q) * qd_plus;
    return out;
}

// ---------------------------------------------------------------- two-link

TwoLinkWalker::TwoLinkWalker(const TwoLinkParams& p) : par_(p) { B_ = Mat::Identity(2, 2); }

Mat TwoLinkWalker::mass_matrix(const Vec& q) const {
    const auto& P = par_;
    const double l = P.l();
    const double c = std::cos(q[0] - q[1]);
    Mat M(2, 2);
    M << (P.mH + P.m2) * l * l + P.m1 * P.b * P.b, -P.m2 * l * P.a * c,
        -P.m2 * l * P.a * c, P.m2 * P.a * P.a;
    return M;
}

std::vector<Mat> TwoLinkWalker::mass_partials(const Vec& q) const {
    const double k = par_.m2 * par_.l() * par_.a * std::sin(q[0] - q[1]);
    Mat d1(2, 2);
    d1 << 0.0, k, k, 0.0;
    return {d1, -d1};
}

double TwoLinkWalker::potential(const Vec& q) const {
    const auto& P = par_;
    const double l = P.l();
    return P.g * (((P.mH + P.m2) * l + P.m1 * P.b) * (std::cos(q[0]) - 1.0) -
                  P.m2 * P.a * (std::cos(q[1]) - 1.0));
}

Vec TwoLinkWalker::gravity(const Vec& q) const {
    const auto& P = par_;
    Vec G(2);
    G << -((P.mH + P.m2) * P.l() + P.m1 * P.b) * P.g * std::sin(q[0]),
        P.m2 * P.a * P.g * std::sin(q[1]);
    return G;
}

double TwoLinkWalker::swing_x(const Vec& q) const {
    return par_.l() * (std::sin(q[0]) - std::sin(q[1]));
}

GuardValue TwoLinkWalker::guard(const PHState& x) const {
    const double l = par_.l();
    const double L = swing_x(x.q);
    GuardValue gv;
    gv.value = l * std::cos(x.q[0]) - l * std::cos(x.q[1]) - L * std::tan(par_.slope);
    const Vec qd = velocity(x);
    const double dP = -l * std::sin(x.q[0]) * qd[0] + l * std::sin(x.q[1]) * qd[1] -
                      l * (std::cos(x.q[0]) * qd[0] - std::cos(x.q[1]) * qd[1]) * std::tan(par_.slope);
    gv.armed = L > kScuffMargin * l && dP < 0.0;
    return gv;
}

Mat TwoLinkWalker::delta_n() const {
    Mat D(2, 2);
    D << 0.0, 1.0, 1.0, 0.0;
    return D;
}

Mat TwoLinkWalker::q_plus(const Vec& q) const {
    const auto& P = par_;
    const double l = P.l();
    const double c = std::cos(q[0] - q[1]);
    Mat Q(2, 2);
    Q << P.m1 * P.a * P.a - P.m1 * l * P.a * c,
        -P.m1 * l * P.a * c + (P.mH + P.m1) * l * l + P.m2 * P.b * P.b,
        P.m1 * P.a * P.a, -P.m1 * l * P.a * c;
    return Q;
}

Mat TwoLinkWalker::q_minus(const Vec& q) const {
    const auto& P = par_;
    const double l = P.l();
    const double c = std::cos(q[0] - q[1]);
    Mat Q(2, 2);
    Q << -P.m1 * P.a * P.b, -P.m1 * P.a * P.b + (P.mH * l * l + (P.m1 + P.m2) * l * P.b) * c,
        0.0, -P.m1 * P.a * P.b;
    return Q;
}

Mat TwoLinkWalker::velocity_map(const Vec& q) const {
    // Q+/Q- are written for (swing, stance) ordering; conjugate by the swap.
    const Mat Qp = q_plus(q);
    Eigen::FullPivLU<Mat> lu(Qp);
    if (!lu.isInvertible() || std::abs(Qp.determinant()) < 1e-12)
        throw ImpactSingularityError("two-link: singular Q+");
    const Mat S = delta_n();
    return S * lu.solve(q_minus(q)) * S;
}

// ---------------------------------------------------------------- RABBIT

namespace {

Vec unit(int i) {
    Vec e = Vec::Zero(5);
    e[i] = 1.0;
    return e;
}

}  // namespace

RabbitBiped::RabbitBiped(const RabbitParams& p, Actuation act) : par_(p), act_(act) {
    const double L = p.L;
    const Vec torso = unit(4);
    const Vec st_thigh = unit(4) + unit(0);
    const Vec st_shank = st_thigh + unit(2);
    const Vec sw_thigh = unit(4) + unit(1);
    const Vec sw_shank = sw_thigh + unit(3);

    // stance foot at origin, walking up the stance leg
    const std::vector<Term> knee = {{st_shank, -L, -1.0}};
    hip_ = {{st_shank, -L, -1.0}, {st_thigh, -L, -1.0}};
    auto plus = [](std::vector<Term> a, const std::vector<Term>& b) {
        a.insert(a.end(), b.begin(), b.end());
        return a;
    };
    const auto sw_knee = plus(hip_, {{sw_thigh, L, -1.0}});
    foot_ = plus(sw_knee, {{sw_shank, L, -1.0}});

    bodies_ = {
        {p.m_T, p.I_T, torso, plus(hip_, {{torso, 0.5 * p.L_T, 1.0}})},
        {p.m_t, p.I_t, st_thigh, plus(knee, {{st_thigh, -0.5 * L, -1.0}})},
        {p.m_s, p.I_s, st_shank, {{st_shank, -0.5 * L, -1.0}}},
        {p.m_t, p.I_t, sw_thigh, plus(hip_, {{sw_thigh, 0.5 * L, -1.0}})},
        {p.m_s, p.I_s, sw_shank, plus(sw_knee, {{sw_shank, 0.5 * L, -1.0}})},
    };
    v0_ = potential(Vec::Zero(5));

    if (act == Actuation::Full) {
        B_ = Mat::Identity(5, 5);
    } else {
        B_ = Mat::Zero(5, 4);
        B_.topRows(4) = Mat::Identity(4, 4);
    }
}

Eigen::Vector2d RabbitBiped::point(const std::vector<Term>& pt, const Vec& q) const {
    Eigen::Vector2d r = Eigen::Vector2d::Zero();
    for (const auto& t : pt) {
        const double th = t.a.dot(q);
        r += t.r * Eigen::Vector2d(std::sin(th), t.sy * std::cos(th));
    }
    return r;
}

Mat RabbitBiped::jacobian(const std::vector<Term>& pt, const Vec& q) const {
    Mat J = Mat::Zero(2, 5);
    for (const auto& t : pt) {
        const double th = t.a.dot(q);
        J.row(0) += t.r * std::cos(th) * t.a.transpose();
        J.row(1) -= t.r * t.sy * std::sin(th) * t.a.transpose();
    }
    return J;
}

Eigen::Vector2d RabbitBiped::hip(const Vec& q) const { return point(hip_, q); }
Eigen::Vector2d RabbitBiped::swing_foot(const Vec& q) const { return point(foot_, q); }
Mat RabbitBiped::swing_foot_jacobian(const Vec& q) const { return jacobian(foot_, q); }

Mat RabbitBiped::mass_matrix(const Vec& q) const {
    Mat M = Mat::Zero(5, 5);
    for (const auto& b : bodies_) {
        const Mat J = jacobian(b.com, q);
        M += b.mass * J.transpose() * J + b.inertia * b.angle * b.angle.transpose();
    }
    for (int i = 0; i < 4; ++i) M(i, i) += par_.I_a;
    return M;
}

std::vector<Mat> RabbitBiped::mass_partials(const Vec& q) const {
    std::vector<Mat> out(5, Mat::Zero(5, 5));
    for (const auto& b : bodies_) {
        const Mat J = jacobian(b.com, q);
        for (int k = 0; k < 5; ++k) {
            Mat dJ = Mat::Zero(2, 5);
            for (const auto& t : b.com) {
                if (t.a[k] == 0.0) continue;
                const double th = t.a.dot(q);
                dJ.row(0) -= t.r * std::sin(th) * t.a[k] * t.a.transpose();
                dJ.row(1) -= t.r * t.sy * std::cos(th) * t.a[k] * t.a.transpose();
            }
            out[k] += b.mass * (dJ.transpose() * J + J.transpose() * dJ);
        }
    }
    return out;
}

double RabbitBiped::potential(const Vec& q) const {
    double V = 0.0;
    for (const auto& b : bodies_) V += b.mass * par_.g * point(b.com, q).y();
    return V - v0_;
}

Vec RabbitBiped::gravity(const Vec& q) const {
    Vec G = Vec::Zero(5);
    for (const auto& b : bodies_) G += b.mass * par_.g * jacobian(b.com, q).row(1).transpose();
    return G;
}

GuardValue RabbitBiped::guard(const PHState& x) const {
    const Eigen::Vector2d f = swing_foot(x.q);
    const Eigen::Vector2d v = swing_foot_jacobian(x.q) * velocity(x);
    return {f.y(), f.x() > 0.0 && v.y() < 0.0};
}

Mat RabbitBiped::delta_n() const {
    Mat D = Mat::Zero(5, 5);
    D(0, 1) = D(1, 0) = D(2, 3) = D(3, 2) = D(4, 4) = 1.0;
    return D;
}

Mat RabbitBiped::delta_s(const Vec& q) const {
    const auto ldlt = factor_mass(mass_matrix(q));
    const Mat J = swing_foot_jacobian(q);
    const Mat MiJt = ldlt.solve(J.transpose());
    const Mat S = J * MiJt;
    Eigen::FullPivLU<Mat> lu(S);
    if (!lu.isInvertible()) throw ImpactSingularityError("rabbit: singular J M^-1 J^T");
    return Mat::Identity(5, 5) - MiJt * lu.solve(J);
}

Mat RabbitBiped::velocity_map(const Vec& q) const { return delta_n() * delta_s(q); }

std::unique_ptr<RobotModel> make_two_link(const TwoLinkParams& p) {
    return std::make_unique<TwoLinkWalker>(p);
}

std::unique_ptr<RobotModel> make_rabbit(const RabbitParams& p, RabbitBiped::Actuation act) {
    return std::make_unique<RabbitBiped>(p, act);
}

}  // namespace fph
