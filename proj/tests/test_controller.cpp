#include <algorithm>
#include <cmath>
#include <random>

#include <doctest.h>

#include "fph/controller.hpp"
#include "fph/errors.hpp"
#include "fph/harness.hpp"

using namespace fph;
using doctest::Approx;

namespace {

Vec vec2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

// Time for W' = -2 k3 W - 2 k4 W^mu to reach zero from W0, by RK4.
double comparison_hit_time(double W0, double k3, double k4, double mu) {
    auto f = [&](double W) { return W <= 0.0 ? 0.0 : -2.0 * k3 * W - 2.0 * k4 * std::pow(W, mu); };
    const double h = 1e-6;
    double W = W0, t = 0.0;
    while (W > 1e-14) {
        const double a = f(W), b = f(W + 0.5 * h * a), c = f(W + 0.5 * h * b), d = f(W + h * c);
        W += h / 6.0 * (a + 2 * b + 2 * c + d);
        t += h;
        if (std::isnan(W)) break;
    }
    return t;
}

}  // namespace

TEST_CASE("signed power and smoothed sign") {
    CHECK(spow(-4.0, 0.5) == Approx(-2.0));
    CHECK(spow(9.0, 0.5) == Approx(3.0));
    CHECK(spow(0.0, 0.5) == 0.0);
    CHECK(spow(-2.0, 1.0) == -2.0);

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int k = 0; k < 200; ++k) {
        const double x = u(rng);
        CHECK(spow(-x, 0.75) == -spow(x, 0.75));
    }

    const Vec e = vec2(-0.3, 2.0);
    const Vec hard = ssign(e, 0.0);
    CHECK(hard[0] == -1.0);
    CHECK(hard[1] == 1.0);
    CHECK(ssign(Vec::Zero(2), 0.0).norm() == 0.0);
    const Vec soft = ssign(e, 0.05);
    CHECK(soft[0] == Approx(std::tanh(-6.0)));
    CHECK(std::abs(soft[1] - 1.0) < 1e-12);
}

TEST_CASE("outer filter on a held error") {
    const TwoLinkWalker model;
    auto cfg = ControllerConfig::defaults(2);
    Controller c(model, cfg);
    const Vec e = vec2(0.02, -0.01);
    Vec v;
    const int N = 1000;
    for (int k = 0; k <= N; ++k) v = c.outer_filter(e);
    // D^a of a constant vanishes; D^-a gives t^a / Gamma(1 + a)
    const double a = cfg.outer.alpha;
    const double integ = 1.0 / std::tgamma(1.0 + a);
    const Vec expect = 40.0 * e + 15.0 * integ * e;
    CHECK((v - expect).norm() < 1e-2 * expect.norm());
}

TEST_CASE("sliding surface integrates the shaping term of a held error") {
    const TwoLinkWalker model;
    auto cfg = ControllerConfig::defaults(2);
    Controller c(model, cfg);
    const Vec e = vec2(0.04, -0.09);
    Vec s;
    const int N = 1000;
    for (int k = 0; k < N; ++k) s = c.sliding_surface(e);
    const Vec shape = 25.0 * spow(e, 0.5) + 5.0 * ssign(e, cfg.eps);
    CHECK((s - shape).norm() < 1e-2 * shape.norm());
}

TEST_CASE("sliding surface one step from reset") {
    const TwoLinkWalker model;
    auto cfg = ControllerConfig::defaults(2);
    Controller a(model, cfg), b(model, cfg);
    const Vec e = vec2(0.3, 0.01);
    // anchored D^sigma of the first sample is zero; D^-1 contributes h
    const Vec want = cfg.step * (25.0 * spow(e, 0.5) + 5.0 * ssign(e, cfg.eps));
    const Vec s = a.sliding_surface(e);
    CHECK((s - want).norm() < 1e-15);
    CHECK((b.sliding_surface(-e) + s).norm() == 0.0);
    for (int k = 1; k < 20; ++k) {
        const Vec x = vec2(std::sin(0.3 * k), 0.01 * k);
        CHECK((a.sliding_surface(x) + b.sliding_surface(-x)).norm() == 0.0);
    }
}

TEST_CASE("equivalent control at rest on the reference is gravity compensation") {
    const TwoLinkWalker model;
    Controller c(model, ControllerConfig::defaults(2));
    PHState x{vec2(-0.3, 0.2), Vec::Zero(2), 0.0};
    const Reference r{x.q, Vec::Zero(2)};
    const auto out = c.equivalent_control(x, r, r, Vec::Zero(2));
    CHECK(out.s.norm() == 0.0);
    CHECK(out.rate.norm() < 1e-12);
    CHECK((out.tau_eq - model.gravity(x.q)).norm() < 1e-10);
    CHECK(out.V_s == 0.0);
}

TEST_CASE("total control subtracts the estimate through the pseudo-inverse") {
    const RabbitBiped model({}, RabbitBiped::Actuation::Underactuated);
    Controller c(model, ControllerConfig::defaults(5));
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    Vec t1(4), t2(4), d1(5), d2(5);
    for (auto* v : {&t1, &t2}) for (int i = 0; i < 4; ++i) (*v)[i] = g(rng);
    for (auto* v : {&d1, &d2}) for (int i = 0; i < 5; ++i) (*v)[i] = g(rng);
    const Vec lhs = c.total_control(2.0 * t1 + t2, 2.0 * d1 + d2);
    const Vec rhs = 2.0 * c.total_control(t1, d1) + c.total_control(t2, d2);
    CHECK((lhs - rhs).norm() < 1e-12);
    CHECK((c.B_pinv() * model.B() - Mat::Identity(4, 4)).norm() < 1e-12);
    CHECK((c.total_control(Vec::Zero(4), model.B() * t1) + t1).norm() < 1e-12);
}

TEST_CASE("Lyapunov candidate") {
    const TwoLinkWalker model;
    auto cfg = ControllerConfig::defaults(2);
    Controller c(model, cfg);
    CHECK(c.lyapunov(vec2(1.0, 0.0)) == Approx(1.0));
    CHECK(c.lyapunov(vec2(2.0, 0.0)) == Approx(std::pow(4.0, 1.75)));
    CHECK(c.lyapunov(Vec::Zero(2)) == 0.0);
}

TEST_CASE("reaching-time bound") {
    const auto g = ControllerConfig::defaults(2).inner;
    CHECK(reaching_time_bound(0.0, g) == 0.0);
    double prev = 0.0;
    for (double V : {1e-6, 1e-3, 0.1, 1.0, 10.0}) {
        const double T = reaching_time_bound(V, g);
        CHECK(T > prev);
        prev = T;
        const double W0 = std::pow(V, 1.0 / g.beta);
        CHECK(T == Approx(comparison_hit_time(W0, 15.0, 10.0, g.mu)).epsilon(1e-3));
    }
}

TEST_CASE("integer-order sliding response matches the damped oscillator") {
    const double Kp = 5.0, Kd = 1.5, Ki = 2.5, h = 1e-3;
    const auto e = outer_sliding_response(Kp, Kd, Ki, 1.0, 1.0, h, 3.0);
    // Kd e'' + Kp e' + Ki e = 0, e(0) = 1, e'(0) = -Kp / Kd
    const double disc = std::sqrt(Kp * Kp - 4 * Kd * Ki);
    const double r1 = (-Kp + disc) / (2 * Kd), r2 = (-Kp - disc) / (2 * Kd);
    const double c2 = (-Kp / Kd - r1) / (r2 - r1), c1 = 1.0 - c2;
    for (double t : {0.1, 0.5, 1.0, 2.0, 3.0}) {
        const auto k = static_cast<std::size_t>(std::llround(t / h));
        const double exact = c1 * std::exp(r1 * t) + c2 * std::exp(r2 * t);
        CHECK(std::abs(e[k] - exact) < 5e-3);
    }
}

TEST_CASE("lower fractional order settles sooner") {
    double prev = 0.0;
    for (double a : {0.25, 0.6, 0.9, 1.0}) {
        const auto e = outer_sliding_response(5.0, 1.5, 2.5, a, 1.0, 1e-3, 10.0);
        const double ts = settling_time(e, 1e-3);
        CHECK(ts > prev);
        CHECK(ts < 10.0);
        prev = ts;
    }
}

TEST_CASE("settling time") {
    CHECK(settling_time({1.0, 0.5, 0.01, 0.0}, 0.1) == Approx(0.2));
    CHECK(settling_time({1.0, 0.0, 0.0}, 0.1) == Approx(0.1));
    CHECK(settling_time({1.0, 0.5, 0.5}, 0.1) == Approx(0.2));
}

TEST_CASE("deficient actuation is rejected") {
    class Unactuated final : public RobotModel {
    public:
        Unactuated() { B_ = Mat::Zero(2, 1); }
        std::string name() const override { return "u"; }
        int n() const override { return 2; }
        Mat mass_matrix(const Vec&) const override { return Mat::Identity(2, 2); }
        std::vector<Mat> mass_partials(const Vec&) const override { return {Mat::Zero(2, 2), Mat::Zero(2, 2)}; }
        double potential(const Vec&) const override { return 0.0; }
        Vec gravity(const Vec&) const override { return Vec::Zero(2); }
        GuardValue guard(const PHState&) const override { return {}; }
        Mat delta_n() const override { return Mat::Identity(2, 2); }
        Mat velocity_map(const Vec&) const override { return Mat::Identity(2, 2); }
    } model;
    CHECK_THROWS_AS(Controller(model, ControllerConfig::defaults(2)), ActuationError);
}

namespace {

ScenarioConfig offset_run(double horizon) {
    auto c = default_scenario("two_link");
    c.estimator.kind = EstimatorKind::None;
    c.disturbance.channels.clear();
    c.disturbance.uncertainty.enabled = false;
    c.integrator.horizon = horizon;
    c.initial_offset = vec2(3.0, -3.0) * (3.14159265358979323846 / 180.0);
    c.svg = false;
    return c;
}

bool straddles_impact(const HybridTrace& tr, std::size_t k) {
    for (double tk : tr.impacts)
        if (tk >= tr.rows[k].t - 1e-12 && tk <= tr.rows[k + 1].t + 1e-12) return true;
    return false;
}

// Least-squares fit of ds/dt = -a s - b spow(s, mu) for channel i.
std::pair<double, double> fit_reaching(const HybridTrace& tr, int i, double mu, double t_end) {
    double s11 = 0, s12 = 0, s22 = 0, r1 = 0, r2 = 0;
    for (std::size_t k = 0; k + 1 < tr.rows.size() && tr.rows[k + 1].t <= t_end; ++k) {
        const double s = tr.rows[k].s[i];
        const double ds = (tr.rows[k + 1].s[i] - s) / (tr.rows[k + 1].t - tr.rows[k].t);
        const double x1 = -s, x2 = -spow(s, mu);
        s11 += x1 * x1;
        s12 += x1 * x2;
        s22 += x2 * x2;
        r1 += x1 * ds;
        r2 += x2 * ds;
    }
    const double det = s11 * s22 - s12 * s12;
    return {(r1 * s22 - r2 * s12) / det, (s11 * r2 - s12 * r1) / det};
}

}  // namespace

TEST_CASE("closed loop follows the reaching law") {
    const auto c = offset_run(1.5);
    const auto r = run_scenario(c);
    REQUIRE(r.trace.ok());
    const double h = c.integrator.step;
    double worst = 0.0;
    for (std::size_t k = 0; k + 1 < r.trace.rows.size(); ++k) {
        if (straddles_impact(r.trace, k)) continue;
        const Vec& s = r.trace.rows[k].s;
        const Vec law = -15.0 * s - 10.0 * spow(s, 0.75);
        worst = std::max(worst, (r.trace.rows[k + 1].s - s - h * law).cwiseAbs().maxCoeff());
    }
    CHECK(worst < 1e-3);
}

TEST_CASE("doubling Ks3 doubles the fitted linear reaching rate") {
    auto c = offset_run(0.3);
    const auto base = fit_reaching(run_scenario(c).trace, 0, 0.75, 0.3);
    c.controller.Ks3 *= 2.0;
    const auto twice = fit_reaching(run_scenario(c).trace, 0, 0.75, 0.3);
    CHECK(base.first == Approx(15.0).epsilon(0.1));
    CHECK(twice.first / base.first == Approx(2.0).epsilon(0.05));
}

TEST_CASE("implicit shaping removes the sampled-data cycle") {
    auto c = offset_run(2.0);
    // median second difference of tau: large only under a persistent period-2 cycle
    auto alternation = [](const HybridTrace& tr) {
        std::vector<double> d2;
        for (std::size_t k = 1; k + 1 < tr.rows.size(); ++k) {
            if (tr.rows[k].t < 0.2) continue;
            d2.push_back((tr.rows[k + 1].tau - 2.0 * tr.rows[k].tau + tr.rows[k - 1].tau).cwiseAbs().maxCoeff());
        }
        std::nth_element(d2.begin(), d2.begin() + static_cast<long>(d2.size() / 2), d2.end());
        return d2[d2.size() / 2];
    };
    const double implicit = alternation(run_scenario(c).trace);
    c.controller.shaping = Shaping::Explicit;
    const double expl = alternation(run_scenario(c).trace);
    CHECK(implicit < 0.1);
    CHECK(expl > 5.0);
}

TEST_CASE("negated state and reference negate the control") {
    const TwoLinkWalker model;
    Controller a(model, ControllerConfig::defaults(2)), b(model, ControllerConfig::defaults(2));
    for (int k = 0; k < 50; ++k) {
        const double t = k * 1e-3;
        const PHState x{vec2(0.1 + 0.2 * t, -0.3 + t), vec2(1.0 - t, 0.4 * t), t};
        const PHState xn{-x.q, -x.p, t};
        const Reference now{vec2(0.12 + 0.15 * t, -0.31 + 0.9 * t), vec2(0.15, 0.9)};
        const Reference next{now.q + 1e-3 * now.qdot, now.qdot};
        const auto oa = a.equivalent_control(x, now, next, Vec::Zero(2));
        const auto ob = b.equivalent_control(xn, {-now.q, -now.qdot}, {-next.q, -next.qdot}, Vec::Zero(2));
        CHECK((oa.v + ob.v).norm() <= 1e-12 * (1.0 + oa.v.norm()));
        CHECK((oa.s + ob.s).norm() <= 1e-12 * (1.0 + oa.s.norm()));
        CHECK((oa.tau_eq + ob.tau_eq).norm() <= 1e-10 * (1.0 + oa.tau_eq.norm()));
    }
}

namespace {

class TrueDisturbance final : public Estimator {
public:
    TrueDisturbance(Disturbance d) : d_(std::move(d)) {}
    EstimatorKind kind() const override { return EstimatorKind::Fractional; }
    Vec estimate(const EstimatorInput& in) override { return d_(in.x->t, *in.x); }
    void reset(const PHState&) override {}

private:
    Disturbance d_;
};

}  // namespace

TEST_CASE("exact disturbance estimate recovers the undisturbed run") {
    auto quiet = offset_run(3.0);
    quiet.initial_offset = Vec();
    auto noisy = default_scenario("two_link");
    noisy.integrator.horizon = 3.0;

    auto run = [](const ScenarioConfig& c, bool oracle) {
        const auto model = make_model(c);
        Controller ctrl(*model, make_controller_config(c));
        const Disturbance dist = make_disturbance(c, *model);
        auto est = oracle ? std::unique_ptr<Estimator>(new TrueDisturbance(dist)) : make_estimator(c);
        return simulate(*model, ctrl, *est, dist, make_reference(c), c.gait, initial_state(c, *model),
                        c.integrator);
    };
    const auto a = run(quiet, false);
    const auto b = run(noisy, true);
    REQUIRE(a.rows.size() == b.rows.size());
    double scale = 0.0, diff = 0.0;
    for (std::size_t k = 0; k < a.rows.size(); ++k) {
        scale = std::max(scale, a.rows[k].q.cwiseAbs().maxCoeff());
        diff = std::max(diff, (a.rows[k].q - b.rows[k].q).cwiseAbs().maxCoeff());
    }
    CHECK(diff <= 0.02 * scale);
}
