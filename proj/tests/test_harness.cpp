#include <cmath>
#include <sstream>

#include <doctest.h>

#include "fph/errors.hpp"
#include "fph/harness.hpp"

using namespace fph;
using doctest::Approx;
using nlohmann::json;

namespace {

HybridTrace constant_trace(double value, int rows, double step) {
    HybridTrace tr;
    tr.n = 1;
    tr.m = 1;
    for (int k = 0; k < rows; ++k) {
        TraceRow r;
        r.t = k * step;
        r.e_x = Vec::Constant(1, value);
        r.s = Vec::Constant(1, 0.1);
        r.V_s = 0.5;
        tr.rows.push_back(r);
    }
    return tr;
}

json short_run(double horizon) {
    return json{{"robot", "two_link"},
                {"horizon", horizon},
                {"disturbance", {{"channels", json::array()}}},
                {"output", {{"dir", "unused"}, {"svg", false}}}};
}

}  // namespace

TEST_CASE("two-link disturbance profile") {
    const auto c = default_scenario("two_link");
    const Vec g = Vec::Zero(2);
    const Vec d3 = disturbance(c.disturbance, 3.0, 2, g);
    CHECK(d3[0] == Approx(25.0 * std::cos(6.0)));
    CHECK(d3[1] == 0.0);

    auto scaled = c.disturbance;
    scaled.scale = 1.5;
    CHECK(disturbance(scaled, 3.0, 2, g)[0] == Approx(37.5 * std::cos(6.0)));

    Vec grad(2);
    grad << 4.0, -2.0;
    const Vec d1 = disturbance(c.disturbance, 1.0, 2, grad);
    CHECK(d1[0] == Approx(0.4));
    CHECK(d1[1] == Approx(-0.2));
    CHECK(disturbance(c.disturbance, 1.0, 2, grad, -1.0)[0] == Approx(-0.4));

    const Vec d6 = disturbance(c.disturbance, 6.0, 2, g);
    CHECK(d6[0] == 0.0);
    CHECK(d6[1] == Approx(25.0 * std::sin(15.0)));
}

TEST_CASE("uncertainty sign modes") {
    UncertaintySpec u;
    u.sign = SignMode::Plus;
    CHECK(uncertainty_sign(u, 7) == 1.0);
    u.sign = SignMode::Minus;
    CHECK(uncertainty_sign(u, 7) == -1.0);
    u.sign = SignMode::Random;
    const double s = uncertainty_sign(u, 7);
    CHECK(std::abs(s) == 1.0);
    CHECK(uncertainty_sign(u, 7) == s);
}

TEST_CASE("rmse") {
    CHECK(rmse_of({0.0, 0.0}) == 0.0);
    CHECK(rmse_of({-0.3, -0.3, -0.3}) == Approx(0.3));
    CHECK_THROWS_AS(rmse_of({}), Error);

    HybridTrace tr;
    tr.n = 1;
    const int N = 100000;
    for (int k = 0; k <= N; ++k) {
        TraceRow r;
        r.t = 2.0 * 3.14159265358979323846 * k / N;
        r.e_x = Vec::Constant(1, std::sin(r.t));
        tr.rows.push_back(r);
    }
    CHECK(rmse(tr, 0.0, 7.0)[0] == Approx(std::sqrt(0.5)).epsilon(1e-4));
    CHECK_THROWS_AS(rmse(tr, 8.0, 9.0), Error);
}

TEST_CASE("impact jump monitor") {
    auto tr = constant_trace(0.0, 100, 1e-3);
    CHECK_FALSE(impact_jump_monitor(tr).applicable);

    tr.impacts = {0.0305, 0.0605};
    const auto rep = impact_jump_monitor(tr);
    REQUIRE(rep.applicable);
    CHECK(rep.ratios.size() == 2);
    CHECK(rep.max_ratio == Approx(1.0));
    CHECK(rep.t_N == Approx(0.03));
}

TEST_CASE("strict scenario parsing") {
    CHECK_NOTHROW(parse_scenario(short_run(1.0)));
    auto j = short_run(1.0);
    j["colour"] = "blue";
    CHECK_THROWS_AS(parse_scenario(j), ConfigError);
    j = short_run(1.0);
    j["controller"] = {{"alhpa", 0.5}};
    CHECK_THROWS_AS(parse_scenario(j), ConfigError);
    j = short_run(1.0);
    j["robot"] = "hexapod";
    CHECK_THROWS_AS(parse_scenario(j), ConfigError);
    j = short_run(1.0);
    j["estimator"] = {{"kind", "kalman"}};
    CHECK_THROWS_AS(parse_scenario(j), ConfigError);
}

TEST_CASE("scenario serialization round-trips") {
    auto j = short_run(2.0);
    j["estimator"] = {{"kind", "adaptive"}};
    j["disturbance"]["scale"] = 1.5;
    const auto a = parse_scenario(j);
    const auto b = parse_scenario(scenario_to_json(a));
    CHECK(scenario_to_json(a) == scenario_to_json(b));
    CHECK(b.estimator.kind == EstimatorKind::Adaptive);
    CHECK(b.disturbance.scale == 1.5);
    CHECK(b.integrator.horizon == 2.0);
}

TEST_CASE("CSV layout") {
    const auto h = csv_header(2, 2);
    REQUIRE(h.size() == 1 + 9 * 2 + 2 + 3 * 2 + 2);
    CHECK(h.front() == "t");
    CHECK(h[1] == "q_1");
    CHECK(h[2] == "q_2");
    CHECK(h[3] == "q_d_1");
    CHECK(h[h.size() - 2] == "H");
    CHECK(h.back() == "V_s");

    for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 12345.678901234567, 0.0})
        CHECK(std::stod(format_double(v)) == v);
}

TEST_CASE("runs are deterministic and metrics come from the trace") {
    const auto c = parse_scenario(short_run(1.5));
    const auto r1 = run_scenario(c);
    const auto r2 = run_scenario(c);
    std::ostringstream a, b;
    write_trace_csv(r1.trace, a);
    write_trace_csv(r2.trace, b);
    CHECK(a.str() == b.str());

    std::istringstream in(a.str());
    std::string line;
    std::getline(in, line);
    HybridTrace back;
    back.n = 2;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string cell;
        std::vector<double> v;
        while (std::getline(ls, cell, ',')) v.push_back(std::stod(cell));
        TraceRow r;
        r.t = v[0];
        r.e_x = Vec(2);
        r.e_x << v[11], v[12];  // t, q, q_d, qdot, qdot_d, p, e_x
        back.rows.push_back(r);
    }
    const auto from_csv = rmse(back, c.rmse_start, c.rmse_end);
    for (int i = 0; i < 2; ++i) CHECK(from_csv[i] == r1.metrics.rmse[static_cast<std::size_t>(i)]);
}

TEST_CASE("sweep expansion") {
    const auto jobs = expand_sweep(short_run(1.0), "disturbance.scale=0.5,1,1.5");
    REQUIRE(jobs.size() == 3);
    CHECK(jobs[2].config.disturbance.scale == 1.5);
    CHECK(jobs[0].label == "disturbance.scale=0.5");
    CHECK(jobs[1].config.out_dir != jobs[2].config.out_dir);

    const auto kinds = expand_sweep(short_run(1.0), "estimator.kind=none,adaptive");
    CHECK(kinds[1].config.estimator.kind == EstimatorKind::Adaptive);

    CHECK_THROWS_AS(expand_sweep(short_run(1.0), "disturbance.scale"), ConfigError);
    CHECK_THROWS_AS(expand_sweep(short_run(1.0), "disturbance.scale=1,,2"), ConfigError);
}

TEST_CASE("theorem bench") {
    const Mat I = Mat::Identity(2, 2);
    Vec x0(2);
    x0 << 0.5, -0.3;
    // grad H ~ |x|^(2 beta - 1): sublinear below beta = 1, so the flow stops in finite time
    const auto fast = theorem1_bench(I, I, 0.75, x0, 5.0);
    CHECK(fast.converged);
    CHECK(fast.t_converged > 0.0);
    CHECK(fast.final_norm < 1e-8);
    const auto slow = theorem1_bench(I, I, 1.5, x0, 5.0);
    CHECK_FALSE(slow.converged);
    for (const auto* r : {&fast, &slow})
        for (std::size_t k = 1; k < r->H.size(); ++k) CHECK(r->H[k] <= r->H[k - 1]);
}

TEST_CASE("svg output is well formed") {
    const std::string svg = svg_line_chart("title", "t", {{"a", {0.0, 1.0}, {1.0, 2.0}}});
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find("polyline") != std::string::npos);
}
