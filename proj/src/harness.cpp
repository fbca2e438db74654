#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "fph/errors.hpp"
#include "fph/harness.hpp"

namespace fph {

using nlohmann::json;

// ------------------------------------------------------------ building blocks

std::unique_ptr<RobotModel> make_model(const ScenarioConfig& c) {
    if (c.robot == "rabbit") return make_rabbit(c.rabbit, c.rabbit_actuation);
    return make_two_link(c.two_link);
}

ControllerConfig make_controller_config(const ScenarioConfig& c) {
    const auto& k = c.controller;
    ControllerConfig cc;
    cc.outer = {k.Kp.asDiagonal(), k.Kd.asDiagonal(), k.Ki.asDiagonal(), k.alpha};
    cc.surface = {k.sigma, k.zeta, k.Ks1.asDiagonal(), k.Ks2.asDiagonal()};
    cc.inner = {k.Ks3.asDiagonal(), k.Ks4.asDiagonal(), k.mu, k.beta, Mat::Identity(c.n(), c.n())};
    cc.eps = k.eps;
    cc.step = c.integrator.step;
    cc.window = k.window;
    cc.form = k.form;
    cc.shaping = k.shaping;
    return cc;
}

std::unique_ptr<Estimator> make_estimator(const ScenarioConfig& c) {
    const int n = c.n();
    const auto& e = c.estimator;
    switch (e.kind) {
        case EstimatorKind::None:
            return std::make_unique<NullEstimator>(n);
        case EstimatorKind::Fractional: {
            FracEstimatorConfig fc;
            fc.rho = e.rho;
            fc.sigma = c.controller.sigma;
            fc.mu = c.controller.mu;
            fc.Ks3 = c.controller.Ks3.asDiagonal();
            fc.Ks4 = c.controller.Ks4.asDiagonal();
            fc.step = c.integrator.step;
            fc.window = c.controller.window;
            return std::make_unique<FracEstimator>(n, fc);
        }
        case EstimatorKind::Adaptive: {
            AdaptiveEstimatorConfig ac;
            ac.Ke1 = e.Ke1.asDiagonal();
            ac.Ke2 = e.Ke2.asDiagonal();
            ac.eps = c.controller.eps;
            ac.step = c.integrator.step;
            return std::make_unique<AdaptiveEstimator>(n, ac);
        }
    }
    return std::make_unique<NullEstimator>(n);
}

ReferenceFn make_reference(const ScenarioConfig& c) {
    const GaitConfig g = c.gait;
    if (c.robot == "rabbit") {
        const double L = c.rabbit.L;
        return [g, L](double ph) { return rabbit_reference(ph, g, L); };
    }
    return [g](double ph) { return two_link_reference(ph, g); };
}

double uncertainty_sign(const UncertaintySpec& u, std::uint64_t seed) {
    switch (u.sign) {
        case SignMode::Plus: return 1.0;
        case SignMode::Minus: return -1.0;
        case SignMode::Random: {
            std::mt19937_64 rng(seed);
            return (rng() & 1U) ? 1.0 : -1.0;
        }
    }
    return 1.0;
}

Vec disturbance(const DisturbanceSpec& spec, double t, int n, const Vec& grad_q_H, double sign) {
    Vec d = Vec::Zero(n);
    for (const auto& ch : spec.channels) {
        if (t < ch.t_start || t > ch.t_end) continue;
        const double w = ch.waveform == Waveform::Sin ? std::sin(ch.omega * t) : std::cos(ch.omega * t);
        d[ch.channel - 1] += spec.scale * ch.amplitude * w;
    }
    if (spec.uncertainty.enabled) d += sign * spec.uncertainty.fraction * grad_q_H;
    return d;
}

Disturbance make_disturbance(const ScenarioConfig& c, const RobotModel& model) {
    const DisturbanceSpec spec = c.disturbance;
    const double sign = uncertainty_sign(spec.uncertainty, c.seed);
    const int n = model.n();
    return [spec, sign, n, &model](double t, const PHState& x) {
        const Vec g = spec.uncertainty.enabled ? model.grad_q_hamiltonian(x) : Vec::Zero(n);
        return disturbance(spec, t, n, g, sign);
    };
}

// ------------------------------------------------------------ metrics

double rmse_of(const std::vector<double>& e) {
    if (e.empty()) throw Error("rmse: empty window");
    double acc = 0.0;
    for (double x : e) acc += x * x;
    return std::sqrt(acc / static_cast<double>(e.size()));
}

std::vector<double> rmse(const HybridTrace& tr, double t0, double t1) {
    std::vector<double> out;
    for (int i = 0; i < tr.n; ++i) {
        std::vector<double> e;
        for (const auto& r : tr.rows)
            if (r.t >= t0 - 1e-12 && r.t <= t1 + 1e-12) e.push_back(r.e_x[i]);
        out.push_back(rmse_of(e));
    }
    return out;
}

namespace {

// Fit -V'/V = a + b V^(c-1) with a, b >= 0 for fixed c; relative form so
// that every decade of V weighs the same.
struct Fit {
    double a, b, res;
};

Fit fit_decay(const std::vector<double>& V, const std::vector<double>& dV, double c) {
    std::vector<double> y(V.size()), x(V.size());
    for (std::size_t i = 0; i < V.size(); ++i) {
        y[i] = -dV[i] / V[i];
        x[i] = std::pow(V[i], c - 1.0);
    }
    auto residual = [&](double a, double b) {
        double r = 0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double e = y[i] - a - b * x[i];
            r += e * e;
        }
        return r;
    };
    const double N = static_cast<double>(y.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double det = N * sxx - sx * sx;
    if (det > 0) {
        const double a = (sy * sxx - sx * sxy) / det;
        const double b = (N * sxy - sx * sy) / det;
        if (a >= 0 && b >= 0) return {a, b, residual(a, b)};
    }
    Fit best{0, 0, residual(0, 0)};
    if (N > 0) {
        const double a = std::max(0.0, sy / N);
        const double r = residual(a, 0);
        if (r < best.res) best = {a, 0, r};
    }
    if (sxx > 0) {
        const double b = std::max(0.0, sxy / sxx);
        const double r = residual(0, b);
        if (r < best.res) best = {0, b, r};
    }
    return best;
}

}  // namespace

JumpReport impact_jump_monitor(const HybridTrace& tr) {
    JumpReport rep;
    const auto& R = tr.rows;
    if (tr.impacts.empty() || R.size() < 3) return rep;

    for (double tk : tr.impacts) {
        const TraceRow* before = nullptr;
        const TraceRow* after = nullptr;
        for (const auto& r : R) {
            if (r.t < tk) before = &r;
            if (r.t > tk) {
                after = &r;
                break;
            }
        }
        if (!before || !after || before->V_s < 1e-12) continue;
        rep.ratios.push_back(after->V_s / before->V_s);
    }
    rep.applicable = !rep.ratios.empty();
    if (!rep.applicable) return rep;
    rep.max_ratio = *std::max_element(rep.ratios.begin(), rep.ratios.end());

    rep.t_N = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < tr.impacts.size(); ++k)
        rep.t_N = std::min(rep.t_N, tr.impacts[k] - tr.impacts[k - 1]);
    if (!std::isfinite(rep.t_N)) rep.t_N = tr.impacts.front() - R.front().t;

    // decaying inter-impact samples, skipping two rows either side of each impact
    std::vector<double> V, dV;
    auto near_impact = [&](double t) {
        for (double tk : tr.impacts)
            if (std::abs(t - tk) < 3.0 * (R[1].t - R[0].t)) return true;
        return false;
    };
    for (std::size_t i = 1; i + 1 < R.size(); ++i) {
        if (near_impact(R[i].t) || R[i].V_s < 1e-14) continue;
        const double d = (R[i + 1].V_s - R[i - 1].V_s) / (R[i + 1].t - R[i - 1].t);
        if (d >= 0.0) continue;
        V.push_back(R[i].V_s);
        dV.push_back(d);
    }
    Fit best{0, 0, std::numeric_limits<double>::infinity()};
    double best_c = 0.5;
    for (int k = 1; k < 20; ++k) {
        const double c = 0.05 * k;
        const Fit f = fit_decay(V, dV, c);
        if (f.res < best.res) {
            best = f;
            best_c = c;
        }
    }
    rep.a = best.a;
    rep.b = best.b;
    rep.c = best_c;
    rep.dwell = rep.max_ratio * std::exp(-rep.a * (1.0 - rep.c) * rep.t_N) - 1.0;
    rep.dwell_ok = std::isfinite(rep.max_ratio) && rep.dwell < 0.0;
    return rep;
}

Definition1Record definition1_record(const HybridTrace& tr) {
    Definition1Record d;
    if (tr.rows.empty()) return d;
    d.b1 = tr.rows.front().H;
    d.sup_H = d.b1;
    for (const auto& r : tr.rows) d.sup_H = std::max(d.sup_H, r.H);
    return d;
}

Metrics compute_metrics(const HybridTrace& tr, const ScenarioConfig& c) {
    Metrics m;
    if (tr.rows.empty()) return m;
    const double t_end = tr.rows.back().t;
    if (c.rmse_start < t_end) m.rmse = rmse(tr, c.rmse_start, std::min(c.rmse_end, t_end));

    auto post_impact = [&](double t) {
        for (double tk : tr.impacts)
            if (t >= tk && t < tk + 0.05) return true;
        return false;
    };
    m.settling.assign(static_cast<std::size_t>(tr.n), 0.0);
    for (const auto& r : tr.rows) {
        if (post_impact(r.t)) continue;
        for (int i = 0; i < tr.n; ++i)
            if (std::abs(r.e_x[i]) > 0.01) m.settling[static_cast<std::size_t>(i)] = r.t;
    }

    // reaching: first time after which |s| < 1e-3 until the first impact
    const double t_stop = tr.impacts.empty() ? t_end : tr.impacts.front();
    m.V_s0 = tr.rows.front().V_s;
    m.reaching_bound = reaching_time_bound(m.V_s0, make_controller_config(c).inner);
    double last_above = -1.0;
    bool any = false;
    for (const auto& r : tr.rows) {
        if (r.t >= t_stop) break;
        any = true;
        if (r.s.norm() >= 1e-3) last_above = r.t;
    }
    if (any) m.reaching_time = last_above < 0 ? 0.0 : last_above + c.integrator.step;
    if (m.reaching_time >= t_stop) m.reaching_time = -1.0;

    m.jumps = impact_jump_monitor(tr);
    m.def1 = definition1_record(tr);
    return m;
}

Theorem1Record theorem1_bench(const Mat& Sigma, const Mat& Y, double beta, const Vec& x0,
                              double horizon, double step, double tol) {
    Theorem1Record rec;
    auto H = [&](const Vec& x) { return std::pow(x.dot(Y * x), beta); };
    auto f = [&](double, const Vec& x) -> Vec {
        const double r = x.dot(Y * x);
        if (r <= 0.0) return Vec::Zero(x.size());
        return -Sigma * (2.0 * beta * std::pow(r, beta - 1.0) * (Y * x));
    };
    Vec x = x0;
    const auto steps = static_cast<long>(std::llround(horizon / step));
    for (long k = 0; k <= steps; ++k) {
        const double t = static_cast<double>(k) * step;
        rec.t.push_back(t);
        rec.H.push_back(H(x));
        if (x.norm() < tol) {
            rec.converged = true;
            rec.t_converged = t;
            break;
        }
        if (k == steps) break;
        x = step_rk4(f, t, x, step);
    }
    rec.final_norm = x.norm();
    return rec;
}

// ------------------------------------------------------------ runs

PHState initial_state(const ScenarioConfig& c, const RobotModel& model) {
    const Reference r0 = make_reference(c)(0.0);
    PHState x;
    x.t = 0.0;
    x.q = r0.q;
    if (c.initial_offset.size() == model.n()) x.q += c.initial_offset;
    x.p = model.mass_matrix(x.q) * r0.qdot;
    return x;
}

RunResult run_scenario(const ScenarioConfig& c) {
    const auto model = make_model(c);
    Controller ctrl(*model, make_controller_config(c));
    const auto est = make_estimator(c);
    RunResult r;
    r.uncertainty_sign = uncertainty_sign(c.disturbance.uncertainty, c.seed);
    IntegratorConfig ic = c.integrator;
    ic.capture_errors = true;
    r.trace = simulate(*model, ctrl, *est, make_disturbance(c, *model), make_reference(c), c.gait,
                       initial_state(c, *model), ic);
    r.metrics = compute_metrics(r.trace, c);
    return r;
}

std::vector<SweepJob> expand_sweep(const json& base, const std::string& vary) {
    const auto eq = vary.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--vary expects key=v1,v2,...");
    const std::string key = vary.substr(0, eq);
    std::string pointer;
    for (char ch : key) pointer += ch == '.' ? '/' : ch;
    pointer = "/" + pointer;

    std::vector<SweepJob> jobs;
    const std::string list = vary.substr(eq + 1);
    std::size_t pos = 0;
    const std::string base_out = base.contains("output") && base["output"].contains("dir")
                                     ? base["output"]["dir"].get<std::string>()
                                     : std::string("out");
    while (pos <= list.size()) {
        const auto comma = list.find(',', pos);
        const std::string tok = list.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        if (tok.empty()) throw ConfigError("--vary: empty value");
        json value;
        try {
            value = json::parse(tok);
        } catch (const json::parse_error&) {
            value = tok;
        }
        json j = base;
        j[json::json_pointer(pointer)] = value;
        SweepJob job;
        job.label = key + "=" + tok;
        job.config = parse_scenario(j);
        job.config.out_dir = (std::filesystem::path(base_out) / job.label).string();
        job.config.name = job.label;
        jobs.push_back(std::move(job));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return jobs;
}

std::vector<RunResult> run_sweep(const std::vector<SweepJob>& jobs, bool write) {
    std::vector<RunResult> out(jobs.size());
    const long n = static_cast<long>(jobs.size());
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < n; ++i) {
        const auto& job = jobs[static_cast<std::size_t>(i)];
        out[static_cast<std::size_t>(i)] = run_scenario(job.config);
        if (write) write_outputs(out[static_cast<std::size_t>(i)], job.config, job.config.out_dir);
    }
    return out;
}

}  // namespace fph
