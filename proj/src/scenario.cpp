#include <cmath>
#include <fstream>
#include <set>

#include "fph/errors.hpp"
#include "fph/harness.hpp"

namespace fph {

using nlohmann::json;

namespace {

constexpr double kDeg = 3.14159265358979323846 / 180.0;

void allow(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    const std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [k, _] : j.items())
        if (!ok.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
}

template <class T>
void get(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
}

// scalar -> constant diagonal, array -> explicit diagonal
void get_diag(const json& j, const char* key, Vec& out, int n) {
    if (!j.contains(key)) return;
    const json& v = j.at(key);
    if (v.is_number()) {
        out = Vec::Constant(n, v.get<double>());
    } else if (v.is_array()) {
        if (static_cast<int>(v.size()) != n)
            throw ConfigError(std::string("'") + key + "' needs " + std::to_string(n) + " entries");
        out.resize(n);
        for (int i = 0; i < n; ++i) out[i] = v[static_cast<std::size_t>(i)].get<double>();
    } else {
        throw ConfigError(std::string("'") + key + "' must be a number or an array");
    }
}

json diag_json(const Vec& v) {
    if (v.size() > 0 && (v.array() == v[0]).all()) return v[0];
    json a = json::array();
    for (double x : v) a.push_back(x);
    return a;
}

Waveform parse_waveform(const std::string& s) {
    if (s == "sin") return Waveform::Sin;
    if (s == "cos") return Waveform::Cos;
    throw ConfigError("waveform must be sin or cos");
}

SignMode parse_sign(const std::string& s) {
    if (s == "+" || s == "plus") return SignMode::Plus;
    if (s == "-" || s == "minus") return SignMode::Minus;
    if (s == "random") return SignMode::Random;
    throw ConfigError("uncertainty sign must be +, - or random");
}

std::string sign_name(SignMode s) {
    switch (s) {
        case SignMode::Plus: return "+";
        case SignMode::Minus: return "-";
        case SignMode::Random: return "random";
    }
    return "+";
}

}  // namespace

ScenarioConfig default_scenario(const std::string& robot) {
    if (robot != "two_link" && robot != "rabbit") throw ConfigError("robot must be two_link or rabbit");
    ScenarioConfig c;
    c.robot = robot;
    c.name = robot;
    const int n = c.n();
    auto& k = c.controller;
    k.Kp = Vec::Constant(n, 40.0);
    k.Kd = Vec::Constant(n, 5.0);
    k.Ki = Vec::Constant(n, 15.0);
    k.Ks1 = Vec::Constant(n, 25.0);
    k.Ks2 = Vec::Constant(n, 5.0);
    k.Ks3 = Vec::Constant(n, 15.0);
    k.Ks4 = Vec::Constant(n, 10.0);
    c.estimator.Ke1 = Vec::Constant(n, 12.5);
    c.estimator.Ke2 = Vec::Constant(n, 7.5);
    c.integrator.horizon = 10.0;
    if (robot == "two_link") {
        c.gait.swing_duration = 1.0;
        c.disturbance.channels = {{1, 25.0, 2.0, Waveform::Cos, 2.0, 4.0},
                                  {2, 25.0, 2.5, Waveform::Sin, 5.0, 7.0}};
    } else {
        c.gait.swing_duration = 2.0;
        c.disturbance.channels = {{1, 30.0, 1.5, Waveform::Cos, 2.0, 5.0},
                                  {4, 25.0, 1.5, Waveform::Sin, 6.0, 9.0}};
    }
    return c;
}

ScenarioConfig parse_scenario(const json& j) {
    allow(j, "scenario", {"name", "robot", "rabbit_actuation", "model", "controller", "estimator",
                          "disturbance", "gait", "integrator", "horizon", "initial_offset",
                          "initial_offset_deg", "rmse_window", "seed", "output"});
    std::string robot = "two_link";
    get(j, "robot", robot);
    ScenarioConfig c = default_scenario(robot);
    const int n = c.n();
    get(j, "name", c.name);

    if (j.contains("rabbit_actuation")) {
        const auto s = j.at("rabbit_actuation").get<std::string>();
        if (s == "underactuated")
            c.rabbit_actuation = RabbitBiped::Actuation::Underactuated;
        else if (s == "full")
            c.rabbit_actuation = RabbitBiped::Actuation::Full;
        else
            throw ConfigError("rabbit_actuation must be underactuated or full");
    }

    if (j.contains("model")) {
        const json& m = j.at("model");
        if (robot == "two_link") {
            allow(m, "model", {"a", "b", "m1", "m2", "mH", "g", "slope_deg"});
            auto& p = c.two_link;
            get(m, "a", p.a);
            get(m, "b", p.b);
            get(m, "m1", p.m1);
            get(m, "m2", p.m2);
            get(m, "mH", p.mH);
            get(m, "g", p.g);
            if (m.contains("slope_deg")) p.slope = m.at("slope_deg").get<double>() * kDeg;
            if (!(p.a > 0 && p.b > 0 && p.m1 > 0 && p.m2 > 0 && p.mH > 0))
                throw ConfigError("two-link lengths and masses must be positive");
        } else {
            allow(m, "model", {"L_T", "L", "m_T", "m_t", "m_s", "I_T", "I_t", "I_s", "I_a", "g"});
            auto& p = c.rabbit;
            get(m, "L_T", p.L_T);
            get(m, "L", p.L);
            get(m, "m_T", p.m_T);
            get(m, "m_t", p.m_t);
            get(m, "m_s", p.m_s);
            get(m, "I_T", p.I_T);
            get(m, "I_t", p.I_t);
            get(m, "I_s", p.I_s);
            get(m, "I_a", p.I_a);
            get(m, "g", p.g);
            if (!(p.L_T > 0 && p.L > 0 && p.m_T > 0 && p.m_t > 0 && p.m_s > 0 && p.I_T > 0 &&
                  p.I_t > 0 && p.I_s > 0 && p.I_a > 0))
                throw ConfigError("rabbit parameters must be positive");
        }
    }

    if (j.contains("controller")) {
        const json& k = j.at("controller");
        allow(k, "controller", {"alpha", "Kp", "Kd", "Ki", "sigma", "zeta", "Ks1", "Ks2", "Ks3", "Ks4",
                                "mu", "beta", "eps", "window", "law", "shaping"});
        auto& g = c.controller;
        get(k, "alpha", g.alpha);
        get_diag(k, "Kp", g.Kp, n);
        get_diag(k, "Kd", g.Kd, n);
        get_diag(k, "Ki", g.Ki, n);
        get(k, "sigma", g.sigma);
        get(k, "zeta", g.zeta);
        get_diag(k, "Ks1", g.Ks1, n);
        get_diag(k, "Ks2", g.Ks2, n);
        get_diag(k, "Ks3", g.Ks3, n);
        get_diag(k, "Ks4", g.Ks4, n);
        get(k, "mu", g.mu);
        get(k, "beta", g.beta);
        get(k, "eps", g.eps);
        get(k, "window", g.window);
        if (k.contains("law")) {
            const auto s = k.at("law").get<std::string>();
            if (s == "outside")
                g.form = LawForm::Outside;
            else if (s == "inside")
                g.form = LawForm::Inside;
            else
                throw ConfigError("controller.law must be outside or inside");
        }
        if (k.contains("shaping")) {
            const auto s = k.at("shaping").get<std::string>();
            if (s == "explicit")
                g.shaping = Shaping::Explicit;
            else if (s == "implicit")
                g.shaping = Shaping::Implicit;
            else
                throw ConfigError("controller.shaping must be explicit or implicit");
        }
        if (!(g.alpha > 0.0 && g.alpha <= 1.0)) throw ConfigError("alpha must lie in (0, 1]");
        if (!(g.zeta > 0.0 && g.zeta < 1.0)) throw ConfigError("zeta must lie in (0, 1)");
        if (!(g.mu > 0.0 && g.mu < 1.0)) throw ConfigError("mu must lie in (0, 1)");
        if (!(g.sigma > 0.0)) throw ConfigError("sigma must be positive");
        if (g.window == 0) throw ConfigError("window must be >= 1");
    }

    if (j.contains("estimator")) {
        const json& e = j.at("estimator");
        allow(e, "estimator", {"kind", "rho", "Ke1", "Ke2", "kappa", "vartheta", "l_d"});
        auto& s = c.estimator;
        if (e.contains("kind")) s.kind = parse_estimator(e.at("kind").get<std::string>());
        get(e, "rho", s.rho);
        get_diag(e, "Ke1", s.Ke1, n);
        get_diag(e, "Ke2", s.Ke2, n);
        get(e, "kappa", s.kappa);
        get(e, "vartheta", s.vartheta);
        get(e, "l_d", s.l_d);
        if (!(s.rho > 0.0)) throw ConfigError("rho must be positive");
    }

    if (j.contains("disturbance")) {
        const json& d = j.at("disturbance");
        allow(d, "disturbance", {"scale", "channels", "uncertainty"});
        auto& s = c.disturbance;
        get(d, "scale", s.scale);
        if (d.contains("channels")) {
            s.channels.clear();
            for (const json& ch : d.at("channels")) {
                allow(ch, "disturbance.channels[]", {"channel", "amplitude", "omega", "waveform", "window"});
                ChannelSpec cs;
                get(ch, "channel", cs.channel);
                get(ch, "amplitude", cs.amplitude);
                get(ch, "omega", cs.omega);
                if (ch.contains("waveform")) cs.waveform = parse_waveform(ch.at("waveform").get<std::string>());
                if (ch.contains("window")) {
                    const auto w = ch.at("window").get<std::vector<double>>();
                    if (w.size() != 2 || w[0] > w[1]) throw ConfigError("channel window must be [start, end]");
                    cs.t_start = w[0];
                    cs.t_end = w[1];
                }
                if (cs.channel < 1 || cs.channel > n) throw ConfigError("disturbance channel out of range");
                if (!std::isfinite(cs.amplitude)) throw ConfigError("disturbance amplitude must be finite");
                s.channels.push_back(cs);
            }
        }
        if (d.contains("uncertainty")) {
            const json& u = d.at("uncertainty");
            allow(u, "disturbance.uncertainty", {"enabled", "fraction", "sign"});
            get(u, "enabled", s.uncertainty.enabled);
            get(u, "fraction", s.uncertainty.fraction);
            if (u.contains("sign")) s.uncertainty.sign = parse_sign(u.at("sign").get<std::string>());
        }
    }

    if (j.contains("gait")) {
        const json& g = j.at("gait");
        allow(g, "gait", {"swing_duration", "q_low_deg", "q_high_deg", "clearance", "overrun",
                          "hip_height", "step_length", "hip_start_x", "foot_lift", "foot_overrun",
                          "phase_reset"});
        auto& s = c.gait;
        get(g, "swing_duration", s.swing_duration);
        if (g.contains("q_low_deg")) s.q_low = g.at("q_low_deg").get<double>() * kDeg;
        if (g.contains("q_high_deg")) s.q_high = g.at("q_high_deg").get<double>() * kDeg;
        get(g, "clearance", s.clearance);
        get(g, "overrun", s.overrun);
        get(g, "hip_height", s.hip_height);
        get(g, "step_length", s.step_length);
        get(g, "hip_start_x", s.hip_start_x);
        get(g, "foot_lift", s.foot_lift);
        get(g, "foot_overrun", s.foot_overrun);
        get(g, "phase_reset", s.phase_reset);
        if (!(s.swing_duration > 0.0)) throw ConfigError("swing_duration must be positive");
        if (!(s.q_low < s.q_high)) throw ConfigError("gait angle limits must be ordered");
    }

    get(j, "horizon", c.integrator.horizon);
    if (j.contains("integrator")) {
        const json& i = j.at("integrator");
        allow(i, "integrator", {"step", "event_tolerance", "max_impacts", "chatter_steps"});
        get(i, "step", c.integrator.step);
        get(i, "event_tolerance", c.integrator.event_tolerance);
        get(i, "max_impacts", c.integrator.max_impacts);
        get(i, "chatter_steps", c.integrator.chatter_steps);
    }
    if (!(c.integrator.step > 0.0)) throw ConfigError("integrator step must be positive");
    if (!(c.integrator.event_tolerance < c.integrator.step))
        throw ConfigError("event tolerance must be smaller than the step");
    if (!(c.integrator.horizon > 0.0)) throw ConfigError("horizon must be positive");
    for (const auto& ch : c.disturbance.channels)
        if (ch.t_end > c.integrator.horizon + 1e-12 || ch.t_start < 0.0)
            throw ConfigError("disturbance window outside the horizon");

    if (j.contains("initial_offset") && j.contains("initial_offset_deg"))
        throw ConfigError("give initial_offset or initial_offset_deg, not both");
    if (j.contains("initial_offset")) get_diag(j, "initial_offset", c.initial_offset, n);
    if (j.contains("initial_offset_deg")) {
        get_diag(j, "initial_offset_deg", c.initial_offset, n);
        c.initial_offset *= kDeg;
    }
    if (j.contains("rmse_window")) {
        const auto w = j.at("rmse_window").get<std::vector<double>>();
        if (w.size() != 2 || !(w[0] < w[1])) throw ConfigError("rmse_window must be [start, end]");
        c.rmse_start = w[0];
        c.rmse_end = w[1];
    }
    get(j, "seed", c.seed);
    if (j.contains("output")) {
        const json& o = j.at("output");
        allow(o, "output", {"dir", "svg"});
        get(o, "dir", c.out_dir);
        get(o, "svg", c.svg);
    }
    return c;
}

ScenarioConfig load_scenario(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open scenario file " + file.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(file.string() + ": " + e.what());
    }
    return parse_scenario(j);
}

json scenario_to_json(const ScenarioConfig& c) {
    json j;
    j["name"] = c.name;
    j["robot"] = c.robot;
    if (c.robot == "rabbit") {
        j["rabbit_actuation"] =
            c.rabbit_actuation == RabbitBiped::Actuation::Full ? "full" : "underactuated";
        const auto& p = c.rabbit;
        j["model"] = {{"L_T", p.L_T}, {"L", p.L}, {"m_T", p.m_T}, {"m_t", p.m_t}, {"m_s", p.m_s},
                      {"I_T", p.I_T}, {"I_t", p.I_t}, {"I_s", p.I_s}, {"I_a", p.I_a}, {"g", p.g}};
    } else {
        const auto& p = c.two_link;
        j["model"] = {{"a", p.a}, {"b", p.b}, {"m1", p.m1}, {"m2", p.m2}, {"mH", p.mH},
                      {"g", p.g}, {"slope_deg", p.slope / kDeg}};
    }
    const auto& k = c.controller;
    j["controller"] = {{"alpha", k.alpha}, {"Kp", diag_json(k.Kp)}, {"Kd", diag_json(k.Kd)},
                       {"Ki", diag_json(k.Ki)}, {"sigma", k.sigma}, {"zeta", k.zeta},
                       {"Ks1", diag_json(k.Ks1)}, {"Ks2", diag_json(k.Ks2)}, {"Ks3", diag_json(k.Ks3)},
                       {"Ks4", diag_json(k.Ks4)}, {"mu", k.mu}, {"beta", k.beta}, {"eps", k.eps},
                       {"window", k.window},
                       {"law", k.form == LawForm::Outside ? "outside" : "inside"},
                       {"shaping", k.shaping == Shaping::Explicit ? "explicit" : "implicit"}};
    const auto& e = c.estimator;
    j["estimator"] = {{"kind", to_string(e.kind)}, {"rho", e.rho}, {"Ke1", diag_json(e.Ke1)},
                      {"Ke2", diag_json(e.Ke2)}, {"kappa", e.kappa}, {"vartheta", e.vartheta},
                      {"l_d", e.l_d}};
    json chans = json::array();
    for (const auto& ch : c.disturbance.channels)
        chans.push_back({{"channel", ch.channel}, {"amplitude", ch.amplitude}, {"omega", ch.omega},
                         {"waveform", ch.waveform == Waveform::Sin ? "sin" : "cos"},
                         {"window", {ch.t_start, ch.t_end}}});
    const auto& u = c.disturbance.uncertainty;
    j["disturbance"] = {{"scale", c.disturbance.scale}, {"channels", chans},
                        {"uncertainty", {{"enabled", u.enabled}, {"fraction", u.fraction},
                                         {"sign", sign_name(u.sign)}}}};
    const auto& g = c.gait;
    j["gait"] = {{"swing_duration", g.swing_duration}, {"q_low_deg", g.q_low / kDeg},
                 {"q_high_deg", g.q_high / kDeg}, {"clearance", g.clearance}, {"overrun", g.overrun},
                 {"hip_height", g.hip_height}, {"step_length", g.step_length},
                 {"hip_start_x", g.hip_start_x}, {"foot_lift", g.foot_lift},
                 {"foot_overrun", g.foot_overrun}, {"phase_reset", g.phase_reset}};
    j["horizon"] = c.integrator.horizon;
    j["integrator"] = {{"step", c.integrator.step}, {"event_tolerance", c.integrator.event_tolerance},
                       {"max_impacts", c.integrator.max_impacts},
                       {"chatter_steps", c.integrator.chatter_steps}};
    if (c.initial_offset.size() > 0) j["initial_offset"] = diag_json(c.initial_offset);
    j["rmse_window"] = {c.rmse_start, c.rmse_end};
    j["seed"] = c.seed;
    j["output"] = {{"dir", c.out_dir}, {"svg", c.svg}};
    return j;
}

}  // namespace fph
