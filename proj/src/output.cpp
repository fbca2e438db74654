#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "fph/errors.hpp"
#include "fph/harness.hpp"

namespace fph {

using nlohmann::json;

std::string format_double(double v) { return fmt::format("{:.17g}", v); }

std::vector<std::string> csv_header(int n, int m) {
    std::vector<std::string> h{"t"};
    auto group = [&](const char* base, int count) {
        for (int i = 1; i <= count; ++i) h.push_back(fmt::format("{}_{}", base, i));
    };
    group("q", n);
    group("q_d", n);
    group("qdot", n);
    group("qdot_d", n);
    group("p", n);
    group("e_x", n);
    group("e_v", n);
    group("v", n);
    group("s", n);
    group("tau", m);
    group("u", n);
    group("d", n);
    group("d_hat", n);
    h.push_back("H");
    h.push_back("V_s");
    return h;
}

void write_trace_csv(const HybridTrace& tr, std::ostream& os) {
    const auto head = csv_header(tr.n, tr.m);
    for (std::size_t i = 0; i < head.size(); ++i) os << (i ? "," : "") << head[i];
    os << '\n';
    std::string line;
    for (const auto& r : tr.rows) {
        line = format_double(r.t);
        auto put = [&](const Vec& v) {
            for (double x : v) {
                line += ',';
                line += format_double(x);
            }
        };
        put(r.q);
        put(r.q_d);
        put(r.qdot);
        put(r.qdot_d);
        put(r.p);
        put(r.e_x);
        put(r.e_v);
        put(r.v);
        put(r.s);
        put(r.tau);
        put(r.u);
        put(r.d);
        put(r.d_hat);
        line += ',' + format_double(r.H) + ',' + format_double(r.V_s) + '\n';
        os << line;
    }
}

json metrics_to_json(const Metrics& m) {
    json j;
    j["rmse"] = m.rmse;
    j["settling"] = m.settling;
    j["reaching_time"] = m.reaching_time;
    j["V_s0"] = m.V_s0;
    j["reaching_bound"] = m.reaching_bound;
    j["jumps"] = {{"applicable", m.jumps.applicable}, {"ratios", m.jumps.ratios},
                  {"max_ratio", m.jumps.max_ratio}, {"a", m.jumps.a}, {"b", m.jumps.b},
                  {"c", m.jumps.c}, {"t_N", std::isfinite(m.jumps.t_N) ? m.jumps.t_N : -1.0},
                  {"dwell", m.jumps.dwell}, {"dwell_ok", m.jumps.dwell_ok}};
    j["definition1"] = {{"b1", m.def1.b1}, {"sup_H", m.def1.sup_H}};
    return j;
}

// ------------------------------------------------------------ svg

namespace {

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                         "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string esc(const std::string& s) {
    std::string o;
    for (char c : s) {
        if (c == '<') o += "&lt;";
        else if (c == '>') o += "&gt;";
        else if (c == '&') o += "&amp;";
        else o += c;
    }
    return o;
}

}  // namespace

std::string svg_line_chart(const std::string& title, const std::string& xlabel,
                           const std::vector<SvgSeries>& series) {
    const double W = 720, Hh = 360, L = 70, R = 150, T = 36, B = 44;
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.y[i])) continue;
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, s.y[i]);
            y1 = std::max(y1, s.y[i]);
        }
    if (!(x1 > x0)) { x0 -= 0.5; x1 += 0.5; }
    if (!(y1 > y0)) { y0 -= 0.5; y1 += 0.5; }
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    auto X = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
    auto Y = [&](double y) { return T + (y1 - y) / (y1 - y0) * (Hh - T - B); };

    std::ostringstream o;
    o << fmt::format(R"(<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif" font-size="11">)", W, Hh) << '\n';
    o << fmt::format(R"(<rect width="{}" height="{}" fill="white"/>)", W, Hh) << '\n';
    o << fmt::format(R"(<text x="{}" y="20" font-size="14">{}</text>)", L, esc(title)) << '\n';
    o << fmt::format(R"(<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#444"/>)", L, T,
                     W - L - R, Hh - T - B)
      << '\n';
    for (int k = 0; k <= 4; ++k) {
        const double yv = y0 + (y1 - y0) * k / 4.0;
        const double xv = x0 + (x1 - x0) * k / 4.0;
        o << fmt::format(R"(<text x="{}" y="{}" text-anchor="end">{:.3g}</text>)", L - 4, Y(yv) + 4, yv) << '\n';
        o << fmt::format(R"(<text x="{}" y="{}" text-anchor="middle">{:.3g}</text>)", X(xv), Hh - B + 14, xv) << '\n';
        o << fmt::format(R"(<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#ddd"/>)", L, Y(yv), W - R, Y(yv)) << '\n';
    }
    o << fmt::format(R"(<text x="{}" y="{}" text-anchor="middle">{}</text>)", (L + W - R) / 2, Hh - 8, esc(xlabel)) << '\n';

    // keep files small: at most ~2000 points per series
    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const std::size_t stride = std::max<std::size_t>(1, s.x.size() / 2000);
        o << R"(<polyline fill="none" stroke-width="1.2" stroke=")" << kColors[si % 10] << R"(" points=")";
        for (std::size_t i = 0; i < s.x.size(); i += stride)
            if (std::isfinite(s.y[i])) o << fmt::format("{:.2f},{:.2f} ", X(s.x[i]), Y(s.y[i]));
        o << "\"/>\n";
        o << fmt::format(R"(<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{}" stroke-width="2"/>)", W - R + 10,
                         T + 14 * si + 6, W - R + 30, T + 14 * si + 6, kColors[si % 10])
          << '\n';
        o << fmt::format(R"(<text x="{}" y="{}">{}</text>)", W - R + 34, T + 14 * si + 10, esc(s.label)) << '\n';
    }
    o << "</svg>\n";
    return o.str();
}

void write_svgs(const HybridTrace& tr, const std::filesystem::path& dir) {
    std::vector<double> t;
    for (const auto& r : tr.rows) t.push_back(r.t);
    auto col = [&](auto getter, int i) {
        std::vector<double> y;
        for (const auto& r : tr.rows) y.push_back(getter(r)[i]);
        return y;
    };
    auto chart = [&](const std::string& file, const std::string& title, auto a, const char* an, auto b,
                     const char* bn, int count) {
        std::vector<SvgSeries> ss;
        for (int i = 0; i < count; ++i) {
            ss.push_back({fmt::format("{}_{}", an, i + 1), t, col(a, i)});
            if (bn) ss.push_back({fmt::format("{}_{}", bn, i + 1), t, col(b, i)});
        }
        std::ofstream(dir / file) << svg_line_chart(title, "t [s]", ss);
    };
    const int n = tr.n;
    chart("positions.svg", "Joint positions", [](const TraceRow& r) -> const Vec& { return r.q; }, "q",
          [](const TraceRow& r) -> const Vec& { return r.q_d; }, "q_d", n);
    chart("velocities.svg", "Joint velocities", [](const TraceRow& r) -> const Vec& { return r.qdot; }, "qdot",
          [](const TraceRow& r) -> const Vec& { return r.qdot_d; }, "qdot_d", n);
    chart("errors.svg", "Position errors", [](const TraceRow& r) -> const Vec& { return r.e_x; }, "e_x",
          [](const TraceRow& r) -> const Vec& { return r.e_x; }, nullptr, n);
    chart("surface.svg", "Sliding variable", [](const TraceRow& r) -> const Vec& { return r.s; }, "s",
          [](const TraceRow& r) -> const Vec& { return r.s; }, nullptr, n);
    chart("torques.svg", "Control torques", [](const TraceRow& r) -> const Vec& { return r.tau; }, "tau",
          [](const TraceRow& r) -> const Vec& { return r.tau; }, nullptr, tr.m);
    chart("disturbance.svg", "Disturbance and estimate", [](const TraceRow& r) -> const Vec& { return r.d; }, "d",
          [](const TraceRow& r) -> const Vec& { return r.d_hat; }, "d_hat", n);

    std::vector<SvgSeries> phase;
    for (int i = 0; i < n; ++i) phase.push_back({fmt::format("joint {}", i + 1), col([](const TraceRow& r) -> const Vec& { return r.q; }, i),
                                                 col([](const TraceRow& r) -> const Vec& { return r.qdot; }, i)});
    std::ofstream(dir / "phase.svg") << svg_line_chart("Phase portraits (qdot vs q)", "q [rad]", phase);
}

void write_outputs(const RunResult& r, const ScenarioConfig& c, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream os(dir / "trace.csv");
        if (!os) throw Error("cannot write " + (dir / "trace.csv").string());
        write_trace_csv(r.trace, os);
        if (!r.trace.ok()) os << "# error: " << r.trace.error << '\n';
    }
    {
        std::ofstream os(dir / "impacts.csv");
        os << "k,t_k\n";
        for (std::size_t k = 0; k < r.trace.impacts.size(); ++k)
            os << k + 1 << ',' << format_double(r.trace.impacts[k]) << '\n';
    }
    json summary;
    summary["scenario"] = scenario_to_json(c);
    summary["metrics"] = metrics_to_json(r.metrics);
    summary["uncertainty_sign"] = r.uncertainty_sign;
    summary["status"] = r.trace.ok() ? "ok" : "error";
    if (!r.trace.ok()) summary["error"] = r.trace.error;
    std::ofstream(dir / "metrics.json") << summary.dump(2) << '\n';
    if (c.svg) write_svgs(r.trace, dir);
}

}  // namespace fph
