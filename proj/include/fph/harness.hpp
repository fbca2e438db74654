#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "fph/controller.hpp"
#include "fph/estimators.hpp"
#include "fph/gait.hpp"
#include "fph/hybridsim.hpp"
#include "fph/phmodel.hpp"

namespace fph {

// ------------------------------------------------------------ configuration

enum class Waveform { Sin, Cos };
enum class SignMode { Plus, Minus, Random };

struct ChannelSpec {
    int channel = 1;  // 1-based momentum channel
    double amplitude = 0.0;
    double omega = 0.0;
    Waveform waveform = Waveform::Sin;
    double t_start = 0.0;
    double t_end = 0.0;
};

struct UncertaintySpec {
    bool enabled = true;
    double fraction = 0.1;
    SignMode sign = SignMode::Plus;
};

struct DisturbanceSpec {
    std::vector<ChannelSpec> channels;
    UncertaintySpec uncertainty;
    double scale = 1.0;
};

struct ControllerSettings {
    double alpha = 0.75;
    Vec Kp, Kd, Ki;  // diagonals
    double sigma = 0.85;
    double zeta = 0.5;
    Vec Ks1, Ks2, Ks3, Ks4;
    double mu = 0.75;
    double beta = 1.75;
    double eps = 0.05;
    std::size_t window = FracOp::kDefaultWindow;
    LawForm form = LawForm::Inside;
    Shaping shaping = Shaping::Implicit;
};

struct EstimatorSettings {
    EstimatorKind kind = EstimatorKind::Fractional;
    double rho = 0.1;
    Vec Ke1, Ke2;
    double kappa = 1.0;
    double vartheta = 1.5;
    double l_d = 0.0;
};

struct ScenarioConfig {
    std::string name = "scenario";
    std::string robot = "two_link";
    RabbitBiped::Actuation rabbit_actuation = RabbitBiped::Actuation::Full;
    TwoLinkParams two_link;
    RabbitParams rabbit;
    ControllerSettings controller;
    EstimatorSettings estimator;
    DisturbanceSpec disturbance;
    GaitConfig gait;
    IntegratorConfig integrator;
    Vec initial_offset;  // added to q_d(0); empty means zero
    double rmse_start = 0.5;
    double rmse_end = 10.0;
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    bool svg = true;

    int n() const { return robot == "rabbit" ? 5 : 2; }
};

// Defaults for the two case studies.
ScenarioConfig default_scenario(const std::string& robot);
// Strict parse: unknown keys raise ConfigError.
ScenarioConfig parse_scenario(const nlohmann::json& j);
ScenarioConfig load_scenario(const std::filesystem::path& file);
nlohmann::json scenario_to_json(const ScenarioConfig& c);

// ------------------------------------------------------------ building blocks

std::unique_ptr<RobotModel> make_model(const ScenarioConfig& c);
ControllerConfig make_controller_config(const ScenarioConfig& c);
std::unique_ptr<Estimator> make_estimator(const ScenarioConfig& c);
ReferenceFn make_reference(const ScenarioConfig& c);

// Realized uncertainty sign (+1 / -1) for the run.
double uncertainty_sign(const UncertaintySpec& u, std::uint64_t seed);

Vec disturbance(const DisturbanceSpec& spec, double t, int n, const Vec& grad_q_H, double sign = 1.0);
Disturbance make_disturbance(const ScenarioConfig& c, const RobotModel& model);

// ------------------------------------------------------------ metrics

struct JumpReport {
    std::vector<double> ratios;
    bool applicable = false;
    double max_ratio = 0.0;
    // fitted V' = -a V - b V^c on decaying inter-impact samples
    double a = 0.0;
    double b = 0.0;
    double c = 0.5;
    double t_N = 0.0;  // shortest inter-impact interval
    double dwell = 0.0;  // max_ratio * exp(-a (1 - c) t_N) - 1
    bool dwell_ok = false;
};

struct Definition1Record {
    double b1 = 0.0;     // H(x(t0))
    double sup_H = 0.0;
};

struct Metrics {
    std::vector<double> rmse;
    std::vector<double> settling;  // last time |e_x| > 0.01 outside post-impact windows
    double reaching_time = -1.0;   // first t with |s| < 1e-3, -1 if never
    double V_s0 = 0.0;
    double reaching_bound = 0.0;
    JumpReport jumps;
    Definition1Record def1;
};

std::vector<double> rmse(const HybridTrace& tr, double t0, double t1);
double rmse_of(const std::vector<double>& e);
JumpReport impact_jump_monitor(const HybridTrace& tr);
Definition1Record definition1_record(const HybridTrace& tr);
Metrics compute_metrics(const HybridTrace& tr, const ScenarioConfig& c);

struct Theorem1Record {
    bool converged = false;
    double t_converged = -1.0;
    std::vector<double> t;
    std::vector<double> H;
    double final_norm = 0.0;
};

// Integrates x' = -Sigma grad H, H = (x^T Y x)^beta, until |x| < tol.
Theorem1Record theorem1_bench(const Mat& Sigma, const Mat& Y, double beta, const Vec& x0,
                              double horizon, double step = 1e-4, double tol = 1e-8);

// ------------------------------------------------------------ runs and output

struct RunResult {
    HybridTrace trace;
    Metrics metrics;
    double uncertainty_sign = 1.0;
};

PHState initial_state(const ScenarioConfig& c, const RobotModel& model);
RunResult run_scenario(const ScenarioConfig& c);
void write_outputs(const RunResult& r, const ScenarioConfig& c, const std::filesystem::path& dir);

std::vector<std::string> csv_header(int n, int m);
void write_trace_csv(const HybridTrace& tr, std::ostream& os);
std::string format_double(double v);
nlohmann::json metrics_to_json(const Metrics& m);

struct SvgSeries {
    std::string label;
    std::vector<double> x, y;
};
std::string svg_line_chart(const std::string& title, const std::string& xlabel,
                           const std::vector<SvgSeries>& series);
void write_svgs(const HybridTrace& tr, const std::filesystem::path& dir);

// Sweep: one job per value of a dotted JSON key; jobs run in parallel.
struct SweepJob {
    std::string label;
    ScenarioConfig config;
};
std::vector<SweepJob> expand_sweep(const nlohmann::json& base, const std::string& vary);
std::vector<RunResult> run_sweep(const std::vector<SweepJob>& jobs, bool write);

}  // namespace fph
