#pragma once

#include "hopfstab/optimize.hpp"
#include "hopfstab/simulate.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hopfstab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitSolver = 2;
inline constexpr int kExitVerification = 3;

struct ModelConfig {
    std::string name = "algebraic"; // algebraic | typical_section | cgl
    int extra_design_vars = 0;      // algebraic only
    TypicalSectionParams typical_section;
    CGLConfig cgl;
};

struct CheckDerivsConfig {
    std::optional<double> fd_step; // default_fd_step(sys) when absent
    double threshold = 1e-3;
    std::vector<GradientTarget> targets{GradientTarget::lyapunov, GradientTarget::mu};
};

struct OptimizeConfig {
    std::optional<Objective> objective;
    std::optional<double> lyap_bound;
    bool mu_lower_set = false; // mu_lower given explicitly (possibly null)
    std::optional<double> mu_lower;
    std::optional<Vec> x_lower, x_upper;
    OptSettings settings;
};

struct TrajectoryConfig {
    std::optional<double> mu;        // absolute; otherwise mu_bif + mu_offset
    double mu_offset = 0.0;
    double amplitude = 1e-3;         // seed along Re(q), infinity norm
    double periods = 300.0;
    std::optional<double> dt;        // default_time_step when absent
    int store_stride = 1;
};

struct SweepConfig {
    std::optional<std::vector<double>> mu_values;
    std::optional<std::vector<double>> mu_offsets; // relative to mu_bif
    double amp_seed = 1e-3;
    double bisect_tol = 1e-2;
    SweepOptions options;
};

struct SimulateConfig {
    std::vector<TrajectoryConfig> trajectories;
    std::optional<SweepConfig> sweep;
};

struct RunConfig {
    ModelConfig model;
    std::optional<Vec> x;
    std::optional<double> mu0;
    std::optional<Vec> w0;
    HopfOptions hopf;
    CheckDerivsConfig check_derivs;
    OptimizeConfig optimize;
    SimulateConfig simulate;
    std::string output_dir = ".";
};

// Strict: unknown keys, wrong types and non-positive tolerances raise ConfigurationError.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);

DynSystem build_model(const ModelConfig& m);
Vec design_or_baseline(const RunConfig& cfg, const DynSystem& sys);
double default_mu0(const std::string& model);
// mu offsets that resolve each model's Hopf branch on both sides of onset
std::vector<double> default_sweep_offsets(const std::string& model);
OptProblem build_problem(const RunConfig& cfg);

struct Logger {
    bool verbose = false;
    std::ostream* err = nullptr;
    void info(const std::string& msg) const;
};

// Each command writes its files under out_dir and returns an exit code; errors are reported on
// log.err.
int cmd_analyze(const RunConfig& cfg, const std::string& out_dir, const Logger& log);
int cmd_check_derivs(const RunConfig& cfg, const std::string& out_dir, const Logger& log);
int cmd_optimize(const RunConfig& cfg, const std::string& out_dir, const Logger& log);
int cmd_simulate(const RunConfig& cfg, const std::string& out_dir, const Logger& log);

// hopfstab <analyze|check-derivs|optimize|simulate> --config FILE [--out DIR] [--verbose]
int run(int argc, char** argv);

} // namespace hopfstab::cli
