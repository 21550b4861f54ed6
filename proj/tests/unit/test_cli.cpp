#include "hopfstab/cli.hpp"
#include "hopfstab/errors.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace hopfstab;
using namespace hopfstab::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("hopfstab_cli_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_args(std::vector<std::string> args) {
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return run(static_cast<int>(argv.size()), argv.data());
}

} // namespace

TEST_CASE("config parsing is strict") {
    CHECK_NOTHROW(parse_config(R"({"model": {"name": "algebraic"}})"));
    CHECK_THROWS_AS(parse_config(R"({"model": {"name": "algebraic"}, "extra": 1})"), ConfigurationError);
    CHECK_THROWS_AS(parse_config(R"({"model": {"name": "algebraic", "nu": 1}})"), ConfigurationError);
    CHECK_THROWS_AS(parse_config(R"({"model": {"name": "cgl"}, "tolerances": {"evp_tol": 0}})"),
                    ConfigurationError);
    CHECK_THROWS_AS(parse_config(R"({"model": {"name": "cgl"}, "tolerances": {"evp_tols": 1e-9}})"),
                    ConfigurationError);
    CHECK_THROWS_AS(parse_config(R"({"model": {"name": "pendulum"}})"), ConfigurationError);
    CHECK_THROWS_AS(parse_config(R"({"x": [1, 2]})"), ConfigurationError);
    CHECK_THROWS_AS(parse_config(R"({"model": {"name": "algebraic"}, "x": [1, "a"]})"), ConfigurationError);
    CHECK_THROWS_AS(parse_config(R"({"model": {"name": "algebraic"})"), ConfigurationError);
    CHECK_THROWS_AS(parse_config(R"({"model": {"name": "algebraic"}, "optimize": {"objective": "max_fun"}})"),
                    ConfigurationError);
    CHECK_THROWS_AS(parse_config(R"({"model": {"name": "algebraic"}, "check_derivs": {"targets": ["lift"]}})"),
                    ConfigurationError);
    CHECK_THROWS_AS(
        parse_config(R"({"model": {"name": "algebraic"}, "simulate": {"trajectories": [{"mu": 1, "mu_offset": 0.1}]}})"),
        ConfigurationError);
    CHECK_THROWS_AS(parse_config(R"({"model": {"name": "algebraic"}, "simulate": {"sweep": {"amp_seeds": 1}}})"),
                    ConfigurationError);
}

TEST_CASE("config values reach the run configuration") {
    const RunConfig c = parse_config(R"({
        "model": {"name": "cgl", "grid_points": 16, "sigma": 0.2},
        "mu0": 0.3,
        "tolerances": {"evp_tol": 1e-10, "class_tol": 1e-6},
        "check_derivs": {"fd_step": 1e-4, "threshold": 0.01, "targets": ["mu"]},
        "optimize": {"lyap_bound": -0.4, "mu_lower": null, "max_iter": 5},
        "simulate": {"trajectories": [{"mu_offset": -0.01, "periods": 50}], "sweep": {"mu_offsets": [0.01]}}
    })");
    CHECK(c.model.cgl.grid_points == 16);
    CHECK(c.model.cgl.sigma == 0.2);
    CHECK(*c.mu0 == 0.3);
    CHECK(c.hopf.evp.tol == 1e-10);
    CHECK(c.hopf.class_tol == 1e-6);
    CHECK(*c.check_derivs.fd_step == 1e-4);
    CHECK(c.check_derivs.targets.size() == 1);
    CHECK(*c.optimize.lyap_bound == -0.4);
    CHECK(c.optimize.mu_lower_set);
    CHECK_FALSE(c.optimize.mu_lower);
    CHECK(c.optimize.settings.max_iter == 5);
    REQUIRE(c.simulate.trajectories.size() == 1);
    CHECK(c.simulate.trajectories[0].periods == 50);
    CHECK(c.simulate.sweep->mu_offsets->at(0) == 0.01);
    const OptProblem p = build_problem(c);
    CHECK(p.sys.n == 32);
    CHECK(p.lyap_bound == -0.4);
    CHECK_FALSE(p.mu_lower);
}

TEST_CASE("design length is checked against the model") {
    RunConfig c = parse_config(R"({"model": {"name": "typical_section"}, "x": [1, 2, 3]})");
    CHECK_THROWS_AS(design_or_baseline(c, build_model(c.model)), ConfigurationError);
    CHECK_THROWS_AS(build_problem(c), ConfigurationError);
}

TEST_CASE("analyze writes a deterministic report") {
    const fs::path d = scratch_dir("analyze");
    const fs::path cfg = d / "c.json";
    std::ofstream(cfg) << R"({"model": {"name": "algebraic"}, "x": [0.2, 0.7]})";
    REQUIRE(run_args({"hopfstab", "analyze", "--config", cfg.string(), "--out", (d / "a").string()}) == kExitOk);
    REQUIRE(run_args({"hopfstab", "analyze", "--config", cfg.string(), "--out", (d / "b").string()}) == kExitOk);
    const std::string a = slurp(d / "a" / "analysis.json");
    CHECK(a == slurp(d / "b" / "analysis.json"));
    const auto j = nlohmann::json::parse(a);
    CHECK(j["mu_bif"].get<double>() == doctest::Approx(0.45).epsilon(1e-10));
    CHECK(j["classification"] == "stable");
}

TEST_CASE("exit codes") {
    const fs::path d = scratch_dir("exit");
    const fs::path bad = d / "bad.json", strict = d / "strict.json", solver = d / "solver.json";
    std::ofstream(bad) << R"({"model": {"name": "algebraic"}, "typo": true})";
    std::ofstream(strict) << R"({"model": {"name": "algebraic"}, "x": [0.2, 0.7], "check_derivs": {"threshold": 1e-30}})";
    std::ofstream(solver) << R"({"model": {"name": "algebraic"}, "x": [0.5, 0.5], "tolerances": {"evp_max_iter": 1}, "mu0": 40})";
    const std::string out = (d / "o").string();
    CHECK(run_args({"hopfstab", "analyze", "--config", bad.string(), "--out", out}) == kExitConfig);
    CHECK(run_args({"hopfstab", "analyze", "--config", (d / "missing.json").string()}) == kExitConfig);
    CHECK(run_args({"hopfstab", "frobnicate", "--config", bad.string()}) == kExitConfig);
    CHECK(run_args({"hopfstab", "analyze", "--config", solver.string(), "--out", out}) == kExitSolver);
    CHECK(run_args({"hopfstab", "check-derivs", "--config", strict.string(), "--out", out}) == kExitVerification);
    CHECK(fs::exists(fs::path(out) / "derivs.csv"));
}

TEST_CASE("optimize writes history and result") {
    const fs::path d = scratch_dir("optimize");
    const fs::path cfg = d / "c.json";
    std::ofstream(cfg) << R"({"model": {"name": "algebraic"}})";
    REQUIRE(run_args({"hopfstab", "optimize", "--config", cfg.string(), "--out", d.string()}) == kExitOk);
    const std::string hist = slurp(d / "history.csv");
    CHECK(hist.rfind("iter,x_1,x_2,f,f_lyp,mu", 0) == 0);
    const auto r = nlohmann::json::parse(slurp(d / "result.json"));
    CHECK(r["status"] == "converged");
    CHECK(r["f_lyp_star"].get<double>() == doctest::Approx(-0.2).epsilon(1e-6));
}

TEST_CASE("simulate writes trajectories and a sweep") {
    const fs::path d = scratch_dir("simulate");
    const fs::path cfg = d / "c.json";
    std::ofstream(cfg) << R"({"model": {"name": "algebraic"},
        "simulate": {"trajectories": [{"mu_offset": -0.02, "periods": 40, "store_stride": 10}],
                     "sweep": {"mu_offsets": [-0.05, -0.02]}}})";
    REQUIRE(run_args({"hopfstab", "simulate", "--config", cfg.string(), "--out", d.string()}) == kExitOk);
    CHECK(slurp(d / "trajectory_0.csv").rfind("t,w_1,w_2\n", 0) == 0);
    CHECK(slurp(d / "sweep.csv").rfind("mu,amplitude,stability_flag\n", 0) == 0);
    const auto j = nlohmann::json::parse(slurp(d / "simulate.json"));
    CHECK(j["sweep"]["orientation"] == "unstable");
    CHECK(j["orientation_matches_f_lyp"] == true);
}
