#include "hopfstab/cli.hpp"
#include "hopfstab/equilibrium.hpp"
#include "hopfstab/errors.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>

namespace hopfstab::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// ------------------------------------------------------------------ strict config reading

class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail("expected an object");
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key);
    }
    bool is_null(const std::string& key) { return has(key) && j_.at(key).is_null(); }

    double number(const std::string& key, double def) { return has(key) ? as_number(key) : def; }
    std::optional<double> opt_number(const std::string& key) {
        if (!has(key) || j_.at(key).is_null()) return std::nullopt;
        return as_number(key);
    }
    double positive(const std::string& key, double def) {
        const double v = number(key, def);
        if (!(v > 0.0)) fail("'" + key + "' must be positive");
        return v;
    }
    int integer(const std::string& key, int def, int min_value) {
        if (!has(key)) return def;
        const json& v = j_.at(key);
        if (!v.is_number_integer()) fail("'" + key + "' must be an integer");
        const long long i = v.get<long long>();
        if (i < min_value || i > 100000000) fail("'" + key + "' out of range");
        return static_cast<int>(i);
    }
    bool boolean(const std::string& key, bool def) {
        if (!has(key)) return def;
        if (!j_.at(key).is_boolean()) fail("'" + key + "' must be a boolean");
        return j_.at(key).get<bool>();
    }
    std::string string(const std::string& key, const std::string& def) {
        if (!has(key)) return def;
        if (!j_.at(key).is_string()) fail("'" + key + "' must be a string");
        return j_.at(key).get<std::string>();
    }
    std::optional<Vec> vector(const std::string& key) {
        if (!has(key) || j_.at(key).is_null()) return std::nullopt;
        const json& v = j_.at(key);
        if (!v.is_array()) fail("'" + key + "' must be an array of numbers");
        Vec out(static_cast<Eigen::Index>(v.size()));
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number()) fail("'" + key + "' must be an array of numbers");
            out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
            if (!std::isfinite(out[static_cast<Eigen::Index>(i)])) fail("'" + key + "' has a non-finite entry");
        }
        return out;
    }
    std::optional<Reader> object(const std::string& key) {
        if (!has(key) || j_.at(key).is_null()) return std::nullopt;
        return Reader(j_.at(key), path_ + "." + key);
    }
    const json& raw(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }
    const std::string& path() const { return path_; }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) fail("unknown field '" + it.key() + "'");
    }
    [[noreturn]] void fail(const std::string& msg) const {
        throw ConfigurationError("config " + path_ + ": " + msg);
    }

private:
    double as_number(const std::string& key) const {
        const json& v = j_.at(key);
        if (!v.is_number()) fail("'" + key + "' must be a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) fail("'" + key + "' must be finite");
        return d;
    }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

GradientTarget target_from_string(const std::string& s, const Reader& r) {
    if (s == "lyapunov") return GradientTarget::lyapunov;
    if (s == "mu") return GradientTarget::mu;
    if (s == "omega") return GradientTarget::omega;
    r.fail("unknown derivative target '" + s + "'");
}

std::string target_name(GradientTarget t) {
    switch (t) {
    case GradientTarget::lyapunov: return "lyapunov";
    case GradientTarget::mu: return "mu";
    case GradientTarget::omega: return "omega";
    }
    return "unknown";
}

ModelConfig parse_model(Reader r) {
    ModelConfig m;
    m.name = r.string("name", "");
    if (m.name == "algebraic") {
        m.extra_design_vars = r.integer("extra_design_vars", 0, 0);
    } else if (m.name == "typical_section") {
        auto& p = m.typical_section;
        p.a = r.number("a", p.a);
        p.Omega = r.positive("Omega", p.Omega);
        p.r_alpha = r.positive("r_alpha", p.r_alpha);
        p.x_alpha = r.number("x_alpha", p.x_alpha);
        p.kappa5 = r.number("kappa5", p.kappa5);
        p.m_bar = r.positive("m_bar", p.m_bar);
        p.kappa3 = r.number("kappa3", p.kappa3);
    } else if (m.name == "cgl") {
        auto& c = m.cgl;
        c.grid_points = r.integer("grid_points", c.grid_points, 4);
        c.nu = r.number("nu", c.nu);
        c.sigma = r.number("sigma", c.sigma);
        c.c3_lower = r.number("c3_lower", c.c3_lower);
        c.c3_upper = r.number("c3_upper", c.c3_upper);
        if (!(c.c3_lower <= c.c3_upper)) r.fail("c3_lower must not exceed c3_upper");
    } else {
        r.fail("model.name must be one of algebraic, typical_section, cgl");
    }
    r.finish();
    return m;
}

std::vector<double> number_list(Reader& r, const std::string& key) {
    const json& v = r.raw(key);
    if (!v.is_array() || v.empty()) r.fail("'" + key + "' must be a non-empty array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number() || !std::isfinite(e.get<double>()))
            r.fail("'" + key + "' must be a non-empty array of finite numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

} // namespace

RunConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigurationError(std::string("config is not valid JSON: ") + e.what());
    }
    Reader r(j, "$");
    RunConfig cfg;
    if (auto m = r.object("model"))
        cfg.model = parse_model(*m);
    else
        r.fail("'model' is required");
    cfg.x = r.vector("x");
    cfg.mu0 = r.opt_number("mu0");
    cfg.w0 = r.vector("w0");
    cfg.output_dir = r.string("output_dir", cfg.output_dir);

    if (auto t = r.object("tolerances")) {
        auto& e = cfg.hopf.evp;
        e.tol = t->positive("evp_tol", e.tol);
        e.max_iter = t->integer("evp_max_iter", e.max_iter, 1);
        e.eq_tol = t->positive("eq_tol", e.eq_tol);
        e.eq_max_iter = t->integer("eq_max_iter", e.eq_max_iter, 1);
        e.check_crossing = t->boolean("check_crossing", e.check_crossing);
        cfg.hopf.class_tol = t->positive("class_tol", cfg.hopf.class_tol);
        t->finish();
    }

    if (auto c = r.object("check_derivs")) {
        auto& d = cfg.check_derivs;
        if (auto h = c->opt_number("fd_step")) {
            if (!(*h > 0.0)) c->fail("'fd_step' must be positive");
            d.fd_step = *h;
        }
        d.threshold = c->positive("threshold", d.threshold);
        if (c->has("targets")) {
            const json& t = c->raw("targets");
            if (!t.is_array() || t.empty()) c->fail("'targets' must be a non-empty array");
            d.targets.clear();
            for (const auto& e : t) {
                if (!e.is_string()) c->fail("'targets' entries must be strings");
                d.targets.push_back(target_from_string(e.get<std::string>(), *c));
            }
        }
        c->finish();
    }

    if (auto o = r.object("optimize")) {
        auto& oc = cfg.optimize;
        if (o->has("objective")) {
            try {
                oc.objective = objective_from_string(o->string("objective", ""));
            } catch (const InputError& e) {
                o->fail(e.what());
            }
        }
        oc.lyap_bound = o->opt_number("lyap_bound");
        if (oc.lyap_bound && !(*oc.lyap_bound < 0.0)) o->fail("'lyap_bound' must be negative");
        if (o->has("mu_lower")) {
            oc.mu_lower_set = true;
            oc.mu_lower = o->opt_number("mu_lower");
        }
        oc.x_lower = o->vector("x_lower");
        oc.x_upper = o->vector("x_upper");
        auto& s = oc.settings;
        s.max_iter = o->integer("max_iter", s.max_iter, 0);
        s.kkt_tol = o->positive("kkt_tol", s.kkt_tol);
        s.feas_tol = o->positive("feas_tol", s.feas_tol);
        o->finish();
    }

    if (auto s = r.object("simulate")) {
        auto& sc = cfg.simulate;
        if (s->has("trajectories")) {
            const json& arr = s->raw("trajectories");
            if (!arr.is_array()) s->fail("'trajectories' must be an array");
            for (std::size_t i = 0; i < arr.size(); ++i) {
                Reader t(arr[i], s->path() + ".trajectories[" + std::to_string(i) + "]");
                TrajectoryConfig tc;
                tc.mu = t.opt_number("mu");
                tc.mu_offset = t.number("mu_offset", tc.mu_offset);
                if (tc.mu && t.has("mu_offset")) t.fail("give either 'mu' or 'mu_offset'");
                tc.amplitude = t.positive("amplitude", tc.amplitude);
                tc.periods = t.positive("periods", tc.periods);
                if (auto dt = t.opt_number("dt")) {
                    if (!(*dt > 0.0)) t.fail("'dt' must be positive");
                    tc.dt = *dt;
                }
                tc.store_stride = t.integer("store_stride", tc.store_stride, 1);
                t.finish();
                sc.trajectories.push_back(tc);
            }
        }
        if (auto w = s->object("sweep")) {
            SweepConfig sw;
            if (w->has("mu_values")) sw.mu_values = number_list(*w, "mu_values");
            if (w->has("mu_offsets")) sw.mu_offsets = number_list(*w, "mu_offsets");
            if (sw.mu_values && sw.mu_offsets) w->fail("give either 'mu_values' or 'mu_offsets'");
            sw.amp_seed = w->positive("amp_seed", sw.amp_seed);
            sw.bisect_tol = w->positive("bisect_tol", sw.bisect_tol);
            if (!(sw.bisect_tol < 1.0)) w->fail("'bisect_tol' must be below 1");
            auto& so = sw.options;
            so.periods = w->positive("periods", so.periods);
            so.max_periods = w->positive("max_periods", so.max_periods);
            so.growth_efolds = w->positive("growth_efolds", so.growth_efolds);
            so.window_periods = w->positive("window_periods", so.window_periods);
            so.steps_per_period = w->integer("steps_per_period", so.steps_per_period, 4);
            so.max_seed_factor = w->positive("max_seed_factor", so.max_seed_factor);
            so.samples_per_period = w->integer("samples_per_period", so.samples_per_period, 1);
            if (!(2.0 * so.window_periods < so.periods)) w->fail("'periods' must exceed two windows");
            w->finish();
            sc.sweep = sw;
        }
        s->finish();
    }
    r.finish();
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigurationError("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

DynSystem build_model(const ModelConfig& m) {
    if (m.name == "algebraic") return make_algebraic_model(m.extra_design_vars);
    if (m.name == "typical_section") return make_typical_section(m.typical_section);
    if (m.name == "cgl") return make_cgl_model(m.cgl);
    throw ConfigurationError("unknown model '" + m.name + "'");
}

namespace {

Vec model_baseline(const ModelConfig& m) {
    if (m.name == "algebraic") {
        Vec x = Vec::Zero(2 + m.extra_design_vars);
        x.head(2) = algebraic_baseline();
        return x;
    }
    if (m.name == "typical_section") return typical_section_baseline(m.typical_section);
    return cgl_baseline(m.cgl);
}

} // namespace

Vec design_or_baseline(const RunConfig& cfg, const DynSystem& sys) {
    Vec x = cfg.x ? *cfg.x : model_baseline(cfg.model);
    if (x.size() != sys.n_x)
        throw ConfigurationError("config: 'x' has " + std::to_string(x.size()) + " entries, model '" +
                                 sys.name + "' needs " + std::to_string(sys.n_x));
    return x;
}

double default_mu0(const std::string& model) {
    if (model == "typical_section") return kTypicalSectionMuSeed;
    if (model == "cgl") return 0.1;
    return 0.5;
}

std::vector<double> default_sweep_offsets(const std::string& model) {
    // the typical section's subcritical branch folds within ~0.01 of onset
    if (model == "typical_section") return {-0.005, -0.002, 0.002, 0.005};
    return {-0.05, -0.02, 0.02, 0.05};
}

OptProblem build_problem(const RunConfig& cfg) {
    const auto& m = cfg.model;
    OptProblem p;
    if (m.name == "algebraic") {
        p = algebraic_problem();
        if (m.extra_design_vars > 0) {
            const int nx = 2 + m.extra_design_vars;
            p.sys = make_algebraic_model(m.extra_design_vars);
            Vec lo = Vec::Zero(nx), hi = Vec::Ones(nx), x0 = Vec::Zero(nx);
            x0.head(2) = p.x0;
            p.x_lower = lo;
            p.x_upper = hi;
            p.x0 = x0;
        }
    } else if (m.name == "typical_section") {
        p = typical_section_problem(m.typical_section);
    } else if (m.name == "cgl") {
        p = cgl_problem(m.cgl);
    } else {
        throw ConfigurationError("unknown model '" + m.name + "'");
    }
    p.hopf = cfg.hopf;
    if (cfg.mu0) p.mu0 = *cfg.mu0;
    if (cfg.w0) p.w0 = *cfg.w0;
    if (cfg.x) p.x0 = *cfg.x;
    const auto& o = cfg.optimize;
    if (o.objective) p.objective = *o.objective;
    if (o.lyap_bound) p.lyap_bound = *o.lyap_bound;
    if (o.mu_lower_set) p.mu_lower = o.mu_lower;
    if (o.x_lower) p.x_lower = *o.x_lower;
    if (o.x_upper) p.x_upper = *o.x_upper;
    const Eigen::Index nx = p.sys.n_x;
    if (p.x0.size() != nx || p.x_lower.size() != nx || p.x_upper.size() != nx)
        throw ConfigurationError("config: design vectors must have " + std::to_string(nx) + " entries");
    if (p.w0.size() != p.sys.n)
        throw ConfigurationError("config: 'w0' must have " + std::to_string(p.sys.n) + " entries");
    if (p.objective == Objective::mass_minus_kappa_sq && nx != 2)
        throw ConfigurationError("config: objective mass_minus_kappa_sq needs 2 design variables");
    if (p.objective == Objective::cgl_cost && !(p.cgl_spacing > 0.0))
        throw ConfigurationError("config: objective cgl_cost needs the cgl model");
    return p;
}

void Logger::info(const std::string& msg) const {
    if (verbose && err) *err << "[hopfstab] " << msg << '\n';
}

namespace {

// ------------------------------------------------------------------ output helpers

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
    out << text;
    if (!out) throw std::runtime_error("failed writing '" + p.string() + "'");
}

void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

json complex_json(cd z) { return json::array({z.real(), z.imag()}); }

struct Setup {
    DynSystem sys;
    Vec x;
    double mu0 = 0.0;
    Vec w0;
};

Setup setup(const RunConfig& cfg) {
    Setup s;
    s.sys = build_model(cfg.model);
    s.x = design_or_baseline(cfg, s.sys);
    s.mu0 = cfg.mu0 ? *cfg.mu0 : default_mu0(cfg.model.name);
    s.w0 = cfg.w0 ? *cfg.w0 : Vec::Zero(s.sys.n);
    if (s.w0.size() != s.sys.n)
        throw ConfigurationError("config: 'w0' must have " + std::to_string(s.sys.n) + " entries");
    return s;
}

json hopf_json(const DynSystem& sys, const HopfPoint& hp, const Vec& x) {
    const auto& r = hp.right;
    json j;
    j["mu_bif"] = r.mu;
    j["omega_bif"] = r.omega;
    j["f_lyp"] = hp.lyapunov.f_lyp;
    j["h1"] = complex_json(hp.lyapunov.h1);
    j["h2"] = complex_json(hp.lyapunov.h2);
    j["h3"] = complex_json(hp.lyapunov.h3);
    j["classification"] = to_string(hp.lyapunov.classification);
    j["residual_norms"] = {
        {"equilibrium", residual(sys, r.w_eq, r.mu, x).lpNorm<Eigen::Infinity>()},
        {"right_evp", residual_right(sys, r, x).lpNorm<Eigen::Infinity>()},
        {"left_evp", residual_left(sys, hp.left, r, x).lpNorm<Eigen::Infinity>()},
    };
    j["w_eq"] = to_std(r.w_eq);
    return j;
}

// Runs body, mapping exceptions to the exit-code contract.
template <class F>
int guarded(const Logger& log, F&& body) {
    try {
        return body();
    } catch (const ConfigurationError& e) {
        if (log.err) *log.err << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const InputError& e) {
        if (log.err) *log.err << "input error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const Error& e) {
        if (log.err) *log.err << "solver failure: " << e.what() << '\n';
        return kExitSolver;
    } catch (const std::exception& e) {
        if (log.err) *log.err << "error: " << e.what() << '\n';
        return kExitSolver;
    }
}

void ensure_dir(const std::string& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw ConfigurationError("cannot create output directory '" + out_dir + "': " + ec.message());
}

} // namespace

// ------------------------------------------------------------------ commands

int cmd_analyze(const RunConfig& cfg, const std::string& out_dir, const Logger& log) {
    return guarded(log, [&] {
        ensure_dir(out_dir);
        Setup s = setup(cfg);
        log.info("analyze: model " + s.sys.name + ", n = " + std::to_string(s.sys.n));
        const HopfPoint hp = locate_hopf(s.sys, s.x, s.mu0, s.w0, cfg.hopf);
        json j = hopf_json(s.sys, hp, s.x);
        j["model"] = s.sys.name;
        j["x"] = to_std(s.x);
        j["crossing_rate"] = crossing_rate(s.sys, hp.right, s.x, cfg.hopf.evp);
        write_json(fs::path(out_dir) / "analysis.json", j);
        log.info("analyze: mu_bif " + fmt(hp.right.mu) + ", f_lyp " + fmt(hp.lyapunov.f_lyp));
        return kExitOk;
    });
}

int cmd_check_derivs(const RunConfig& cfg, const std::string& out_dir, const Logger& log) {
    return guarded(log, [&] {
        ensure_dir(out_dir);
        Setup s = setup(cfg);
        const double h = cfg.check_derivs.fd_step ? *cfg.check_derivs.fd_step : default_fd_step(s.sys);
        log.info("check-derivs: model " + s.sys.name + ", fd step " + fmt(h));
        const HopfPoint hp = locate_hopf(s.sys, s.x, s.mu0, s.w0, cfg.hopf);

        json j;
        j["model"] = s.sys.name;
        j["x"] = to_std(s.x);
        j["fd_step"] = h;
        j["threshold"] = cfg.check_derivs.threshold;
        std::ostringstream csv;
        csv << "target,index,adjoint,fd,rel_err\n";
        double worst = 0.0;
        json targets = json::object();
        for (GradientTarget t : cfg.check_derivs.targets) {
            const auto rep = total_gradient(s.sys, hp.right, hp.left, s.x, t, &hp.lyapunov);
            const Vec fd = fd_total_gradient(s.sys, s.x, t, h, hp, cfg.hopf);
            const double err = max_relative_error(rep.df_dx, fd);
            worst = std::max(worst, err);
            json rows = json::array();
            for (Eigen::Index i = 0; i < fd.size(); ++i) {
                const double rel = std::abs(rep.df_dx[i] - fd[i]) / std::max(std::abs(fd[i]), 1e-12);
                rows.push_back({{"index", i}, {"adjoint", rep.df_dx[i]}, {"fd", fd[i]}, {"rel_err", rel}});
                csv << target_name(t) << ',' << i << ',' << fmt(rep.df_dx[i]) << ',' << fmt(fd[i])
                    << ',' << fmt(rel) << '\n';
            }
            targets[target_name(t)] = {{"rows", rows}, {"max_rel_err", err}};
            log.info("check-derivs: " + target_name(t) + " max rel err " + fmt(err));
        }
        const bool pass = worst <= cfg.check_derivs.threshold;
        j["targets"] = targets;
        j["max_rel_err"] = worst;
        j["passed"] = pass;
        write_json(fs::path(out_dir) / "derivs.json", j);
        write_text(fs::path(out_dir) / "derivs.csv", csv.str());
        if (!pass && log.err)
            *log.err << "verification failed: max relative error " << fmt(worst) << " exceeds "
                     << fmt(cfg.check_derivs.threshold) << '\n';
        return pass ? kExitOk : kExitVerification;
    });
}

int cmd_optimize(const RunConfig& cfg, const std::string& out_dir, const Logger& log) {
    return guarded(log, [&] {
        ensure_dir(out_dir);
        const OptProblem prob = build_problem(cfg);
        log.info("optimize: model " + prob.sys.name + ", objective " + to_string(prob.objective));
        const OptResult r = run_optimization(prob, cfg.optimize.settings);

        std::ostringstream csv;
        csv << "iter";
        for (Eigen::Index i = 0; i < prob.sys.n_x; ++i) csv << ",x_" << (i + 1);
        csv << ",f,f_lyp,mu,kkt\n";
        for (const auto& it : r.iterates) {
            csv << it.iter;
            for (Eigen::Index i = 0; i < it.x.size(); ++i) csv << ',' << fmt(it.x[i]);
            csv << ',' << fmt(it.f) << ',' << fmt(it.f_lyp) << ',' << fmt(it.mu) << ',' << fmt(it.kkt)
                << '\n';
            log.info("optimize: iter " + std::to_string(it.iter) + " f " + fmt(it.f) + " f_lyp " +
                     fmt(it.f_lyp) + " mu " + fmt(it.mu) + " kkt " + fmt(it.kkt));
        }
        write_text(fs::path(out_dir) / "history.csv", csv.str());

        json j;
        j["model"] = prob.sys.name;
        j["objective"] = to_string(prob.objective);
        j["status"] = to_string(r.status);
        j["message"] = r.message;
        j["x_star"] = to_std(r.x_star);
        j["f_star"] = r.f_star;
        j["mu_star"] = r.mu_star;
        j["f_lyp_star"] = r.f_lyp_star;
        j["lyap_bound"] = prob.lyap_bound;
        j["mu_lower"] = prob.mu_lower ? json(*prob.mu_lower) : json(nullptr);
        j["kkt_norm"] = r.kkt_norm;
        j["max_violation"] = r.max_violation;
        j["multipliers"] = to_std(r.multipliers);
        j["iterations"] = r.iterates.empty() ? 0 : r.iterates.back().iter;
        write_json(fs::path(out_dir) / "result.json", j);
        log.info("optimize: " + to_string(r.status) + " (" + r.message + ")");
        if (r.status == OptStatus::infeasible) {
            if (log.err) *log.err << "solver failure: no feasible design found\n";
            return kExitSolver;
        }
        return kExitOk;
    });
}

int cmd_simulate(const RunConfig& cfg, const std::string& out_dir, const Logger& log) {
    return guarded(log, [&] {
        ensure_dir(out_dir);
        Setup s = setup(cfg);
        const HopfPoint hp = locate_hopf(s.sys, s.x, s.mu0, s.w0, cfg.hopf);
        const double T = 2.0 * std::numbers::pi / hp.right.omega;
        const Vec dir = hp.right.q_r / hp.right.q_r.lpNorm<Eigen::Infinity>();
        log.info("simulate: model " + s.sys.name + ", mu_bif " + fmt(hp.right.mu));

        json j;
        j["model"] = s.sys.name;
        j["x"] = to_std(s.x);
        j["mu_bif"] = hp.right.mu;
        j["omega_bif"] = hp.right.omega;
        j["f_lyp"] = hp.lyapunov.f_lyp;
        j["classification"] = to_string(hp.lyapunov.classification);

        auto trajs = cfg.simulate.trajectories;
        if (trajs.empty() && !cfg.simulate.sweep) {
            TrajectoryConfig below, above;
            below.mu_offset = -0.02;
            above.mu_offset = 0.02;
            trajs = {below, above};
        }
        json tj = json::array();
        for (std::size_t k = 0; k < trajs.size(); ++k) {
            const auto& tc = trajs[k];
            const double mu = tc.mu ? *tc.mu : hp.right.mu + tc.mu_offset;
            const auto eq = solve_equilibrium(s.sys, mu, s.x, hp.right.w_eq, cfg.hopf.evp.eq_tol,
                                              cfg.hopf.evp.eq_max_iter);
            if (!eq.converged) throw SolverError("simulate: equilibrium at mu = " + fmt(mu) + " did not converge");
            const double dt = tc.dt ? *tc.dt : default_time_step(s.sys, eq.w_eq, mu, s.x, hp.right.omega);
            IntegrateOptions io;
            io.w_ref = eq.w_eq;
            io.store_stride = tc.store_stride;
            io.window = std::min(20.0 * T, 0.5 * tc.periods * T);
            const Trajectory tr = integrate(s.sys, eq.w_eq + tc.amplitude * dir, mu, s.x, dt, tc.periods * T, io);

            std::ostringstream csv;
            csv << 't';
            for (int i = 0; i < s.sys.n; ++i) csv << ",w_" << (i + 1);
            csv << '\n';
            for (Eigen::Index r = 0; r < tr.times.size(); ++r) {
                csv << fmt(tr.times[r]);
                for (int i = 0; i < s.sys.n; ++i) csv << ',' << fmt(tr.states(r, i));
                csv << '\n';
            }
            const std::string name = "trajectory_" + std::to_string(k) + ".csv";
            write_text(fs::path(out_dir) / name, csv.str());
            tj.push_back({{"file", name},
                          {"mu", mu},
                          {"amplitude", tc.amplitude},
                          {"dt", dt},
                          {"classification", to_string(tr.classification.kind)},
                          {"lco_amplitude", tr.classification.amplitude}});
            log.info("simulate: trajectory " + std::to_string(k) + " at mu " + fmt(mu) + " -> " +
                     to_string(tr.classification.kind));
        }
        j["trajectories"] = tj;

        if (cfg.simulate.sweep) {
            const auto& sw = *cfg.simulate.sweep;
            std::vector<double> mus;
            if (sw.mu_values) {
                mus = *sw.mu_values;
            } else {
                for (double o : sw.mu_offsets ? *sw.mu_offsets : default_sweep_offsets(cfg.model.name))
                    mus.push_back(hp.right.mu + o);
            }
            const auto pts = lco_amplitude_sweep(s.sys, s.x, hp, mus, sw.amp_seed, sw.bisect_tol, sw.options);
            std::ostringstream csv;
            csv << "mu,amplitude,stability_flag\n";
            json pj = json::array();
            for (const auto& p : pts) {
                csv << fmt(p.mu) << ',' << fmt(p.amplitude) << ',' << to_string(p.flag) << '\n';
                pj.push_back({{"mu", p.mu},
                              {"amplitude", std::isnan(p.amplitude) ? json(nullptr) : json(p.amplitude)},
                              {"stability_flag", to_string(p.flag)}});
            }
            write_text(fs::path(out_dir) / "sweep.csv", csv.str());
            const Stability orient = sweep_orientation(pts, hp.right.mu);
            j["sweep"] = {{"file", "sweep.csv"}, {"points", pj}, {"orientation", to_string(orient)}};
            j["orientation_matches_f_lyp"] = orient == hp.lyapunov.classification;
            log.info("simulate: sweep orientation " + to_string(orient));
        }
        write_json(fs::path(out_dir) / "simulate.json", j);
        return kExitOk;
    });
}

int run(int argc, char** argv) {
    CLI::App app{"Hopf bifurcation stability analysis, adjoint derivatives and optimization"};
    app.require_subcommand(1);
    std::string config_path, out_dir;
    bool verbose = false;
    auto add = [&](const std::string& name, const std::string& help) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "JSON run configuration")->required();
        sub->add_option("--out", out_dir, "output directory (overrides output_dir)");
        sub->add_flag("--verbose", verbose, "progress on standard error");
        return sub;
    };
    CLI::App* analyze = add("analyze", "locate the Hopf point and its first Lyapunov coefficient");
    CLI::App* check = add("check-derivs", "compare adjoint gradients against finite differences");
    CLI::App* optimize = add("optimize", "stability-constrained design optimization");
    CLI::App* simulate = add("simulate", "time integration and LCO amplitude sweeps");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    Logger log{verbose, &std::cerr};
    RunConfig cfg;
    try {
        cfg = load_config(config_path);
    } catch (const Error& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    }
    const std::string dir = out_dir.empty() ? cfg.output_dir : out_dir;
    if (analyze->parsed()) return cmd_analyze(cfg, dir, log);
    if (check->parsed()) return cmd_check_derivs(cfg, dir, log);
    if (optimize->parsed()) return cmd_optimize(cfg, dir, log);
    if (simulate->parsed()) return cmd_simulate(cfg, dir, log);
    return kExitConfig;
}

} // namespace hopfstab::cli
