#include "hopfstab/simulate.hpp"
#include "hopfstab/concurrency.hpp"
#include "hopfstab/equilibrium.hpp"
#include "hopfstab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace hopfstab {

std::string to_string(TrajectoryClass c) {
    switch (c) {
    case TrajectoryClass::converged_to_equilibrium: return "converged_to_equilibrium";
    case TrajectoryClass::diverged: return "diverged";
    case TrajectoryClass::lco: return "lco";
    }
    return "unknown";
}

std::string to_string(BranchFlag f) {
    switch (f) {
    case BranchFlag::stable: return "stable";
    case BranchFlag::unstable: return "unstable";
    case BranchFlag::diverged: return "diverged";
    case BranchFlag::unsettled: return "unsettled";
    case BranchFlag::no_bracket: return "no_bracket";
    }
    return "unknown";
}

Trajectory integrate(const DynSystem& sys, const Vec& w0, double mu, const Vec& x, double dt,
                     double t_end, const IntegrateOptions& opts) {
    if (!(dt > 0.0)) throw InputError("integrate: dt must be positive");
    if (!(t_end > 0.0)) throw InputError("integrate: t_end must be positive");
    if (w0.size() != sys.n) throw InputError("integrate: w0 length");
    if (opts.store_stride < 1) throw InputError("integrate: store_stride must be >= 1");

    Vec w_ref;
    if (opts.w_ref) {
        w_ref = *opts.w_ref;
    } else {
        auto eq = solve_equilibrium(sys, mu, x, w0);
        if (!eq.converged) throw SolverError("integrate: equilibrium did not converge");
        w_ref = eq.w_eq;
    }
    const double pert = (w0 - w_ref).lpNorm<Eigen::Infinity>();
    const double radius = opts.blowup_factor * (pert > 0.0 ? pert : 1.0);

    const long steps = static_cast<long>(std::ceil(t_end / dt - 1e-9));
    const long stored = steps / opts.store_stride + 2;
    Trajectory tr;
    tr.dt = dt;
    tr.times.resize(stored);
    tr.states.resize(stored, sys.n);
    long k = 0;
    tr.times[k] = 0.0;
    tr.states.row(k++) = w0.transpose();

    // raw evaluator in the loop: residual() re-validates dimensions on every stage
    const auto& f = sys.residual_eval;
    Vec w = w0;
    for (long s = 1; s <= steps; ++s) {
        const Vec k1 = f(w, mu, x);
        const Vec k2 = f(w + 0.5 * dt * k1, mu, x);
        const Vec k3 = f(w + 0.5 * dt * k2, mu, x);
        const Vec k4 = f(w + dt * k3, mu, x);
        w += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        const double dev = (w - w_ref).lpNorm<Eigen::Infinity>();
        const bool bad = !w.allFinite() || !(dev <= radius);
        if (bad || s % opts.store_stride == 0 || s == steps) {
            tr.times[k] = static_cast<double>(s) * dt;
            tr.states.row(k++) = w.transpose();
        }
        if (bad) {
            tr.blew_up = true;
            break;
        }
    }
    tr.times.conservativeResize(k);
    tr.states.conservativeResize(k, Eigen::NoChange);

    const double tol = opts.tol_conv > 0.0 ? opts.tol_conv : 1e-6 * (pert > 0.0 ? pert : 1.0);
    const double window = opts.window > 0.0 ? opts.window : 0.1 * t_end;
    tr.classification = classify_trajectory(tr, w_ref, tol, window);
    return tr;
}

Classification classify_trajectory(const Trajectory& traj, const Vec& w_eq, double tol_conv,
                                   double window) {
    Classification c;
    if (traj.blew_up) {
        c.kind = TrajectoryClass::diverged;
        return c;
    }
    const Eigen::Index m = traj.times.size();
    if (m < 2) throw InputError("classify_trajectory: trajectory too short");
    const double t_last = traj.times[m - 1];
    if (!(window > 0.0) || window >= t_last)
        throw InputError("classify_trajectory: window must be shorter than the trajectory");
    const double amp = window_amplitude(traj, w_eq, t_last - window, t_last);
    if (amp <= tol_conv) {
        c.kind = TrajectoryClass::converged_to_equilibrium;
    } else {
        c.kind = TrajectoryClass::lco;
        c.amplitude = amp;
    }
    return c;
}

double window_amplitude(const Trajectory& traj, const Vec& w_eq, double t0, double t1) {
    double amp = 0.0;
    for (Eigen::Index i = traj.times.size() - 1; i >= 0 && traj.times[i] >= t0; --i)
        if (traj.times[i] <= t1)
            amp = std::max(amp, (traj.states.row(i).transpose() - w_eq).lpNorm<Eigen::Infinity>());
    return amp;
}

double default_time_step(const DynSystem& sys, const Vec& w_eq, double mu, const Vec& x,
                         double omega, int steps_per_period) {
    if (!(omega > 0.0)) throw InputError("default_time_step: omega must be positive");
    const double dt = 2.0 * std::numbers::pi / omega / steps_per_period;
    Eigen::EigenSolver<Mat> es(jacobian(sys, w_eq, mu, x), false);
    const double rho = es.eigenvalues().cwiseAbs().maxCoeff();
    return rho > 0.0 ? std::min(dt, 2.0 / rho) : dt;
}

namespace {

struct SweepContext {
    const DynSystem& sys;
    const Vec& x;
    Vec direction; // Re(q) scaled to unit infinity norm
    double period = 0.0;
    const SweepOptions& opts;
};

enum class SeedFate { decays, settles, grows, diverges };

struct SeedRun {
    SeedFate fate = SeedFate::decays;
    double amplitude = 0.0;
};

SeedRun run_seed(const SweepContext& c, const Vec& w_eq, double mu, double dt, double t_end,
                 double amp) {
    IntegrateOptions io;
    io.w_ref = w_eq;
    const double window = c.opts.window_periods * c.period;
    io.window = window;
    const int per_period = static_cast<int>(std::ceil(c.period / dt));
    io.store_stride = std::max(1, per_period / std::max(1, c.opts.samples_per_period));
    const auto tr = integrate(c.sys, w_eq + amp * c.direction, mu, c.x, dt, t_end, io);
    SeedRun r;
    if (tr.classification.kind == TrajectoryClass::diverged) {
        r.fate = SeedFate::diverges;
        return r;
    }
    if (tr.classification.kind == TrajectoryClass::converged_to_equilibrium) return r;
    const double t1 = tr.times[tr.times.size() - 1];
    const double last = tr.classification.amplitude;
    const double prev = window_amplitude(tr, w_eq, t1 - 2.0 * window, t1 - window);
    r.amplitude = last;
    if (last < 0.99 * prev)
        r.fate = SeedFate::decays;
    else if (last <= 1.01 * prev)
        r.fate = SeedFate::settles;
    else
        r.fate = SeedFate::grows;
    return r;
}

// real part of the eigenvalue nearest j omega
double critical_rate(const Mat& a, double omega) {
    Eigen::EigenSolver<Mat> es(a, false);
    const auto& ev = es.eigenvalues();
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < ev.size(); ++i)
        if (std::abs(ev[i] - cd(0.0, omega)) < std::abs(ev[best] - cd(0.0, omega))) best = i;
    return ev[best].real();
}

SweepPoint sweep_one(const SweepContext& c, const HopfPoint& hp, double mu, double amp_seed,
                     double bisect_tol) {
    SweepPoint pt;
    pt.mu = mu;
    pt.amplitude = std::numeric_limits<double>::quiet_NaN();
    auto eq = solve_equilibrium(c.sys, mu, c.x, hp.right.w_eq);
    if (!eq.converged) return pt;
    const double dt =
        default_time_step(c.sys, eq.w_eq, mu, c.x, hp.right.omega, c.opts.steps_per_period);
    const double rate = std::abs(critical_rate(jacobian(c.sys, eq.w_eq, mu, c.x), hp.right.omega));
    double periods = c.opts.periods;
    if (rate > 0.0) periods = std::max(periods, c.opts.growth_efolds / (rate * c.period));
    periods = std::min(periods, c.opts.max_periods);
    const double t_end = periods * c.period;

    const SeedRun first = run_seed(c, eq.w_eq, mu, dt, t_end, amp_seed);
    switch (first.fate) {
    case SeedFate::settles:
        pt.flag = BranchFlag::stable;
        pt.amplitude = first.amplitude;
        return pt;
    case SeedFate::grows: pt.flag = BranchFlag::unsettled; return pt;
    case SeedFate::diverges: pt.flag = BranchFlag::diverged; return pt;
    case SeedFate::decays: break;
    }
    double lo = amp_seed, hi = 0.0;
    for (double a = 2.0 * amp_seed; a <= c.opts.max_seed_factor * amp_seed; a *= 2.0) {
        if (run_seed(c, eq.w_eq, mu, dt, t_end, a).fate != SeedFate::decays) {
            hi = a;
            break;
        }
        lo = a;
    }
    if (hi == 0.0) return pt; // no_bracket
    while ((hi - lo) > bisect_tol * hi) {
        const double mid = 0.5 * (lo + hi);
        if (run_seed(c, eq.w_eq, mu, dt, t_end, mid).fate == SeedFate::decays)
            lo = mid;
        else
            hi = mid;
    }
    pt.flag = BranchFlag::unstable;
    pt.amplitude = 0.5 * (lo + hi);
    return pt;
}

} // namespace

std::vector<SweepPoint> lco_amplitude_sweep(const DynSystem& sys, const Vec& x,
                                            const HopfPoint& hp,
                                            const std::vector<double>& mu_values, double amp_seed,
                                            double bisect_tol, const SweepOptions& opts) {
    if (!(amp_seed > 0.0)) throw InputError("lco_amplitude_sweep: amp_seed must be positive");
    if (!(bisect_tol > 0.0 && bisect_tol < 1.0))
        throw InputError("lco_amplitude_sweep: bisect_tol must lie in (0, 1)");
    if (mu_values.empty()) throw InputError("lco_amplitude_sweep: no mu values");
    const Vec qr = hp.right.q_r;
    const double scale = qr.lpNorm<Eigen::Infinity>();
    if (!(scale > 0.0)) throw InputError("lco_amplitude_sweep: Re(q) vanishes");
    SweepContext ctx{sys, x, qr / scale, 2.0 * std::numbers::pi / hp.right.omega, opts};

    std::vector<SweepPoint> out(mu_values.size());
    parallel_for(mu_values.size(), [&](std::size_t i) {
        out[i] = sweep_one(ctx, hp, mu_values[i], amp_seed, bisect_tol);
    });
    return out;
}

std::optional<double> branch_slope(const std::vector<SweepPoint>& sweep, double mu_bif,
                                   BranchFlag flag, bool below) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& p : sweep) {
        if (p.flag != flag || !(p.amplitude > 0.0) || (p.mu < mu_bif) != below || p.mu == mu_bif)
            continue;
        pts.emplace_back(std::log(std::abs(p.mu - mu_bif)), std::log(p.amplitude));
    }
    if (pts.size() < 2) return std::nullopt;
    double mx = 0.0, my = 0.0;
    for (auto [a, b] : pts) {
        mx += a;
        my += b;
    }
    mx /= static_cast<double>(pts.size());
    my /= static_cast<double>(pts.size());
    double sxx = 0.0, sxy = 0.0;
    for (auto [a, b] : pts) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    if (!(sxx > 0.0)) return std::nullopt;
    return sxy / sxx;
}

Stability sweep_orientation(const std::vector<SweepPoint>& sweep, double mu_bif) {
    auto local = [](std::optional<double> s) { return s && *s >= 0.25 && *s <= 1.0; };
    if (local(branch_slope(sweep, mu_bif, BranchFlag::unstable, true))) return Stability::unstable;
    if (local(branch_slope(sweep, mu_bif, BranchFlag::stable, false))) return Stability::stable;
    return Stability::indeterminate;
}

} // namespace hopfstab
