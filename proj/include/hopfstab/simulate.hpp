#pragma once

#include "hopfstab/pipeline.hpp"

#include <optional>
#include <string>
#include <vector>

namespace hopfstab {

enum class TrajectoryClass { converged_to_equilibrium, diverged, lco };
std::string to_string(TrajectoryClass c);

struct Classification {
    TrajectoryClass kind = TrajectoryClass::lco;
    double amplitude = 0.0; // max |w - w_eq|_inf over the final window (lco only)
};

struct Trajectory {
    Vec times;  // stored sample times
    Mat states; // one row per stored sample
    double dt = 0.0;
    bool blew_up = false;
    Classification classification;
};

struct IntegrateOptions {
    std::optional<Vec> w_ref;   // equilibrium; solved from w0 when absent
    double blowup_factor = 1e3; // radius = factor * |w0 - w_ref|_inf (factor itself if that is 0)
    int store_stride = 1;       // keep every k-th step (the last step is always kept)
    double tol_conv = -1.0;     // <= 0: 1e-6 * initial perturbation
    double window = -1.0;       // <= 0: last 10% of the run
};

// Classical fixed-step RK4. The result is classified with classify_trajectory.
Trajectory integrate(const DynSystem& sys, const Vec& w0, double mu, const Vec& x, double dt,
                     double t_end, const IntegrateOptions& opts = {});

Classification classify_trajectory(const Trajectory& traj, const Vec& w_eq, double tol_conv,
                                   double window);

// min(T/steps_per_period, 2/rho(A)) with T = 2 pi / omega; the second bound keeps RK4 stable on
// stiff spectra (diffusion).
double default_time_step(const DynSystem& sys, const Vec& w_eq, double mu, const Vec& x,
                         double omega, int steps_per_period = 200);

enum class BranchFlag { stable, unstable, diverged, unsettled, no_bracket };
std::string to_string(BranchFlag f);

struct SweepPoint {
    double mu = 0.0;
    double amplitude = 0.0; // NaN when the flag carries no amplitude
    BranchFlag flag = BranchFlag::no_bracket;
};

struct SweepOptions {
    double periods = 300.0;     // lower bound; slow modes get growth_efolds / |Re lambda|
    double growth_efolds = 30.0;
    double max_periods = 6000.0;
    double window_periods = 20.0;
    int steps_per_period = 200;
    double max_seed_factor = 1024.0; // bracket search doubles the seed up to this multiple
    int samples_per_period = 100;
};

// Max |w - w_eq|_inf over stored samples with t0 <= t <= t1.
double window_amplitude(const Trajectory& traj, const Vec& w_eq, double t0, double t1);

// For each mu: a small seed along Re(q) that settles on an orbit (final two windows within 1%)
// gives a stable LCO; a seed that decays (below tolerance, or shrinking between the two windows)
// starts a doubling search for a non-decaying seed, then bisection on the seed amplitude until the
// bracket is within bisect_tol (relative) locates the unstable LCO. mu values are processed in
// parallel.
std::vector<SweepPoint> lco_amplitude_sweep(const DynSystem& sys, const Vec& x,
                                            const HopfPoint& hp,
                                            const std::vector<double>& mu_values, double amp_seed,
                                            double bisect_tol, const SweepOptions& opts = {});

// Least-squares slope of log(amplitude) against log|mu - mu_bif| over the points with the given
// flag on one side of onset; empty with fewer than two such points.
std::optional<double> branch_slope(const std::vector<SweepPoint>& sweep, double mu_bif,
                                   BranchFlag flag, bool below);

// A branch counts as born at the Hopf point when its slope lies in [0.25, 1] (normal form: 0.5);
// far basin boundaries and outer orbits do not shrink with mu - mu_bif.
// unstable: such an unstable branch below onset (subcritical); stable: such a stable branch above
// onset and none below (supercritical); indeterminate otherwise.
Stability sweep_orientation(const std::vector<SweepPoint>& sweep, double mu_bif);

} // namespace hopfstab
