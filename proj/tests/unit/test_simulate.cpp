#include "hopfstab/concurrency.hpp"
#include "hopfstab/models.hpp"
#include "hopfstab/simulate.hpp"

#include <doctest.h>

#include <atomic>
#include <cmath>
#include <numbers>

using namespace hopfstab;

namespace {

DynSystem rotation() {
    DynSystem sys;
    sys.name = "rotation";
    sys.n = 2;
    sys.n_x = 1;
    sys.residual_eval = [](const Vec& w, double mu, const Vec&) {
        return (Vec(2) << mu * w[0] - w[1], w[0] + mu * w[1]).finished();
    };
    sys.jacobian_eval = [](const Vec&, double mu, const Vec&) {
        return (Mat(2, 2) << mu, -1.0, 1.0, mu).finished();
    };
    return sys;
}

// supercritical normal form: stable orbit of radius sqrt(mu); subcritical when sign = -1
DynSystem normal_form(double sign) {
    DynSystem sys;
    sys.name = "normal_form";
    sys.n = 2;
    sys.n_x = 1;
    sys.residual_eval = [sign](const Vec& w, double mu, const Vec&) {
        const double r2 = w.squaredNorm();
        const double g = mu - sign * r2 - (sign < 0 ? r2 * r2 : 0.0);
        return (Vec(2) << g * w[0] - w[1], w[0] + g * w[1]).finished();
    };
    return sys;
}

} // namespace

TEST_CASE("RK4 is fourth order") {
    const DynSystem sys = rotation();
    const Vec w0 = (Vec(2) << 1.0, 0.0).finished();
    const double T = 2.0 * std::numbers::pi;
    auto err = [&](double dt) {
        IntegrateOptions o;
        o.w_ref = Vec::Zero(2);
        o.blowup_factor = 1e6;
        const auto tr = integrate(sys, w0, -0.1, Vec::Zero(1), dt, T, o);
        const Vec exact = std::exp(-0.1 * T) * w0;
        return (tr.states.row(tr.states.rows() - 1).transpose() - exact).norm();
    };
    const double e1 = err(T / 50), e2 = err(T / 100);
    CHECK(e1 / e2 == doctest::Approx(16.0).epsilon(0.05));
}

TEST_CASE("neutral rotation conserves amplitude and is classified as an orbit") {
    const DynSystem sys = rotation();
    IntegrateOptions o;
    o.w_ref = Vec::Zero(2);
    const auto tr = integrate(sys, (Vec(2) << 0.1, 0.0).finished(), 0.0, Vec::Zero(1), 0.01, 100.0, o);
    CHECK(tr.classification.kind == TrajectoryClass::lco);
    CHECK(tr.classification.amplitude == doctest::Approx(0.1).epsilon(1e-6));
    CHECK(tr.times[0] == 0.0);
    CHECK(tr.times[tr.times.size() - 1] == doctest::Approx(100.0));
}

TEST_CASE("decay and blow-up classifications") {
    const DynSystem sys = rotation();
    IntegrateOptions o;
    o.w_ref = Vec::Zero(2);
    const Vec w0 = (Vec(2) << 1e-3, 0.0).finished();
    CHECK(integrate(sys, w0, -0.5, Vec::Zero(1), 0.01, 60.0, o).classification.kind ==
          TrajectoryClass::converged_to_equilibrium);
    const auto up = integrate(sys, w0, 0.5, Vec::Zero(1), 0.01, 60.0, o);
    CHECK(up.blew_up);
    CHECK(up.classification.kind == TrajectoryClass::diverged);
}

TEST_CASE("store stride thins the samples but keeps the last step") {
    const DynSystem sys = rotation();
    IntegrateOptions o;
    o.w_ref = Vec::Zero(2);
    o.store_stride = 7;
    const auto tr = integrate(sys, (Vec(2) << 0.1, 0.0).finished(), 0.0, Vec::Zero(1), 0.1, 10.0, o);
    CHECK(tr.times[tr.times.size() - 1] == doctest::Approx(10.0));
    CHECK(tr.times.size() < 20);
}

TEST_CASE("default time step respects the stiff limit") {
    const DynSystem cgl = make_cgl_model();
    const Vec x = cgl_baseline();
    const double dt = default_time_step(cgl, Vec::Zero(cgl.n), 0.1, x, 1.0);
    const Mat a = jacobian(cgl, Vec::Zero(cgl.n), 0.1, x);
    CHECK(dt <= 2.0 / a.eigenvalues().cwiseAbs().maxCoeff() + 1e-15);
    CHECK(default_time_step(rotation(), Vec::Zero(2), 0.0, Vec::Zero(1), 1.0) ==
          doctest::Approx(2.0 * std::numbers::pi / 200));
}

TEST_CASE("supercritical sweep recovers the square-root branch") {
    const DynSystem sys = normal_form(1.0);
    const HopfPoint hp = locate_hopf(sys, Vec::Zero(1), 0.1, Vec::Zero(2));
    const auto pts = lco_amplitude_sweep(sys, Vec::Zero(1), hp, {-0.02, 0.01, 0.04}, 1e-3, 1e-2);
    REQUIRE(pts.size() == 3);
    CHECK(pts[0].flag != BranchFlag::stable);
    CHECK(pts[1].flag == BranchFlag::stable);
    CHECK(pts[2].flag == BranchFlag::stable);
    // |w|_inf on the circle of radius sqrt(mu)
    CHECK(pts[1].amplitude == doctest::Approx(0.1).epsilon(0.02));
    CHECK(pts[2].amplitude == doctest::Approx(0.2).epsilon(0.02));
    const auto slope = branch_slope(pts, hp.right.mu, BranchFlag::stable, false);
    REQUIRE(slope);
    CHECK(*slope == doctest::Approx(0.5).epsilon(0.05));
    CHECK(sweep_orientation(pts, hp.right.mu) == Stability::stable);
}

TEST_CASE("subcritical sweep finds the unstable branch below onset") {
    const DynSystem sys = normal_form(-1.0);
    const HopfPoint hp = locate_hopf(sys, Vec::Zero(1), 0.1, Vec::Zero(2));
    CHECK(hp.lyapunov.classification == Stability::unstable);
    const auto pts = lco_amplitude_sweep(sys, Vec::Zero(1), hp, {-0.04, -0.01, 0.02}, 1e-3, 1e-3);
    CHECK(pts[0].flag == BranchFlag::unstable);
    CHECK(pts[1].flag == BranchFlag::unstable);
    // r^2 + r^4 = -mu
    CHECK(pts[1].amplitude == doctest::Approx(std::sqrt((std::sqrt(1.0 + 0.04) - 1.0) / 2.0)).epsilon(0.02));
    CHECK(sweep_orientation(pts, hp.right.mu) == Stability::unstable);
}

TEST_CASE("orientation rejects far branches that do not shrink toward onset") {
    std::vector<SweepPoint> pts{{-0.05, 0.6, BranchFlag::unstable}, {-0.02, 0.59, BranchFlag::unstable},
                                {0.02, 0.1, BranchFlag::stable}, {0.05, 0.158, BranchFlag::stable}};
    CHECK(sweep_orientation(pts, 0.0) == Stability::stable);
    pts[2].flag = pts[3].flag = BranchFlag::diverged;
    CHECK(sweep_orientation(pts, 0.0) == Stability::indeterminate);
}

TEST_CASE("parallel_for visits every index once and rethrows") {
    std::vector<std::atomic<int>> hits(50);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; });
    for (auto& h : hits) CHECK(h.load() == 1);
    CHECK_THROWS_AS(parallel_for(5, [](std::size_t i) { if (i == 3) throw std::runtime_error("x"); }),
                    std::runtime_error);
    CHECK(thread_budget() >= 1);
}
