#include "oracles.hpp"

#include "hopfstab/adjoint.hpp"
#include "hopfstab/models.hpp"

#include <doctest.h>

using namespace hopfstab;

namespace {

struct Case {
    DynSystem sys;
    Vec x;
    double mu0;
};

std::vector<Case> cases() {
    return {{make_algebraic_model(), (Vec(2) << 0.2, 0.7).finished(), 0.5},
            {make_typical_section(), typical_section_baseline(), kTypicalSectionMuSeed},
            {make_cgl_model(), cgl_baseline(), 0.1}};
}

} // namespace

TEST_CASE("Lyapunov partials match differences of first_lyapunov") {
    for (const auto& c : cases()) {
        if (c.sys.tensor_mode != TensorMode::analytic) continue;
        CAPTURE(c.sys.name);
        const HopfPoint hp = locate_hopf(c.sys, c.x, c.mu0, Vec::Zero(c.sys.n));
        const auto lp = lyapunov_partials(c.sys, hp.right, hp.left, c.x, &hp.lyapunov);
        const int n = c.sys.n;
        // state vector [x, w, q_r, q_i, p_r, p_i, mu, omega]
        Vec s(c.x.size() + 5 * n + 2);
        s << c.x, hp.right.w_eq, hp.right.q_r, hp.right.q_i, hp.left.p_r, hp.left.p_i, hp.right.mu,
            hp.right.omega;
        auto f = [&](const Vec& v) {
            Eigen::Index o = 0;
            const Vec x = v.segment(o, c.x.size());
            o += c.x.size();
            HopfRightState r = hp.right;
            HopfLeftState l = hp.left;
            r.w_eq = v.segment(o, n), o += n;
            r.q_r = v.segment(o, n), o += n;
            r.q_i = v.segment(o, n), o += n;
            l.p_r = v.segment(o, n), o += n;
            l.p_i = v.segment(o, n), o += n;
            r.mu = v[o];
            r.omega = v[o + 1];
            return first_lyapunov(c.sys, r, l, x).f_lyp;
        };
        const Vec fd = oracle::fd_gradient(f, s, 1e-6);
        Vec adj(s.size());
        adj << lp.dl_dx, lp.dl_dw, lp.dl_dq.real(), lp.dl_dq.imag(), lp.dl_dp.real(), lp.dl_dp.imag(),
            lp.dl_dmu, lp.dl_domega;
        CHECK((adj - fd).lpNorm<Eigen::Infinity>() < 1e-7 * (1.0 + fd.lpNorm<Eigen::Infinity>()));
    }
}

TEST_CASE("total gradients agree with full-pipeline differences") {
    for (const auto& c : cases()) {
        CAPTURE(c.sys.name);
        const HopfPoint hp = locate_hopf(c.sys, c.x, c.mu0, Vec::Zero(c.sys.n));
        const double h = default_fd_step(c.sys);
        const double tol = c.sys.tensor_mode == TensorMode::analytic ? 1e-6 : 2e-3;
        for (GradientTarget t : {GradientTarget::lyapunov, GradientTarget::mu, GradientTarget::omega}) {
            const auto rep = total_gradient(c.sys, hp.right, hp.left, c.x, t, &hp.lyapunov);
            // tensor roundoff only affects the f_lyp target
            const Vec fd = fd_total_gradient(c.sys, c.x, t, t == GradientTarget::lyapunov ? h : 1e-6, hp);
            if (t == GradientTarget::omega) // entries ~1e-5 of omega; compare against the largest
                CHECK((rep.df_dx - fd).lpNorm<Eigen::Infinity>() < 1e-4 * fd.lpNorm<Eigen::Infinity>());
            else
                CHECK(max_relative_error(rep.df_dx, fd) < (t == GradientTarget::lyapunov ? tol : 1e-6));
        }
    }
}

TEST_CASE("bifurcation-parameter gradient on the algebraic model is [0.5, 0.5]") {
    const DynSystem sys = make_algebraic_model();
    const Vec x = (Vec(2) << 0.35, 0.8).finished();
    const HopfPoint hp = locate_hopf(sys, x, 0.5, Vec::Zero(2));
    const auto rep = total_gradient(sys, hp.right, hp.left, x, GradientTarget::mu);
    CHECK(rep.df_dx[0] == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(rep.df_dx[1] == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("adjoint solves are transposed EVP solves") {
    const DynSystem sys = make_typical_section();
    const Vec x = typical_section_baseline();
    const HopfPoint hp = locate_hopf(sys, x, kTypicalSectionMuSeed, Vec::Zero(4));
    const Vec rhs = Vec::LinSpaced(evp_size(4), -1.0, 1.0);
    const Vec psiL = adjoint_solve_left(sys, hp.left, hp.right, x, rhs);
    CHECK((jacobian_left(sys, hp.left, hp.right, x).transpose() * psiL - rhs).norm() < 1e-9);
    const Vec psiR = adjoint_solve_right(sys, hp.right, x, rhs, psiL, hp.left);
    const Vec lhs = jacobian_right(sys, hp.right, x).transpose() * psiR +
                    jacobian_left_cross(sys, hp.left, hp.right).transpose() * psiL;
    CHECK((lhs - rhs).norm() < 1e-9);
}

TEST_CASE("linear-solve count does not grow with the number of design variables") {
    auto count = [](const DynSystem& sys, const Vec& x, double mu0) {
        const HopfPoint hp = locate_hopf(sys, x, mu0, Vec::Zero(sys.n));
        SolveCounter::reset();
        total_gradient(sys, hp.right, hp.left, x, GradientTarget::lyapunov, &hp.lyapunov);
        return SolveCounter::snapshot();
    };
    std::map<long, long> expected_small{{2, 2}, {evp_size(2), 2}};
    for (int pad : {0, 10, 30}) {
        Vec x = Vec::Zero(2 + pad);
        x.head(2) << 0.2, 0.7;
        CHECK(count(make_algebraic_model(pad), x, 0.5) == expected_small);
    }
    const DynSystem cgl = make_cgl_model();
    std::map<long, long> expected_cgl{{cgl.n, 2}, {evp_size(cgl.n), 2}};
    CHECK(count(cgl, cgl_baseline(), 0.1) == expected_cgl);
}

TEST_CASE("relative error helper") {
    const Vec a = (Vec(2) << 1.0, 2.0).finished(), b = (Vec(2) << 1.0, 2.2).finished();
    CHECK(max_relative_error(a, b) == doctest::Approx(0.2 / 2.2));
    CHECK(max_relative_error(Vec::Zero(1), Vec::Zero(1)) == 0.0);
}
