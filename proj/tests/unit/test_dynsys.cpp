#include "oracles.hpp"

#include "hopfstab/errors.hpp"
#include "hopfstab/models.hpp"

#include <doctest.h>

using namespace hopfstab;

TEST_CASE("analytic Jacobians agree with differences of the residual") {
    for (const DynSystem& sys : {make_algebraic_model(), make_typical_section(), make_cgl_model()}) {
        CAPTURE(sys.name);
        const Vec w = Vec::LinSpaced(sys.n, -0.3, 0.4);
        const double mu = 0.37;
        const Vec x = sys.name == "algebraic" ? algebraic_baseline()
                      : sys.name == "typical_section" ? typical_section_baseline()
                                                      : cgl_baseline();
        const Mat a = jacobian(sys, w, mu, x);
        const Mat fd = oracle::fd_jacobian([&](const Vec& v) { return residual(sys, v, mu, x); }, w);
        CHECK((a - fd).lpNorm<Eigen::Infinity>() < 1e-6 * (1.0 + a.lpNorm<Eigen::Infinity>()));

        const Mat gx = x_partial(sys, w, mu, x);
        const Mat fx = oracle::fd_jacobian([&](const Vec& v) { return residual(sys, w, mu, v); }, x);
        CHECK((gx - fx).lpNorm<Eigen::Infinity>() < 1e-6);

        const Vec gm = mu_partial(sys, w, mu, x);
        const Vec fm = (residual(sys, w, mu + 1e-6, x) - residual(sys, w, mu - 1e-6, x)) / 2e-6;
        CHECK((gm - fm).lpNorm<Eigen::Infinity>() < 1e-6);
    }
}

TEST_CASE("analytic tensors match finite-difference tensors") {
    const DynSystem sys = make_typical_section();
    const Vec x = typical_section_baseline();
    const Vec w = (Vec(4) << 0.01, 0.2, -0.1, 0.05).finished();
    const Vec y1 = (Vec(4) << 0.3, -0.7, 0.2, 0.1).finished();
    const Vec y2 = (Vec(4) << -0.1, 0.4, 0.6, -0.2).finished();
    const Vec y3 = (Vec(4) << 0.5, 0.1, -0.3, 0.8).finished();
    const double mu = 0.75;
    CHECK((bilinear(sys, y1, y2, w, mu, x) - fd_bilinear(sys, y1, y2, w, mu, x, {1e-4, 1e-2}))
              .lpNorm<Eigen::Infinity>() < 1e-5);
    CHECK((trilinear(sys, y1, y2, y3, w, mu, x) -
           fd_trilinear(sys, y1, y2, y3, w, mu, x, {1e-4, 1e-3}))
              .lpNorm<Eigen::Infinity>() < 1e-4);
}

TEST_CASE("tensors are symmetric and multilinear") {
    const DynSystem sys = make_cgl_model();
    const Vec x = cgl_baseline();
    const Vec w = Vec::Constant(sys.n, 0.1);
    Vec y1 = Vec::LinSpaced(sys.n, -1.0, 1.0), y2 = Vec::LinSpaced(sys.n, 0.5, -0.2);
    const Vec b12 = bilinear(sys, y1, y2, w, 0.2, x);
    const Vec b21 = bilinear(sys, y2, y1, w, 0.2, x);
    CHECK((b12 - b21).lpNorm<Eigen::Infinity>() < 1e-6 * (1.0 + b12.lpNorm<Eigen::Infinity>()));
    const Vec b_scaled = bilinear(sys, y1, 3.0 * y2, w, 0.2, x);
    CHECK((b_scaled - 3.0 * b12).lpNorm<Eigen::Infinity>() < 1e-9 * (1.0 + b12.lpNorm<Eigen::Infinity>()));
}

TEST_CASE("finite-difference bilinear error is second order in eps_b") {
    const DynSystem sys = make_typical_section();
    const Vec x = typical_section_baseline();
    const Vec w = (Vec(4) << 0.0, 0.3, 0.0, 0.0).finished();
    const Vec y = (Vec(4) << 0.0, 1.0, 0.0, 0.0).finished();
    const Vec exact = bilinear(sys, y, y, w, 0.7, x);
    const double e1 = (fd_bilinear(sys, y, y, w, 0.7, x, {1e-1, 1e-2}) - exact).norm();
    const double e2 = (fd_bilinear(sys, y, y, w, 0.7, x, {5e-2, 1e-2}) - exact).norm();
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("one b and c finite-difference pair costs six Jacobian calls") {
    const DynSystem sys = make_cgl_model();
    const Vec x = cgl_baseline();
    const Vec w = Vec::Zero(sys.n);
    const Vec y = Vec::Ones(sys.n);
    sys.reset_jacobian_count();
    bilinear(sys, y, y, w, 0.1, x);
    trilinear(sys, y, y, y, w, 0.1, x);
    CHECK(sys.jacobian_count() == 6);
}

TEST_CASE("dimension mismatches and non-finite evaluations are rejected") {
    const DynSystem sys = make_algebraic_model();
    CHECK_THROWS_AS(residual(sys, Vec::Zero(3), 0.1, algebraic_baseline()), InputError);
    CHECK_THROWS_AS(residual(sys, Vec::Zero(2), 0.1, Vec::Zero(5)), InputError);
    DynSystem bad = sys;
    bad.residual_eval = [](const Vec&, double, const Vec&) {
        return Vec::Constant(2, std::numeric_limits<double>::quiet_NaN()).eval();
    };
    CHECK_THROWS_AS(residual(bad, Vec::Zero(2), 0.1, algebraic_baseline()), EvaluationError);
    DynSystem empty;
    CHECK_THROWS_AS(validate(empty), ConfigurationError);
}

TEST_CASE("missing Jacobian falls back to differences") {
    DynSystem sys = make_algebraic_model();
    const Vec x = algebraic_baseline();
    const Vec w = (Vec(2) << 0.3, -0.2).finished();
    const Mat exact = jacobian(sys, w, 0.4, x);
    sys.jacobian_eval = nullptr;
    CHECK((jacobian(sys, w, 0.4, x) - exact).lpNorm<Eigen::Infinity>() < 1e-7);
}
