#include "hopfstab/qp.hpp"

#include <doctest.h>

using namespace hopfstab;

TEST_CASE("QP with one active inequality") {
    // min (z1-1)^2 + (z2-2)^2 s.t. z1 + z2 <= 1  ->  z = (0, 1), lambda = 2
    const Mat H = 2.0 * Mat::Identity(2, 2);
    const Vec c = (Vec(2) << -2.0, -4.0).finished();
    const Mat G = (Mat(1, 2) << 1.0, 1.0).finished();
    const Vec h = Vec::Constant(1, 1.0);
    const auto r = solve_qp(H, c, G, h);
    REQUIRE(r.converged);
    CHECK(r.z[0] == doctest::Approx(0.0).epsilon(1e-8));
    CHECK(r.z[1] == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(r.lambda[0] == doctest::Approx(2.0).epsilon(1e-7));
}

TEST_CASE("QP with inactive bounds returns the unconstrained minimiser") {
    const Mat H = (Mat(2, 2) << 4.0, 1.0, 1.0, 3.0).finished();
    const Vec c = (Vec(2) << 1.0, -2.0).finished();
    Mat G(4, 2);
    G << 1, 0, 0, 1, -1, 0, 0, -1;
    const Vec h = Vec::Constant(4, 10.0);
    const auto r = solve_qp(H, c, G, h);
    REQUIRE(r.converged);
    const Vec z = H.ldlt().solve(-c);
    CHECK((r.z - z).norm() < 1e-8);
    CHECK(r.lambda.maxCoeff() < 1e-8);
}

TEST_CASE("LP-like QP with a large objective scale") {
    // min 1e7 t + 0.5 z^2 - z  s.t.  z - t <= -1, t >= 0
    Mat H = Mat::Zero(2, 2);
    H(0, 0) = 1.0;
    const Vec c = (Vec(2) << -1.0, 1e7).finished();
    Mat G(2, 2);
    G << 1, -1, 0, -1;
    const Vec h = (Vec(2) << -1.0, 0.0).finished();
    const auto r = solve_qp(H, c, G, h);
    REQUIRE(r.converged);
    // tolerances are relative to |c| = 1e7
    CHECK(r.z[0] - r.z[1] <= -1.0 + 1e-9);
    CHECK(std::abs(r.z[1]) < 1e-6);
    const double obj = 0.5 * r.z[0] * r.z[0] - r.z[0] + 1e7 * r.z[1];
    CHECK(obj - 1.5 <= 1e-9 * 1e7);
    CHECK(r.z[0] == doctest::Approx(-1.0).epsilon(1e-2));
}
