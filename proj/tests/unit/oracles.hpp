#pragma once

// Independent reference computations shared by the unit tests.

#include "hopfstab/dynsys.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <functional>

namespace oracle {

using hopfstab::CVec;
using hopfstab::Mat;
using hopfstab::Vec;

// Central-difference Jacobian of a vector function.
inline Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& u, double h = 1e-6) {
    const Vec f0 = f(u);
    Mat j(f0.size(), u.size());
    for (Eigen::Index k = 0; k < u.size(); ++k) {
        Vec up = u, um = u;
        up[k] += h;
        um[k] -= h;
        j.col(k) = (f(up) - f(um)) / (2.0 * h);
    }
    return j;
}

inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& u, double h = 1e-6) {
    Vec g(u.size());
    for (Eigen::Index k = 0; k < u.size(); ++k) {
        Vec up = u, um = u;
        up[k] += h;
        um[k] -= h;
        g[k] = (f(up) - f(um)) / (2.0 * h);
    }
    return g;
}

inline double max_rel(const Vec& a, const Vec& b, double floor = 1e-12) {
    double m = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a[i] - b[i]) / std::max(std::abs(b[i]), floor));
    return m;
}

// Algebraic model at its Hopf point (w = 0): mu, omega in closed form and f_lyp from a textbook
// normal-form evaluation with Eigen's eigenvectors (|q| = 1, p^H q = 1).
struct AlgebraicHopf {
    double mu, omega, f_lyp;
};

inline AlgebraicHopf algebraic_hopf(double x1, double x2) {
    AlgebraicHopf o;
    o.mu = 0.5 * (x1 + x2);
    const double d = 0.5 * (x2 - x1);
    o.omega = std::sqrt(1.0 - d * d);
    Mat a(2, 2);
    a << o.mu - x1, -1.0, 1.0, o.mu - x2;
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> er(a.cast<std::complex<double>>());
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> el(a.transpose().cast<std::complex<double>>());
    int ir = er.eigenvalues()[0].imag() > 0 ? 0 : 1;
    // p^H A = j omega p^H  <=>  A^T conj(p) = j omega conj(p)
    int il = el.eigenvalues()[0].imag() > 0 ? 0 : 1;
    CVec q = er.eigenvectors().col(ir).normalized();
    CVec p = el.eigenvectors().col(il).conjugate();
    p /= std::conj(p.dot(q));
    const double ca = 2.0 * x1 * x2 - 1.0, cb = 2.0 * x2 - 1.0;
    CVec c(2);
    c << 6.0 * ca * q[0] * q[0] * std::conj(q[0]), 6.0 * cb * q[1] * q[1] * std::conj(q[1]);
    o.f_lyp = p.dot(c).real() / (2.0 * o.omega);
    return o;
}

} // namespace oracle
