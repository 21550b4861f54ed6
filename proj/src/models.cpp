#include "hopfstab/models.hpp"
#include "hopfstab/errors.hpp"

#include <cmath>
#include <numbers>
#include <algorithm>

namespace hopfstab {

// ---------------------------------------------------------------- algebraic

DynSystem make_algebraic_model(int extra_design_vars) {
    if (extra_design_vars < 0) throw InputError("make_algebraic_model: negative padding");
    DynSystem s;
    s.name = "algebraic";
    s.n = 2;
    s.n_x = 2 + extra_design_vars;
    s.tensor_mode = TensorMode::analytic;
    s.residual_eval = [](const Vec& w, double mu, const Vec& x) {
        const double ca = 2.0 * x[0] * x[1] - 1.0, cb = 2.0 * x[1] - 1.0;
        Vec r(2);
        r[0] = (mu - x[0]) * w[0] - w[1] + ca * w[0] * w[0] * w[0];
        r[1] = w[0] + (mu - x[1]) * w[1] + cb * w[1] * w[1] * w[1];
        return r;
    };
    s.jacobian_eval = [](const Vec& w, double mu, const Vec& x) {
        const double ca = 2.0 * x[0] * x[1] - 1.0, cb = 2.0 * x[1] - 1.0;
        Mat a(2, 2);
        a << mu - x[0] + 3.0 * ca * w[0] * w[0], -1.0, 1.0, mu - x[1] + 3.0 * cb * w[1] * w[1];
        return a;
    };
    s.bilinear_eval = [](const Vec& y, const Vec& z, const Vec& w, double, const Vec& x) {
        const double ca = 2.0 * x[0] * x[1] - 1.0, cb = 2.0 * x[1] - 1.0;
        Vec b(2);
        b << 6.0 * ca * w[0] * y[0] * z[0], 6.0 * cb * w[1] * y[1] * z[1];
        return b;
    };
    s.trilinear_eval = [](const Vec& y, const Vec& z, const Vec& v, const Vec&, double,
                          const Vec& x) {
        const double ca = 2.0 * x[0] * x[1] - 1.0, cb = 2.0 * x[1] - 1.0;
        Vec c(2);
        c << 6.0 * ca * y[0] * z[0] * v[0], 6.0 * cb * y[1] * z[1] * v[1];
        return c;
    };
    s.mu_partial_eval = [](const Vec& w, double, const Vec&) { return Vec(w); };
    s.x_partial_eval = [nx = s.n_x](const Vec& w, double, const Vec& x) {
        Mat g = Mat::Zero(2, nx);
        const double w0c = w[0] * w[0] * w[0], w1c = w[1] * w[1] * w[1];
        g(0, 0) = -w[0] + 2.0 * x[1] * w0c;
        g(0, 1) = 2.0 * x[0] * w0c;
        g(1, 1) = -w[1] + 2.0 * w1c;
        return g;
    };
    return s;
}

Vec algebraic_baseline() { return Vec::Constant(2, 1.0); }

// ---------------------------------------------------------------- typical section

namespace {

struct SectionMats {
    Eigen::Matrix2d T; // M^{-1}
    Eigen::Matrix2d K, D, MA0, K0, D0;
};

SectionMats section_mats(const TypicalSectionParams& p, double mu, double m) {
    if (!(m > 0.0)) throw InputError("typical section: m_bar must be positive");
    SectionMats s;
    const double a = p.a;
    Eigen::Matrix2d ms;
    ms << 1.0, p.x_alpha, p.x_alpha, p.r_alpha * p.r_alpha;
    s.MA0 << 1.0, -a, -a, 0.125 + a * a;
    Eigen::Matrix2d ks;
    ks << p.Omega * p.Omega, 0.0, 0.0, p.r_alpha * p.r_alpha;
    s.K0 << 0.0, 1.0, 0.0, -(0.5 + a);
    s.D0 << 1.0, 1.0 - a, -(0.5 + a), a * (a - 0.5);
    Eigen::Matrix2d mm = ms + s.MA0 / m;
    const double det = mm.determinant();
    if (std::abs(det) < 1e-14) throw InputError("typical section: mass matrix is singular");
    s.T << mm(1, 1), -mm(0, 1), -mm(1, 0), mm(0, 0);
    s.T /= det;
    s.K = ks + (2.0 * mu * mu / m) * s.K0;
    s.D = (2.0 * mu / m) * s.D0;
    return s;
}

} // namespace

DynSystem make_typical_section(const TypicalSectionParams& p) {
    section_mats(p, 1.0, p.m_bar);
    DynSystem s;
    s.name = "typical_section";
    s.n = 4;
    s.n_x = 2;
    s.tensor_mode = TensorMode::analytic;
    const double ra2 = p.r_alpha * p.r_alpha;
    const double k5 = p.kappa5;

    s.residual_eval = [p, ra2, k5](const Vec& w, double mu, const Vec& x) {
        SectionMats m = section_mats(p, mu, x[0]);
        const double al = w[1];
        Eigen::Vector2d f(0.0, ra2 * (x[1] * std::pow(al, 3) + k5 * std::pow(al, 5)));
        Eigen::Vector2d sv = m.K * w.head<2>() + m.D * w.tail<2>() + f;
        Vec r(4);
        r.head<2>() = w.tail<2>();
        r.tail<2>() = -m.T * sv;
        return r;
    };
    s.jacobian_eval = [p, ra2, k5](const Vec& w, double mu, const Vec& x) {
        SectionMats m = section_mats(p, mu, x[0]);
        const double al = w[1];
        Mat a = Mat::Zero(4, 4);
        a.block<2, 2>(0, 2).setIdentity();
        a.block<2, 2>(2, 0) = -m.T * m.K;
        a.block<2, 2>(2, 2) = -m.T * m.D;
        a.block<2, 1>(2, 1) -=
            m.T.col(1) * ra2 * (3.0 * x[1] * al * al + 5.0 * k5 * std::pow(al, 4));
        return a;
    };
    s.bilinear_eval = [p, ra2, k5](const Vec& y, const Vec& z, const Vec& w, double mu,
                                   const Vec& x) {
        SectionMats m = section_mats(p, mu, x[0]);
        const double al = w[1];
        Vec b = Vec::Zero(4);
        b.tail<2>() = -m.T.col(1) * ra2 * (6.0 * x[1] * al + 20.0 * k5 * std::pow(al, 3)) * y[1] *
                      z[1];
        return b;
    };
    s.trilinear_eval = [p, ra2, k5](const Vec& y, const Vec& z, const Vec& v, const Vec& w,
                                    double mu, const Vec& x) {
        SectionMats m = section_mats(p, mu, x[0]);
        const double al = w[1];
        Vec c = Vec::Zero(4);
        c.tail<2>() = -m.T.col(1) * ra2 * (6.0 * x[1] + 60.0 * k5 * al * al) * y[1] * z[1] * v[1];
        return c;
    };
    s.mu_partial_eval = [p](const Vec& w, double mu, const Vec& x) {
        SectionMats m = section_mats(p, mu, x[0]);
        const double mb = x[0];
        Eigen::Vector2d ds = (4.0 * mu / mb) * m.K0 * w.head<2>() + (2.0 / mb) * m.D0 * w.tail<2>();
        Vec g = Vec::Zero(4);
        g.tail<2>() = -m.T * ds;
        return g;
    };
    s.x_partial_eval = [p, ra2, k5](const Vec& w, double mu, const Vec& x) {
        SectionMats m = section_mats(p, mu, x[0]);
        const double mb = x[0], al = w[1];
        Eigen::Vector2d f(0.0, ra2 * (x[1] * std::pow(al, 3) + k5 * std::pow(al, 5)));
        Eigen::Vector2d sv = m.K * w.head<2>() + m.D * w.tail<2>() + f;
        Eigen::Vector2d dsdm = -(2.0 * mu * mu / (mb * mb)) * m.K0 * w.head<2>() -
                               (2.0 * mu / (mb * mb)) * m.D0 * w.tail<2>();
        Mat g = Mat::Zero(4, 2);
        // d(M^{-1})/dm = M^{-1} (M_A0 / m^2) M^{-1}
        g.block<2, 1>(2, 0) = -m.T * (m.MA0 / (mb * mb)) * (m.T * sv) - m.T * dsdm;
        g.block<2, 1>(2, 1) = -m.T.col(1) * ra2 * std::pow(al, 3);
        return g;
    };
    return s;
}

Vec typical_section_baseline(const TypicalSectionParams& p) {
    Vec x(2);
    x << p.m_bar, p.kappa3;
    return x;
}

// ---------------------------------------------------------------- Ginzburg-Landau

std::vector<double> cgl_grid(const CGLConfig& cfg) {
    const double h = cgl_spacing(cfg);
    std::vector<double> xi(static_cast<std::size_t>(cfg.grid_points));
    for (int i = 0; i < cfg.grid_points; ++i) xi[i] = -std::numbers::pi + (i + 0.5) * h;
    return xi;
}

double cgl_spacing(const CGLConfig& cfg) { return 2.0 * std::numbers::pi / cfg.grid_points; }

Vec cgl_baseline(const CGLConfig& cfg) {
    auto xi = cgl_grid(cfg);
    Vec c(cfg.grid_points);
    for (int i = 0; i < cfg.grid_points; ++i)
        c[i] = std::clamp(-std::tan(xi[i]), cfg.c3_lower, cfg.c3_upper);
    return c;
}

Mat cgl_laplacian(const CGLConfig& cfg) {
    const int N = cfg.grid_points;
    const double h2 = std::pow(cgl_spacing(cfg), 2);
    Mat l = Mat::Zero(N, N);
    for (int i = 0; i < N; ++i) {
        // ghost values mirror the boundary cell
        const int im = i == 0 ? 0 : i - 1;
        const int ip = i == N - 1 ? N - 1 : i + 1;
        l(i, im) += 1.0 / h2;
        l(i, ip) += 1.0 / h2;
        l(i, i) -= 2.0 / h2;
    }
    return l;
}

DynSystem make_cgl_model(const CGLConfig& cfg) {
    if (cfg.grid_points < 4) throw InputError("make_cgl_model: need at least 4 grid points");
    const int N = cfg.grid_points;
    auto xi = cgl_grid(cfg);
    Vec c5(N), fr(N);
    for (int i = 0; i < N; ++i) {
        c5[i] = std::tanh(xi[i]);
        fr[i] = 0.5 * std::exp(-0.5 * xi[i] * xi[i]);
    }
    const Mat lap = cgl_laplacian(cfg);
    const double nu = cfg.nu, sg = cfg.sigma;

    DynSystem s;
    s.name = "cgl";
    s.n = 2 * N;
    s.n_x = N;
    s.tensor_mode = TensorMode::finite_difference;
    s.residual_eval = [=](const Vec& w, double mu, const Vec& c3) {
        const auto a = w.head(N).array();
        const auto b = w.tail(N).array();
        const Eigen::ArrayXd sq = a * a + b * b;
        Vec r(2 * N);
        r.head(N) = lap * w.head(N);
        r.tail(N) = lap * w.tail(N);
        r.head(N).array() += mu * a - nu * b - sq * (c3.array() * a - sg * b) -
                             c5.array() * sq * sq * a + fr.array();
        r.tail(N).array() +=
            nu * a + mu * b - sq * (sg * a + c3.array() * b) - c5.array() * sq * sq * b;
        return r;
    };
    s.jacobian_eval = [=](const Vec& w, double mu, const Vec& c3) {
        Mat j = Mat::Zero(2 * N, 2 * N);
        j.topLeftCorner(N, N) = lap;
        j.bottomRightCorner(N, N) = lap;
        for (int i = 0; i < N; ++i) {
            const double a = w[i], b = w[N + i], sq = a * a + b * b, c = c3[i], q = c5[i];
            const double ta = c * a - sg * b, tb = sg * a + c * b;
            j(i, i) += mu - (2.0 * a * ta + sq * c) - q * (4.0 * sq * a * a + sq * sq);
            j(i, N + i) += -nu - (2.0 * b * ta - sq * sg) - q * 4.0 * sq * a * b;
            j(N + i, i) += nu - (2.0 * a * tb + sq * sg) - q * 4.0 * sq * a * b;
            j(N + i, N + i) += mu - (2.0 * b * tb + sq * c) - q * (4.0 * sq * b * b + sq * sq);
        }
        return j;
    };
    s.mu_partial_eval = [](const Vec& w, double, const Vec&) { return Vec(w); };
    s.x_partial_eval = [N](const Vec& w, double, const Vec&) {
        Mat g = Mat::Zero(2 * N, N);
        for (int i = 0; i < N; ++i) {
            const double a = w[i], b = w[N + i], sq = a * a + b * b;
            g(i, i) = -sq * a;
            g(N + i, i) = -sq * b;
        }
        return g;
    };
    return s;
}

} // namespace hopfstab
