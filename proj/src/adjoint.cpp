#include "hopfstab/adjoint.hpp"
#include "hopfstab/concurrency.hpp"
#include "hopfstab/errors.hpp"

#include <cmath>

namespace hopfstab {

namespace {

cd tdot(const CVec& a, const CVec& b) { return (a.array() * b.array()).sum(); }

double param_step(const DynSystem& sys, double v) {
    const double rel = sys.tensor_mode == TensorMode::finite_difference ? 1e-4 : 1e-6;
    return rel * (1.0 + std::abs(v));
}

// Central differences of f(mu, x) in mu and in each x_k with everything else frozen.
template <class F>
std::pair<double, Vec> param_gradient(const DynSystem& sys, double mu, const Vec& x, F&& f) {
    const double hm = param_step(sys, mu);
    const double gmu = (f(mu + hm, x) - f(mu - hm, x)) / (2.0 * hm);
    Vec gx(x.size());
    Vec xp = x;
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        const double h = param_step(sys, x[k]);
        xp[k] = x[k] + h;
        const double fp = f(mu, xp);
        xp[k] = x[k] - h;
        const double fm = f(mu, xp);
        xp[k] = x[k];
        gx[k] = (fp - fm) / (2.0 * h);
    }
    return {gmu, gx};
}

// Primal quantities and the two auxiliary adjoints lam1 (A^T), lam2 ((2 j w I - A)^T).
struct Frozen {
    CVec P; // conj(p)
    CVec q, qc;
    Vec q_r, q_i;
    CVec q1, q2;
    CVec lam1, lam2;
    double omega = 0.0;
};

// l(theta) with q, p, q1, q2, lam1, lam2 held fixed; its derivative in any model argument
// theta equals the total partial of l in theta.
double frozen_lyapunov(const Expansion& ex, const Frozen& z) {
    Vec b3 = ex.b(z.q_r, z.q_r) + ex.b(z.q_i, z.q_i);
    const Mat& a = ex.A();
    cd v = tdot(z.P, ex.c(z.q, z.q, z.qc)) - 2.0 * tdot(z.P, ex.b(z.q, z.q1)) -
           2.0 * tdot(z.lam1, b3.cast<cd>()) + 2.0 * tdot(z.lam1, a * z.q1) +
           tdot(z.P, ex.b(z.qc, z.q2)) + tdot(z.lam2, ex.b(z.q, z.q)) + tdot(z.lam2, a * z.q2);
    return v.real() / (2.0 * z.omega);
}

} // namespace

LyapunovPartials lyapunov_partials(const DynSystem& sys, const HopfRightState& uR,
                                   const HopfLeftState& uL, const Vec& x,
                                   const LyapunovReport* primal) {
    const int n = sys.n;
    LyapunovReport own;
    if (!primal) {
        own = first_lyapunov(sys, uR, uL, x);
        primal = &own;
    }
    Expansion ex(sys, uR.w_eq, uR.mu, x);
    const Mat& a = ex.A();
    const double om = uR.omega;

    Frozen z;
    z.q = uR.q();
    z.qc = z.q.conjugate();
    z.q_r = uR.q_r;
    z.q_i = uR.q_i;
    z.P = uL.p().conjugate();
    z.q1 = primal->q1.cast<cd>();
    z.q2 = primal->q2;
    z.omega = om;

    const CMat mq = ex.hessian_along(z.q);
    const CMat mqc = mq.conjugate();
    const CMat mq1 = ex.hessian_along(primal->q1).cast<cd>();
    const CMat mq2 = ex.hessian_along(z.q2);
    {
        DenseLU lu(a.transpose(), "lyapunov_partials: A is singular (fold-Hopf degeneracy)");
        z.lam1 = lu.solve(CVec(mq.transpose() * z.P));
    }
    {
        CMat st = cd(0.0, 2.0 * om) * CMat::Identity(n, n) - a.transpose().cast<cd>();
        ComplexLU lu(st, "lyapunov_partials: 2j omega I - A is singular (2:1 resonance)");
        z.lam2 = lu.solve(CVec(mqc.transpose() * z.P));
    }

    const CMat n_qqc = ex.third_along(z.q, z.qc);
    const CMat n_qq = ex.third_along(z.q, z.q);
    const CVec alpha = 2.0 * n_qqc.transpose() * z.P -
                       2.0 * (mq1.transpose() * z.P + mqc.transpose() * z.lam1) +
                       2.0 * mq.transpose() * z.lam2;
    const CVec beta = n_qq.transpose() * z.P - 2.0 * (mq.transpose() * z.lam1) +
                      mq2.transpose() * z.P;

    LyapunovPartials out;
    out.dl_dq = (alpha.conjugate() + beta) / (2.0 * om);

    const CVec cvec = n_qqc * z.q;
    const CVec b1 = ex.b(z.q, z.q1);
    const CVec b2 = ex.b(z.qc, z.q2);
    out.dl_dp = (cvec - 2.0 * b1 + b2) / (2.0 * om);

    out.dl_domega = -primal->f_lyp / om + (cd(0.0, -2.0) * tdot(z.lam2, z.q2)).real() / (2.0 * om);

    out.abar_factors[0] = {z.lam1 / om, z.q1};
    out.abar_factors[1] = {z.lam2 / (2.0 * om), z.q2};

    const CVec gw = ex.fourth_along(z.q, z.q, z.qc).transpose() * z.P -
                    2.0 * ex.third_along(z.q, z.q1).transpose() * z.P -
                    2.0 * n_qqc.transpose() * z.lam1 + 2.0 * mq1.transpose() * z.lam1 +
                    ex.third_along(z.qc, z.q2).transpose() * z.P + n_qq.transpose() * z.lam2 +
                    mq2.transpose() * z.lam2;
    out.dl_dw = gw.real() / (2.0 * om);

    auto [gmu, gx] = param_gradient(sys, uR.mu, x, [&](double mu, const Vec& xx) {
        return frozen_lyapunov(Expansion(sys, uR.w_eq, mu, xx), z);
    });
    out.dl_dmu = gmu;
    out.dl_dx = gx;
    return out;
}

Vec adjoint_solve_left(const DynSystem& sys, const HopfLeftState& uL, const HopfRightState& uR,
                       const Vec& x, const Vec& rhs) {
    if (rhs.size() != evp_size(sys.n)) throw InputError("adjoint_solve_left: rhs length");
    DenseLU lu(jacobian_left(sys, uL, uR, x).transpose(),
               "adjoint_solve_left: left adjoint matrix is singular (degenerate Hopf point)");
    return lu.solve(rhs);
}

Vec adjoint_solve_right(const DynSystem& sys, const HopfRightState& uR, const Vec& x,
                        const Vec& rhs_f, const Vec& psi_L, const HopfLeftState& uL) {
    if (rhs_f.size() != evp_size(sys.n) || psi_L.size() != evp_size(sys.n))
        throw InputError("adjoint_solve_right: vector length");
    Vec rhs = rhs_f - jacobian_left_cross(sys, uL, uR).transpose() * psi_L;
    DenseLU lu(jacobian_right(sys, uR, x).transpose(),
               "adjoint_solve_right: right adjoint matrix is singular (degenerate Hopf point)");
    return lu.solve(rhs);
}

GradientReport total_gradient(const DynSystem& sys, const HopfRightState& uR,
                              const HopfLeftState& uL, const Vec& x, GradientTarget target,
                              const LyapunovReport* primal) {
    const int n = sys.n;
    const int N = evp_size(n);
    GradientReport rep;
    Vec rhs_R = Vec::Zero(N);
    Vec rhs_L = Vec::Zero(N);
    Vec explicit_x = Vec::Zero(sys.n_x);

    switch (target) {
    case GradientTarget::lyapunov: {
        rep.partials = lyapunov_partials(sys, uR, uL, x, primal);
        const auto& lp = rep.partials;
        rhs_R.segment(0, n) = lp.dl_dw;
        rhs_R.segment(n, n) = lp.dl_dq.real();
        rhs_R.segment(2 * n, n) = lp.dl_dq.imag();
        rhs_R[3 * n] = lp.dl_dmu;
        rhs_R[3 * n + 1] = lp.dl_domega;
        rhs_L.segment(n, n) = lp.dl_dp.real();
        rhs_L.segment(2 * n, n) = lp.dl_dp.imag();
        explicit_x = lp.dl_dx;
        break;
    }
    case GradientTarget::mu: rhs_R[3 * n] = 1.0; break;
    case GradientTarget::omega: rhs_R[3 * n + 1] = 1.0; break;
    }

    rep.psi_L = adjoint_solve_left(sys, uL, uR, x, rhs_L);
    rep.psi_R = adjoint_solve_right(sys, uR, x, rhs_R, rep.psi_L, uL);

    // psi^T dr/dx: residual rows analytically, eigen rows by differencing A in x at frozen u
    const Vec& pR = rep.psi_R;
    const Vec& pL = rep.psi_L;
    Vec lin = x_partial(sys, uR.w_eq, uR.mu, x).transpose() * pR.segment(0, n) +
              x_partial(sys, uL.w_eq, uL.mu, x).transpose() * pL.segment(0, n);
    Vec eig = Vec::Zero(sys.n_x);
    Vec xp = x;
    auto eig_rows = [&](const Vec& xx) {
        Mat aR = jacobian(sys, uR.w_eq, uR.mu, xx);
        Mat aL = jacobian(sys, uL.w_eq, uL.mu, xx);
        return pR.segment(n, n).dot(aR * uR.q_r) + pR.segment(2 * n, n).dot(aR * uR.q_i) +
               pL.segment(n, n).dot(aL.transpose() * uL.p_r) +
               pL.segment(2 * n, n).dot(aL.transpose() * uL.p_i);
    };
    for (int k = 0; k < sys.n_x; ++k) {
        const double h = 1e-6 * (1.0 + std::abs(x[k]));
        xp[k] = x[k] + h;
        const double fp = eig_rows(xp);
        xp[k] = x[k] - h;
        const double fm = eig_rows(xp);
        xp[k] = x[k];
        eig[k] = (fp - fm) / (2.0 * h);
    }
    rep.df_dx = explicit_x - lin - eig;
    return rep;
}

double target_value(const HopfPoint& hp, GradientTarget target) {
    switch (target) {
    case GradientTarget::lyapunov: return hp.lyapunov.f_lyp;
    case GradientTarget::mu: return hp.right.mu;
    case GradientTarget::omega: return hp.right.omega;
    }
    return 0.0;
}

Vec fd_total_gradient(const DynSystem& sys, const Vec& x, GradientTarget target, double h,
                      const HopfPoint& base, const HopfOptions& opts) {
    if (!(h > 0.0)) throw InputError("fd_total_gradient: step must be positive");
    const int nx = sys.n_x;
    Vec values(2 * nx);
    parallel_for(static_cast<std::size_t>(2 * nx), [&](std::size_t idx) {
        const int k = static_cast<int>(idx / 2);
        Vec xp = x;
        xp[k] += (idx % 2 == 0) ? h : -h;
        try {
            values[static_cast<Eigen::Index>(idx)] =
                target_value(locate_hopf_from(sys, xp, base, opts), target);
        } catch (const Error& e) {
            throw SolverError("fd_total_gradient: pipeline failed at perturbed entry " +
                              std::to_string(k) + ": " + e.what());
        }
    });
    Vec g(nx);
    for (int k = 0; k < nx; ++k) g[k] = (values[2 * k] - values[2 * k + 1]) / (2.0 * h);
    return g;
}

double default_fd_step(const DynSystem& sys) {
    return sys.tensor_mode == TensorMode::finite_difference ? 1e-3 : 1e-6;
}

double max_relative_error(const Vec& adj, const Vec& fd) {
    if (adj.size() != fd.size()) throw InputError("max_relative_error: length mismatch");
    double m = 0.0;
    for (Eigen::Index i = 0; i < adj.size(); ++i)
        m = std::max(m, std::abs(adj[i] - fd[i]) / std::max(std::abs(fd[i]), 1e-12));
    return m;
}

} // namespace hopfstab
