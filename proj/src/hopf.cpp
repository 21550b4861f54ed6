#include "hopfstab/hopf.hpp"
#include "hopfstab/equilibrium.hpp"
#include "hopfstab/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

namespace hopfstab {

namespace {

template <class Res, class Jac>
Vec newton(Res&& res, Jac&& jac, Vec u, const EvpOptions& opts, const std::string& what) {
    Vec r = res(u);
    double norm = r.lpNorm<Eigen::Infinity>();
    int it = 0;
    while (norm > opts.tol) {
        if (it++ >= opts.max_iter)
            throw SolverError(what + ": Newton did not converge, last residual " +
                              std::to_string(norm));
        Mat j = jac(u);
        Eigen::PartialPivLU<Mat> lu(j);
        if (!(lu.rcond() > kSingularRcond))
            throw DegeneracyError(what +
                                  ": singular Newton matrix (degenerate or near-multiple eigenvalue)");
        Vec du = -lu.solve(r);
        double step = 1.0;
        Vec u_new, r_new;
        for (;;) {
            u_new = u + step * du;
            bool ok = true;
            try {
                r_new = res(u_new);
            } catch (const EvaluationError&) {
                ok = false;
            }
            if (ok && r_new.norm() < (1.0 - 1e-4 * step) * r.norm()) break;
            if (step < 1e-3) {
                if (!ok) throw SolverError(what + ": residual evaluation failed along Newton step");
                break;
            }
            step *= 0.5;
        }
        u = u_new;
        r = r_new;
        norm = r.lpNorm<Eigen::Infinity>();
    }
    return u;
}

void put_block(Mat& m, int r0, int c0, const Mat& b) { m.block(r0, c0, b.rows(), b.cols()) = b; }

} // namespace

Vec HopfRightState::pack() const {
    const Eigen::Index n = w_eq.size();
    Vec u(3 * n + 2);
    u << w_eq, q_r, q_i, mu, omega;
    return u;
}

void HopfRightState::unpack(const Vec& u) {
    const Eigen::Index n = (u.size() - 2) / 3;
    w_eq = u.segment(0, n);
    q_r = u.segment(n, n);
    q_i = u.segment(2 * n, n);
    mu = u[3 * n];
    omega = u[3 * n + 1];
}

Vec HopfLeftState::pack() const {
    const Eigen::Index n = w_eq.size();
    Vec u(3 * n + 2);
    u << w_eq, p_r, p_i, mu, omega;
    return u;
}

void HopfLeftState::unpack(const Vec& u) {
    const Eigen::Index n = (u.size() - 2) / 3;
    w_eq = u.segment(0, n);
    p_r = u.segment(n, n);
    p_i = u.segment(2 * n, n);
    mu = u[3 * n];
    omega = u[3 * n + 1];
}

void normalize_phase(HopfRightState& u, bool force_reselect) {
    CVec q = u.q();
    const double qn = q.norm();
    if (!(qn > 0.0)) throw InputError("normalize_phase: zero eigenvector");
    Eigen::Index kmax = 0;
    const double qmax = q.cwiseAbs().maxCoeff(&kmax);
    const int n = static_cast<int>(q.size());
    if (force_reselect || u.phase_index < 0 || u.phase_index >= n ||
        std::abs(q[u.phase_index]) < 0.1 * qmax)
        u.phase_index = static_cast<int>(kmax);
    const cd qk = q[u.phase_index];
    q *= std::conj(qk) / (std::abs(qk) * qn);
    u.q_r = q.real();
    u.q_i = q.imag();
    u.q_i[u.phase_index] = 0.0;
}

HopfRightState init_hopf_guess(const DynSystem& sys, double mu0, const Vec& x, const Vec& w0,
                               const EvpOptions& opts) {
    EquilibriumResult eq = solve_equilibrium(sys, mu0, x, w0, opts.eq_tol, opts.eq_max_iter);
    if (!eq.converged)
        throw SolverError("init_hopf_guess: equilibrium did not converge at mu0 (residual " +
                          std::to_string(eq.residual_norm) + ")");
    Mat a = jacobian(sys, eq.w_eq, mu0, x);
    Eigen::EigenSolver<Mat> es(a);
    if (es.info() != Eigen::Success) throw SolverError("init_hopf_guess: eigensolve failed");
    const CVec lam = es.eigenvalues();
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    int best = -1;
    for (int i = 0; i < lam.size(); ++i) {
        if (lam[i].imag() <= 1e-10 * scale) continue;
        if (best < 0 || std::abs(lam[i].real()) < std::abs(lam[best].real())) best = i;
    }
    if (best < 0) throw SolverError("init_hopf_guess: no oscillatory mode at mu0");
    HopfRightState g;
    g.w_eq = eq.w_eq;
    CVec q = es.eigenvectors().col(best);
    g.q_r = q.real();
    g.q_i = q.imag();
    g.mu = mu0;
    g.omega = lam[best].imag();
    normalize_phase(g, true);
    return g;
}

Vec residual_right(const DynSystem& sys, const HopfRightState& u, const Vec& x) {
    const int n = sys.n;
    Vec r = residual(sys, u.w_eq, u.mu, x);
    Mat a = jacobian(sys, u.w_eq, u.mu, x);
    Vec out(evp_size(n));
    out.segment(0, n) = r;
    out.segment(n, n) = a * u.q_r + u.omega * u.q_i;
    out.segment(2 * n, n) = a * u.q_i - u.omega * u.q_r;
    out[3 * n] = u.q_r.squaredNorm() + u.q_i.squaredNorm() - 1.0;
    out[3 * n + 1] = u.q_i[u.phase_index];
    return out;
}

Mat jacobian_right(const DynSystem& sys, const HopfRightState& u, const Vec& x) {
    const int n = sys.n;
    Expansion ex(sys, u.w_eq, u.mu, x);
    const Mat& a = ex.A();
    const Mat amu = jacobian_mu(sys, u.w_eq, u.mu, x);
    const Mat id = Mat::Identity(n, n);
    Mat j = Mat::Zero(evp_size(n), evp_size(n));
    put_block(j, 0, 0, a);
    j.block(0, 3 * n, n, 1) = mu_partial(sys, u.w_eq, u.mu, x);

    put_block(j, n, 0, ex.hessian_along(u.q_r));
    put_block(j, n, n, a);
    put_block(j, n, 2 * n, u.omega * id);
    j.block(n, 3 * n, n, 1) = amu * u.q_r;
    j.block(n, 3 * n + 1, n, 1) = u.q_i;

    put_block(j, 2 * n, 0, ex.hessian_along(u.q_i));
    put_block(j, 2 * n, n, -u.omega * id);
    put_block(j, 2 * n, 2 * n, a);
    j.block(2 * n, 3 * n, n, 1) = amu * u.q_i;
    j.block(2 * n, 3 * n + 1, n, 1) = -u.q_r;

    j.block(3 * n, n, 1, n) = 2.0 * u.q_r.transpose();
    j.block(3 * n, 2 * n, 1, n) = 2.0 * u.q_i.transpose();
    j(3 * n + 1, 2 * n + u.phase_index) = 1.0;
    return j;
}

HopfRightState solve_right_evp(const DynSystem& sys, const Vec& x, const HopfRightState& guess,
                               const EvpOptions& opts) {
    if (guess.w_eq.size() != sys.n) throw InputError("solve_right_evp: guess has wrong dimension");
    HopfRightState u0 = guess;
    normalize_phase(u0);
    const int k = u0.phase_index;
    auto make = [&](const Vec& v) {
        HopfRightState s;
        s.unpack(v);
        s.phase_index = k;
        return s;
    };
    Vec sol = newton([&](const Vec& v) { return residual_right(sys, make(v), x); },
                     [&](const Vec& v) { return jacobian_right(sys, make(v), x); }, u0.pack(), opts,
                     "solve_right_evp");
    HopfRightState u = make(sol);
    if (u.omega < 0.0) {
        // (conj q, -omega) solves the same system
        u.q_i = -u.q_i;
        u.omega = -u.omega;
    }
    if (!(u.omega > 0.0)) throw DegeneracyError("solve_right_evp: converged to omega = 0");
    if (opts.check_crossing) {
        double rate = crossing_rate(sys, u, x, opts);
        if (!(rate > 0.0))
            throw SolverError("solve_right_evp: not a forward crossing (d Re(lambda)/d mu = " +
                              std::to_string(rate) + ")");
    }
    return u;
}

double crossing_rate(const DynSystem& sys, const HopfRightState& u, const Vec& x,
                     const EvpOptions& opts) {
    const double h = 1e-5 * (1.0 + std::abs(u.mu));
    double re[2];
    for (int s = 0; s < 2; ++s) {
        double mu = u.mu + (s == 0 ? h : -h);
        EquilibriumResult eq = solve_equilibrium(sys, mu, x, u.w_eq, opts.eq_tol, opts.eq_max_iter);
        if (!eq.converged) throw SolverError("crossing_rate: equilibrium failed near mu_bif");
        Eigen::EigenSolver<Mat> es(jacobian(sys, eq.w_eq, mu, x), false);
        const CVec lam = es.eigenvalues();
        Eigen::Index best = 0;
        (lam.array() - cd(0.0, u.omega)).abs().minCoeff(&best);
        re[s] = lam[best].real();
    }
    return (re[0] - re[1]) / (2.0 * h);
}

Vec residual_left(const DynSystem& sys, const HopfLeftState& uL, const HopfRightState& uR,
                  const Vec& x) {
    const int n = sys.n;
    Vec r = residual(sys, uL.w_eq, uL.mu, x);
    Mat at = jacobian(sys, uL.w_eq, uL.mu, x).transpose();
    Vec out(evp_size(n));
    out.segment(0, n) = r;
    out.segment(n, n) = at * uL.p_r - uL.omega * uL.p_i;
    out.segment(2 * n, n) = at * uL.p_i + uL.omega * uL.p_r;
    out[3 * n] = uR.q_r.dot(uL.p_r) + uR.q_i.dot(uL.p_i) - 1.0;
    out[3 * n + 1] = -uR.q_i.dot(uL.p_r) + uR.q_r.dot(uL.p_i);
    return out;
}

Mat jacobian_left(const DynSystem& sys, const HopfLeftState& uL, const HopfRightState& uR,
                  const Vec& x) {
    const int n = sys.n;
    Expansion ex(sys, uL.w_eq, uL.mu, x);
    const Mat& a = ex.A();
    const Mat amu = jacobian_mu(sys, uL.w_eq, uL.mu, x);
    const Mat id = Mat::Identity(n, n);
    // G(p)[:, l] = (dA/dw_l)^T p
    Mat gr(n, n), gi(n, n);
    Vec e = Vec::Zero(n);
    for (int l = 0; l < n; ++l) {
        e[l] = 1.0;
        Mat dA = ex.hessian_along(e);
        gr.col(l) = dA.transpose() * uL.p_r;
        gi.col(l) = dA.transpose() * uL.p_i;
        e[l] = 0.0;
    }
    Mat j = Mat::Zero(evp_size(n), evp_size(n));
    put_block(j, 0, 0, a);
    j.block(0, 3 * n, n, 1) = mu_partial(sys, uL.w_eq, uL.mu, x);

    put_block(j, n, 0, gr);
    put_block(j, n, n, a.transpose());
    put_block(j, n, 2 * n, -uL.omega * id);
    j.block(n, 3 * n, n, 1) = amu.transpose() * uL.p_r;
    j.block(n, 3 * n + 1, n, 1) = -uL.p_i;

    put_block(j, 2 * n, 0, gi);
    put_block(j, 2 * n, n, uL.omega * id);
    put_block(j, 2 * n, 2 * n, a.transpose());
    j.block(2 * n, 3 * n, n, 1) = amu.transpose() * uL.p_i;
    j.block(2 * n, 3 * n + 1, n, 1) = uL.p_r;

    j.block(3 * n, n, 1, n) = uR.q_r.transpose();
    j.block(3 * n, 2 * n, 1, n) = uR.q_i.transpose();
    j.block(3 * n + 1, n, 1, n) = -uR.q_i.transpose();
    j.block(3 * n + 1, 2 * n, 1, n) = uR.q_r.transpose();
    return j;
}

Mat jacobian_left_cross(const DynSystem& sys, const HopfLeftState& uL, const HopfRightState& uR) {
    const int n = sys.n;
    (void)uR;
    Mat j = Mat::Zero(evp_size(n), evp_size(n));
    j.block(3 * n, n, 1, n) = uL.p_r.transpose();
    j.block(3 * n, 2 * n, 1, n) = uL.p_i.transpose();
    j.block(3 * n + 1, n, 1, n) = uL.p_i.transpose();
    j.block(3 * n + 1, 2 * n, 1, n) = -uL.p_r.transpose();
    return j;
}

namespace {

HopfLeftState normalized_left(const HopfRightState& uR, CVec p) {
    const CVec q = uR.q();
    const cd s = q.dot(p);
    if (std::abs(s) < 1e-8 * q.norm() * p.norm())
        throw SolverError("solve_left_evp: seed is orthogonal to q (q* p ~ 0); reseed required");
    p /= s;
    HopfLeftState l;
    l.w_eq = uR.w_eq;
    l.p_r = p.real();
    l.p_i = p.imag();
    l.mu = uR.mu;
    l.omega = uR.omega;
    return l;
}

} // namespace

HopfLeftState seed_left(const DynSystem& sys, const HopfRightState& uR, const Vec& x) {
    Mat at = jacobian(sys, uR.w_eq, uR.mu, x).transpose();
    Eigen::EigenSolver<Mat> es(at);
    if (es.info() != Eigen::Success) throw SolverError("seed_left: eigensolve failed");
    Eigen::Index best = 0;
    (es.eigenvalues().array() - cd(0.0, -uR.omega)).abs().minCoeff(&best);
    return normalized_left(uR, es.eigenvectors().col(best));
}

HopfLeftState solve_left_evp(const DynSystem& sys, const Vec& x, const HopfRightState& uR,
                             const HopfLeftState* guess, const EvpOptions& opts) {
    HopfLeftState l0 = guess ? normalized_left(uR, guess->p()) : seed_left(sys, uR, x);
    auto make = [](const Vec& v) {
        HopfLeftState s;
        s.unpack(v);
        return s;
    };
    Vec sol = newton([&](const Vec& v) { return residual_left(sys, make(v), uR, x); },
                     [&](const Vec& v) { return jacobian_left(sys, make(v), uR, x); }, l0.pack(),
                     opts, "solve_left_evp");
    return make(sol);
}

} // namespace hopfstab
