#include "hopfstab/optimize.hpp"
#include "hopfstab/errors.hpp"
#include "hopfstab/qp.hpp"

#include <algorithm>
#include <cmath>

namespace hopfstab {

std::string to_string(Objective o) {
    switch (o) {
    case Objective::neg_mu: return "neg_mu";
    case Objective::mass_minus_kappa_sq: return "mass_minus_kappa_sq";
    case Objective::cgl_cost: return "cgl_cost";
    }
    return "unknown";
}

Objective objective_from_string(const std::string& s) {
    if (s == "neg_mu") return Objective::neg_mu;
    if (s == "mass_minus_kappa_sq") return Objective::mass_minus_kappa_sq;
    if (s == "cgl_cost") return Objective::cgl_cost;
    throw InputError("unknown objective '" + s + "'");
}

std::string to_string(OptStatus s) {
    switch (s) {
    case OptStatus::converged: return "converged";
    case OptStatus::max_iter: return "max_iter";
    case OptStatus::infeasible: return "infeasible";
    }
    return "unknown";
}

OptProblem algebraic_problem() {
    OptProblem p;
    p.sys = make_algebraic_model();
    p.objective = Objective::neg_mu;
    p.lyap_bound = -0.2;
    p.x_lower = Vec::Zero(2);
    p.x_upper = Vec::Ones(2);
    p.x0 = algebraic_baseline();
    p.mu0 = 0.5;
    p.w0 = Vec::Zero(2);
    return p;
}

OptProblem typical_section_problem(const TypicalSectionParams& tp) {
    OptProblem p;
    p.sys = make_typical_section(tp);
    p.objective = Objective::mass_minus_kappa_sq;
    p.lyap_bound = -0.1;
    p.mu_lower = 1.01;
    p.x_lower = Vec(2);
    p.x_lower << 5.0, -3.0;
    p.x_upper = Vec(2);
    p.x_upper << 17.0, 1.0;
    p.x0 = typical_section_baseline(tp);
    p.mu0 = kTypicalSectionMuSeed;
    p.w0 = Vec::Zero(4);
    return p;
}

OptProblem cgl_problem(const CGLConfig& cfg) {
    OptProblem p;
    p.sys = make_cgl_model(cfg);
    p.objective = Objective::cgl_cost;
    p.lyap_bound = -0.5;
    p.x_lower = Vec::Constant(cfg.grid_points, cfg.c3_lower);
    p.x_upper = Vec::Constant(cfg.grid_points, cfg.c3_upper);
    p.x0 = cgl_baseline(cfg);
    p.mu0 = 0.1;
    p.w0 = Vec::Zero(2 * cfg.grid_points);
    p.cgl_spacing = cgl_spacing(cfg);
    return p;
}

double objective_value(const OptProblem& prob, const Vec& x, double mu, Vec* grad,
                       const Vec* grad_mu) {
    switch (prob.objective) {
    case Objective::neg_mu:
        if (grad) {
            if (!grad_mu) throw InputError("objective_value: neg_mu gradient needs dmu/dx");
            *grad = -*grad_mu;
        }
        return -mu;
    case Objective::mass_minus_kappa_sq:
        if (x.size() != 2) throw InputError("objective_value: mass_minus_kappa_sq needs 2 design variables");
        if (grad) {
            grad->resize(2);
            (*grad) << 1.0, -2.0 * x[1];
        }
        return x[0] - x[1] * x[1];
    case Objective::cgl_cost: {
        const double h = prob.cgl_spacing;
        if (!(h > 0.0)) throw InputError("objective_value: cgl_cost needs a positive grid spacing");
        const Eigen::Index N = x.size();
        const double mean = x.mean();
        double f = h * x.sum();
        double var = 0.0;
        for (Eigen::Index i = 0; i < N; ++i) var += (x[i] - mean) * (x[i] - mean);
        var /= static_cast<double>(N);
        for (Eigen::Index i = 0; i + 1 < N; ++i) f += std::pow(x[i + 1] - x[i], 2) / h;
        f -= var;
        if (grad) {
            Vec g = Vec::Constant(N, h);
            for (Eigen::Index i = 0; i + 1 < N; ++i) {
                const double dv = 2.0 * (x[i + 1] - x[i]) / h;
                g[i + 1] += dv;
                g[i] -= dv;
            }
            g -= 2.0 * (x.array() - mean).matrix() / static_cast<double>(N);
            *grad = g;
        }
        return f;
    }
    }
    return 0.0;
}

Mat objective_hessian(const OptProblem& prob, const Vec& x) {
    const Eigen::Index N = x.size();
    Mat H = Mat::Zero(N, N);
    switch (prob.objective) {
    case Objective::neg_mu: break;
    case Objective::mass_minus_kappa_sq: H(1, 1) = -2.0; break;
    case Objective::cgl_cost: {
        const double h = prob.cgl_spacing;
        for (Eigen::Index i = 0; i + 1 < N; ++i) {
            H(i, i) += 2.0 / h;
            H(i + 1, i + 1) += 2.0 / h;
            H(i, i + 1) -= 2.0 / h;
            H(i + 1, i) -= 2.0 / h;
        }
        const double inv = 1.0 / static_cast<double>(N);
        H -= 2.0 * inv * (Mat::Identity(N, N) - Mat::Constant(N, N, inv));
        break;
    }
    }
    return H;
}

DesignEval DesignEvaluator::operator()(const Vec& xin) {
    if (xin.size() != prob_.sys.n_x) throw InputError("evaluate_design: design length");
    DesignEval e;
    e.x = xin.cwiseMax(prob_.x_lower).cwiseMin(prob_.x_upper);
    const DynSystem& sys = prob_.sys;
    try {
        if (warm_) {
            try {
                e.point = locate_hopf_from(sys, e.x, *warm_, prob_.hopf);
            } catch (const Error&) {
                e.point = locate_hopf(sys, e.x, prob_.mu0, prob_.w0, prob_.hopf);
            }
        } else {
            e.point = locate_hopf(sys, e.x, prob_.mu0, prob_.w0, prob_.hopf);
        }
        const auto& hp = e.point;
        e.f_lyp = hp.lyapunov.f_lyp;
        e.mu = hp.right.mu;
        e.grad_lyp =
            total_gradient(sys, hp.right, hp.left, e.x, GradientTarget::lyapunov, &hp.lyapunov).df_dx;
        e.grad_mu = total_gradient(sys, hp.right, hp.left, e.x, GradientTarget::mu).df_dx;
    } catch (const Error& err) {
        throw SolverError(std::string("design evaluation failed: ") + err.what());
    }
    e.f = objective_value(prob_, e.x, e.mu, &e.grad_f, &e.grad_mu);
    warm_ = e.point;
    return e;
}

Vec constraint_values(const OptProblem& prob, const DesignEval& e) {
    Vec g(prob.mu_lower ? 2 : 1);
    g[0] = e.f_lyp - prob.lyap_bound;
    if (prob.mu_lower) g[1] = *prob.mu_lower - e.mu;
    return g;
}

namespace {

Mat constraint_jacobian(const OptProblem& prob, const DesignEval& e) {
    Mat J(prob.mu_lower ? 2 : 1, e.x.size());
    J.row(0) = e.grad_lyp.transpose();
    if (prob.mu_lower) J.row(1) = -e.grad_mu.transpose();
    return J;
}

struct ElasticStep {
    Vec d, t, lambda;
};

// min grad^T d + 0.5 d^T B d + rho sum t  s.t.  g + J d <= t, t >= 0, lo <= x + d <= hi
ElasticStep elastic_qp(const Mat& B, const Vec& grad, const Vec& g, const Mat& J, const Vec& x,
                       const Vec& lo, const Vec& hi, double rho) {
    const Eigen::Index n = x.size(), m = g.size();
    Mat H = Mat::Zero(n + m, n + m);
    H.topLeftCorner(n, n) = B;
    Vec c(n + m);
    c << grad, Vec::Constant(m, rho);
    Mat G = Mat::Zero(2 * m + 2 * n, n + m);
    Vec h(2 * m + 2 * n);
    G.block(0, 0, m, n) = J;
    G.block(0, n, m, m) = -Mat::Identity(m, m);
    h.head(m) = -g;
    G.block(m, n, m, m) = -Mat::Identity(m, m);
    h.segment(m, m).setZero();
    G.block(2 * m, 0, n, n) = Mat::Identity(n, n);
    h.segment(2 * m, n) = hi - x;
    G.block(2 * m + n, 0, n, n) = -Mat::Identity(n, n);
    h.tail(n) = x - lo;
    QpResult qp = solve_qp(H, c, G, h, 1e-12);
    if (!qp.converged) throw SolverError("SQP subproblem did not converge");
    return {qp.z.head(n), qp.z.tail(m).cwiseMax(0.0), qp.lambda.head(m)};
}

double kkt_measure(const DesignEval& e, const Vec& g, const Mat& J, const Vec& lam, const Vec& lo,
                   const Vec& hi) {
    const Vec gl = e.grad_f + J.transpose() * lam;
    const Vec pg = e.x - (e.x - gl).cwiseMax(lo).cwiseMin(hi);
    double k = pg.lpNorm<Eigen::Infinity>();
    for (Eigen::Index j = 0; j < g.size(); ++j) {
        k = std::max(k, std::max(g[j], 0.0));
        k = std::max(k, std::abs(lam[j] * g[j]));
    }
    return k;
}

// Exact objective Hessian shifted to be safely positive definite; identity when it vanishes.
Mat initial_hessian(const OptProblem& prob, const Vec& x, bool& analytic) {
    const Mat H = objective_hessian(prob, x);
    const Eigen::Index n = x.size();
    analytic = H.cwiseAbs().maxCoeff() > 0.0;
    if (!analytic) return Mat::Identity(n, n);
    Eigen::SelfAdjointEigenSolver<Mat> es(H, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
    return H + (std::max(0.0, -lo) + 1e-2 * std::max(1.0, hi)) * Mat::Identity(n, n);
}

double violation_l1(const Vec& g) { return g.cwiseMax(0.0).sum(); }

} // namespace

OptResult run_optimization(const OptProblem& prob, const OptSettings& st) {
    const Eigen::Index n = prob.sys.n_x;
    if (prob.x0.size() != n || prob.x_lower.size() != n || prob.x_upper.size() != n)
        throw InputError("run_optimization: design vector lengths");
    if (!prob.x0.allFinite()) throw InputError("run_optimization: x0 not finite");
    if (!(prob.lyap_bound < 0.0)) throw InputError("run_optimization: lyap_bound must be negative");
    if ((prob.x_lower.array() > prob.x_upper.array()).any())
        throw InputError("run_optimization: lower bound above upper bound");

    DesignEvaluator ev(prob);
    DesignEval e = ev(prob.x0);
    bool analytic_b0 = false;
    Mat B = initial_hessian(prob, e.x, analytic_b0);
    bool fresh_hessian = true;
    double rho = st.penalty0;
    double rho_m = 0.0;
    OptResult res;
    res.status = OptStatus::max_iter;
    Iterate pending; // merit bookkeeping for the step that produced the current iterate

    Vec lam;
    for (int k = 0;; ++k) {
        const Vec g = constraint_values(prob, e);
        const Mat J = constraint_jacobian(prob, e);
        ElasticStep sp = elastic_qp(B, e.grad_f, g, J, e.x, prob.x_lower, prob.x_upper, rho);
        // raise the penalty only while that buys linearized feasibility
        while (sp.t.sum() > 1e-3 * st.feas_tol && rho < st.penalty_max) {
            const double rho_up = std::min(10.0 * rho, st.penalty_max);
            ElasticStep up = elastic_qp(B, e.grad_f, g, J, e.x, prob.x_lower, prob.x_upper, rho_up);
            const bool gain = up.t.sum() < 0.99 * sp.t.sum();
            rho = rho_up;
            sp = up;
            if (!gain) break;
        }
        lam = sp.lambda;
        const double kkt = kkt_measure(e, g, J, lam, prob.x_lower, prob.x_upper);
        const double viol = g.cwiseMax(0.0).maxCoeff();

        Iterate it = pending;
        it.iter = k;
        it.x = e.x;
        it.f = e.f;
        it.f_lyp = e.f_lyp;
        it.mu = e.mu;
        it.kkt = kkt;
        res.iterates.push_back(it);
        res.kkt_norm = kkt;

        if (kkt <= st.kkt_tol && viol <= st.feas_tol) {
            res.status = OptStatus::converged;
            res.message = "KKT tolerance met";
            break;
        }
        if (sp.d.lpNorm<Eigen::Infinity>() <= 1e-12 * (1.0 + e.x.lpNorm<Eigen::Infinity>())) {
            res.status = viol > st.feas_tol ? OptStatus::infeasible : OptStatus::max_iter;
            res.message = "null step";
            break;
        }
        if (k >= st.max_iter) {
            res.message = "iteration limit";
            break;
        }

        rho_m = std::max(rho_m, 1.1 * lam.maxCoeff());
        const double phi0 = e.f + rho_m * violation_l1(g);
        const double D =
            e.grad_f.dot(sp.d) + rho_m * (violation_l1(g + J * sp.d) - violation_l1(g));

        bool accepted = false;
        DesignEval trial;
        double alpha = 1.0;
        if (D < 0.0) {
            for (; alpha >= st.min_step; alpha *= 0.5) {
                try {
                    trial = ev(e.x + alpha * sp.d);
                } catch (const SolverError&) {
                    continue;
                }
                const double phit = trial.f + rho_m * violation_l1(constraint_values(prob, trial));
                if (phit <= phi0 + st.armijo * alpha * D) {
                    pending.merit = phit;
                    accepted = true;
                    break;
                }
                if (alpha == 1.0) {
                    // second-order correction against the curvature of the constraints
                    const Vec gc = constraint_values(prob, trial) - J * sp.d;
                    try {
                        const ElasticStep sc =
                            elastic_qp(B, e.grad_f, gc, J, e.x, prob.x_lower, prob.x_upper, rho);
                        DesignEval corr = ev(e.x + sc.d);
                        const double phic =
                            corr.f + rho_m * violation_l1(constraint_values(prob, corr));
                        if (phic <= phi0 + st.armijo * D) {
                            trial = corr;
                            pending.merit = phic;
                            accepted = true;
                            break;
                        }
                    } catch (const SolverError&) {
                    }
                }
            }
        }
        if (!accepted) {
            ev.set_warm(e.point);
            if (!fresh_hessian) {
                B = initial_hessian(prob, e.x, analytic_b0);
                fresh_hessian = true;
                res.iterates.pop_back();
                --k;
                continue;
            }
            res.status = viol > st.feas_tol ? OptStatus::infeasible : OptStatus::max_iter;
            res.message = "line search stalled";
            break;
        }
        pending.step = alpha;
        pending.penalty = rho_m;
        pending.merit_prev = phi0;

        // damped BFGS on the Lagrangian with the new multipliers
        const Vec s = trial.x - e.x;
        const Vec y = (trial.grad_f + constraint_jacobian(prob, trial).transpose() * lam) -
                      (e.grad_f + J.transpose() * lam);
        const double sy = s.dot(y);
        if (fresh_hessian && !analytic_b0 && sy > 0.0) B = (y.dot(y) / sy) * Mat::Identity(n, n);
        const Vec Bs = B * s;
        const double sBs = s.dot(Bs);
        if (sBs > 1e-300) {
            double theta = 1.0;
            if (sy < 0.2 * sBs) theta = 0.8 * sBs / (sBs - sy);
            const Vec r = theta * y + (1.0 - theta) * Bs;
            const double sr = s.dot(r);
            if (sr > 1e-300) {
                B += r * r.transpose() / sr - Bs * Bs.transpose() / sBs;
                fresh_hessian = false;
            }
        }
        e = trial;
    }

    res.x_star = e.x;
    res.f_star = e.f;
    res.mu_star = e.mu;
    res.f_lyp_star = e.f_lyp;
    res.grad_lyp_star = e.grad_lyp;
    res.grad_mu_star = e.grad_mu;
    res.multipliers = lam;
    const Vec g = constraint_values(prob, e);
    res.max_violation = std::max(0.0, g.maxCoeff());
    if (res.status == OptStatus::converged && res.max_violation > st.feas_tol)
        res.status = OptStatus::infeasible;
    return res;
}

} // namespace hopfstab
