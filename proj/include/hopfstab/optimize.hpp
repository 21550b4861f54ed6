#pragma once

#include "hopfstab/adjoint.hpp"
#include "hopfstab/models.hpp"

#include <optional>
#include <string>
#include <vector>

namespace hopfstab {

enum class Objective { neg_mu, mass_minus_kappa_sq, cgl_cost };
std::string to_string(Objective o);
Objective objective_from_string(const std::string& s);

struct OptProblem {
    DynSystem sys;
    Objective objective = Objective::neg_mu;
    double lyap_bound = -0.1; // f_lyp <= lyap_bound
    std::optional<double> mu_lower;
    Vec x_lower, x_upper, x0;
    double mu0 = 0.0; // cold-start EVP seed
    Vec w0;           // cold-start equilibrium seed
    HopfOptions hopf;
    double cgl_spacing = 0.0; // quadrature weight for cgl_cost
};

// The three benchmark problems with their default bounds, seeds and stability bounds.
OptProblem algebraic_problem();
OptProblem typical_section_problem(const TypicalSectionParams& p = {});
OptProblem cgl_problem(const CGLConfig& cfg = {});

struct DesignEval {
    Vec x;
    double f = 0.0, f_lyp = 0.0, mu = 0.0;
    Vec grad_f, grad_lyp, grad_mu;
    HopfPoint point;
};

// Objective value and gradient only (no Hopf analysis).
double objective_value(const OptProblem& prob, const Vec& x, double mu, Vec* grad = nullptr,
                       const Vec* grad_mu = nullptr);

// Exact Hessian of the objective where it is independent of the Hopf point (zero for neg_mu).
Mat objective_hessian(const OptProblem& prob, const Vec& x);

// Full pipeline plus adjoints at x (projected into bounds). Keeps the last Hopf point as the
// warm start for the next call and falls back to a cold start when that fails.
class DesignEvaluator {
public:
    explicit DesignEvaluator(const OptProblem& prob) : prob_(prob) {}
    DesignEval operator()(const Vec& x);
    void set_warm(const HopfPoint& hp) { warm_ = hp; }

private:
    const OptProblem& prob_;
    std::optional<HopfPoint> warm_;
};

struct OptSettings {
    int max_iter = 200;
    double kkt_tol = 1e-6;
    double feas_tol = 1e-6;
    double armijo = 1e-4;
    double min_step = 1e-8;
    double penalty0 = 10.0;
    double penalty_max = 1e8;
};

enum class OptStatus { converged, max_iter, infeasible };
std::string to_string(OptStatus s);

struct Iterate {
    int iter = 0;
    Vec x;
    double f = 0.0, f_lyp = 0.0, mu = 0.0;
    double kkt = 0.0;
    double step = 0.0;    // accepted line-search fraction (0 for the initial point)
    double penalty = 0.0; // merit penalty in force when the step was accepted
    double merit = 0.0;   // merit at x under that penalty
    double merit_prev = 0.0; // merit at the previous iterate under the same penalty
};

struct OptResult {
    Vec x_star;
    double f_star = 0.0, mu_star = 0.0, f_lyp_star = 0.0;
    Vec grad_lyp_star, grad_mu_star;
    std::vector<Iterate> iterates;
    double kkt_norm = 0.0;
    double max_violation = 0.0;
    Vec multipliers; // [f_lyp row, mu row (if set)]
    OptStatus status = OptStatus::max_iter;
    std::string message; // why the loop stopped
};

// Constraint values g(x) <= 0: [f_lyp - bound, mu_lower - mu (if set)].
Vec constraint_values(const OptProblem& prob, const DesignEval& e);

// SQP with a damped-BFGS Hessian, an elastic (l1) QP subproblem and an l1 merit line search.
OptResult run_optimization(const OptProblem& prob, const OptSettings& settings = {});

} // namespace hopfstab
