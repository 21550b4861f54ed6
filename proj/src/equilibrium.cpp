#include "hopfstab/equilibrium.hpp"
#include "hopfstab/errors.hpp"

#include <cmath>

namespace hopfstab {

EquilibriumResult solve_equilibrium(const DynSystem& sys, double mu, const Vec& x, const Vec& w0,
                                    double tol, int max_iter) {
    if (!(tol > 0.0)) throw InputError("solve_equilibrium: tolerance must be positive");
    if (!w0.allFinite()) throw InputError("solve_equilibrium: non-finite initial state");

    constexpr double armijo_c = 1e-4;
    constexpr double min_step = 1e-4;

    EquilibriumResult res;
    res.w_eq = w0;
    Vec r = residual(sys, res.w_eq, mu, x);
    res.residual_norm = r.lpNorm<Eigen::Infinity>();
    while (res.residual_norm > tol && res.iterations < max_iter) {
        Mat a = jacobian(sys, res.w_eq, mu, x);
        Eigen::PartialPivLU<Mat> lu(a);
        if (!(lu.rcond() > kSingularRcond))
            throw SolverError("solve_equilibrium: singular Jacobian at iterate " +
                              std::to_string(res.iterations));
        Vec dw = -lu.solve(r);
        const double phi0 = 0.5 * r.squaredNorm();
        double step = 1.0;
        Vec w_new, r_new;
        for (;;) {
            w_new = res.w_eq + step * dw;
            try {
                r_new = residual(sys, w_new, mu, x);
                if (0.5 * r_new.squaredNorm() <= (1.0 - 2.0 * armijo_c * step) * phi0) break;
            } catch (const EvaluationError&) {
                if (step <= min_step) throw;
            }
            if (step <= min_step) break;
            step = std::max(0.5 * step, min_step);
        }
        res.w_eq = w_new;
        r = r_new;
        res.residual_norm = r.lpNorm<Eigen::Infinity>();
        ++res.iterations;
    }
    res.converged = res.residual_norm <= tol;
    return res;
}

} // namespace hopfstab
