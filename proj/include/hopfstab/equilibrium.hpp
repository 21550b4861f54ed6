#pragma once

#include "hopfstab/dynsys.hpp"

namespace hopfstab {

struct EquilibriumResult {
    Vec w_eq;
    double residual_norm = 0.0; // infinity norm
    int iterations = 0;
    bool converged = false;
};

// Damped Newton (Armijo on 0.5*|r|^2, halving to a 1e-4 floor). Non-convergence is reported in
// the result; a singular Jacobian throws SolverError naming the iterate.
EquilibriumResult solve_equilibrium(const DynSystem& sys, double mu, const Vec& x, const Vec& w0,
                                    double tol = 1e-10, int max_iter = 50);

} // namespace hopfstab
