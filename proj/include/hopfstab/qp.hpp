#pragma once

#include "hopfstab/linalg.hpp"

namespace hopfstab {

// min 0.5 z^T H z + c^T z  s.t.  G z <= h, with H positive semidefinite and
// H + G^T G positive definite.
struct QpResult {
    Vec z;
    Vec lambda; // multipliers of G z <= h, all >= 0
    int iterations = 0;
    bool converged = false;
};

// Mehrotra predictor-corrector primal-dual interior point, dense normal equations. Residuals
// and the complementarity gap are tested relative to 1 + |c| and 1 + |h|. If the normal matrix
// stops factoring first, a point within 1e3 * tol still counts as converged.
QpResult solve_qp(const Mat& H, const Vec& c, const Mat& G, const Vec& h, double tol = 1e-10,
                  int max_iter = 200);

} // namespace hopfstab
