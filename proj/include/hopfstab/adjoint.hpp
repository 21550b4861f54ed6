#pragma once

#include "hopfstab/pipeline.hpp"

#include <array>
#include <optional>
#include <utility>

namespace hopfstab {

// Gradients of l = f_lyp w.r.t. every argument of first_lyapunov. Complex entries follow
// dl = Re(g^H dv).
struct LyapunovPartials {
    Vec dl_dx;
    Vec dl_dw;
    CVec dl_dq;
    CVec dl_dp;
    double dl_dmu = 0.0;
    double dl_domega = 0.0;
    // dl from a Jacobian perturbation dA is Re(sum_k u_k^T dA v_k)
    std::array<std::pair<CVec, CVec>, 2> abar_factors;
};

LyapunovPartials lyapunov_partials(const DynSystem& sys, const HopfRightState& uR,
                                   const HopfLeftState& uL, const Vec& x,
                                   const LyapunovReport* primal = nullptr);

enum class GradientTarget { lyapunov, mu, omega };

struct GradientReport {
    Vec df_dx;
    Vec psi_L;
    Vec psi_R;
    LyapunovPartials partials;
    std::optional<Vec> fd_reference;
    std::optional<double> max_rel_err;
};

// (d r_L / d u_L)^T psi_L = rhs
Vec adjoint_solve_left(const DynSystem& sys, const HopfLeftState& uL, const HopfRightState& uR,
                       const Vec& x, const Vec& rhs);
// (d r_R / d u_R)^T psi_R = rhs_f - (d r_L / d u_R)^T psi_L
Vec adjoint_solve_right(const DynSystem& sys, const HopfRightState& uR, const Vec& x,
                        const Vec& rhs_f, const Vec& psi_L, const HopfLeftState& uL);

// Pass the LyapunovReport already computed for (uR, uL) to avoid re-solving q1, q2.
GradientReport total_gradient(const DynSystem& sys, const HopfRightState& uR,
                              const HopfLeftState& uL, const Vec& x, GradientTarget target,
                              const LyapunovReport* primal = nullptr);

// Central differences of the whole pipeline, warm-started from base.
Vec fd_total_gradient(const DynSystem& sys, const Vec& x, GradientTarget target, double h,
                      const HopfPoint& base, const HopfOptions& opts = {});

// 1e-6 with analytic tensors. FD tensors put ~1e-10 of roundoff into f_lyp, so those models
// use 1e-3, where truncation and noise balance.
double default_fd_step(const DynSystem& sys);

// max_i |adj_i - fd_i| / max(|fd_i|, 1e-12)
double max_relative_error(const Vec& adj, const Vec& fd);

double target_value(const HopfPoint& hp, GradientTarget target);

} // namespace hopfstab
