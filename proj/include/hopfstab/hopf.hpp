#pragma once

#include "hopfstab/dynsys.hpp"

namespace hopfstab {

// u_R = [w_eq, q_r, q_i, mu, omega], with the phase of q pinned by q_i[phase_index] = 0.
struct HopfRightState {
    Vec w_eq, q_r, q_i;
    double mu = 0.0;
    double omega = 0.0;
    int phase_index = 0;

    CVec q() const { return complexify(q_r, q_i); }
    Vec pack() const;
    void unpack(const Vec& u);
};

// u_L = [w_eq, p_r, p_i, mu, omega]
struct HopfLeftState {
    Vec w_eq, p_r, p_i;
    double mu = 0.0;
    double omega = 0.0;

    CVec p() const { return complexify(p_r, p_i); }
    Vec pack() const;
    void unpack(const Vec& u);
};

inline int evp_size(int n) { return 3 * n + 2; }

struct EvpOptions {
    double tol = 1e-11; // infinity norm of the stacked residual
    int max_iter = 50;
    double eq_tol = 1e-10;
    int eq_max_iter = 50;
    bool check_crossing = true;
};

HopfRightState init_hopf_guess(const DynSystem& sys, double mu0, const Vec& x, const Vec& w0,
                               const EvpOptions& opts = {});

Vec residual_right(const DynSystem& sys, const HopfRightState& u, const Vec& x);
Mat jacobian_right(const DynSystem& sys, const HopfRightState& u, const Vec& x);
HopfRightState solve_right_evp(const DynSystem& sys, const Vec& x, const HopfRightState& guess,
                               const EvpOptions& opts = {});

// d Re(lambda)/d mu along the equilibrium branch, central differences in mu
double crossing_rate(const DynSystem& sys, const HopfRightState& u, const Vec& x,
                     const EvpOptions& opts = {});

Vec residual_left(const DynSystem& sys, const HopfLeftState& uL, const HopfRightState& uR,
                  const Vec& x);
// d r_L / d u_L
Mat jacobian_left(const DynSystem& sys, const HopfLeftState& uL, const HopfRightState& uR,
                  const Vec& x);
// d r_L / d u_R; only the normalization rows depend on q
Mat jacobian_left_cross(const DynSystem& sys, const HopfLeftState& uL, const HopfRightState& uR);

HopfLeftState seed_left(const DynSystem& sys, const HopfRightState& uR, const Vec& x);
// guess == nullptr seeds from a dense eigensolve of A^T
HopfLeftState solve_left_evp(const DynSystem& sys, const Vec& x, const HopfRightState& uR,
                             const HopfLeftState* guess = nullptr, const EvpOptions& opts = {});

// Reselect the phase index if |q_k| < 0.1 max|q| and rotate so Im(q_k) = 0, |q| = 1.
void normalize_phase(HopfRightState& u, bool force_reselect = false);

} // namespace hopfstab
