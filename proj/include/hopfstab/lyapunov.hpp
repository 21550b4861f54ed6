#pragma once

#include "hopfstab/hopf.hpp"

#include <string>

namespace hopfstab {

enum class Stability { stable, unstable, indeterminate };

std::string to_string(Stability s);

struct LyapunovReport {
    double f_lyp = 0.0;
    cd h1, h2, h3;
    Vec q1;  // A^{-1} b(q, conj q), real
    CVec q2; // (2 j omega I - A)^{-1} b(q, q)
    Stability classification = Stability::indeterminate;
};

// w_eq, mu, omega and q are taken from uR; only p is read from uL.
LyapunovReport first_lyapunov(const DynSystem& sys, const HopfRightState& uR,
                              const HopfLeftState& uL, const Vec& x, double class_tol = 1e-8);

Stability classify_bifurcation(double f_lyp, double class_tol = 1e-8);

struct ScalingCheck {
    double f_lyp_scaled = 0.0;
    double ratio = 0.0;
};

// q -> alpha e^{j theta} q with p rescaled to keep q* p = 1
ScalingCheck scaling_invariance_check(const DynSystem& sys, const HopfRightState& uR,
                                      const HopfLeftState& uL, const Vec& x, double alpha,
                                      double theta);

} // namespace hopfstab
