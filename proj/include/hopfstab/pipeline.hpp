#pragma once

#include "hopfstab/lyapunov.hpp"

namespace hopfstab {

struct HopfOptions {
    EvpOptions evp;
    double class_tol = 1e-8;
};

// equilibrium -> right EVP -> left EVP -> first Lyapunov coefficient
struct HopfPoint {
    HopfRightState right;
    HopfLeftState left;
    LyapunovReport lyapunov;
};

HopfPoint locate_hopf(const DynSystem& sys, const Vec& x, double mu0, const Vec& w0,
                      const HopfOptions& opts = {});

// Newton from a previous solution (typically a nearby design); falls back to a cold start
// seeded with warm.right.mu and warm.right.w_eq.
HopfPoint locate_hopf_from(const DynSystem& sys, const Vec& x, const HopfPoint& warm,
                           const HopfOptions& opts = {});

} // namespace hopfstab
