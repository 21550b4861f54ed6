#include "hopfstab/pipeline.hpp"
#include "hopfstab/errors.hpp"

namespace hopfstab {

namespace {

HopfPoint finish(const DynSystem& sys, const Vec& x, HopfRightState right,
                 const HopfLeftState* left_guess, const HopfOptions& opts) {
    HopfPoint hp;
    hp.right = std::move(right);
    if (left_guess) {
        try {
            hp.left = solve_left_evp(sys, x, hp.right, left_guess, opts.evp);
        } catch (const SolverError&) {
            hp.left = solve_left_evp(sys, x, hp.right, nullptr, opts.evp);
        }
    } else {
        hp.left = solve_left_evp(sys, x, hp.right, nullptr, opts.evp);
    }
    hp.lyapunov = first_lyapunov(sys, hp.right, hp.left, x, opts.class_tol);
    return hp;
}

} // namespace

HopfPoint locate_hopf(const DynSystem& sys, const Vec& x, double mu0, const Vec& w0,
                      const HopfOptions& opts) {
    validate(sys);
    HopfRightState guess = init_hopf_guess(sys, mu0, x, w0, opts.evp);
    return finish(sys, x, solve_right_evp(sys, x, guess, opts.evp), nullptr, opts);
}

HopfPoint locate_hopf_from(const DynSystem& sys, const Vec& x, const HopfPoint& warm,
                           const HopfOptions& opts) {
    HopfRightState right;
    try {
        right = solve_right_evp(sys, x, warm.right, opts.evp);
    } catch (const SolverError&) {
        return locate_hopf(sys, x, warm.right.mu, warm.right.w_eq, opts);
    }
    return finish(sys, x, std::move(right), &warm.left, opts);
}

} // namespace hopfstab
