#include "hopfstab/lyapunov.hpp"
#include "hopfstab/errors.hpp"

#include <cmath>

namespace hopfstab {

std::string to_string(Stability s) {
    switch (s) {
    case Stability::stable: return "stable";
    case Stability::unstable: return "unstable";
    case Stability::indeterminate: return "indeterminate";
    }
    return "indeterminate";
}

Stability classify_bifurcation(double f_lyp, double class_tol) {
    if (!(class_tol >= 0.0)) throw InputError("classify_bifurcation: negative tolerance");
    if (f_lyp < -class_tol) return Stability::stable;
    if (f_lyp > class_tol) return Stability::unstable;
    return Stability::indeterminate;
}

LyapunovReport first_lyapunov(const DynSystem& sys, const HopfRightState& uR,
                              const HopfLeftState& uL, const Vec& x, double class_tol) {
    if (!(uR.omega > 0.0)) throw InputError("first_lyapunov: omega must be positive");
    const int n = sys.n;
    Expansion ex(sys, uR.w_eq, uR.mu, x);
    const Mat& a = ex.A();
    const CVec q = uR.q();
    const CVec qc = q.conjugate();
    const CVec p = uL.p();

    // b(q, conj q) = b(q_r, q_r) + b(q_i, q_i), real by construction
    Vec b3 = ex.b(uR.q_r, uR.q_r) + ex.b(uR.q_i, uR.q_i);
    CVec b4 = ex.b(q, q);

    LyapunovReport rep;
    {
        DenseLU lu(a, "first_lyapunov: A is singular at the Hopf point (fold-Hopf degeneracy)");
        rep.q1 = lu.solve(b3);
    }
    {
        CMat s = cd(0.0, 2.0 * uR.omega) * CMat::Identity(n, n) - a.cast<cd>();
        ComplexLU lu(s, "first_lyapunov: 2j omega I - A is singular (2:1 resonance)");
        rep.q2 = lu.solve(b4);
    }
    rep.h1 = p.dot(ex.c(q, q, qc));
    rep.h2 = p.dot(ex.b(q, rep.q1.cast<cd>()));
    rep.h3 = p.dot(ex.b(qc, rep.q2));
    rep.f_lyp = (rep.h1 - 2.0 * rep.h2 + rep.h3).real() / (2.0 * uR.omega);
    rep.classification = classify_bifurcation(rep.f_lyp, class_tol);
    return rep;
}

ScalingCheck scaling_invariance_check(const DynSystem& sys, const HopfRightState& uR,
                                      const HopfLeftState& uL, const Vec& x, double alpha,
                                      double theta) {
    if (alpha == 0.0 || !std::isfinite(alpha))
        throw InputError("scaling_invariance_check: alpha must be nonzero");
    const double base = first_lyapunov(sys, uR, uL, x).f_lyp;
    const cd rot = std::polar(1.0, theta);
    HopfRightState r = uR;
    HopfLeftState l = uL;
    CVec q = alpha * rot * uR.q();
    CVec p = uL.p() * rot / alpha;
    r.q_r = q.real();
    r.q_i = q.imag();
    l.p_r = p.real();
    l.p_i = p.imag();
    ScalingCheck out;
    out.f_lyp_scaled = first_lyapunov(sys, r, l, x).f_lyp;
    out.ratio = out.f_lyp_scaled / base;
    return out;
}

} // namespace hopfstab
