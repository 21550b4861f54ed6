#pragma once

#include "hopfstab/linalg.hpp"

#include <atomic>
#include <functional>
#include <memory>
#include <string>

namespace hopfstab {

enum class TensorMode { analytic, finite_difference };

struct TensorEps {
    double eps_b = 1e-4;
    double eps_c = 1e-2;
};

using ResidualFn = std::function<Vec(const Vec& w, double mu, const Vec& x)>;
using JacobianFn = std::function<Mat(const Vec& w, double mu, const Vec& x)>;
using BilinearFn =
    std::function<Vec(const Vec& y1, const Vec& y2, const Vec& w, double mu, const Vec& x)>;
using TrilinearFn = std::function<Vec(const Vec& y1, const Vec& y2, const Vec& y3, const Vec& w,
                                      double mu, const Vec& x)>;
using MuPartialFn = std::function<Vec(const Vec& w, double mu, const Vec& x)>;
using XPartialFn = std::function<Mat(const Vec& w, double mu, const Vec& x)>;

// r(w, mu, x) plus whatever derivative evaluators the model can supply by hand.
// Missing jacobian / partials fall back to central differences.
struct DynSystem {
    std::string name;
    int n = 0;
    int n_x = 0;
    ResidualFn residual_eval;
    JacobianFn jacobian_eval;
    BilinearFn bilinear_eval;
    TrilinearFn trilinear_eval;
    MuPartialFn mu_partial_eval;
    XPartialFn x_partial_eval;
    TensorMode tensor_mode = TensorMode::finite_difference;
    TensorEps eps;
    std::shared_ptr<std::atomic<long>> jacobian_calls = std::make_shared<std::atomic<long>>(0);

    long jacobian_count() const { return jacobian_calls->load(); }
    void reset_jacobian_count() const { jacobian_calls->store(0); }
};

// throws ConfigurationError on an unusable definition
void validate(const DynSystem& sys);

Vec residual(const DynSystem& sys, const Vec& w, double mu, const Vec& x);
Mat jacobian(const DynSystem& sys, const Vec& w, double mu, const Vec& x);
Vec mu_partial(const DynSystem& sys, const Vec& w, double mu, const Vec& x);
Mat x_partial(const DynSystem& sys, const Vec& w, double mu, const Vec& x);
// dA/dmu by central differences of the Jacobian
Mat jacobian_mu(const DynSystem& sys, const Vec& w, double mu, const Vec& x);

Vec bilinear(const DynSystem& sys, const Vec& y1, const Vec& y2, const Vec& w, double mu,
             const Vec& x);
CVec bilinear(const DynSystem& sys, const CVec& y1, const CVec& y2, const Vec& w, double mu,
              const Vec& x);
Vec trilinear(const DynSystem& sys, const Vec& y1, const Vec& y2, const Vec& y3, const Vec& w,
              double mu, const Vec& x);
CVec trilinear(const DynSystem& sys, const CVec& y1, const CVec& y2, const CVec& y3, const Vec& w,
               double mu, const Vec& x);

// Steps are taken along the unit direction and scaled back, so both are homogeneous in y.
Vec fd_bilinear(const DynSystem& sys, const Vec& y1, const Vec& y2, const Vec& w, double mu,
                const Vec& x, const TensorEps& eps);
Vec fd_trilinear(const DynSystem& sys, const Vec& y1, const Vec& y2, const Vec& y3, const Vec& w,
                 double mu, const Vec& x, const TensorEps& eps);

// Matrix-valued contractions at a fixed point (w, mu, x), using the system's tensor backend.
//   hessian_along(y)          M  with M v = b(y, v)
//   third_along(y1, y3)       N  with N v = c(y1, v, y3)
//   fourth_along(y1, y2, y3)  Q  with Q v = d4 r [y1, v, y2, y3]
// Transposes of these contract the output index, which is how the adjoint uses them.
class Expansion {
public:
    Expansion(const DynSystem& sys, Vec w, double mu, Vec x);

    const DynSystem& system() const { return *sys_; }
    const Vec& w() const { return w_; }
    double mu() const { return mu_; }
    const Vec& x() const { return x_; }
    const Mat& A() const;

    CVec b(const CVec& y1, const CVec& y2) const;
    CVec c(const CVec& y1, const CVec& y2, const CVec& y3) const;
    Vec b(const Vec& y1, const Vec& y2) const;
    Vec c(const Vec& y1, const Vec& y2, const Vec& y3) const;

    Mat hessian_along(const Vec& y) const;
    CMat hessian_along(const CVec& y) const;
    Mat third_along(const Vec& y1, const Vec& y3) const;
    CMat third_along(const CVec& y1, const CVec& y3) const;
    Mat fourth_along(const Vec& y1, const Vec& y2, const Vec& y3) const;
    CMat fourth_along(const CVec& y1, const CVec& y2, const CVec& y3) const;

private:
    Mat hessian_along_at(const Vec& w, const Vec& y) const;
    Mat third_along_at(const Vec& w, const Vec& y1, const Vec& y3) const;

    const DynSystem* sys_;
    Vec w_;
    double mu_;
    Vec x_;
    mutable Mat a_;
    mutable bool have_a_ = false;
};

} // namespace hopfstab
