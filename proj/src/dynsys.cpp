#include "hopfstab/dynsys.hpp"
#include "hopfstab/errors.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <utility>

namespace hopfstab {

namespace {

void check_dims(const DynSystem& sys, const Vec& w, const Vec& x, const char* what) {
    if (w.size() != sys.n)
        throw InputError(std::string(what) + ": state has length " + std::to_string(w.size()) +
                         ", expected " + std::to_string(sys.n));
    if (x.size() != sys.n_x)
        throw InputError(std::string(what) + ": design vector has length " +
                         std::to_string(x.size()) + ", expected " + std::to_string(sys.n_x));
}

void check_finite(const Vec& v, const char* what) {
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (!std::isfinite(v[i]))
            throw EvaluationError(std::string(what) + ": non-finite value at entry " +
                                  std::to_string(i));
}

void check_finite(const Mat& m, const char* what) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            if (!std::isfinite(m(i, j)))
                throw EvaluationError(std::string(what) + ": non-finite value at (" +
                                      std::to_string(i) + ", " + std::to_string(j) + ")");
}

double fd_step(double v) { return 1e-6 * (1.0 + std::abs(v)); }

bool nonzero(const Vec& v) { return v.size() > 0 && v.cwiseAbs().maxCoeff() > 0.0; }

// Expand a real multilinear map over complex arguments, skipping zero imaginary parts.
template <std::size_t K, class F>
auto multilinear(const std::array<const CVec*, K>& z, F&& f) {
    std::array<Vec, K> re, im;
    std::array<bool, K> has_im{};
    for (std::size_t k = 0; k < K; ++k) {
        re[k] = z[k]->real();
        im[k] = z[k]->imag();
        has_im[k] = nonzero(im[k]);
    }
    using Real = std::decay_t<decltype(f(re))>;
    using Complex = Eigen::Matrix<cd, Real::RowsAtCompileTime, Real::ColsAtCompileTime>;
    Complex acc;
    const std::array<cd, 4> jpow{cd(1, 0), cd(0, 1), cd(-1, 0), cd(0, -1)};
    for (unsigned mask = 0; mask < (1u << K); ++mask) {
        std::array<Vec, K> args;
        bool skip = false;
        for (std::size_t k = 0; k < K; ++k) {
            if (mask & (1u << k)) {
                if (!has_im[k]) { skip = true; break; }
                args[k] = im[k];
            } else {
                args[k] = re[k];
            }
        }
        if (skip) continue;
        Complex term = jpow[std::popcount(mask) % 4] * f(args).template cast<cd>();
        if (mask == 0) acc = term;
        else acc += term;
    }
    return acc;
}

} // namespace

void validate(const DynSystem& sys) {
    if (sys.n <= 0) throw ConfigurationError(sys.name + ": state dimension must be positive");
    if (sys.n_x < 0) throw ConfigurationError(sys.name + ": negative design dimension");
    if (!sys.residual_eval) throw ConfigurationError(sys.name + ": residual evaluator missing");
    if (sys.tensor_mode == TensorMode::analytic && (!sys.bilinear_eval || !sys.trilinear_eval))
        throw ConfigurationError(sys.name +
                                 ": analytic tensor mode requires bilinear and trilinear evaluators");
    if (!(sys.eps.eps_b > 0.0) || !(sys.eps.eps_c > 0.0))
        throw ConfigurationError(sys.name + ": tensor perturbations must be positive");
}

Vec residual(const DynSystem& sys, const Vec& w, double mu, const Vec& x) {
    check_dims(sys, w, x, "residual");
    Vec r = sys.residual_eval(w, mu, x);
    if (r.size() != sys.n)
        throw EvaluationError("residual: evaluator returned length " + std::to_string(r.size()));
    check_finite(r, "residual");
    return r;
}

Mat jacobian(const DynSystem& sys, const Vec& w, double mu, const Vec& x) {
    check_dims(sys, w, x, "jacobian");
    sys.jacobian_calls->fetch_add(1);
    Mat a;
    if (sys.jacobian_eval) {
        a = sys.jacobian_eval(w, mu, x);
    } else {
        a.resize(sys.n, sys.n);
        Vec wp = w;
        for (int j = 0; j < sys.n; ++j) {
            double h = fd_step(w[j]);
            wp[j] = w[j] + h;
            Vec rp = sys.residual_eval(wp, mu, x);
            wp[j] = w[j] - h;
            Vec rm = sys.residual_eval(wp, mu, x);
            wp[j] = w[j];
            a.col(j) = (rp - rm) / (2.0 * h);
        }
    }
    if (a.rows() != sys.n || a.cols() != sys.n)
        throw EvaluationError("jacobian: evaluator returned wrong shape");
    check_finite(a, "jacobian");
    return a;
}

Vec mu_partial(const DynSystem& sys, const Vec& w, double mu, const Vec& x) {
    check_dims(sys, w, x, "mu_partial");
    Vec g;
    if (sys.mu_partial_eval) {
        g = sys.mu_partial_eval(w, mu, x);
    } else {
        double h = fd_step(mu);
        g = (sys.residual_eval(w, mu + h, x) - sys.residual_eval(w, mu - h, x)) / (2.0 * h);
    }
    check_finite(g, "mu_partial");
    return g;
}

Mat x_partial(const DynSystem& sys, const Vec& w, double mu, const Vec& x) {
    check_dims(sys, w, x, "x_partial");
    Mat g;
    if (sys.x_partial_eval) {
        g = sys.x_partial_eval(w, mu, x);
    } else {
        g.resize(sys.n, sys.n_x);
        Vec xp = x;
        for (int k = 0; k < sys.n_x; ++k) {
            double h = fd_step(x[k]);
            xp[k] = x[k] + h;
            Vec rp = sys.residual_eval(w, mu, xp);
            xp[k] = x[k] - h;
            Vec rm = sys.residual_eval(w, mu, xp);
            xp[k] = x[k];
            g.col(k) = (rp - rm) / (2.0 * h);
        }
    }
    check_finite(g, "x_partial");
    return g;
}

Mat jacobian_mu(const DynSystem& sys, const Vec& w, double mu, const Vec& x) {
    double h = fd_step(mu);
    return (jacobian(sys, w, mu + h, x) - jacobian(sys, w, mu - h, x)) / (2.0 * h);
}

Vec fd_bilinear(const DynSystem& sys, const Vec& y1, const Vec& y2, const Vec& w, double mu,
                const Vec& x, const TensorEps& eps) {
    const double s = y1.norm();
    if (s == 0.0) return Vec::Zero(sys.n);
    Vec wp = w + (eps.eps_b / s) * y1;
    Vec wm = w - (eps.eps_b / s) * y1;
    return (jacobian(sys, wp, mu, x) - jacobian(sys, wm, mu, x)) * y2 * (s / (2.0 * eps.eps_b));
}

Vec fd_trilinear(const DynSystem& sys, const Vec& y1, const Vec& y2, const Vec& y3, const Vec& w,
                 double mu, const Vec& x, const TensorEps& eps) {
    const double s = y3.norm();
    if (s == 0.0) return Vec::Zero(sys.n);
    Vec wp = w + (eps.eps_c / s) * y3;
    Vec wm = w - (eps.eps_c / s) * y3;
    return (fd_bilinear(sys, y1, y2, wp, mu, x, eps) - fd_bilinear(sys, y1, y2, wm, mu, x, eps)) *
           (s / (2.0 * eps.eps_c));
}

Vec bilinear(const DynSystem& sys, const Vec& y1, const Vec& y2, const Vec& w, double mu,
             const Vec& x) {
    check_dims(sys, w, x, "bilinear");
    if (y1.size() != sys.n || y2.size() != sys.n) throw InputError("bilinear: direction length");
    if (sys.tensor_mode == TensorMode::analytic) {
        if (!sys.bilinear_eval) throw ConfigurationError("bilinear: analytic evaluator missing");
        Vec v = sys.bilinear_eval(y1, y2, w, mu, x);
        check_finite(v, "bilinear");
        return v;
    }
    return fd_bilinear(sys, y1, y2, w, mu, x, sys.eps);
}

Vec trilinear(const DynSystem& sys, const Vec& y1, const Vec& y2, const Vec& y3, const Vec& w,
              double mu, const Vec& x) {
    check_dims(sys, w, x, "trilinear");
    if (y1.size() != sys.n || y2.size() != sys.n || y3.size() != sys.n)
        throw InputError("trilinear: direction length");
    if (sys.tensor_mode == TensorMode::analytic) {
        if (!sys.trilinear_eval) throw ConfigurationError("trilinear: analytic evaluator missing");
        Vec v = sys.trilinear_eval(y1, y2, y3, w, mu, x);
        check_finite(v, "trilinear");
        return v;
    }
    return fd_trilinear(sys, y1, y2, y3, w, mu, x, sys.eps);
}

CVec bilinear(const DynSystem& sys, const CVec& y1, const CVec& y2, const Vec& w, double mu,
              const Vec& x) {
    return Expansion(sys, w, mu, x).b(y1, y2);
}

CVec trilinear(const DynSystem& sys, const CVec& y1, const CVec& y2, const CVec& y3, const Vec& w,
               double mu, const Vec& x) {
    return Expansion(sys, w, mu, x).c(y1, y2, y3);
}

Expansion::Expansion(const DynSystem& sys, Vec w, double mu, Vec x)
    : sys_(&sys), w_(std::move(w)), mu_(mu), x_(std::move(x)) {
    check_dims(sys, w_, x_, "expansion");
}

const Mat& Expansion::A() const {
    if (!have_a_) {
        a_ = jacobian(*sys_, w_, mu_, x_);
        have_a_ = true;
    }
    return a_;
}

Vec Expansion::b(const Vec& y1, const Vec& y2) const {
    return bilinear(*sys_, y1, y2, w_, mu_, x_);
}

Vec Expansion::c(const Vec& y1, const Vec& y2, const Vec& y3) const {
    return trilinear(*sys_, y1, y2, y3, w_, mu_, x_);
}

CVec Expansion::b(const CVec& y1, const CVec& y2) const {
    if (sys_->tensor_mode == TensorMode::finite_difference) return hessian_along(y1) * y2;
    return multilinear<2>({&y1, &y2}, [&](const std::array<Vec, 2>& a) { return b(a[0], a[1]); });
}

CVec Expansion::c(const CVec& y1, const CVec& y2, const CVec& y3) const {
    if (sys_->tensor_mode == TensorMode::finite_difference) return third_along(y1, y3) * y2;
    return multilinear<3>({&y1, &y2, &y3},
                          [&](const std::array<Vec, 3>& a) { return c(a[0], a[1], a[2]); });
}

Mat Expansion::hessian_along_at(const Vec& w, const Vec& y) const {
    const int n = sys_->n;
    if (sys_->tensor_mode == TensorMode::analytic) {
        Mat m(n, n);
        Vec e = Vec::Zero(n);
        for (int j = 0; j < n; ++j) {
            e[j] = 1.0;
            m.col(j) = bilinear(*sys_, y, e, w, mu_, x_);
            e[j] = 0.0;
        }
        return m;
    }
    const double s = y.norm();
    if (s == 0.0) return Mat::Zero(n, n);
    const double eb = sys_->eps.eps_b / s;
    return (jacobian(*sys_, w + eb * y, mu_, x_) - jacobian(*sys_, w - eb * y, mu_, x_)) / (2.0 * eb);
}

Mat Expansion::third_along_at(const Vec& w, const Vec& y1, const Vec& y3) const {
    const int n = sys_->n;
    if (sys_->tensor_mode == TensorMode::analytic) {
        Mat m(n, n);
        Vec e = Vec::Zero(n);
        for (int j = 0; j < n; ++j) {
            e[j] = 1.0;
            m.col(j) = trilinear(*sys_, y1, e, y3, w, mu_, x_);
            e[j] = 0.0;
        }
        return m;
    }
    const double s = y3.norm();
    if (s == 0.0) return Mat::Zero(n, n);
    const double ec = sys_->eps.eps_c / s;
    return (hessian_along_at(w + ec * y3, y1) - hessian_along_at(w - ec * y3, y1)) / (2.0 * ec);
}

Mat Expansion::hessian_along(const Vec& y) const { return hessian_along_at(w_, y); }

Mat Expansion::third_along(const Vec& y1, const Vec& y3) const {
    return third_along_at(w_, y1, y3);
}

Mat Expansion::fourth_along(const Vec& y1, const Vec& y2, const Vec& y3) const {
    const double s = y3.norm();
    if (s == 0.0) return Mat::Zero(sys_->n, sys_->n);
    const double t =
        (sys_->tensor_mode == TensorMode::finite_difference ? sys_->eps.eps_c : 1e-4) / s;
    return (third_along_at(w_ + t * y3, y1, y2) - third_along_at(w_ - t * y3, y1, y2)) / (2.0 * t);
}

CMat Expansion::hessian_along(const CVec& y) const {
    return multilinear<1>({&y}, [&](const std::array<Vec, 1>& a) { return hessian_along(a[0]); });
}

CMat Expansion::third_along(const CVec& y1, const CVec& y3) const {
    return multilinear<2>({&y1, &y3},
                          [&](const std::array<Vec, 2>& a) { return third_along(a[0], a[1]); });
}

CMat Expansion::fourth_along(const CVec& y1, const CVec& y2, const CVec& y3) const {
    return multilinear<3>({&y1, &y2, &y3}, [&](const std::array<Vec, 3>& a) {
        return fourth_along(a[0], a[1], a[2]);
    });
}

} // namespace hopfstab
