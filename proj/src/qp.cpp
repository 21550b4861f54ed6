#include "hopfstab/qp.hpp"
#include "hopfstab/errors.hpp"

#include <algorithm>
#include <cmath>

namespace hopfstab {

namespace {

double max_step(const Vec& v, const Vec& dv) {
    double a = 1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (dv[i] < 0.0) a = std::min(a, -v[i] / dv[i]);
    return a;
}

} // namespace

QpResult solve_qp(const Mat& H_in, const Vec& c_in, const Mat& G, const Vec& h, double tol,
                  int max_iter) {
    const double obj_scale = std::max(1.0, c_in.lpNorm<Eigen::Infinity>());
    const Mat H = H_in / obj_scale;
    const Vec c = c_in / obj_scale;
    const Eigen::Index nz = c.size();
    const Eigen::Index m = h.size();
    if (H.rows() != nz || H.cols() != nz || G.rows() != m || G.cols() != nz)
        throw InputError("solve_qp: inconsistent dimensions");

    QpResult res;
    Vec z = Vec::Zero(nz);
    Vec s = (h - G * z).cwiseMax(1.0);
    Vec lam = Vec::Ones(m);
    const double scale_d = 1.0 + c.lpNorm<Eigen::Infinity>();
    const double scale_p = 1.0 + h.lpNorm<Eigen::Infinity>();

    for (int it = 0; it < max_iter; ++it) {
        const Vec rd = H * z + c + G.transpose() * lam;
        const Vec rp = G * z + s - h;
        const double mu = m > 0 ? s.dot(lam) / static_cast<double>(m) : 0.0;
        res.iterations = it;
        if (rd.lpNorm<Eigen::Infinity>() <= tol * scale_d &&
            rp.lpNorm<Eigen::Infinity>() <= tol * scale_p && mu <= tol * scale_d) {
            res.converged = true;
            break;
        }

        const Vec w = lam.cwiseQuotient(s);
        Mat K = H + G.transpose() * w.asDiagonal() * G;
        Eigen::LDLT<Mat> ldlt(K);
        if (ldlt.info() != Eigen::Success) break; // too close to the boundary to refine further

        auto direction = [&](const Vec& rc, Vec& dz, Vec& dl, Vec& ds) {
            const Vec rhs = -rd - G.transpose() * (w.cwiseProduct(rp) - rc.cwiseQuotient(s));
            dz = ldlt.solve(rhs);
            dl = w.cwiseProduct(G * dz + rp) - rc.cwiseQuotient(s);
            ds = -(rc + s.cwiseProduct(dl)).cwiseQuotient(lam);
        };

        Vec dz, dl, ds;
        const Vec rc_aff = s.cwiseProduct(lam);
        direction(rc_aff, dz, dl, ds);
        const double a_aff = std::min(max_step(s, ds), max_step(lam, dl));
        const double mu_aff =
            (s + a_aff * ds).dot(lam + a_aff * dl) / static_cast<double>(std::max<Eigen::Index>(m, 1));
        const double sigma = mu > 0.0 ? std::pow(mu_aff / mu, 3) : 0.0;

        const Vec rc = rc_aff + ds.cwiseProduct(dl) - Vec::Constant(m, sigma * mu);
        direction(rc, dz, dl, ds);
        const double a = std::min(1.0, 0.99 * std::min(max_step(s, ds), max_step(lam, dl)));
        z += a * dz;
        s += a * ds;
        lam += a * dl;
        res.iterations = it + 1;
    }
    res.z = z;
    res.lambda = lam * obj_scale;
    if (!res.converged) {
        const Vec rd = H * z + c + G.transpose() * lam;
        const Vec rp = G * z + s - h;
        const double mu = m > 0 ? s.dot(lam) / static_cast<double>(m) : 0.0;
        const double loose = 1e3 * tol;
        res.converged = rd.lpNorm<Eigen::Infinity>() <= loose * scale_d &&
                        rp.lpNorm<Eigen::Infinity>() <= loose * scale_p && mu <= loose * scale_d &&
                        z.allFinite() && lam.allFinite();
    }
    return res;
}

} // namespace hopfstab
