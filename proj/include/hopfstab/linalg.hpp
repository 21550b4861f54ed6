#pragma once

#include <Eigen/Dense>

#include <complex>
#include <map>
#include <string>

namespace hopfstab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using cd = std::complex<double>;

// Per-thread tally of dense factorizations, keyed by system dimension.
struct SolveCounter {
    static void reset();
    static std::map<long, long> snapshot();
    static long count(long dim);
    static void record(long dim);
};

// Dense LU with a conditioning check. Every solve() call is recorded.
class DenseLU {
public:
    DenseLU(const Mat& a, std::string what);
    Vec solve(const Vec& b) const;
    CVec solve(const CVec& b) const;
    double rcond() const { return rcond_; }

private:
    Eigen::PartialPivLU<Mat> lu_;
    double rcond_ = 0.0;
    std::string what_;
};

class ComplexLU {
public:
    ComplexLU(const CMat& a, std::string what);
    CVec solve(const CVec& b) const;

private:
    Eigen::PartialPivLU<CMat> lu_;
    std::string what_;
};

// rcond below this is treated as singular
inline constexpr double kSingularRcond = 1e-14;

inline CVec complexify(const Vec& re, const Vec& im) {
    CVec z(re.size());
    z.real() = re;
    z.imag() = im;
    return z;
}

} // namespace hopfstab
