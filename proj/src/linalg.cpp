#include "hopfstab/linalg.hpp"
#include "hopfstab/errors.hpp"

#include <algorithm>

namespace hopfstab {

namespace {
thread_local std::map<long, long> g_solves;
}

void SolveCounter::reset() { g_solves.clear(); }
std::map<long, long> SolveCounter::snapshot() { return g_solves; }
long SolveCounter::count(long dim) {
    auto it = g_solves.find(dim);
    return it == g_solves.end() ? 0 : it->second;
}
void SolveCounter::record(long dim) { ++g_solves[dim]; }

namespace {

// Eigen's condition estimate reports 1 for some exactly singular matrices
template <class M>
double pivot_ratio(const M& lu) {
    const auto d = lu.diagonal().cwiseAbs();
    const double big = d.maxCoeff();
    return big > 0.0 ? d.minCoeff() / big : 0.0;
}

} // namespace

DenseLU::DenseLU(const Mat& a, std::string what) : what_(std::move(what)) {
    if (!a.allFinite()) throw EvaluationError(what_ + ": matrix has non-finite entries");
    lu_.compute(a);
    rcond_ = std::min(lu_.rcond(), pivot_ratio(lu_.matrixLU()));
    if (!(rcond_ > kSingularRcond))
        throw DegeneracyError(what_ + ": matrix is singular (rcond " + std::to_string(rcond_) + ")");
}

Vec DenseLU::solve(const Vec& b) const {
    SolveCounter::record(lu_.rows());
    return lu_.solve(b);
}

CVec DenseLU::solve(const CVec& b) const {
    SolveCounter::record(lu_.rows());
    Mat rhs(b.size(), 2);
    rhs.col(0) = b.real();
    rhs.col(1) = b.imag();
    Mat x = lu_.solve(rhs);
    return complexify(x.col(0), x.col(1));
}

ComplexLU::ComplexLU(const CMat& a, std::string what) : what_(std::move(what)) {
    if (!a.allFinite()) throw EvaluationError(what_ + ": matrix has non-finite entries");
    lu_.compute(a);
    double rc = std::min(lu_.rcond(), pivot_ratio(lu_.matrixLU()));
    if (!(rc > kSingularRcond))
        throw DegeneracyError(what_ + ": matrix is singular (rcond " + std::to_string(rc) + ")");
}

CVec ComplexLU::solve(const CVec& b) const {
    SolveCounter::record(lu_.rows());
    return lu_.solve(b);
}

} // namespace hopfstab
