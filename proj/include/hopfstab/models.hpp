#pragma once

#include "hopfstab/dynsys.hpp"

#include <vector>

namespace hopfstab {

// Two-state polynomial system; extra_design_vars appends inert design entries (r ignores them).
DynSystem make_algebraic_model(int extra_design_vars = 0);
Vec algebraic_baseline();

struct TypicalSectionParams {
    double a = -0.3;
    double Omega = 0.5;
    double r_alpha = 0.3;
    double x_alpha = 0.2;
    double kappa5 = 100.0;
    double m_bar = 15.0;
    double kappa3 = -3.0;
};

// state [h, alpha, h', alpha'], design [m_bar, kappa3], mu is the reduced speed
DynSystem make_typical_section(const TypicalSectionParams& p = {});
Vec typical_section_baseline(const TypicalSectionParams& p = {});
inline constexpr double kTypicalSectionMuSeed = 0.8;

struct CGLConfig {
    int grid_points = 32;
    double nu = 1.0;
    double sigma = 0.1;
    double c3_lower = 0.0;
    double c3_upper = 10.0;
};

// state [Re w(xi_0..xi_{N-1}), Im w(...)], design c3(xi_i)
DynSystem make_cgl_model(const CGLConfig& cfg = {});
std::vector<double> cgl_grid(const CGLConfig& cfg = {});
double cgl_spacing(const CGLConfig& cfg = {});
// clip(-tan xi, bounds)
Vec cgl_baseline(const CGLConfig& cfg = {});
// second-order Laplacian with mirror Neumann closure
Mat cgl_laplacian(const CGLConfig& cfg = {});

} // namespace hopfstab
