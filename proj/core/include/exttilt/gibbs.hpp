#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "exttilt/model.hpp"

namespace exttilt {

/// Chain of tilts for conditioning k leading coordinates on a sum constraint:
/// stage i solves m(t_i) = (n a_n - (y_1+...+y_i)) / (n - i).  The two product
/// approximations are exposed in log scale only; products of k densities
/// underflow for moderate k.
struct GibbsChain {
    double a_n = 0.0;
    long n = 0;
    std::vector<double> y;
    std::vector<double> t_seq;
    std::vector<double> m_seq;
    std::vector<double> s2_seq;
    std::vector<double> z_seq;  // z_i = (m_i - y_{i+1}) / (s_i sqrt(n-i-1))
    double log_g_m = 0.0;       // sum_i log pi^{m_i}(y_{i+1})
    double log_g_an = 0.0;      // sum_i log pi^{a_n}(y_i)
};

/// Builds the chain, warm-starting each tilt solve from the previous stage.
/// Throws infeasible_chain when some stage mean falls to the untilted mean or
/// below (y too large relative to n a_n), invalid_parameter for k >= n-1 or
/// y outside the support.
GibbsChain build_chain(const DensityModel& model, double a_n, long n,
                       std::span<const double> y);

/// psi(t)^2 / (sqrt(n) psi'(t)) at t solving m(t) = a_n; the sequence a_n is
/// admissible when this tends to zero.
struct GrowthReport {
    double value = 0.0;
    double t = 0.0;
    bool pass = false;
};

GrowthReport growth_condition(const DensityModel& model, double a_n, long n,
                              double threshold = 0.1);

struct ZReport {
    double max_abs_z = 0.0;
    double sqrt_n_max_z2 = 0.0; // sqrt(n) * max_i z_i^2
};

ZReport z_smallness_check(const GibbsChain& chain);

/// CSV table (i, t_i, m_i, s2_i, z_i) with config header comments.
void write_chain_csv(std::ostream& os, const GibbsChain& chain, const DensityModel& model);

} // namespace exttilt
