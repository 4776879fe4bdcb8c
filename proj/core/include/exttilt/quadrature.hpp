#pragma once

#include <array>
#include <vector>

#include "exttilt/model.hpp"
#include "exttilt/signed_log.hpp"

namespace exttilt {

/// log of the tilted integrand at x: log_c + t*x - g(x) + q(x); -inf off support.
double log_tilt_exponent(const DensityModel& model, double t, double x);

/// Quadrature of int (x - x_ref)^alpha e^{tx} p(x) dx for alpha = 0..3 in one
/// pass over a fixed panel decomposition.  x_ref is the integrand's peak
/// (psi(t), or x_min when the tilt is too weak to move the peak).
///
/// Panels: the window x_ref +- 12 sigma split into 24 Kronrod-15 panels, then
/// geometric panels on both sides until the running alpha=3 contribution is
/// below 1e-17 relative.  Node sums are sign-split and carried in log scale;
/// nothing e^{K}-sized is ever materialized.
struct TiltIntegrals {
    double t = 0.0;
    double x_ref = 0.0;
    double sigma_ref = 0.0;
    std::array<SignedLog, 4> moment; // alpha = 0..3 about x_ref
    std::vector<double> edges;       // panel boundaries actually used

    double log_phi() const { return moment[0].log_abs; }
};

TiltIntegrals tilted_moment_integrals(const DensityModel& model, double t);

namespace detail {
// Kronrod-15 abscissae/weights on [-1,1] (symmetric half, node 0 first).
inline constexpr std::array<double, 8> k15_nodes = {
    0.000000000000000, 0.207784955007898, 0.405845151377397, 0.586087235467691,
    0.741531185599394, 0.864864423359769, 0.949107912342759, 0.991455371120813};
inline constexpr std::array<double, 8> k15_weights = {
    0.209482141084728, 0.204432940075298, 0.190350578064785, 0.169004726639267,
    0.140653259715525, 0.104790010322250, 0.063092092629979, 0.022935322010529};

/// Expand a panel [a,b] into the 15 Kronrod nodes and scaled weights.
struct PanelNodes {
    std::array<double, 15> x;
    std::array<double, 15> w;
};
PanelNodes panel_nodes(double a, double b);
} // namespace detail

} // namespace exttilt
