#pragma once

#include <vector>

#include "exttilt/model.hpp"
#include "exttilt/quadrature.hpp"
#include "exttilt/signed_log.hpp"

namespace exttilt {

/// Sixth moment of the standard normal distribution (a constant, not computed).
inline constexpr double normal_sixth_moment = 15.0;

struct Moments {
    double m = 0.0;   // mean of the tilted density
    double s2 = 0.0;  // variance
    double mu3 = 0.0; // third centered moment
};

/// Everything attached to one tilt parameter t.
struct TiltState {
    double t = 0.0;
    double x_hat = 0.0;   // psi(t), peak of K(x,t) = tx - g(x)
    double sigma = 0.0;   // (h'(x_hat))^{-1/2}
    double log_phi = 0.0; // log E e^{tX}

    double m_exact = 0.0, s2_exact = 0.0, mu3_exact = 0.0; // quadrature values
    double m_asym = 0.0, s2_asym = 0.0, mu3_asym = 0.0;    // psi, psi', psi''
    double m_refined = 0.0; // x_hat - h''(x_hat) sigma^4 / 2

    std::vector<double> panel_edges; // quadrature decomposition used
};

TiltState tilt_state(const DensityModel& model, double t);

/// log Phi(t) by panel quadrature in log space.  t = 0 gives ~0 by
/// normalization.
double log_mgf_quadrature(const DensityModel& model, double t);

/// Laplace approximation log c + log sqrt(2 pi) + log sigma + K(x_hat, t).
double log_mgf_laplace(const DensityModel& model, double t);

/// Signed-log quadrature of int (x - x_hat)^alpha e^{tx} p(x) dx, alpha in 0..3.
SignedLog psi_moment_integral(const DensityModel& model, double t, int alpha);

/// Truncated-Gaussian-moment term
///   T1(t, alpha) = I_alpha(L) - (h''(x_hat) sigma^3 / 6) I_{alpha+3}(L),
/// where I_a(L) = int_{-L}^{L} y^a e^{-y^2/2} dy and L = l^{1/3}/sqrt(2),
/// evaluated by the incomplete-moment recursion of the Gaussian weight.
double t1_term(const DensityModel& model, double t, int alpha, double l);

/// Mean, variance, third centered moment of the tilted density by quadrature.
Moments moments_exact(const DensityModel& model, double t);

enum class AsymptoticOrder { leading, refined };

/// leading: (psi, psi', (M6-9)/6 psi'').  refined replaces the mean with
/// x_hat - h''(x_hat) sigma^4 / 2.
Moments moments_asymptotic(const DensityModel& model, double t, AsymptoticOrder order);

/// Solve m(t) = a for t > 0 by bracketing plus Newton with s^2 as derivative.
/// Throws below_mean when a <= m(0).
double tilt_solve(const DensityModel& model, double a);

/// Same fixed point as tilt_solve, started from a caller-supplied guess
/// (chain construction warm-starts each stage on the previous tilt).
double tilt_solve_from(const DensityModel& model, double a, double t_init);

double skewness(const DensityModel& model, double t); // mu3 / s^3

/// Quantities whose decay certifies that t is deep enough in the Laplace
/// regime; validation suites track them along a t-grid.
struct TiltDiagnostics {
    double h2_sigma3 = 0.0;         // h''(x_hat) sigma^3
    double h2_sigma4 = 0.0;         // h''(x_hat) sigma^4
    double log_sigma_over_k = 0.0;  // |log sigma| / int_1^t psi(u) du
    double sup_h3_window = 0.0;     // sup_{|d|<=sigma l} h'''(x_hat+d) sigma^4 l^4
};

/// Cutoff l defaults to (log t)^3.
TiltDiagnostics diagnostics(const DensityModel& model, double t);

} // namespace exttilt
