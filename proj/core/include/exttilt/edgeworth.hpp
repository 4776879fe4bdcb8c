#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "exttilt/model.hpp"
#include "exttilt/tilt.hpp"

namespace exttilt {

double log_tilted_pdf(const DensityModel& model, double t, double x); // log pi_t(x)
double tilted_pdf(const DensityModel& model, double t, double x);     // pi_t(x)

/// The tilted density solved to mean a_n, centered and scaled to unit
/// variance: bar-pi(y) = s * pi_t(s y + a_n) with m(t) = a_n, s = sqrt(s2(t)).
/// Caches the tilt state and the quadrature nodes so characteristic-function
/// and L2 evaluations reuse one decomposition.
class NormalizedTilt {
  public:
    NormalizedTilt(const DensityModel& model, double a_n);

    double a_n() const { return a_n_; }
    double s() const { return s_; }
    const TiltState& state() const { return state_; }
    const DensityModel& model() const { return *model_; }

    double log_pdf(double y) const; // -inf when s*y + a_n < 0
    double pdf(double y) const;

    /// E e^{i tau Y}; charfn(0) = 1, |charfn| <= 1, conjugate-symmetric.
    /// Accurate for |tau| <= tau_valid(): the node cache subdivides every
    /// mass-carrying panel far enough that the Kronrod rule resolves the
    /// oscillation at that frequency.
    std::complex<double> charfn(double tau) const;
    double tau_valid() const { return tau_valid_; }

    double l2_norm() const; // int bar-pi(y)^2 dy

  private:
    const DensityModel* model_;
    double a_n_;
    double s_;
    double tau_valid_ = 0.0;
    TiltState state_;
    std::vector<double> node_x_; // quadrature nodes (x scale)
    std::vector<double> node_w_; // scaled Kronrod weights
    std::vector<double> node_p_; // pi_t at the nodes
};

/// Convenience single-point forms.
double normalized_tilted_pdf(const DensityModel& model, double a_n, double x);

/// phi(x) (1 + mu3/(6 sqrt(n) s^3) (x^3 - 3x)) with exact quadrature moments.
double edgeworth_density(const Moments& mom, long n, double x);
double edgeworth_density(const DensityModel& model, double a_n, long n, double x);

/// Fourier inversion of charfn(tau/sqrt(n))^n on the grid: the independent
/// oracle for the normalized n-fold convolution density.  The tau range is
/// scanned until |charfn|^n stays below 1e-14; trapezoid step <= 0.01.
/// Throws oracle_failure when the characteristic function will not decay.
std::vector<double> convolution_density_oracle(const NormalizedTilt& nt, long n,
                                               std::span<const double> x_grid,
                                               double tau_step = 0.01);

struct EdgeworthResult {
    double a_n = 0.0;
    long n = 0;
    std::vector<double> x_grid;
    std::vector<double> rho_hat;    // Edgeworth values
    std::vector<double> rho_oracle; // Fourier-inversion values
    double sup_err = 0.0;
    double scaled_err = 0.0; // sqrt(n) * sup_err
};

EdgeworthResult sup_error_scan(const DensityModel& model, double a_n, long n,
                               std::span<const double> x_grid);

std::vector<double> default_edgeworth_grid(double radius = 5.0, double step = 0.05);

/// Both sides of the Parseval identity int |charfn|^2 dtau = 2 pi int bar-pi^2 dx.
double parseval_charfn_side(const NormalizedTilt& nt, double tau_step = 0.01);
double parseval_density_side(const NormalizedTilt& nt);

/// CSV: columns x, rho_hat, rho_oracle, abs_err with config header comments.
void write_edgeworth_csv(std::ostream& os, const EdgeworthResult& result,
                         const DensityModel& model);

} // namespace exttilt
