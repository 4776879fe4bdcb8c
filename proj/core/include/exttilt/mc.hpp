#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "exttilt/model.hpp"
#include "exttilt/tilt.hpp"

namespace exttilt {

struct McEstimate {
    double value = 0.0;
    double std_err = 0.0; // batch-means standard error (16 batches)
    std::size_t n_samples = 0;
    std::uint64_t seed = 0;
    double acceptance_rate = 1.0;
};

/// Exact sampler for the tilted density pi_t: inverse CDF on a monotone cubic
/// interpolant of the panel-tabulated CDF.  Draws are keyed by
/// (seed, stream, index) through the counter-based generator.
class TiltedSampler {
  public:
    TiltedSampler(const DensityModel& model, double t);

    double quantile(double u) const; // u in (0,1)
    double sample(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) const;

    const TiltState& state() const { return state_; }

  private:
    TiltState state_;
    std::vector<double> cdf_;   // strictly increasing knots in [0,1]
    std::vector<double> x_;     // quantile values at the knots
    std::vector<double> slope_; // monotone Hermite slopes dx/dF
};

/// count i.i.d. draws from pi_t (stream 0, indices 0..count-1).
std::vector<double> sample_tilted(const DensityModel& model, double t, std::size_t count,
                                  std::uint64_t seed);

/// Slab half-width rule s(t) * c0 / (2 sqrt(n)) with c0 = 4.
double default_slab_halfwidth(const DensityModel& model, double a_n, long n);

/// Estimates the conditional density of (X_1..X_k) at y given the sum event
/// S/n in [a_n - delta, a_n + delta], sampling blocks i.i.d. from the tilted
/// density with mean a_n (under which the slab is a central event).  The
/// value is a product-Gaussian-kernel density estimate over slab-accepted
/// blocks divided by the slab acceptance probability; bandwidths follow the
/// per-coordinate Silverman rule, scaled by bandwidth_scale (robustness
/// suites halve/double it).  Throws insufficient_acceptance when fewer than
/// 1e-3 of the blocks land in the slab.
McEstimate conditional_density_mc(const DensityModel& model, double a_n, long n,
                                  std::span<const double> y, double delta,
                                  std::size_t n_samples, std::uint64_t seed,
                                  double bandwidth_scale = 1.0);

/// Empirical correlation of (X_1, X_2) among slab-accepted blocks.  Exact
/// conditioning on the sum forces -1/(n-1); wide slabs wash the effect out,
/// so the slab width is exposed (default: the conditional-density rule).
McEstimate independence_check(const DensityModel& model, double a_n, long n,
                              std::size_t n_samples, std::uint64_t seed,
                              std::optional<double> delta = std::nullopt);

/// CSV row value,std_err,n_samples,acceptance_rate,seed with config comments.
void write_mc_csv(std::ostream& os, const McEstimate& est);

} // namespace exttilt
