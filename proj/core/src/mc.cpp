#include "exttilt/mc.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "exttilt/csv.hpp"
#include "exttilt/errors.hpp"
#include "exttilt/quadrature.hpp"
#include "exttilt/rng.hpp"

namespace exttilt {

namespace {
constexpr std::size_t n_batches = 16;

double batch_stderr(const std::vector<double>& vals) {
    if (vals.size() < 2) return 0.0;
    double mean = 0.0;
    for (const double v : vals) mean += v;
    mean /= double(vals.size());
    double ss = 0.0;
    for (const double v : vals) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / double(vals.size() - 1));
    return sd / std::sqrt(double(vals.size()));
}

// Fritsch-Butland slopes: monotone cubic Hermite through (f, x) knots.
std::vector<double> monotone_slopes(const std::vector<double>& f, const std::vector<double>& x) {
    const std::size_t n = f.size();
    std::vector<double> d(n - 1), m(n);
    for (std::size_t i = 0; i + 1 < n; ++i) d[i] = (x[i + 1] - x[i]) / (f[i + 1] - f[i]);
    m[0] = d[0];
    m[n - 1] = d[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (d[i - 1] * d[i] <= 0.0) {
            m[i] = 0.0;
            continue;
        }
        const double h0 = f[i] - f[i - 1], h1 = f[i + 1] - f[i];
        const double w0 = 2.0 * h1 + h0, w1 = h1 + 2.0 * h0;
        m[i] = (w0 + w1) / (w0 / d[i - 1] + w1 / d[i]);
    }
    return m;
}

double quartile_gap(std::vector<double> v) {
    const std::size_t n = v.size();
    const std::size_t lo = n / 4, hi = (3 * n) / 4;
    std::nth_element(v.begin(), v.begin() + lo, v.end());
    const double q1 = v[lo];
    std::nth_element(v.begin(), v.begin() + hi, v.end());
    const double q3 = v[hi];
    return q3 - q1;
}
} // namespace

TiltedSampler::TiltedSampler(const DensityModel& model, double t)
    : state_(tilt_state(model, t)) {
    // Tabulate the CDF on the tilt decomposition, with core panels split in
    // two so the quantile interpolant sees knots about half a sigma apart.
    const auto& edges = state_.panel_edges;
    std::vector<double> knots;
    knots.push_back(edges.front());
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        knots.push_back(0.5 * (edges[i] + edges[i + 1]));
        knots.push_back(edges[i + 1]);
    }

    std::vector<double> cum;
    cum.push_back(0.0);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        const auto pn = detail::panel_nodes(knots[i], knots[i + 1]);
        double mass = 0.0;
        for (int j = 0; j < 15; ++j) {
            const double lp = log_tilt_exponent(*&model, t, pn.x[j]) - state_.log_phi;
            if (lp > -745.0) mass += pn.w[j] * std::exp(lp);
        }
        total += mass;
        cum.push_back(total);
    }
    if (!(total > 0.0)) throw non_integrable("tilted density carries no tabulated mass");

    // Keep strictly increasing CDF knots only; flat stretches are dead tails.
    cdf_.push_back(0.0);
    x_.push_back(knots.front());
    for (std::size_t i = 1; i < knots.size(); ++i) {
        const double f = cum[i] / total;
        if (f > cdf_.back() + 1e-15 || i + 1 == knots.size()) {
            cdf_.push_back(std::min(f, 1.0));
            x_.push_back(knots[i]);
        }
    }
    if (cdf_.size() < 4) throw non_integrable("tilted density CDF table degenerate");
    slope_ = monotone_slopes(cdf_, x_);
}

double TiltedSampler::quantile(double u) const {
    const double lo = cdf_.front(), hi = cdf_.back();
    u = std::min(std::max(u, lo + 1e-16), hi - 1e-16);
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    const std::size_t i = std::max<std::ptrdiff_t>(1, it - cdf_.begin()) - 1;
    const double h = cdf_[i + 1] - cdf_[i];
    const double s = (u - cdf_[i]) / h;
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0, h10 = s3 - 2.0 * s2 + s;
    const double h01 = -2.0 * s3 + 3.0 * s2, h11 = s3 - s2;
    return h00 * x_[i] + h10 * h * slope_[i] + h01 * x_[i + 1] + h11 * h * slope_[i + 1];
}

double TiltedSampler::sample(std::uint64_t seed, std::uint64_t stream,
                             std::uint64_t index) const {
    return quantile(Philox4x32::uniform(seed, stream, index));
}

std::vector<double> sample_tilted(const DensityModel& model, double t, std::size_t count,
                                  std::uint64_t seed) {
    const TiltedSampler sampler(model, t);
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = sampler.sample(seed, 0, i);
    return out;
}

double default_slab_halfwidth(const DensityModel& model, double a_n, long n) {
    constexpr double c0 = 4.0;
    const double s = std::sqrt(moments_exact(model, tilt_solve(model, a_n)).s2);
    return s * c0 / (2.0 * std::sqrt(double(n)));
}

McEstimate conditional_density_mc(const DensityModel& model, double a_n, long n,
                                  std::span<const double> y, double delta,
                                  std::size_t n_samples, std::uint64_t seed,
                                  double bandwidth_scale) {
    if (!(bandwidth_scale > 0.0)) throw invalid_parameter("bandwidth scale must be positive");
    const std::size_t k = y.size();
    if (k < 1 || long(k) >= n) throw invalid_parameter("need 1 <= k < n");
    if (!(delta > 0.0)) throw invalid_parameter("slab half-width must be positive");
    if (n_samples < n_batches) throw invalid_parameter("too few sample blocks");

    const TiltedSampler sampler(model, tilt_solve(model, a_n));

    std::vector<double> accepted;        // k coordinates per accepted block
    std::vector<std::size_t> batch_of;   // batch index per accepted block
    std::vector<double> head(k);
    for (std::size_t j = 0; j < n_samples; ++j) {
        double sum = 0.0;
        for (long i = 0; i < n; ++i) {
            const double v = sampler.sample(seed, j, std::uint64_t(i));
            sum += v;
            if (std::size_t(i) < k) head[std::size_t(i)] = v;
        }
        if (std::abs(sum / double(n) - a_n) <= delta) {
            accepted.insert(accepted.end(), head.begin(), head.end());
            batch_of.push_back(j * n_batches / n_samples);
        }
    }

    const std::size_t n_acc = batch_of.size();
    const double rate = double(n_acc) / double(n_samples);
    if (rate < 1e-3)
        throw insufficient_acceptance(
            "slab acceptance below 1e-3; widen delta or raise the sample count");

    // Per-coordinate Silverman bandwidths from the accepted sample.
    std::vector<double> bw(k);
    for (std::size_t c = 0; c < k; ++c) {
        std::vector<double> col(n_acc);
        for (std::size_t r = 0; r < n_acc; ++r) col[r] = accepted[r * k + c];
        double mean = 0.0;
        for (const double v : col) mean += v;
        mean /= double(n_acc);
        double ss = 0.0;
        for (const double v : col) ss += (v - mean) * (v - mean);
        const double sd = std::sqrt(ss / double(n_acc - 1));
        const double spread = std::min(sd, quartile_gap(col) / 1.34);
        bw[c] = 0.9 * spread * std::pow(double(n_acc), -0.2) * bandwidth_scale;
        if (!(bw[c] > 0.0)) bw[c] = std::max(1e-8, 1e-3 * std::abs(a_n));
    }

    double norm = 1.0;
    for (std::size_t c = 0; c < k; ++c) norm /= bw[c] * std::sqrt(2.0 * std::numbers::pi);

    std::vector<double> kde_batch(n_batches, 0.0);
    std::vector<std::size_t> acc_batch(n_batches, 0);
    double kde_total = 0.0;
    for (std::size_t r = 0; r < n_acc; ++r) {
        double e = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            const double z = (y[c] - accepted[r * k + c]) / bw[c];
            e -= 0.5 * z * z;
        }
        const double kern = norm * std::exp(e);
        kde_total += kern;
        kde_batch[batch_of[r]] += kern;
        acc_batch[batch_of[r]] += 1;
    }

    std::vector<double> batch_vals;
    for (std::size_t b = 0; b < n_batches; ++b)
        if (acc_batch[b] > 0) batch_vals.push_back(kde_batch[b] / double(acc_batch[b]));

    McEstimate est;
    est.value = kde_total / double(n_acc);
    est.std_err = batch_stderr(batch_vals);
    est.n_samples = n_samples;
    est.seed = seed;
    est.acceptance_rate = rate;
    return est;
}

McEstimate independence_check(const DensityModel& model, double a_n, long n,
                              std::size_t n_samples, std::uint64_t seed,
                              std::optional<double> delta) {
    if (n < 2) throw invalid_parameter("correlation needs n >= 2");
    const double d = delta.value_or(default_slab_halfwidth(model, a_n, n));
    const TiltedSampler sampler(model, tilt_solve(model, a_n));

    std::vector<double> x1, x2;
    for (std::size_t j = 0; j < n_samples; ++j) {
        double sum = 0.0, a = 0.0, b = 0.0;
        for (long i = 0; i < n; ++i) {
            const double v = sampler.sample(seed, j, std::uint64_t(i));
            sum += v;
            if (i == 0) a = v;
            if (i == 1) b = v;
        }
        if (std::abs(sum / double(n) - a_n) <= d) {
            x1.push_back(a);
            x2.push_back(b);
        }
    }

    const std::size_t n_acc = x1.size();
    const double rate = double(n_acc) / double(n_samples);
    if (rate < 1e-3 || n_acc < 8)
        throw insufficient_acceptance(
            "slab acceptance below 1e-3; widen delta or raise the sample count");

    double m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < n_acc; ++i) {
        m1 += x1[i];
        m2 += x2[i];
    }
    m1 /= double(n_acc);
    m2 /= double(n_acc);
    double c11 = 0.0, c22 = 0.0, c12 = 0.0;
    for (std::size_t i = 0; i < n_acc; ++i) {
        c11 += (x1[i] - m1) * (x1[i] - m1);
        c22 += (x2[i] - m2) * (x2[i] - m2);
        c12 += (x1[i] - m1) * (x2[i] - m2);
    }
    const double corr = c12 / std::sqrt(c11 * c22);

    McEstimate est;
    est.value = corr;
    est.std_err = (1.0 - corr * corr) / std::sqrt(double(n_acc));
    est.n_samples = n_samples;
    est.seed = seed;
    est.acceptance_rate = rate;
    return est;
}

void write_mc_csv(std::ostream& os, const McEstimate& est) {
    CsvWriter w(os);
    w.row({"value", "std_err", "n_samples", "acceptance_rate", "seed"});
    w.row({CsvWriter::num(est.value), CsvWriter::num(est.std_err),
           CsvWriter::num(long(est.n_samples)), CsvWriter::num(est.acceptance_rate),
           std::to_string(est.seed)});
}

} // namespace exttilt
