#include "exttilt/edgeworth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "exttilt/csv.hpp"
#include "exttilt/errors.hpp"
#include "exttilt/quadrature.hpp"

namespace exttilt {

namespace {
constexpr double neg_inf = -std::numeric_limits<double>::infinity();
constexpr double inv_sqrt_2pi = 0.3989422804014327;

std::complex<double> pow_int(std::complex<double> z, long n) {
    std::complex<double> acc{1.0, 0.0};
    while (n > 0) {
        if (n & 1) acc *= z;
        z *= z;
        n >>= 1;
    }
    return acc;
}
} // namespace

double log_tilted_pdf(const DensityModel& model, double t, double x) {
    if (x < 0.0) return neg_inf;
    return log_pdf(model, x) + t * x - log_mgf_quadrature(model, t);
}

double tilted_pdf(const DensityModel& model, double t, double x) {
    return std::exp(log_tilted_pdf(model, t, x));
}

NormalizedTilt::NormalizedTilt(const DensityModel& model, double a_n)
    : model_(&model), a_n_(a_n), state_(tilt_state(model, tilt_solve(model, a_n))) {
    s_ = std::sqrt(state_.s2_exact);
    // Node cache on the tilt decomposition: every characteristic-function or
    // L2 evaluation reuses one fixed, ordered set of (x, w, pi_t(x)).
    // Mass-carrying panels are split to about an eighth of the standardized
    // scale; dead tail panels are skipped wholesale (their aliasing error is
    // bounded by their mass, which is nil at any frequency).
    const auto& edges = state_.panel_edges;
    const double target_w = 0.125 * s_;
    double widest_live = target_w;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        const auto probe = detail::panel_nodes(edges[i], edges[i + 1]);
        bool live = false;
        for (int j = 0; j < 15 && !live; ++j)
            live = log_tilt_exponent(*model_, state_.t, probe.x[j]) - state_.log_phi > -745.0;
        if (!live) continue;
        const double width = edges[i + 1] - edges[i];
        const int nsub = int(std::min(256.0, std::max(1.0, std::ceil(width / target_w))));
        widest_live = std::max(widest_live, width / nsub);
        for (int k = 0; k < nsub; ++k) {
            const double a = edges[i] + width * k / nsub;
            const double b = edges[i] + width * (k + 1) / nsub;
            const auto pn = detail::panel_nodes(a, b);
            for (int j = 0; j < 15; ++j) {
                const double lp =
                    log_tilt_exponent(*model_, state_.t, pn.x[j]) - state_.log_phi;
                if (lp < -745.0) continue; // exp underflows; node carries nothing
                node_x_.push_back(pn.x[j]);
                node_w_.push_back(pn.w[j]);
                node_p_.push_back(std::exp(lp));
            }
        }
    }
    // Kronrod-15 resolves e^{i tau y} to machine accuracy while the phase per
    // half sub-panel stays near 2 radians.
    tau_valid_ = 4.4 * s_ / widest_live;
}

double NormalizedTilt::log_pdf(double y) const {
    const double x = s_ * y + a_n_;
    if (x < 0.0) return neg_inf;
    return std::log(s_) + log_tilt_exponent(*model_, state_.t, x) - state_.log_phi;
}

double NormalizedTilt::pdf(double y) const { return std::exp(log_pdf(y)); }

std::complex<double> NormalizedTilt::charfn(double tau) const {
    std::complex<double> acc{0.0, 0.0};
    const double scale = tau / s_;
    for (std::size_t i = 0; i < node_x_.size(); ++i) {
        const double phase = scale * (node_x_[i] - a_n_);
        acc += node_w_[i] * node_p_[i] * std::complex<double>{std::cos(phase), std::sin(phase)};
    }
    return acc;
}

double NormalizedTilt::l2_norm() const {
    double acc = 0.0;
    for (std::size_t i = 0; i < node_x_.size(); ++i)
        acc += node_w_[i] * node_p_[i] * node_p_[i];
    return s_ * acc; // substitution y = (x - a_n)/s
}

double normalized_tilted_pdf(const DensityModel& model, double a_n, double x) {
    return NormalizedTilt(model, a_n).pdf(x);
}

double edgeworth_density(const Moments& mom, long n, double x) {
    const double s3 = std::pow(mom.s2, 1.5);
    const double corr = mom.mu3 / (6.0 * std::sqrt(double(n)) * s3) * (x * x * x - 3.0 * x);
    return inv_sqrt_2pi * std::exp(-0.5 * x * x) * (1.0 + corr);
}

double edgeworth_density(const DensityModel& model, double a_n, long n, double x) {
    return edgeworth_density(moments_exact(model, tilt_solve(model, a_n)), n, x);
}

std::vector<double> convolution_density_oracle(const NormalizedTilt& nt, long n,
                                               std::span<const double> x_grid,
                                               double tau_step) {
    if (n < 1) throw invalid_parameter("convolution order n must be positive");
    if (!(tau_step > 0.0) || tau_step > 0.0100001)
        throw invalid_parameter("tau step must lie in (0, 0.01]");

    const double sqrt_n = std::sqrt(double(n));
    const double log_threshold = std::log(1e-14);

    // Scan |charfn(tau/sqrt n)|^n outward until it stays negligible; a single
    // dip is not enough because the modulus may oscillate through zeros.
    std::vector<std::complex<double>> f;
    f.push_back({1.0, 0.0});
    int below = 0;
    constexpr int need_below = 50;
    for (std::size_t j = 1;; ++j) {
        const double tau = j * tau_step;
        if (tau / sqrt_n > nt.tau_valid())
            throw oracle_failure(
                "characteristic function does not decay within the resolvable "
                "frequency range; the tilt level is too shallow for this n");
        const std::complex<double> c = nt.charfn(tau / sqrt_n);
        f.push_back(pow_int(c, n));
        const double mag = std::abs(c);
        const double log_pow = mag > 0.0 ? double(n) * std::log(mag) : neg_inf;
        below = log_pow < log_threshold ? below + 1 : 0;
        if (below >= need_below) break;
    }

    std::vector<double> rho(x_grid.size());
    const double norm = tau_step / (2.0 * std::numbers::pi);
    double worst_im = 0.0;
    for (std::size_t ix = 0; ix < x_grid.size(); ++ix) {
        const double x = x_grid[ix];
        std::complex<double> acc = f[0];
        const std::complex<double> rot{std::cos(tau_step * x), -std::sin(tau_step * x)};
        std::complex<double> z = rot;
        for (std::size_t j = 1; j < f.size(); ++j) {
            const double tw = (j + 1 == f.size()) ? 0.5 : 1.0; // trapezoid ends
            const std::complex<double> term = f[j] * z;
            acc += tw * (term + std::conj(term)); // the -tau half of the line
            z *= rot;
        }
        worst_im = std::max(worst_im, std::abs(acc.imag()) * norm);
        rho[ix] = acc.real() * norm;
    }
    if (worst_im >= 1e-8)
        throw oracle_failure("Fourier inversion left a nonreal residue");
    return rho;
}

EdgeworthResult sup_error_scan(const DensityModel& model, double a_n, long n,
                               std::span<const double> x_grid) {
    const NormalizedTilt nt(model, a_n);
    const Moments mom{nt.a_n(), nt.state().s2_exact, nt.state().mu3_exact};

    EdgeworthResult res;
    res.a_n = a_n;
    res.n = n;
    res.x_grid.assign(x_grid.begin(), x_grid.end());
    res.rho_oracle = convolution_density_oracle(nt, n, x_grid);
    res.rho_hat.resize(x_grid.size());
    for (std::size_t i = 0; i < x_grid.size(); ++i) {
        res.rho_hat[i] = edgeworth_density(mom, n, x_grid[i]);
        res.sup_err = std::max(res.sup_err, std::abs(res.rho_hat[i] - res.rho_oracle[i]));
    }
    res.scaled_err = std::sqrt(double(n)) * res.sup_err;
    return res;
}

std::vector<double> default_edgeworth_grid(double radius, double step) {
    std::vector<double> g;
    const long half = std::lround(radius / step);
    for (long i = -half; i <= half; ++i) g.push_back(i * step);
    return g;
}

double parseval_charfn_side(const NormalizedTilt& nt, double tau_step) {
    double acc = 0.5; // |charfn(0)|^2 = 1, trapezoid endpoint weight
    int below = 0;
    constexpr int need_below = 100;
    // Stop once the integrand has been negligible for a stretch: past that
    // point the remaining |charfn|^2 tail integrates to far below the 0.1%
    // comparison scale (it decays at least like tau^-4).
    for (std::size_t j = 1;; ++j) {
        const double tau = j * tau_step;
        if (tau > nt.tau_valid())
            throw oracle_failure("characteristic function tail is not resolvable; "
                                 "the tilt level is too shallow");
        const double m2 = std::norm(nt.charfn(tau));
        acc += m2;
        below = m2 < 1e-9 ? below + 1 : 0;
        if (below >= need_below) break;
    }
    return 2.0 * acc * tau_step; // symmetric line
}

double parseval_density_side(const NormalizedTilt& nt) {
    return 2.0 * std::numbers::pi * nt.l2_norm();
}

void write_edgeworth_csv(std::ostream& os, const EdgeworthResult& result,
                         const DensityModel& model) {
    CsvWriter w(os);
    w.comment("family=" + model.family_name);
    w.comment("family_param=" + CsvWriter::num(model.family_param));
    w.comment("a_n=" + CsvWriter::num(result.a_n));
    w.comment("n=" + CsvWriter::num(long(result.n)));
    w.comment("sup_err=" + CsvWriter::num(result.sup_err));
    w.comment("scaled_err=" + CsvWriter::num(result.scaled_err));
    w.row({"x", "rho_hat", "rho_oracle", "abs_err"});
    for (std::size_t i = 0; i < result.x_grid.size(); ++i)
        w.row({CsvWriter::num(result.x_grid[i]), CsvWriter::num(result.rho_hat[i]),
               CsvWriter::num(result.rho_oracle[i]),
               CsvWriter::num(std::abs(result.rho_hat[i] - result.rho_oracle[i]))});
}

} // namespace exttilt
