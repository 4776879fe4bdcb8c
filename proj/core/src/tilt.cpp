#include "exttilt/tilt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "exttilt/errors.hpp"

namespace exttilt {

namespace {
constexpr double qnan = std::numeric_limits<double>::quiet_NaN();

Moments moments_from(const TiltIntegrals& ti) {
    // Central moments about the peak, then shifted to the mean.  The offset
    // d = m - x_ref is O(h'' sigma^4), so the shift costs little cancellation.
    const double d = (ti.moment[1] / ti.moment[0]).value();
    const double e2 = (ti.moment[2] / ti.moment[0]).value();
    const double e3 = (ti.moment[3] / ti.moment[0]).value();
    Moments mom;
    mom.m = ti.x_ref + d;
    mom.s2 = e2 - d * d;
    mom.mu3 = e3 - 3.0 * d * e2 + 2.0 * d * d * d;
    return mom;
}

// int_{-L}^{L} y^a e^{-y^2/2} dy by the downward recursion
// I_a = (a-1) I_{a-2} - 2 L^{a-1} e^{-L^2/2}; odd orders vanish.
double gauss_window_moment(int a, double L) {
    if (a % 2 == 1) return 0.0;
    const double e = std::exp(-0.5 * L * L);
    double val = std::sqrt(2.0 * std::numbers::pi) * std::erf(L / std::numbers::sqrt2);
    for (int k = 2; k <= a; k += 2) val = (k - 1) * val - 2.0 * std::pow(L, k - 1) * e;
    return val;
}
} // namespace

double log_mgf_quadrature(const DensityModel& model, double t) {
    return tilted_moment_integrals(model, t).log_phi();
}

double log_mgf_laplace(const DensityModel& model, double t) {
    const double x_hat = psi(model, t);
    const double log_sigma = -0.5 * model.log_h1(x_hat);
    const double k_peak = t * x_hat - model.g(x_hat);
    return model.log_c + 0.5 * std::log(2.0 * std::numbers::pi) + log_sigma + k_peak;
}

SignedLog psi_moment_integral(const DensityModel& model, double t, int alpha) {
    if (alpha < 0 || alpha > 3) throw invalid_parameter("alpha must be in 0..3");
    return tilted_moment_integrals(model, t).moment[alpha];
}

double t1_term(const DensityModel& model, double t, int alpha, double l) {
    if (!(l > 1.0)) throw invalid_parameter("cutoff l must exceed 1");
    if (alpha < 0) throw invalid_parameter("alpha must be nonnegative");
    const double x_hat = psi(model, t);
    const double h2_sigma3 = model.h2(x_hat) * std::exp(-1.5 * model.log_h1(x_hat));
    const double L = std::cbrt(l) / std::numbers::sqrt2;
    return gauss_window_moment(alpha, L) -
           h2_sigma3 / 6.0 * gauss_window_moment(alpha + 3, L);
}

Moments moments_exact(const DensityModel& model, double t) {
    return moments_from(tilted_moment_integrals(model, t));
}

Moments moments_asymptotic(const DensityModel& model, double t, AsymptoticOrder order) {
    const double x_hat = psi(model, t);
    const double psi_p = std::exp(-model.log_h1(x_hat));     // 1 / h'(x_hat)
    const double psi_pp = -model.h2(x_hat) * psi_p * psi_p * psi_p;
    Moments mom;
    mom.m = x_hat;
    mom.s2 = psi_p;
    mom.mu3 = (normal_sixth_moment - 9.0) / 6.0 * psi_pp;
    if (order == AsymptoticOrder::refined)
        mom.m = x_hat - 0.5 * model.h2(x_hat) * std::exp(-2.0 * model.log_h1(x_hat));
    return mom;
}

double tilt_solve_from(const DensityModel& model, double a, double t_init) {
    const Moments base = moments_exact(model, 0.0);
    if (!(a > base.m)) throw below_mean("target mean is at or below the untilted mean");

    double t = std::max(t_init, 1e-12);
    double lo = 0.0, hi = t;
    Moments mm = moments_exact(model, t);
    if (mm.m < a) {
        int guard = 0;
        do {
            lo = hi;
            hi *= 2.0;
            mm = moments_exact(model, hi);
            if (++guard > 600) throw below_mean("mean level unreachable by any finite tilt");
        } while (mm.m < a);
        t = hi;
    }

    const double tol = 1e-12 * std::max(1.0, std::abs(a));
    for (int it = 0; it < 100; ++it) {
        const double f = mm.m - a;
        if (f >= 0.0)
            hi = t;
        else
            lo = t;
        double tn = t + (a - mm.m) / mm.s2; // exact Newton: dm/dt = s^2
        if (!(tn > lo && tn < hi)) tn = 0.5 * (lo + hi);
        if (std::abs(f) <= tol && std::abs(tn - t) <= 1e-13 * std::max(1.0, t)) break;
        if (hi - lo <= 1e-15 * std::max(1.0, hi)) break;
        t = tn;
        mm = moments_exact(model, t);
    }
    return t;
}

double tilt_solve(const DensityModel& model, double a) {
    if (!std::isfinite(a)) throw invalid_parameter("mean level must be finite");
    // psi is the asymptotic inverse of m, so h(a) brackets the root well.
    double t0 = 1.0;
    if (a > model.x_min) {
        const double ha = model.h(a);
        if (std::isfinite(ha) && ha > 0.0) t0 = ha;
    }
    return tilt_solve_from(model, a, t0);
}

double skewness(const DensityModel& model, double t) {
    const Moments mom = moments_exact(model, t);
    return mom.mu3 / std::pow(mom.s2, 1.5);
}

TiltState tilt_state(const DensityModel& model, double t) {
    TiltIntegrals ti = tilted_moment_integrals(model, t);
    TiltState st;
    st.t = t;
    st.x_hat = ti.x_ref;
    st.sigma = ti.sigma_ref;
    st.log_phi = ti.log_phi();
    const Moments ex = moments_from(ti);
    st.m_exact = ex.m;
    st.s2_exact = ex.s2;
    st.mu3_exact = ex.mu3;
    if (t > model.h(model.x_min)) {
        const Moments lead = moments_asymptotic(model, t, AsymptoticOrder::leading);
        st.m_asym = lead.m;
        st.s2_asym = lead.s2;
        st.mu3_asym = lead.mu3;
        st.m_refined = moments_asymptotic(model, t, AsymptoticOrder::refined).m;
    } else {
        st.m_asym = st.s2_asym = st.mu3_asym = st.m_refined = qnan;
    }
    st.panel_edges = std::move(ti.edges);
    return st;
}

TiltDiagnostics diagnostics(const DensityModel& model, double t) {
    const double x_hat = psi(model, t);
    const double sigma = std::exp(-0.5 * model.log_h1(x_hat));
    TiltDiagnostics d;
    d.h2_sigma3 = model.h2(x_hat) * sigma * sigma * sigma;
    d.h2_sigma4 = d.h2_sigma3 * sigma;

    if (t > 1.0) {
        // int_1^t psi(u) du == K(x_hat(t), t) - K(x_hat(1), 1).
        const double psi1 = psi(model, 1.0);
        const double k_t = t * x_hat - model.g(x_hat);
        const double k_1 = psi1 - model.g(psi1);
        d.log_sigma_over_k = std::abs(std::log(sigma)) / (k_t - k_1);
    } else {
        d.log_sigma_over_k = qnan;
    }

    const double l = std::max(1.0, std::pow(std::log(std::max(t, 1.0001)), 3.0));
    const double halfwidth = sigma * l;
    const double lo = std::max(model.x_min * (1.0 + 1e-9) + 1e-12, x_hat - halfwidth);
    const double hi = x_hat + halfwidth;
    double sup = 0.0;
    constexpr int samples = 81;
    for (int i = 0; i < samples; ++i) {
        const double x = lo + (hi - lo) * i / double(samples - 1);
        sup = std::max(sup, std::abs(model.h3(x)));
    }
    d.sup_h3_window = sup * sigma * sigma * sigma * sigma * l * l * l * l;
    return d;
}

} // namespace exttilt
