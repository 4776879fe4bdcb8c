#include "exttilt/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "exttilt/errors.hpp"

namespace exttilt {

namespace {
constexpr double neg_inf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
    if (a == neg_inf) return b;
    if (b == neg_inf) return a;
    const double hi = std::max(a, b), lo = std::min(a, b);
    return hi + std::log1p(std::exp(lo - hi));
}

// Nonnegative accumulator in log scale.
struct LogAcc {
    double lg = neg_inf;
    void add(double l) { lg = log_add(lg, l); }
};

struct PanelSums {
    double scale = neg_inf; // log factor shared by the plain sums below
    std::array<double, 4> pos{};
    std::array<double, 4> neg{};
    double mag3 = neg_inf; // log magnitude of the alpha = 3 contribution
};

PanelSums eval_panel(const DensityModel& mdl, double t, double x_ref, double a, double b) {
    const auto pn = detail::panel_nodes(a, b);
    std::array<double, 15> lg;
    double lmax = neg_inf;
    for (int i = 0; i < 15; ++i) {
        lg[i] = log_tilt_exponent(mdl, t, pn.x[i]);
        lmax = std::max(lmax, lg[i]);
    }
    PanelSums ps;
    if (lmax == neg_inf) return ps;
    ps.scale = lmax;
    for (int i = 0; i < 15; ++i) {
        if (lg[i] == neg_inf) continue;
        const double base = pn.w[i] * std::exp(lg[i] - lmax);
        const double dx = pn.x[i] - x_ref;
        double v = base;
        ps.pos[0] += v;
        for (int alpha = 1; alpha < 4; ++alpha) {
            v *= dx;
            if (v >= 0.0)
                ps.pos[alpha] += v;
            else
                ps.neg[alpha] -= v;
        }
    }
    const double m3 = ps.pos[3] + ps.neg[3];
    ps.mag3 = m3 > 0.0 ? ps.scale + std::log(m3) : neg_inf;
    return ps;
}

void merge(const PanelSums& ps, LogAcc (&gp)[4], LogAcc (&gn)[4]) {
    if (ps.scale == neg_inf) return;
    for (int alpha = 0; alpha < 4; ++alpha) {
        if (ps.pos[alpha] > 0.0) gp[alpha].add(ps.scale + std::log(ps.pos[alpha]));
        if (ps.neg[alpha] > 0.0) gn[alpha].add(ps.scale + std::log(ps.neg[alpha]));
    }
}
} // namespace

namespace detail {
PanelNodes panel_nodes(double a, double b) {
    PanelNodes out;
    const double c = 0.5 * (a + b), m = 0.5 * (b - a);
    out.x[0] = c;
    out.w[0] = m * k15_weights[0];
    int idx = 1;
    for (int j = 1; j < 8; ++j) {
        out.x[idx] = c - m * k15_nodes[j];
        out.w[idx++] = m * k15_weights[j];
        out.x[idx] = c + m * k15_nodes[j];
        out.w[idx++] = m * k15_weights[j];
    }
    return out;
}
} // namespace detail

double log_tilt_exponent(const DensityModel& model, double t, double x) {
    if (x < 0.0) return neg_inf;
    const double gx = model.g(x);
    if (std::isnan(gx)) return neg_inf;
    if (!std::isfinite(gx)) {
        if (gx > 0.0) return neg_inf; // density vanishes where g blows up
        throw non_integrable("density exponent g(x) diverges to -infinity");
    }
    const double l = model.log_c + t * x - gx + model.q(x);
    if (std::isnan(l)) return neg_inf;
    if (l == std::numeric_limits<double>::infinity())
        throw non_integrable("tilt exponent t*x - g(x) overflows double range");
    return l;
}

TiltIntegrals tilted_moment_integrals(const DensityModel& model, double t) {
    if (!std::isfinite(t) || t < 0.0)
        throw invalid_parameter("tilt parameter must be finite and nonnegative");

    const double h_min = model.h(model.x_min);
    const double x_ref = (t > h_min) ? psi(model, t) : model.x_min;
    const double hp = model.h1(x_ref);
    // Curvature scale of the exponent at the peak; fall back to a coarse
    // width when h' degenerates there (the tail extension makes up for it).
    const double sigma =
        (std::isfinite(hp) && hp > 0.0) ? 1.0 / std::sqrt(hp) : 0.5 * std::max(1.0, x_ref);

    TiltIntegrals out;
    out.t = t;
    out.x_ref = x_ref;
    out.sigma_ref = sigma;

    LogAcc gp[4], gn[4];
    const double rel_cut = std::log(1e-17);
    auto total3 = [&] { return log_add(gp[3].lg, gn[3].lg); };

    const double core_lo = std::max(0.0, x_ref - 12.0 * sigma);
    const double core_hi = x_ref + 12.0 * sigma;
    constexpr int core_panels = 24;

    std::vector<double> core_edges, left_edges, right_edges;
    core_edges.reserve(core_panels + 1);
    core_edges.push_back(core_lo);
    const double cw = (core_hi - core_lo) / core_panels;
    for (int i = 0; i < core_panels; ++i) {
        const double a = core_lo + i * cw;
        const double b = (i + 1 == core_panels) ? core_hi : core_lo + (i + 1) * cw;
        merge(eval_panel(model, t, x_ref, a, b), gp, gn);
        core_edges.push_back(b);
    }

    if (core_lo > 0.0) {
        double w = sigma, x = core_lo;
        while (x > 0.0) {
            const double a = std::max(0.0, x - w);
            const auto ps = eval_panel(model, t, x_ref, a, x);
            merge(ps, gp, gn);
            left_edges.push_back(a);
            if (a == 0.0) break;
            if (ps.mag3 == neg_inf || ps.mag3 < total3() + rel_cut) break;
            x = a;
            w *= 2.0;
        }
    }

    {
        double w = sigma, x = core_hi;
        bool converged = false;
        for (int j = 0; j < 80; ++j) {
            const double b = x + w;
            const auto ps = eval_panel(model, t, x_ref, x, b);
            merge(ps, gp, gn);
            right_edges.push_back(b);
            if (ps.mag3 == neg_inf || ps.mag3 < total3() + rel_cut) {
                converged = true;
                break;
            }
            x = b;
            w *= 2.0;
        }
        if (!converged) throw non_integrable("tail of e^{tx} p(x) does not decay");
    }

    for (int alpha = 0; alpha < 4; ++alpha)
        out.moment[alpha] =
            SignedLog::from_log(gp[alpha].lg) + SignedLog::from_log(gn[alpha].lg, -1);
    if (out.moment[0].sign <= 0) throw non_integrable("mass integral vanished");

    out.edges.reserve(left_edges.size() + core_edges.size() + right_edges.size());
    out.edges.assign(left_edges.rbegin(), left_edges.rend());
    out.edges.insert(out.edges.end(), core_edges.begin(), core_edges.end());
    out.edges.insert(out.edges.end(), right_edges.begin(), right_edges.end());
    return out;
}

} // namespace exttilt
