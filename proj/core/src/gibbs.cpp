#include "exttilt/gibbs.hpp"

#include <cmath>
#include <ostream>

#include "exttilt/csv.hpp"
#include "exttilt/errors.hpp"
#include "exttilt/tilt.hpp"

namespace exttilt {

GibbsChain build_chain(const DensityModel& model, double a_n, long n,
                       std::span<const double> y) {
    const long k = long(y.size());
    if (k < 1) throw invalid_parameter("chain needs at least one coordinate");
    if (!(k < n - 1)) throw invalid_parameter("chain length k must satisfy k < n - 1");
    for (const double yi : y)
        if (!(yi >= 0.0) || !std::isfinite(yi))
            throw invalid_parameter("chain coordinates must lie in the support");

    const double base_mean = moments_exact(model, 0.0).m;

    GibbsChain chain;
    chain.a_n = a_n;
    chain.n = n;
    chain.y.assign(y.begin(), y.end());

    double prefix = 0.0;    // y_1 + ... + y_i
    double t_prev = 0.0;
    double log_phi0 = 0.0;  // stage-0 tilt reused by the i.i.d. product
    for (long i = 0; i < k; ++i) {
        const double mi = (double(n) * a_n - prefix) / double(n - i);
        if (!(mi > base_mean))
            throw infeasible_chain("stage mean fell to the untilted mean; y too large for n*a_n");
        const double ti = (i == 0) ? tilt_solve(model, mi) : tilt_solve_from(model, mi, t_prev);
        const Moments mom = moments_exact(model, ti);
        const double log_phi = log_mgf_quadrature(model, ti);
        if (i == 0) log_phi0 = log_phi;

        chain.t_seq.push_back(ti);
        chain.m_seq.push_back(mi);
        chain.s2_seq.push_back(mom.s2);
        chain.z_seq.push_back((mi - y[i]) / (std::sqrt(mom.s2) * std::sqrt(double(n - i - 1))));
        chain.log_g_m += log_pdf(model, y[i]) + ti * y[i] - log_phi;

        prefix += y[i];
        t_prev = ti;
    }

    chain.log_g_an = 0.0;
    const double t0 = chain.t_seq.front();
    for (long i = 0; i < k; ++i)
        chain.log_g_an += log_pdf(model, y[i]) + t0 * y[i] - log_phi0;
    return chain;
}

GrowthReport growth_condition(const DensityModel& model, double a_n, long n, double threshold) {
    if (n < 1) throw invalid_parameter("n must be positive");
    GrowthReport rep;
    rep.t = tilt_solve(model, a_n);
    const double x_hat = psi(model, rep.t);
    const double psi_p = std::exp(-model.log_h1(x_hat));
    rep.value = x_hat * x_hat / (std::sqrt(double(n)) * psi_p);
    rep.pass = rep.value < threshold;
    return rep;
}

ZReport z_smallness_check(const GibbsChain& chain) {
    ZReport rep;
    for (const double z : chain.z_seq) rep.max_abs_z = std::max(rep.max_abs_z, std::abs(z));
    rep.sqrt_n_max_z2 = std::sqrt(double(chain.n)) * rep.max_abs_z * rep.max_abs_z;
    return rep;
}

void write_chain_csv(std::ostream& os, const GibbsChain& chain, const DensityModel& model) {
    CsvWriter w(os);
    w.comment("family=" + model.family_name);
    w.comment("family_param=" + CsvWriter::num(model.family_param));
    w.comment("a_n=" + CsvWriter::num(chain.a_n));
    w.comment("n=" + CsvWriter::num(chain.n));
    w.comment("log_g_m=" + CsvWriter::num(chain.log_g_m));
    w.comment("log_g_an=" + CsvWriter::num(chain.log_g_an));
    w.row({"i", "y", "t", "m", "s2", "z"});
    for (std::size_t i = 0; i < chain.t_seq.size(); ++i)
        w.row({CsvWriter::num(long(i)), CsvWriter::num(chain.y[i]), CsvWriter::num(chain.t_seq[i]),
               CsvWriter::num(chain.m_seq[i]), CsvWriter::num(chain.s2_seq[i]),
               CsvWriter::num(chain.z_seq[i])});
}

} // namespace exttilt
