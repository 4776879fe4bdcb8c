#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace exttilt {

/// Growth class of h = g' near infinity.
enum class DensityClass { r_beta, r_infinity };

struct ClassHint {
    DensityClass kind = DensityClass::r_beta;
    double beta = 1.0; // only meaningful for r_beta
};

/// Density family p(x) = c * exp(-(g(x) - q(x))) on the positive half-line.
///
/// The dominant exponent g must grow superlinearly (g(x)/x -> infinity) and
/// h = g' must be strictly positive and strictly increasing on [x_min, inf).
/// The perturbation q is bounded by 1/(x sqrt(h(x))) in a theta-window around
/// large x.  Models are immutable after construction and safe to share across
/// threads; every operation on them is pure.
struct DensityModel {
    std::function<double(double)> g;  // dominant exponent, nats
    std::function<double(double)> q;  // perturbation, nats
    std::function<double(double)> h;  // g'
    std::function<double(double)> h1; // g''
    std::function<double(double)> h2; // g'''
    std::function<double(double)> h3; // g''''
    // Overflow-safe logs of h and h' (rapidly varying h exceeds double range
    // long before its logarithm does).
    std::function<double(double)> log_h;
    std::function<double(double)> log_h1;

    double log_c = 0.0;
    ClassHint class_hint;
    double theta = 0.5;  // q-bound window constant, in (0,1)
    double x_min = 0.0;  // h > 0 and increasing on [x_min, inf)

    std::string family_name; // provenance for report headers
    double family_param = 0.0;
};

/// Builtin families.
DensityModel make_weibull(double k);        // k > 1
DensityModel make_exp_exp();                // p ~ exp(-e^{x-1})
DensityModel make_power(double beta);       // g = x^{beta+1}/(beta+1)

enum class Family { weibull, exp_exp, power };
DensityModel make_builtin(Family family, double param = 0.0);
std::optional<Family> parse_family(const std::string& name);

/// Plain-text key=value model description; grammar documented in the README.
DensityModel load_model_file(const std::filesystem::path& path);

/// Attach a piecewise-linear perturbation q (x, value knots) and renormalize.
void set_q_table(DensityModel& model, std::vector<std::pair<double, double>> knots);

/// Recompute log_c so that the density integrates to one.  Returns the new
/// value and stores it in the model.  Verifies that g(x)/x grows along the
/// probe grid first; throws non_integrable otherwise.
double normalize(DensityModel& model);

double log_pdf(const DensityModel& model, double x);
double pdf(const DensityModel& model, double x);

/// Inverse of h: the unique x >= x_min with h(x) = u, by bracketing plus
/// safeguarded Newton.  Throws out_of_domain for u below h(x_min).
double psi(const DensityModel& model, double u);

/// Karamata index function of the slowly varying part.
/// r_beta:      eps(x) = x l'(x)/l(x) with l = h / x^beta, i.e. x h'/h - beta.
/// r_infinity:  eps of the psi-representation, evaluated at t = h(x).
double epsilon_of(const DensityModel& model, double x);

struct CheckResult {
    std::string condition_id;
    bool pass = false;
    double witness = 0.0;   // worst value encountered
    double witness_arg = 0.0;
};

struct RegularityReport {
    ClassHint cls;
    std::optional<double> beta_estimate; // log-log slope of h, r_beta only
    // (arg, eps(arg)) samples; arg is x for r_beta and t = h(x) for r_infinity.
    std::vector<std::pair<double, double>> epsilon_values;
    std::vector<CheckResult> checks;
    bool all_pass() const;
};

struct ClassifyOptions {
    double eta = 1.0 / 16.0; // exponent of the lower-bound check on eps
    int q_samples = 17;      // probes of |q| per window
};

/// Numerically certify the regularity-class membership declared by the model.
/// Limits are checked as trends over the top decade of the grid; failures are
/// recorded in the report, never thrown.
RegularityReport classify(const DensityModel& model, std::span<const double> x_grid,
                          const ClassifyOptions& opts = {});

/// Grid suited to the model's class: log-spaced x for r_beta, the h-preimage
/// of a log-spaced t-grid for r_infinity (keeps h(x) inside double range).
std::vector<double> default_classification_grid(const DensityModel& model);

} // namespace exttilt
