#include "exttilt/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "exttilt/errors.hpp"
#include "exttilt/quadrature.hpp"

namespace exttilt {

namespace {
constexpr double neg_inf = -std::numeric_limits<double>::infinity();

double zero_fn(double) { return 0.0; }

// g(x)/x must increase without bound; probed on a doubling grid capped where
// g leaves double range.
void verify_superlinear_growth(const DensityModel& m) {
    std::vector<double> ratios;
    double x = std::max(1.0, 4.0 * std::max(m.x_min, 0.25));
    for (int probes = 0; probes < 60; ++probes) {
        const double gx = m.g(x);
        if (!std::isfinite(gx) || gx > 1e250 || x > 1e12) break;
        ratios.push_back(gx / x);
        x *= 2.0;
    }
    if (ratios.size() < 4) return; // too short a window to judge; quadrature decides
    const std::size_t from = ratios.size() > 10 ? ratios.size() - 10 : 1;
    for (std::size_t i = from; i < ratios.size(); ++i)
        if (!(ratios[i] > ratios[i - 1]))
            throw non_integrable("g(x)/x must increase without bound");
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_real(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double r = std::stod(v, &pos);
        if (pos != v.size()) throw invalid_parameter("");
        return r;
    } catch (const std::exception&) {
        throw invalid_parameter("model file: bad numeric value for '" + key + "': " + v);
    }
}
} // namespace

DensityModel make_weibull(double k) {
    if (!std::isfinite(k) || !(k > 1.0))
        throw invalid_parameter("weibull shape k must be finite and exceed 1");
    DensityModel m;
    m.g = [k](double x) { return std::pow(x, k) - (k - 1.0) * std::log(x); };
    m.q = zero_fn;
    m.h = [k](double x) { return k * std::pow(x, k - 1.0) - (k - 1.0) / x; };
    m.h1 = [k](double x) { return k * (k - 1.0) * std::pow(x, k - 2.0) + (k - 1.0) / (x * x); };
    m.h2 = [k](double x) {
        return k * (k - 1.0) * (k - 2.0) * std::pow(x, k - 3.0) - 2.0 * (k - 1.0) / (x * x * x);
    };
    m.h3 = [k](double x) {
        return k * (k - 1.0) * (k - 2.0) * (k - 3.0) * std::pow(x, k - 4.0) +
               6.0 * (k - 1.0) / (x * x * x * x);
    };
    m.log_h = [k](double x) {
        return std::log(k) + (k - 1.0) * std::log(x) + std::log1p(-(k - 1.0) / (k * std::pow(x, k)));
    };
    m.log_h1 = [k](double x) {
        return std::log(k * (k - 1.0)) + (k - 2.0) * std::log(x) +
               std::log1p(1.0 / (k * std::pow(x, k)));
    };
    m.x_min = std::pow((k - 1.0) / k, 1.0 / k) + 1e-6;
    m.class_hint = {DensityClass::r_beta, k - 1.0};
    m.family_name = "weibull";
    m.family_param = k;
    normalize(m);
    return m;
}

DensityModel make_exp_exp() {
    DensityModel m;
    auto e = [](double x) { return std::exp(x - 1.0); };
    m.g = e;
    m.q = zero_fn;
    m.h = e;
    m.h1 = e;
    m.h2 = e;
    m.h3 = e;
    m.log_h = [](double x) { return x - 1.0; };
    m.log_h1 = [](double x) { return x - 1.0; };
    m.x_min = 0.0;
    m.class_hint = {DensityClass::r_infinity, 0.0};
    m.family_name = "exp_exp";
    m.family_param = 0.0;
    normalize(m);
    return m;
}

DensityModel make_power(double beta) {
    if (!std::isfinite(beta) || !(beta > 0.0))
        throw invalid_parameter("power exponent beta must be finite and positive");
    DensityModel m;
    m.g = [beta](double x) { return std::pow(x, beta + 1.0) / (beta + 1.0); };
    m.q = zero_fn;
    m.h = [beta](double x) { return std::pow(x, beta); };
    m.h1 = [beta](double x) { return beta * std::pow(x, beta - 1.0); };
    m.h2 = [beta](double x) { return beta * (beta - 1.0) * std::pow(x, beta - 2.0); };
    m.h3 = [beta](double x) { return beta * (beta - 1.0) * (beta - 2.0) * std::pow(x, beta - 3.0); };
    m.log_h = [beta](double x) { return beta * std::log(x); };
    m.log_h1 = [beta](double x) { return std::log(beta) + (beta - 1.0) * std::log(x); };
    m.x_min = 0.0;
    m.class_hint = {DensityClass::r_beta, beta};
    m.family_name = "power";
    m.family_param = beta;
    normalize(m);
    return m;
}

DensityModel make_builtin(Family family, double param) {
    switch (family) {
    case Family::weibull: return make_weibull(param);
    case Family::exp_exp: return make_exp_exp();
    case Family::power: return make_power(param);
    }
    throw invalid_parameter("unknown family");
}

std::optional<Family> parse_family(const std::string& name) {
    if (name == "weibull") return Family::weibull;
    if (name == "exp_exp") return Family::exp_exp;
    if (name == "power") return Family::power;
    return std::nullopt;
}

void set_q_table(DensityModel& model, std::vector<std::pair<double, double>> knots) {
    if (knots.empty()) throw invalid_parameter("q_table needs at least one knot");
    std::sort(knots.begin(), knots.end());
    for (std::size_t i = 0; i < knots.size(); ++i) {
        if (!std::isfinite(knots[i].first) || !std::isfinite(knots[i].second))
            throw invalid_parameter("q_table knots must be finite");
        if (i > 0 && !(knots[i].first > knots[i - 1].first))
            throw invalid_parameter("q_table abscissae must be strictly increasing");
    }
    model.q = [knots](double x) {
        if (x <= knots.front().first || x >= knots.back().first) return 0.0;
        auto it = std::upper_bound(knots.begin(), knots.end(), std::make_pair(x, neg_inf));
        const auto& [x1, v1] = *it;
        const auto& [x0, v0] = *(it - 1);
        const double w = (x - x0) / (x1 - x0);
        return v0 + w * (v1 - v0);
    };
    normalize(model);
}

double normalize(DensityModel& model) {
    verify_superlinear_growth(model);
    const TiltIntegrals ti = tilted_moment_integrals(model, 0.0);
    const double base = ti.log_phi() - model.log_c; // log int e^{-g+q}, log_c-free
    model.log_c = -base;
    return model.log_c;
}

double log_pdf(const DensityModel& model, double x) {
    if (x < 0.0) return neg_inf;
    const double gx = model.g(x);
    if (!std::isfinite(gx)) return gx > 0.0 ? neg_inf : std::numeric_limits<double>::quiet_NaN();
    return model.log_c - gx + model.q(x);
}

double pdf(const DensityModel& model, double x) { return std::exp(log_pdf(model, x)); }

double psi(const DensityModel& model, double u) {
    if (!std::isfinite(u)) throw out_of_domain("psi: argument must be finite");
    const double x0 = model.x_min;
    const double h0 = model.h(x0);
    if (u < h0) throw out_of_domain("psi: argument below the range of h");
    if (u == h0) return x0;

    double lo = x0, hi = std::max(1.0, 2.0 * std::max(x0, 0.5));
    int guard = 0;
    while (model.h(hi) < u) {
        lo = hi;
        hi *= 2.0;
        if (++guard > 2000 || hi > 1e300)
            throw out_of_domain("psi: no finite x with h(x) = u");
    }

    double x = 0.5 * (lo + hi);
    const double ftol = 1e-10 * std::max(1.0, std::abs(u));
    for (int it = 0; it < 200; ++it) {
        const double f = model.h(x) - u;
        if (f >= 0.0)
            hi = x;
        else
            lo = x;
        const double df = model.h1(x);
        double xn = (std::isfinite(df) && df > 0.0) ? x - f / df : 0.5 * (lo + hi);
        if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
        const bool f_small = std::abs(f) <= ftol;
        const bool x_small = std::abs(xn - x) <= 1e-14 * std::max(1.0, std::abs(x));
        x = xn;
        if (f_small && x_small) break;
        if (hi - lo <= 1e-15 * std::max(1.0, hi)) break;
    }
    return x;
}

double epsilon_of(const DensityModel& model, double x) {
    if (model.class_hint.kind == DensityClass::r_beta)
        return x * model.h1(x) / model.h(x) - model.class_hint.beta;
    // eps of the psi-representation at t = h(x):  t psi'(t)/psi(t) = h/(x h'),
    // carried through logs so rapidly varying h stays in range.
    return std::exp(model.log_h(x) - std::log(x) - model.log_h1(x));
}

namespace {
double fd1(const DensityModel& m, double x, double rel) {
    const double dx = std::max(std::abs(x), 1.0) * rel;
    return (epsilon_of(m, x + dx) - epsilon_of(m, x - dx)) / (2.0 * dx);
}

double fd2(const DensityModel& m, double x, double rel) {
    const double dx = std::max(std::abs(x), 1.0) * rel;
    return (epsilon_of(m, x + dx) - 2.0 * epsilon_of(m, x) + epsilon_of(m, x - dx)) / (dx * dx);
}

std::size_t top_decade_start(std::span<const double> args) {
    const double cut = args.back() / 10.0;
    std::size_t i = 0;
    while (i + 2 < args.size() && args[i] < cut) ++i;
    return i;
}

CheckResult check_vanishing(std::string id, std::span<const double> args,
                            std::span<const double> vals, double floor) {
    const std::size_t i0 = top_decade_start(args);
    double max_top = 0.0;
    for (std::size_t i = i0; i < vals.size(); ++i)
        max_top = std::max(max_top, std::abs(vals[i]));
    const double first = std::abs(vals[i0]);
    const double last = std::abs(vals.back());
    const double band = 10.0 * floor;
    const bool pass = (max_top <= first * 1.05 + band) && (last <= first + band) && (last <= 0.5);
    return {std::move(id), pass, last, args.back()};
}

CheckResult check_bounded(std::string id, std::span<const double> args,
                          std::span<const double> vals, double floor) {
    const std::size_t i0 = top_decade_start(args);
    double max_top = 0.0, arg_at_max = args[i0], max_rest = 0.0;
    for (std::size_t i = 0; i < vals.size(); ++i) {
        const double v = std::abs(vals[i]);
        if (i >= i0) {
            if (v > max_top) {
                max_top = v;
                arg_at_max = args[i];
            }
        } else {
            max_rest = std::max(max_rest, v);
        }
    }
    const bool pass = max_top <= std::max(2.0 * max_rest, 10.0 * floor);
    return {std::move(id), pass, max_top, arg_at_max};
}

CheckResult check_lower_bound(std::string id, std::span<const double> args,
                              std::span<const double> vals, double floor) {
    const std::size_t i0 = top_decade_start(args);
    double min_top = std::numeric_limits<double>::infinity(), arg_at_min = args[i0];
    double max_all = 0.0;
    for (std::size_t i = 0; i < vals.size(); ++i) {
        max_all = std::max(max_all, vals[i]);
        if (i >= i0 && vals[i] < min_top) {
            min_top = vals[i];
            arg_at_min = args[i];
        }
    }
    const bool pass = min_top >= std::max(0.02 * max_all, 10.0 * floor);
    return {std::move(id), pass, min_top, arg_at_min};
}
} // namespace

bool RegularityReport::all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

RegularityReport classify(const DensityModel& model, std::span<const double> x_grid,
                          const ClassifyOptions& opts) {
    if (x_grid.size() < 8) throw invalid_parameter("classification grid too small");
    if (!std::is_sorted(x_grid.begin(), x_grid.end()))
        throw invalid_parameter("classification grid must be sorted");

    RegularityReport rep;
    rep.cls = model.class_hint;
    const bool rb = model.class_hint.kind == DensityClass::r_beta;

    const double decades = rb
        ? std::log10(x_grid.back() / x_grid.front())
        : (model.log_h(x_grid.back()) - model.log_h(x_grid.front())) / std::log(10.0);
    if (decades < 3.0 - 1e-9)
        throw invalid_parameter("classification grid must span at least 3 decades");

    if (rb) {
        std::vector<double> eps(x_grid.size()), q1(x_grid.size()), q2(x_grid.size());
        double eps_scale = 0.0;
        for (std::size_t i = 0; i < x_grid.size(); ++i) {
            const double x = x_grid[i];
            eps[i] = epsilon_of(model, x);
            eps_scale = std::max(eps_scale, std::abs(eps[i]));
            q1[i] = x * std::abs(fd1(model, x, 1e-4));
            q2[i] = x * x * std::abs(fd2(model, x, 1e-3));
            rep.epsilon_values.emplace_back(x, eps[i]);
        }
        const double floor1 = 5e-13 * std::max(eps_scale, 1e-6);
        const double floor2 = 1e-9 * std::max(eps_scale, 1e-6);
        rep.checks.push_back(check_bounded("x-eps-prime-bounded", x_grid, q1, floor1));
        rep.checks.push_back(check_bounded("x2-eps-second-bounded", x_grid, q2, floor2));

        const std::size_t i0 = top_decade_start(x_grid);
        rep.beta_estimate = (model.log_h(x_grid.back()) - model.log_h(x_grid[i0])) /
                            (std::log(x_grid.back()) - std::log(x_grid[i0]));
    } else {
        // Conditions live on eps as a function of the psi-representation
        // argument t = h(x); everything below runs on the t-grid image.
        const std::size_t nx = x_grid.size();
        std::vector<double> tg(nx), eps(nx);
        for (std::size_t i = 0; i < nx; ++i) {
            const double lt = model.log_h(x_grid[i]);
            if (lt > 690.0)
                throw invalid_parameter("classification grid maps h(x) outside double range");
            tg[i] = std::exp(lt);
            eps[i] = std::exp(lt - std::log(x_grid[i]) - model.log_h1(x_grid[i]));
            rep.epsilon_values.emplace_back(tg[i], eps[i]);
        }
        std::vector<double> v1(nx, 0.0), v2(nx, 0.0), v3(nx, 0.0);
        for (std::size_t i = 1; i + 1 < nx; ++i) {
            const double hm = tg[i] - tg[i - 1], hp = tg[i + 1] - tg[i];
            const double d1 = (eps[i + 1] * hm * hm - eps[i - 1] * hp * hp +
                               eps[i] * (hp * hp - hm * hm)) /
                              (hp * hm * (hp + hm));
            const double d2 = 2.0 *
                              (eps[i - 1] * hp - eps[i] * (hp + hm) + eps[i + 1] * hm) /
                              (hp * hm * (hp + hm));
            v1[i] = tg[i] * d1 / eps[i];
            v2[i] = tg[i] * tg[i] * d2 / eps[i];
        }
        v1.front() = v1[1];
        v2.front() = v2[1];
        v1.back() = v1[nx - 2];
        v2.back() = v2[nx - 2];
        for (std::size_t i = 0; i < nx; ++i) v3[i] = std::pow(tg[i], opts.eta) * eps[i];

        rep.checks.push_back(check_vanishing("t-eps-ratio-vanishes", tg, v1, 1e-10));
        rep.checks.push_back(check_vanishing("t2-eps-second-ratio-vanishes", tg, v2, 1e-8));
        rep.checks.push_back(check_lower_bound("t-eta-eps-lower-bound", tg, v3, 1e-12));
    }

    // Perturbation envelope sup_{|v-x| < theta x} |q(v)| <= 1/(x sqrt(h(x)))
    // sampled over the top decade of the x-grid.
    {
        const std::size_t i0 = top_decade_start(x_grid);
        double worst = 0.0, arg_at = x_grid[i0];
        for (std::size_t i = i0; i < x_grid.size(); ++i) {
            const double x = x_grid[i];
            double sup_q = 0.0;
            for (int s = 0; s < opts.q_samples; ++s) {
                const double frac = opts.q_samples == 1 ? 0.0
                                                        : -1.0 + 2.0 * s / (opts.q_samples - 1.0);
                sup_q = std::max(sup_q, std::abs(model.q(x * (1.0 + model.theta * frac))));
            }
            const double bound = std::exp(-std::log(x) - 0.5 * model.log_h(x));
            const double ratio = sup_q / bound;
            if (ratio > worst) {
                worst = ratio;
                arg_at = x;
            }
        }
        rep.checks.push_back({"q-envelope", worst <= 1.0 + 1e-9, worst, arg_at});
    }
    return rep;
}

std::vector<double> default_classification_grid(const DensityModel& model) {
    std::vector<double> grid;
    constexpr int n = 61;
    if (model.class_hint.kind == DensityClass::r_beta) {
        const double lo = std::max(1.0, 1.5 * model.x_min);
        const double hi = lo * 1e3;
        for (int i = 0; i < n; ++i)
            grid.push_back(lo * std::pow(hi / lo, i / double(n - 1)));
    } else {
        const double t_lo = std::max(1.0, 2.0 * model.h(model.x_min));
        const double t_hi = t_lo * 1e5;
        for (int i = 0; i < n; ++i)
            grid.push_back(psi(model, t_lo * std::pow(t_hi / t_lo, i / double(n - 1))));
    }
    return grid;
}

DensityModel load_model_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw invalid_parameter("cannot open model file: " + path.string());

    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw invalid_parameter("model file: expected key = value, got: " + line);
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw invalid_parameter("model file: empty key or value in: " + line);
        if (!kv.emplace(key, val).second)
            throw invalid_parameter("model file: duplicate key: " + key);
    }

    const auto it = kv.find("family");
    if (it == kv.end()) throw invalid_parameter("model file: missing 'family'");
    const auto fam = parse_family(it->second);
    if (!fam) throw invalid_parameter("model file: unknown family: " + it->second);

    DensityModel model;
    switch (*fam) {
    case Family::weibull: {
        const auto k = kv.find("k");
        if (k == kv.end()) throw invalid_parameter("model file: weibull needs 'k'");
        model = make_weibull(parse_real("k", k->second));
        break;
    }
    case Family::exp_exp: model = make_exp_exp(); break;
    case Family::power: {
        const auto b = kv.find("beta");
        if (b == kv.end()) throw invalid_parameter("model file: power needs 'beta'");
        model = make_power(parse_real("beta", b->second));
        break;
    }
    }

    if (const auto th = kv.find("theta"); th != kv.end()) {
        const double v = parse_real("theta", th->second);
        if (!(v > 0.0 && v < 1.0)) throw invalid_parameter("theta must lie in (0,1)");
        model.theta = v;
    }

    if (const auto qt = kv.find("q_table"); qt != kv.end()) {
        std::vector<std::pair<double, double>> knots;
        std::stringstream ss(qt->second);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (item.empty()) continue;
            const auto colon = item.find(':');
            if (colon == std::string::npos)
                throw invalid_parameter("q_table entries must look like x:value");
            knots.emplace_back(parse_real("q_table.x", trim(item.substr(0, colon))),
                               parse_real("q_table.value", trim(item.substr(colon + 1))));
        }
        set_q_table(model, std::move(knots));
    }

    for (const auto& [key, value] : kv)
        if (key != "family" && key != "k" && key != "beta" && key != "theta" && key != "q_table")
            throw invalid_parameter("model file: unknown key: " + key);

    return model;
}

} // namespace exttilt
