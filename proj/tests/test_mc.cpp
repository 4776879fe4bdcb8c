#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "exttilt/errors.hpp"
#include "exttilt/gibbs.hpp"
#include "exttilt/mc.hpp"
#include "exttilt/model.hpp"
#include "exttilt/rng.hpp"
#include "exttilt/tilt.hpp"

using namespace exttilt;

TEST_CASE("counter-based generator: determinism and uniformity") {
    const double a = Philox4x32::uniform(42, 3, 1000);
    CHECK(a == Philox4x32::uniform(42, 3, 1000));
    CHECK(a != Philox4x32::uniform(43, 3, 1000));
    CHECK(a != Philox4x32::uniform(42, 4, 1000));
    CHECK(a != Philox4x32::uniform(42, 3, 1001));

    double mean = 0.0, mn = 1.0, mx = 0.0;
    constexpr int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double u = Philox4x32::uniform(7, 0, i);
        mean += u;
        mn = std::min(mn, u);
        mx = std::max(mx, u);
    }
    mean /= n;
    CHECK(std::abs(mean - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
    CHECK(mn >= 0.0);
    CHECK(mx < 1.0);
}

TEST_CASE("tilted sampler reproduces the quadrature moments") {
    const auto w2 = make_weibull(2.0);
    const double t = 10.0;
    const auto xs = sample_tilted(w2, t, 100000, 20240817);
    const auto mm = moments_exact(w2, t);

    double mean = 0.0;
    for (const double v : xs) mean += v;
    mean /= double(xs.size());
    double var = 0.0;
    for (const double v : xs) var += (v - mean) * (v - mean);
    var /= double(xs.size() - 1);

    CHECK(std::abs(mean - mm.m) < 4.0 * std::sqrt(mm.s2 / double(xs.size())));
    CHECK(std::abs(var - mm.s2) / mm.s2 < 0.05);
}

TEST_CASE("sampling is reproducible bit for bit") {
    const auto ee = make_exp_exp();
    const auto a = sample_tilted(ee, 30.0, 512, 9);
    const auto b = sample_tilted(ee, 30.0, 512, 9);
    CHECK(a == b);
    const auto c = sample_tilted(ee, 30.0, 512, 10);
    CHECK(a != c);
}

TEST_CASE("slab-conditioned density matches the product approximation, k = 1") {
    const auto p1 = make_power(1.0);
    const double a = 3.0;
    const long n = 100;
    const std::vector<double> y{a};
    const double delta = default_slab_halfwidth(p1, a, n);
    const auto est = conditional_density_mc(p1, a, n, y, delta, 200000, 42);
    const auto chain = build_chain(p1, a, n, y);
    const double ratio = est.value / std::exp(chain.log_g_m);
    CHECK(std::abs(ratio - 1.0) < 3.0 * est.std_err / est.value);
    CHECK(est.acceptance_rate > 0.5);
}

TEST_CASE("slab-conditioned density matches the product approximation, k = 2") {
    const auto w2 = make_weibull(2.0);
    const double a = 3.0;
    const long n = 200;
    const std::vector<double> y{0.9 * a, 1.05 * a};
    const double delta = default_slab_halfwidth(w2, a, n);
    const auto est = conditional_density_mc(w2, a, n, y, delta, 200000, 42);
    const auto chain = build_chain(w2, a, n, y);
    const double ratio = est.value / std::exp(chain.log_g_m);
    CHECK(std::abs(ratio - 1.0) < 3.0 * est.std_err / est.value);
}

TEST_CASE("conditional estimates are reproducible from the seed") {
    const auto p1 = make_power(1.0);
    const std::vector<double> y{2.0};
    const double delta = default_slab_halfwidth(p1, 2.0, 50);
    const auto a = conditional_density_mc(p1, 2.0, 50, y, delta, 20000, 5);
    const auto b = conditional_density_mc(p1, 2.0, 50, y, delta, 20000, 5);
    CHECK(a.value == b.value);
    CHECK(a.std_err == b.std_err);
    CHECK(a.acceptance_rate == b.acceptance_rate);
}

TEST_CASE("vanishing slabs raise insufficient acceptance") {
    const auto p1 = make_power(1.0);
    const std::vector<double> y{2.0};
    CHECK_THROWS_AS(conditional_density_mc(p1, 2.0, 400, y, 1e-7, 20000, 11),
                    insufficient_acceptance);
}

TEST_CASE("halving the slab (4x samples) moves the estimate within noise") {
    const auto p1 = make_power(1.0);
    const double a = 3.0;
    const long n = 100;
    const std::vector<double> y{a};
    const double delta = default_slab_halfwidth(p1, a, n);
    const auto wide = conditional_density_mc(p1, a, n, y, delta, 50000, 1234);
    const auto narrow = conditional_density_mc(p1, a, n, y, 0.5 * delta, 200000, 4321);
    const double noise = std::hypot(wide.std_err, narrow.std_err);
    CHECK(std::abs(wide.value - narrow.value) < 2.0 * noise);
}

TEST_CASE("kernel bandwidth robustness") {
    const auto p1 = make_power(1.0);
    const double a = 3.0;
    const long n = 100;
    const std::vector<double> y{a};
    const double delta = default_slab_halfwidth(p1, a, n);
    const double g = std::exp(build_chain(p1, a, n, y).log_g_m);

    const auto base = conditional_density_mc(p1, a, n, y, delta, 50000, 77);
    for (const double scale : {0.5, 2.0}) {
        const auto alt = conditional_density_mc(p1, a, n, y, delta, 50000, 77, scale);
        const double shift = std::abs(alt.value - base.value) / g;
        const double band = 3.0 * std::hypot(alt.std_err, base.std_err) / g;
        CHECK(shift < band);
    }
}

TEST_CASE("slab conditioning decorrelates distant coordinates") {
    const auto p1 = make_power(1.0);
    const auto est = independence_check(p1, 2.0, 400, 30000, 7);
    const double n_acc = est.acceptance_rate * double(est.n_samples);
    CHECK(std::abs(est.value) < 5.0 / std::sqrt(n_acc) + 2.0 / 400.0);
    CHECK(std::abs(est.value) < 0.05);

    const auto rep = independence_check(p1, 2.0, 400, 30000, 7);
    CHECK(est.value == rep.value);
}

TEST_CASE("tiny blocks show the exchangeable-sum anticorrelation") {
    // near-exact conditioning on the sum of 4 coordinates: corr ~ -1/3
    const auto p1 = make_power(1.0);
    const double s = std::sqrt(moments_exact(p1, tilt_solve(p1, 1.0)).s2);
    const auto est = independence_check(p1, 1.0, 4, 200000, 7, 0.05 * s / 2.0);
    CHECK(est.value < -0.15);
    CHECK(est.value == doctest::Approx(-1.0 / 3.0).epsilon(0.25));
}

TEST_CASE("estimate fields are populated coherently") {
    const auto p1 = make_power(1.0);
    const std::vector<double> y{2.0};
    const double delta = default_slab_halfwidth(p1, 2.0, 64);
    const auto est = conditional_density_mc(p1, 2.0, 64, y, delta, 20000, 31);
    CHECK(est.n_samples == 20000);
    CHECK(est.seed == 31);
    CHECK(est.acceptance_rate > 0.0);
    CHECK(est.acceptance_rate <= 1.0);
    CHECK(est.std_err > 0.0);
    CHECK(est.value > 0.0);
}
