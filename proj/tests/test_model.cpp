#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "exttilt/errors.hpp"
#include "exttilt/model.hpp"
#include "exttilt/tilt.hpp"

using namespace exttilt;

namespace {
std::filesystem::path write_temp(const std::string& name, const std::string& body) {
    const auto p = std::filesystem::temp_directory_path() / name;
    std::ofstream(p) << body;
    return p;
}
} // namespace

TEST_CASE("builtin families wire the documented h") {
    const auto w2 = make_weibull(2.0);
    for (double x : {0.8, 1.0, 2.5, 7.0})
        CHECK(w2.h(x) == doctest::Approx(2.0 * x - 1.0 / x).epsilon(1e-14));

    const auto ee = make_exp_exp();
    CHECK(ee.h(1.0) == doctest::Approx(1.0));
    CHECK(ee.g(3.0) == ee.h(3.0));

    const auto p1 = make_power(1.0);
    CHECK(p1.h(4.2) == doctest::Approx(4.2));
    CHECK(p1.g(2.0) == doctest::Approx(2.0));
}

TEST_CASE("builtin parameter ranges are enforced") {
    CHECK_THROWS_AS(make_weibull(1.0), invalid_parameter);
    CHECK_THROWS_AS(make_weibull(0.5), invalid_parameter);
    CHECK_THROWS_AS(make_power(0.0), invalid_parameter);
    CHECK_THROWS_AS(make_power(-2.0), invalid_parameter);
    CHECK(make_builtin(Family::weibull, 3.0).family_name == "weibull");
    CHECK(make_builtin(Family::exp_exp).family_name == "exp_exp");
    CHECK(parse_family("power").has_value());
    CHECK(!parse_family("cauchy").has_value());
}

TEST_CASE("normalize reproduces closed-form constants") {
    // weibull(2): p = 2x e^{-x^2}, so c = 2.
    CHECK(make_weibull(2.0).log_c == doctest::Approx(std::log(2.0)).epsilon(1e-10));
    // power(1) is the half-normal: c = sqrt(2/pi).
    CHECK(make_power(1.0).log_c ==
          doctest::Approx(0.5 * std::log(2.0 / M_PI)).epsilon(1e-10));
}

TEST_CASE("normalize is idempotent and the density has unit mass") {
    for (auto model : {make_weibull(2.0), make_exp_exp(), make_power(1.0)}) {
        const double before = model.log_c;
        const double after = normalize(model);
        CHECK(std::abs(after - before) < 1e-10);
        CHECK(std::abs(log_mgf_quadrature(model, 0.0)) < 1e-10);
    }
}

TEST_CASE("psi solves h(x) = u") {
    const auto w2 = make_weibull(2.0);
    // 2x - 1/x = 6 has root (6 + sqrt(44))/4.
    CHECK(psi(w2, 6.0) == doctest::Approx((6.0 + std::sqrt(44.0)) / 4.0).epsilon(1e-12));

    const auto ee = make_exp_exp();
    CHECK(psi(ee, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(psi(ee, std::exp(1.0)) == doctest::Approx(2.0).epsilon(1e-12));

    const auto p1 = make_power(1.0);
    CHECK(psi(p1, 7.5) == doctest::Approx(7.5).epsilon(1e-12));

    CHECK_THROWS_AS(psi(ee, 0.1), out_of_domain); // below h(0) = 1/e
}

TEST_CASE("psi round trip and monotonicity on a log grid") {
    std::mt19937 gen(1234);
    for (auto model : {make_weibull(2.0), make_weibull(3.5), make_exp_exp(), make_power(1.0)}) {
        const double u_lo = std::max(2.0 * model.h(model.x_min), 1e-3);
        std::uniform_real_distribution<double> uni(std::log(u_lo), std::log(1e6));
        double prev_x = -1.0, prev_u = -1.0;
        for (int i = 0; i < 60; ++i) {
            const double u = std::exp(uni(gen));
            const double x = psi(model, u);
            CHECK(std::abs(model.h(x) - u) <= 1e-8 * std::max(1.0, u));
            if (prev_u >= 0.0 && u > prev_u) CHECK(x > prev_x);
            if (prev_u < 0.0 || u > prev_u) {
                prev_u = u;
                prev_x = x;
            }
        }
    }
}

TEST_CASE("epsilon matches the per-family closed forms") {
    const auto w2 = make_weibull(2.0);
    CHECK(epsilon_of(w2, 1.0) == doctest::Approx(2.0).epsilon(1e-12));
    for (double x : {1.5, 3.0, 10.0, 50.0}) {
        const double k = 2.0;
        const double expect = k * (k - 1.0) / (k * std::pow(x, k) - (k - 1.0));
        CHECK(epsilon_of(w2, x) == doctest::Approx(expect).epsilon(1e-10));
    }

    const auto ee = make_exp_exp();
    CHECK(epsilon_of(ee, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
    for (double x : {2.0, 5.0, 40.0, 400.0}) // 1/(log t + 1) at t = h(x) is 1/x
        CHECK(epsilon_of(ee, x) == doctest::Approx(1.0 / x).epsilon(1e-10));

    const auto p1 = make_power(1.0);
    for (double x : {1.0, 3.0, 100.0}) CHECK(epsilon_of(p1, x) == doctest::Approx(0.0));
}

TEST_CASE("classify certifies the builtin classes") {
    {
        const auto w2 = make_weibull(2.0);
        const auto grid = default_classification_grid(w2);
        const auto rep = classify(w2, grid);
        CHECK(rep.cls.kind == DensityClass::r_beta);
        CHECK(rep.all_pass());
        REQUIRE(rep.beta_estimate.has_value());
        CHECK(*rep.beta_estimate == doctest::Approx(1.0).epsilon(0.02));
        CHECK(rep.epsilon_values.size() == grid.size());
    }
    {
        const auto w35 = make_weibull(3.5);
        const auto rep = classify(w35, default_classification_grid(w35));
        CHECK(rep.all_pass());
        CHECK(*rep.beta_estimate == doctest::Approx(2.5).epsilon(0.02));
    }
    {
        const auto ee = make_exp_exp();
        const auto rep = classify(ee, default_classification_grid(ee));
        CHECK(rep.cls.kind == DensityClass::r_infinity);
        CHECK(rep.all_pass());
        CHECK(!rep.beta_estimate.has_value());
    }
    {
        const auto p1 = make_power(1.0);
        const auto rep = classify(p1, default_classification_grid(p1));
        CHECK(rep.all_pass()); // eps identically zero passes the bounds trivially
    }
}

TEST_CASE("classify rejects short grids") {
    const auto w2 = make_weibull(2.0);
    std::vector<double> grid;
    for (int i = 0; i < 20; ++i) grid.push_back(1.0 + i); // barely a decade
    CHECK_THROWS_AS(classify(w2, grid), invalid_parameter);
}

TEST_CASE("perturbation envelope check reacts to q") {
    auto ok = make_weibull(2.0);
    set_q_table(ok, {{100.0, 1e-9}, {2000.0, 1e-9}});
    const auto rep_ok = classify(ok, default_classification_grid(ok));
    CHECK(rep_ok.all_pass());

    auto bad = make_weibull(2.0);
    set_q_table(bad, {{300.0, 0.1}, {700.0, 0.1}});
    const auto rep_bad = classify(bad, default_classification_grid(bad));
    CHECK(!rep_bad.all_pass());
    bool q_failed = false;
    for (const auto& c : rep_bad.checks)
        if (c.condition_id == "q-envelope") q_failed = !c.pass;
    CHECK(q_failed);
}

TEST_CASE("model files round-trip through the key=value grammar") {
    const auto path = write_temp("exttilt_model_ok.txt",
                                 "# sample model\n"
                                 "family = weibull\n"
                                 "k = 2.0\n"
                                 "theta = 0.4\n");
    const auto m = load_model_file(path);
    CHECK(m.family_name == "weibull");
    CHECK(m.theta == doctest::Approx(0.4));
    CHECK(m.log_c == doctest::Approx(std::log(2.0)).epsilon(1e-10));

    const auto pq = write_temp("exttilt_model_q.txt",
                               "family = power\n"
                               "beta = 1\n"
                               "q_table = 1.0:0.001, 2.0:0.002, 3.0:0.0\n");
    const auto mq = load_model_file(pq);
    CHECK(mq.q(1.5) == doctest::Approx(0.0015));
    CHECK(mq.q(0.5) == 0.0);
    CHECK(std::abs(log_mgf_quadrature(mq, 0.0)) < 1e-10); // renormalized
}

TEST_CASE("model file errors are invalid_parameter") {
    CHECK_THROWS_AS(load_model_file(write_temp("m1.txt", "family = cauchy\n")),
                    invalid_parameter);
    CHECK_THROWS_AS(load_model_file(write_temp("m2.txt", "family = weibull\n")),
                    invalid_parameter); // missing k
    CHECK_THROWS_AS(load_model_file(write_temp("m3.txt", "family = weibull\nk = one\n")),
                    invalid_parameter);
    CHECK_THROWS_AS(
        load_model_file(write_temp("m4.txt", "family = weibull\nk = 2\nk = 3\n")),
        invalid_parameter); // duplicate
    CHECK_THROWS_AS(
        load_model_file(write_temp("m5.txt", "family = weibull\nk = 2\nshape = 2\n")),
        invalid_parameter); // unknown key
    CHECK_THROWS_AS(
        load_model_file(write_temp("m6.txt", "family = power\nbeta = 1\nq_table = 1.0@3\n")),
        invalid_parameter);
    CHECK_THROWS_AS(load_model_file("/nonexistent/exttilt.txt"), invalid_parameter);
}

TEST_CASE("log-log slope of h recovers the index for several shapes") {
    for (double k : {1.5, 2.0, 4.0}) {
        const auto m = make_weibull(k);
        const auto rep = classify(m, default_classification_grid(m));
        REQUIRE(rep.beta_estimate.has_value());
        CHECK(*rep.beta_estimate == doctest::Approx(k - 1.0).epsilon(0.02));
    }
}
