#include <doctest.h>

#include <nlohmann/json.hpp>

#include "hypochain/chained_system.hpp"
#include "hypochain/errors.hpp"
#include "hypochain/models.hpp"
#include "hypochain/rng.hpp"
#include "oracles.hpp"

using namespace hypochain;

TEST_SUITE_BEGIN("model_registry");

TEST_CASE("jacobian_block on linear and quadratic blocks") {
    auto kol = models::kolmogorov_linear(2, 1, 1.0);
    Vec x = Vec::Zero(2);
    CHECK(jacobian_block(kol.drift[1], 1, 0.0, x, 1)(0, 0) == doctest::Approx(1.0));

    auto quad = models::quadratic_asian(3.0);
    CHECK(jacobian_block(quad.drift[1], 1, 0.0, quad.xi, 1)(0, 0) == doctest::Approx(6.0));

    // finite-difference fallback agrees
    VectorField no_jac{quad.drift[1].eval, nullptr};
    CHECK(jacobian_block(no_jac, 1, 0.0, quad.xi, 1)(0, 0) == doctest::Approx(6.0).epsilon(1e-6));

    auto bs = models::bs_asian(100.0, 0.05, 0.2);
    CHECK(sigma_column_jacobian(bs.sigma, 1, 1, 0.0, bs.xi, 1)(0, 0) == doctest::Approx(0.2));
    MatrixField fd_sigma{bs.sigma.eval, nullptr, nullptr};
    CHECK(sigma_column_jacobian(fd_sigma, 1, 1, 0.0, bs.xi, 1)(0, 0) ==
          doctest::Approx(0.2).epsilon(1e-6));
}

TEST_CASE("ito drift correction") {
    auto kol = models::kolmogorov_linear(2, 1, 1.0);
    Vec x(2);
    x << 0.7, -0.3;
    CHECK((ito_drift(kol, 0.0, x) - kol.drift_value(0.0, x)).norm() == doctest::Approx(0.0));

    auto bs = models::bs_asian(100.0, 0.05, 0.2);
    const double correction = ito_drift(bs, 0.0, bs.xi)[0] - bs.drift_value(0.0, bs.xi)[0];
    CHECK(correction == doctest::Approx(2.0).epsilon(1e-9));  // 0.5 * 0.2 * (0.2 * 100)

    // the finite-difference assembly matches the closed form
    MatrixField fd_sigma{bs.sigma.eval, nullptr, nullptr};
    ChainedSystem fd_bs = bs;
    fd_bs.sigma = fd_sigma;
    CHECK(ito_drift(fd_bs, 0.0, bs.xi)[0] == doctest::Approx(ito_drift(bs, 0.0, bs.xi)[0]).epsilon(1e-8));

    // d = 2 diagonal local vol, constant Sigma: correction_i = Sigma_i^2 y_i / 2
    Vec s0(2), vols(2);
    s0 << 50.0, 80.0;
    vols << 0.3, 0.2;
    auto basket = pricing::BasketSpec::with_constant_vol(s0, Vec::Zero(2), Mat::Identity(2, 2),
                                                         Vec::Ones(2), vols);
    auto sys = pricing::to_chained_system(basket);
    Vec b0 = sys.drift_value(0.0, sys.xi);
    Vec bi = ito_drift(sys, 0.0, sys.xi);
    CHECK(bi[0] - b0[0] == doctest::Approx(0.5 * 0.09 * 50.0).epsilon(1e-9));
    CHECK(bi[1] - b0[1] == doctest::Approx(0.5 * 0.04 * 80.0).epsilon(1e-9));
}

TEST_CASE("check_H1 on built-ins") {
    CHECK(check_H1(models::kolmogorov_linear(2, 1, 1.0)) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(check_H1(models::bs_asian(100.0, 0.05, 0.2)) == doctest::Approx(20.0).epsilon(1e-8));
    CHECK(check_H1(models::quadratic_asian(0.0)) == doctest::Approx(0.0));
    CHECK(check_H1(models::quadratic_asian(0.0)) < kH1DegenerateThreshold);
}

TEST_CASE("validate_structure accepts built-ins and flags a corrupted chain") {
    auto report = validate_structure(models::kolmogorov_linear(2, 1, 1.0));
    CHECK(report.structure_ok);
    CHECK(report.h1_lambda == doctest::Approx(1.0));

    // n = 3 chain whose B_3 illegally reads x_1
    auto bad = models::kolmogorov_linear(3, 1, 1.0);
    bad.drift[2].eval = [](double, const Vec& x) { return Vec(Vec::Constant(1, x[0])); };
    bad.drift[2].jacobian = nullptr;
    auto bad_report = validate_structure(bad);
    CHECK_FALSE(bad_report.structure_ok);
    REQUIRE_FALSE(bad_report.warnings.empty());
    bool found = false;
    for (const auto& w : bad_report.warnings)
        if (w.code == "forbidden_dependence" && w.j == 3 && w.l == 1) found = true;
    CHECK(found);

    // growth warning on the unbounded-sigma model, but structure passes
    auto bs_report = validate_structure(models::bs_asian(100.0, 0.05, 0.2));
    CHECK(bs_report.structure_ok);
    bool sigma_warning = false;
    for (const auto& w : bs_report.warnings)
        if (w.code == "sigma_growth") sigma_warning = true;
    CHECK(sigma_warning);
}

TEST_CASE("structure_ok false implies warnings present") {
    auto bad = models::kolmogorov_linear(3, 1, 1.0);
    bad.drift[2].eval = [](double, const Vec& x) { return Vec(Vec::Constant(1, x[0])); };
    bad.drift[2].jacobian = nullptr;
    auto report = validate_structure(bad);
    CHECK((report.structure_ok || !report.warnings.empty()));
    CHECK_FALSE(report.structure_ok);
}

TEST_CASE("validate_structure with an explicit probe set") {
    auto sys = models::kolmogorov_linear(2, 1, 1.0);
    std::vector<Vec> probes;
    for (double x : {-0.5, 0.0, 0.7}) {
        Vec p(2);
        p << x, -x;
        probes.push_back(p);
    }
    auto report = validate_structure(sys, probes);
    CHECK(report.structure_ok);
    CHECK(report.h2_box_bound == doctest::Approx(1.0));  // |dB2/dx1| = 1 dominates

    CHECK_THROWS_AS(validate_structure(sys, std::vector<Vec>{}), ModelError);
}

TEST_CASE("dimension mismatch raises a structural error") {
    auto sys = models::kolmogorov_linear(2, 1, 1.0);
    sys.drift[1].eval = [](double, const Vec&) { return Vec(Vec::Zero(2)); };
    CHECK_THROWS_AS(validate_structure(sys), ModelError);
    sys = models::kolmogorov_linear(2, 1, 1.0);
    sys.xi = Vec::Zero(3);
    CHECK_THROWS_AS(check_H1(sys), ModelError);
}

TEST_CASE("analytic Jacobians match finite differences on random probes") {
    std::vector<ChainedSystem> systems;
    systems.push_back(models::kolmogorov_linear(3, 2, 0.7));
    systems.push_back(models::bs_asian(100.0, 0.05, 0.2));
    systems.push_back(models::quadratic_asian(1.5));
    for (const auto& sys : systems) {
        rng::Stream stream = rng::make_stream(99, 0);
        for (int probe = 0; probe < 100; ++probe) {
            Vec x(sys.dim());
            for (int k = 0; k < sys.dim(); ++k)
                x[k] = sys.xi[k] + 2.0 * stream.uniform() - 1.0;
            for (int j = 0; j < sys.n; ++j) {
                if (!sys.drift[j].jacobian) continue;
                VectorField fd{sys.drift[j].eval, nullptr};
                for (int l = 1; l <= sys.n; ++l) {
                    Mat a = jacobian_block(sys.drift[j], l, 0.0, x, sys.d);
                    Mat b = jacobian_block(fd, l, 0.0, x, sys.d);
                    CHECK((a - b).norm() <= 1e-5 * std::max(1.0, a.norm()));
                }
            }
        }
    }
}

TEST_CASE("non-finite evaluations carry the offending coordinate") {
    VectorField f;
    f.eval = [](double, const Vec& x) { return Vec(Vec::Constant(1, std::sqrt(x[0]))); };
    Vec x(2);
    x << -1.0, 0.0;
    try {
        jacobian_block(f, 1, 0.0, x, 1);
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(e.coordinate == 0);
    }
}

TEST_CASE("coefficient evaluation is deterministic") {
    auto bs = models::bs_asian(100.0, 0.05, 0.2);
    Vec x(2);
    x << 103.7, 12.9;
    const Vec a = bs.drift_value(0.3, x);
    const Vec b = bs.drift_value(0.3, x);
    CHECK(a[0] == b[0]);
    CHECK(a[1] == b[1]);
    CHECK(bs.sigma.eval(0.3, x)(0, 0) == bs.sigma.eval(0.3, x)(0, 0));
}

TEST_CASE("registry instantiates models from JSON and rejects unknown keys") {
    nlohmann::json params = {{"s0", 100.0}, {"r", 0.0}, {"vol", 0.2}};
    auto bs = models::make_model("bs_asian", params);
    CHECK(bs.key == "bs_asian");
    CHECK(bs.xi[0] == doctest::Approx(100.0));

    CHECK_THROWS_AS(models::make_model("no_such_model", params), ConfigError);
    nlohmann::json bad = {{"s0", 100.0}, {"voll", 0.2}};
    CHECK_THROWS_AS(models::make_model("bs_asian", bad), ConfigError);

    nlohmann::json basket_params = {{"s0", {100.0}}, {"vols", {0.2}}};
    auto basket = models::make_model("local_vol_basket", basket_params);
    CHECK(basket.n == 2);
    CHECK(basket.family == HypothesisFamily::H2DoublePrime);
}

TEST_SUITE_END();
