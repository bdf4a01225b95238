#include <doctest.h>

#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>

#include "hypochain/errors.hpp"
#include "hypochain/limit_gaussian.hpp"
#include "hypochain/models.hpp"
#include "hypochain/rng.hpp"
#include "oracles.hpp"

using namespace hypochain;

TEST_SUITE_BEGIN("limit_gaussian");

TEST_CASE("Q blocks and positive definiteness") {
    Mat q = limits::build_Q(2, 1);
    CHECK(q(0, 0) == doctest::Approx(1.0));
    CHECK(q(0, 1) == doctest::Approx(0.5));
    CHECK(q(1, 0) == doctest::Approx(0.5));
    CHECK(q(1, 1) == doctest::Approx(1.0 / 3.0));

    Mat q32 = limits::build_Q(3, 2);
    CHECK(q32(0, 2) == doctest::Approx(0.5));   // block (1,2) * Id
    CHECK(q32(0, 3) == doctest::Approx(0.0));   // off-diagonal inside a block
    CHECK(q32(4, 4) == doctest::Approx(1.0 / 20.0));
}

TEST_CASE("q_n: factorial route equals determinant route") {
    CHECK(limits::q_constant(1) == doctest::Approx(std::sqrt(2.0 * M_PI)).epsilon(1e-14));
    CHECK(limits::q_constant(2) ==
          doctest::Approx(2.0 * M_PI / std::sqrt(12.0)).epsilon(1e-14));
    for (int n = 1; n <= 6; ++n) {
        const double a = limits::q_constant(n);
        for (int d = 1; d <= 2; ++d) {
            const double b = limits::q_constant_det_route(n, d);
            CHECK(std::abs(a - b) / a <= 1e-12);
        }
    }
}

TEST_CASE("build_A block products") {
    Mat a_kol = limits::build_A(models::kolmogorov_linear(2, 1, 1.0));
    CHECK((a_kol - Mat::Identity(2, 2)).norm() <= 1e-12);

    Mat a_bs = limits::build_A(models::bs_asian(100.0, 0.05, 0.2));
    CHECK(a_bs(0, 0) == doctest::Approx(20.0).epsilon(1e-9));
    CHECK(a_bs(1, 1) == doctest::Approx(20.0).epsilon(1e-9));
    CHECK(std::abs(a_bs(0, 1)) + std::abs(a_bs(1, 0)) <= 1e-12);

    std::vector<Mat> couplings{Mat::Constant(1, 1, 2.0), Mat::Constant(1, 1, 3.0)};
    Mat a_chain = limits::build_A(models::kolmogorov_linear(3, 1, 0.5, couplings));
    CHECK(a_chain(0, 0) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(a_chain(1, 1) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(a_chain(2, 2) == doctest::Approx(3.0).epsilon(1e-9));

    CHECK_THROWS_AS(limits::build_A(models::quadratic_asian(0.0)), ModelError);
}

TEST_CASE("Hormander commutator matrix") {
    SUBCASE("Kolmogorov: [[1, x], [0, -1]]") {
        auto report = limits::build_hormander_matrix(models::kolmogorov_linear(2, 1, 1.0));
        CHECK(report.matrix(0, 0) == doctest::Approx(1.0).epsilon(1e-8));
        CHECK(report.matrix(1, 1) == doctest::Approx(-1.0).epsilon(1e-6));
        CHECK(std::abs(report.matrix(1, 0)) <= 1e-8);
        CHECK(report.triangular_ok);
        CHECK(report.diagonal_ok);
    }
    SUBCASE("n = 1 model is trivially sigma itself") {
        auto report = limits::build_hormander_matrix(models::kolmogorov_linear(1, 2, 0.7));
        CHECK((report.matrix - 0.7 * Mat::Identity(2, 2)).norm() <= 1e-12);
        CHECK(report.triangular_ok);
        CHECK(report.diagonal_ok);
    }
    SUBCASE("quadratic_asian diagonal blocks (1, -2)") {
        auto report = limits::build_hormander_matrix(models::quadratic_asian(1.0));
        CHECK(report.matrix(0, 0) == doctest::Approx(1.0).epsilon(1e-8));
        CHECK(report.matrix(1, 1) == doctest::Approx(-2.0).epsilon(1e-5));
        CHECK(report.triangular_ok);
        CHECK(report.diagonal_ok);
    }
}

TEST_CASE("limit density values and identities") {
    auto lim = limits::LimitModel::build(models::kolmogorov_linear(2, 1, 1.0));
    const double at_zero = lim.density(Vec::Zero(2));
    CHECK(at_zero == doctest::Approx(std::sqrt(12.0) / (2.0 * M_PI)).epsilon(1e-12));
    CHECK(at_zero == doctest::Approx(0.55132889542179).epsilon(1e-10));

    // equals the closed-form Gaussian with covariance A Q A^T (cofactor route)
    rng::Stream stream = rng::make_stream(5, 0);
    for (int k = 0; k < 20; ++k) {
        Vec y(2);
        y << 2.0 * stream.gaussian(), 2.0 * stream.gaussian();
        CHECK(lim.density(y) ==
              doctest::Approx(oracles::gaussian2_density(lim.covariance(), y)).epsilon(1e-12));
    }

    // normalization identity q_n^d |det A| = (2 pi)^{nd/2} sqrt(det A Q A^T)
    for (auto sys : {models::kolmogorov_linear(2, 1, 1.0), models::bs_asian(100.0, 0.05, 0.2)}) {
        auto m = limits::LimitModel::build(sys);
        const double lhs = std::pow(m.q_n(), m.d()) * m.det_a_abs();
        const double rhs = std::pow(2.0 * M_PI, 0.5 * m.n() * m.d()) *
                           std::sqrt(m.covariance().determinant());
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    }

    // bs_asian at ybar = 0: cross-checked against the exact bivariate Gaussian
    auto bs_lim = limits::LimitModel::build(models::bs_asian(100.0, 0.05, 0.2));
    const double bs_zero = bs_lim.density(Vec::Zero(2));
    CHECK(bs_zero ==
          doctest::Approx(oracles::gaussian2_density(bs_lim.covariance(), Vec::Zero(2)))
              .epsilon(1e-12));
    CHECK(bs_zero == doctest::Approx(std::sqrt(12.0) / (2.0 * M_PI * 400.0)).epsilon(1e-12));

    // Simpson quadrature: the density integrates to one
    const Mat cov = lim.covariance();
    const double s1 = std::sqrt(cov(0, 0)), s2 = std::sqrt(cov(1, 1));
    const int panels = 200;
    double integral = 0.0;
    const double hx = 16.0 * s1 / panels, hy = 16.0 * s2 / panels;
    for (int i = 0; i <= panels; ++i)
        for (int j = 0; j <= panels; ++j) {
            Vec y(2);
            y << -8.0 * s1 + i * hx, -8.0 * s2 + j * hy;
            const double wx = (i == 0 || i == panels) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
            const double wy = (j == 0 || j == panels) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
            integral += wx * wy * lim.density(y);
        }
    integral *= hx * hy / 9.0;
    CHECK(integral == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("limit density equals the closed-form Gaussian in higher dimension") {
    std::vector<Mat> couplings{Mat::Constant(1, 1, 2.0), Mat::Constant(1, 1, 3.0)};
    auto lim = limits::LimitModel::build(models::kolmogorov_linear(3, 1, 0.5, couplings));
    const Mat cov = lim.covariance();
    // explicit-inverse route, test-only
    const Mat inv = cov.inverse();
    const double norm = std::pow(2.0 * M_PI, 1.5) * std::sqrt(cov.determinant());
    rng::Stream stream = rng::make_stream(29, 0);
    for (int k = 0; k < 10; ++k) {
        Vec y(3);
        y << stream.gaussian(), stream.gaussian(), 0.5 * stream.gaussian();
        const double want = std::exp(-0.5 * y.dot(inv * y)) / norm;
        CHECK(lim.density(y) == doctest::Approx(want).epsilon(1e-12));
    }
    Vec bad = Vec::Constant(3, std::numeric_limits<double>::infinity());
    CHECK_THROWS_AS(lim.density(bad), NumericError);
}

TEST_CASE("limit gradient and hessian") {
    auto lim = limits::LimitModel::build(models::kolmogorov_linear(2, 1, 1.0));

    CHECK(lim.gradient(Vec::Zero(2)).norm() == doctest::Approx(0.0));

    // hessian at zero: -density * (A Q A^T)^{-1}
    Mat hess0 = lim.hessian(Vec::Zero(2));
    Mat inv(2, 2);
    const Mat cov = lim.covariance();
    const double det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(1, 0);
    inv << cov(1, 1) / det, -cov(0, 1) / det, -cov(1, 0) / det, cov(0, 0) / det;
    CHECK((hess0 + lim.density(Vec::Zero(2)) * inv).norm() <= 1e-12 * inv.norm());

    rng::Stream stream = rng::make_stream(17, 0);
    for (int k = 0; k < 20; ++k) {
        Vec y(2);
        y << 1.5 * stream.gaussian(), 1.5 * stream.gaussian();
        // central differences confirm the -p Sigma^{-1} z convention
        Vec fd = oracles::central_gradient([&](const Vec& z) { return lim.density(z); }, y, 1e-5);
        CHECK((fd - lim.gradient(y)).norm() <= 1e-6 * std::max(1e-3, fd.norm()));
        CHECK((fd - oracles::gaussian2_gradient(cov, y)).norm() <=
              1e-6 * std::max(1e-3, fd.norm()));

        Mat hess = lim.hessian(y);
        CHECK((hess - hess.transpose()).norm() <= 1e-14 * hess.norm());
        // trace identity: tr(H)/p = |Sigma^{-1} y|^2 - tr(Sigma^{-1})
        Vec sy = inv * y;
        const double want = sy.squaredNorm() - inv.trace();
        CHECK(hess.trace() / lim.density(y) == doctest::Approx(want).epsilon(1e-10));
    }
}

TEST_CASE("LimitModel JSON export") {
    auto lim = limits::LimitModel::build(models::bs_asian(100.0, 0.05, 0.2));
    auto doc = lim.to_json();
    CHECK(doc["n"] == 2);
    CHECK(doc["d"] == 1);
    CHECK(doc["q_n"].get<double>() == doctest::Approx(lim.q_n()));
    CHECK(doc["A"].size() == 4);
    CHECK(doc["A"][0].get<double>() == doctest::Approx(20.0));
    CHECK(doc["A"][3].get<double>() == doctest::Approx(20.0));
    CHECK(doc["covariance"][0].get<double>() == doctest::Approx(400.0));
}

TEST_SUITE_END();
