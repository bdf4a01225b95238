#include <doctest.h>

#include <Eigen/SVD>
#include <cmath>

#include "hypochain/asian_pricing.hpp"
#include "hypochain/errors.hpp"
#include "hypochain/limit_gaussian.hpp"
#include "hypochain/models.hpp"
#include "hypochain/rng.hpp"

using namespace hypochain;
using pricing::BasketSpec;

namespace {

BasketSpec two_asset_basket() {
    Vec s0(2), vols(2), w(2), r(2);
    s0 << 100.0, 50.0;
    vols << 0.2, 0.3;
    w << 0.6, 0.4;
    r << 0.01, 0.02;
    Mat rho(2, 2);
    rho << 1.0, 0.5, 0.5, 1.0;
    return BasketSpec::with_constant_vol(s0, r, rho, w, vols);
}

}  // namespace

TEST_SUITE_BEGIN("asian_pricing");

TEST_CASE("single-asset basket vs bs_asian: sigma and B2 coincide, B1 differs by the conversion") {
    Vec one(1);
    auto basket = BasketSpec::with_constant_vol(Vec::Constant(1, 100.0), Vec::Constant(1, 0.05),
                                                Mat::Identity(1, 1), Vec::Ones(1),
                                                Vec::Constant(1, 0.2));
    auto mapped = pricing::to_chained_system(basket);
    auto bs = models::bs_asian(100.0, 0.05, 0.2);

    rng::Stream stream = rng::make_stream(3, 0);
    for (int k = 0; k < 10; ++k) {
        Vec y(2);
        y << 80.0 + 40.0 * stream.uniform(), 10.0 * stream.gaussian();
        CHECK(mapped.sigma.eval(0.1, y)(0, 0) ==
              doctest::Approx(bs.sigma.eval(0.1, y)(0, 0)).epsilon(1e-12));
        CHECK(mapped.drift[1].eval(0.1, y)[0] ==
              doctest::Approx(bs.drift[1].eval(0.1, y)[0]).epsilon(1e-12));
        // Stratonovich drift of the Ito local-vol model carries -vol^2 y/2
        const double correction = 0.5 * 0.04 * y[0];
        CHECK(mapped.drift[0].eval(0.1, y)[0] ==
              doctest::Approx(bs.drift[0].eval(0.1, y)[0] - correction).epsilon(1e-10));
        // both describe the same Ito dynamics
        CHECK(ito_drift(mapped, 0.1, y)[0] ==
              doctest::Approx(0.05 * y[0]).epsilon(1e-9));
    }
}

TEST_CASE("H1 on the mapped basket equals the direct singular value") {
    auto basket = two_asset_basket();
    auto sys = pricing::to_chained_system(basket);
    const double lambda = check_H1(sys);

    // oracle: smallest singular value of wbar diag(s0) diag(Sigma) L, assembled by hand
    Mat wbar(2, 2);
    wbar << 0.6, 0.4, 0.0, 1.0;  // pivot column is the first (|w_1| largest)
    Mat l = pricing::correlation_cholesky(basket.rho);
    Mat prod = wbar * basket.s0.asDiagonal() *
               basket.local_vol.eval(0.0, basket.s0).asDiagonal() * l;
    Eigen::JacobiSVD<Mat> svd(prod);
    CHECK(lambda == doctest::Approx(svd.singularValues().minCoeff()).epsilon(1e-8));
    CHECK(lambda > 0.0);
}

TEST_CASE("Ito drift of block 1 is diag(y1) r after conversion") {
    auto basket = two_asset_basket();
    auto sys = pricing::to_chained_system(basket);
    rng::Stream stream = rng::make_stream(4, 0);
    for (int k = 0; k < 8; ++k) {
        Vec y(4);
        y << 80.0 + 40.0 * stream.uniform(), 30.0 + 40.0 * stream.uniform(),
            stream.gaussian(), stream.gaussian();
        const Vec drift = ito_drift(sys, 0.0, y);
        CHECK(drift[0] == doctest::Approx(0.01 * y[0]).epsilon(1e-9));
        CHECK(drift[1] == doctest::Approx(0.02 * y[1]).epsilon(1e-9));
    }

    // finite-difference sigma Jacobians reproduce the same cancellation
    BasketSpec fd = basket;
    fd.constant_vol = false;
    auto fd_sys = pricing::to_chained_system(fd);
    Vec y = fd_sys.xi;
    const Vec drift = ito_drift(fd_sys, 0.0, y);
    CHECK(drift[0] == doctest::Approx(0.01 * y[0]).epsilon(1e-6));
    CHECK(drift[1] == doctest::Approx(0.02 * y[1]).epsilon(1e-6));
}

TEST_CASE("ATM asymptotic price") {
    auto basket = BasketSpec::with_constant_vol(Vec::Constant(1, 100.0), Vec::Zero(1),
                                                Mat::Identity(1, 1), Vec::Ones(1),
                                                Vec::Constant(1, 0.2));
    CHECK(pricing::atm_asymptotic_price(basket, 0.25) ==
          doctest::Approx(20.0 * std::sqrt(0.25 / (6.0 * M_PI))).epsilon(1e-14));
    CHECK(pricing::atm_asymptotic_price(basket, 0.25) == doctest::Approx(2.3033).epsilon(1e-4));

    // spread of two nearly identical co-moving assets degenerates to zero
    Vec s0(2), vols(2), w(2);
    s0 << 100.0, 100.0;
    vols << 0.2, 0.2;
    w << 1.0, -1.0;
    Mat rho(2, 2);
    const double eps = 1e-10;
    rho << 1.0, 1.0 - eps, 1.0 - eps, 1.0;
    auto spread = BasketSpec::with_constant_vol(s0, Vec::Zero(2), rho, w, vols);
    CHECK(pricing::atm_asymptotic_price(spread, 1.0) <= 1e-3);

    // exactly perfect correlation is rejected: H1 cannot hold
    rho << 1.0, 1.0, 1.0, 1.0;
    CHECK_THROWS_AS(BasketSpec::with_constant_vol(s0, Vec::Zero(2), rho, w, vols), ModelError);

    // 1-homogeneity in the weights
    auto basket2 = two_asset_basket();
    auto doubled = basket2;
    doubled.weights *= 2.0;
    CHECK(pricing::atm_asymptotic_price(doubled, 0.5) ==
          doctest::Approx(2.0 * pricing::atm_asymptotic_price(basket2, 0.5)).epsilon(1e-12));
}

TEST_CASE("limit variance routes agree") {
    auto single = BasketSpec::with_constant_vol(Vec::Constant(1, 100.0), Vec::Zero(1),
                                                Mat::Identity(1, 1), Vec::Ones(1),
                                                Vec::Constant(1, 0.2));
    auto lv = pricing::limit_variance(single);
    CHECK(lv.w_variance == doctest::Approx(400.0 / 3.0).epsilon(1e-12));
    CHECK(lv.route_difference <= 1e-10);

    // independence additivity
    Vec s0(2), vols(2), w(2);
    s0 << 100.0, 100.0;
    vols << 0.2, 0.2;
    w << 1.0, 1.0;
    auto indep = BasketSpec::with_constant_vol(s0, Vec::Zero(2), Mat::Identity(2, 2), w, vols);
    CHECK(pricing::limit_variance(indep).w_variance ==
          doctest::Approx(800.0 / 3.0).epsilon(1e-12));

    // generic 2-asset: block display vs generic A Q A^T, and the w-row
    auto basket = two_asset_basket();
    auto generic = pricing::limit_variance(basket);
    CHECK(generic.route_difference <= 1e-10);
    CHECK(generic.covariance(2, 2) == doctest::Approx(generic.w_variance).epsilon(1e-10));

    // invariance under a different completion of w^T
    Mat alt(2, 2);
    alt << 0.6, 0.4, 1.0, 0.0;  // different second row, still nonsingular
    auto sys_a = pricing::to_chained_system(basket);
    auto sys_b = pricing::to_chained_system(basket, alt);
    Mat cov_a = limits::build_A(sys_a) * limits::build_Q(2, 2) *
                limits::build_A(sys_a).transpose();
    Mat cov_b = limits::build_A(sys_b) * limits::build_Q(2, 2) *
                limits::build_A(sys_b).transpose();
    CHECK(cov_a(2, 2) == doctest::Approx(cov_b(2, 2)).epsilon(1e-10));
}

TEST_CASE("MC pricing sanity") {
    auto basket = BasketSpec::with_constant_vol(Vec::Constant(1, 100.0), Vec::Zero(1),
                                                Mat::Identity(1, 1), Vec::Ones(1),
                                                Vec::Constant(1, 0.2));
    mc::SimConfig cfg;
    cfg.steps = 64;
    cfg.n_paths = 100000;
    cfg.seed = 55;
    cfg.workers = 4;

    // deep ITM call with zero rates prices the average itself: w^T s0
    auto itm = pricing::mc_price(basket, 0.25, cfg, 1e-9, pricing::PayoffKind::Call);
    CHECK(std::abs(itm.price - 100.0) <= 4.0 * itm.std_error + 1e-6);

    // ATM put-call parity at r = 0 (shared seed means shared paths)
    auto call = pricing::mc_price(basket, 0.25, cfg, std::nullopt, pricing::PayoffKind::Call);
    auto put = pricing::mc_price(basket, 0.25, cfg, std::nullopt, pricing::PayoffKind::Put);
    CHECK(call.strike == doctest::Approx(100.0));
    CHECK(std::abs(call.price - put.price) <=
          4.0 * std::hypot(call.std_error, put.std_error) + 1e-6);

    // discount toggle, off by default
    auto discounted =
        pricing::mc_price(basket, 0.25, cfg, std::nullopt, pricing::PayoffKind::Call, 0.1);
    CHECK(discounted.price ==
          doctest::Approx(call.price * std::exp(-0.1 * 0.25)).epsilon(1e-12));
}

TEST_CASE("rescaled average variance converges to w^T sigma sigma^T w / 3") {
    auto basket = BasketSpec::with_constant_vol(Vec::Constant(1, 100.0), Vec::Zero(1),
                                                Mat::Identity(1, 1), Vec::Ones(1),
                                                Vec::Constant(1, 0.2));
    auto sys = pricing::to_chained_system(basket);
    mc::SimConfig cfg;
    cfg.t = 0.02;
    cfg.steps = 256;
    cfg.n_paths = 200000;
    cfg.seed = 91;
    cfg.workers = 4;
    auto batch = mc::simulate_paths(sys, cfg);
    // beta = t^{-1/2} (avg - w^T s0); its variance tends to 400/3
    double acc = 0.0, acc2 = 0.0;
    for (Eigen::Index p = 0; p < batch.terminal.rows(); ++p) {
        const double beta = (batch.terminal(p, 1) / cfg.t - 100.0) / std::sqrt(cfg.t);
        acc += beta;
        acc2 += beta * beta;
    }
    const double mean = acc / batch.n_paths();
    const double var = acc2 / batch.n_paths() - mean * mean;
    CHECK(var == doctest::Approx(400.0 / 3.0).epsilon(0.03));
}

TEST_CASE("basket validation errors") {
    Vec s0(2), vols(2), w(2);
    s0 << 100.0, 50.0;
    vols << 0.2, 0.3;
    w << 1.0, 1.0;

    Mat asym(2, 2);
    asym << 1.0, 0.4, 0.5, 1.0;
    CHECK_THROWS_AS(BasketSpec::with_constant_vol(s0, Vec::Zero(2), asym, w, vols), ModelError);

    Mat bad_diag(2, 2);
    bad_diag << 1.1, 0.0, 0.0, 1.0;
    CHECK_THROWS_AS(BasketSpec::with_constant_vol(s0, Vec::Zero(2), bad_diag, w, vols),
                    ModelError);

    Vec zero_vol(2);
    zero_vol << 0.2, 0.0;
    CHECK_THROWS_AS(BasketSpec::with_constant_vol(s0, Vec::Zero(2), Mat::Identity(2, 2), w,
                                                  zero_vol),
                    ModelError);

    Vec neg_s0(2);
    neg_s0 << 100.0, -1.0;
    CHECK_THROWS_AS(BasketSpec::with_constant_vol(neg_s0, Vec::Zero(2), Mat::Identity(2, 2), w,
                                                  vols),
                    ModelError);

    CHECK_THROWS_AS(BasketSpec::with_constant_vol(s0, Vec::Zero(2), Mat::Identity(2, 2),
                                                  Vec::Zero(2), vols),
                    ModelError);
}

TEST_SUITE_END();
