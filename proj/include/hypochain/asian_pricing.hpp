#pragma once

#include <optional>

#include "hypochain/chained_system.hpp"
#include "hypochain/mc_engine.hpp"

namespace hypochain::pricing {

/// Correlated local-volatility basket: dS = diag(S) r dt + diag(S) diag(Sigma(t,S)) L dW,
/// rho = L L^T. `local_vol` maps (t, S in R^d) -> R^d and must be positive at (0, s0).
struct BasketSpec {
    int d = 0;
    Vec s0;
    Vec rates;
    Mat rho;
    Vec weights;
    VectorField local_vol;
    double maturity = 1.0;
    bool constant_vol = false;  // enables analytic sigma Jacobians

    /// Throws ModelError unless rho is symmetric with unit diagonal and
    /// strictly positive definite, s0 > 0, w != 0 and Sigma(0, s0) > 0.
    void validate() const;

    static BasketSpec with_constant_vol(Vec s0, Vec rates, Mat rho, Vec weights, Vec vols,
                                        double maturity = 1.0);
};

/// Lower-triangular Cholesky factor of rho; throws ModelError when rho is not
/// strictly positive definite ("invalid correlation").
Mat correlation_cholesky(const Mat& rho);

/// Completion of w^T to a nonsingular matrix: row 1 = w^T, remaining rows are
/// the standard basis vectors for every index except argmax |w_k|.
Mat completion_matrix(const Vec& w);

/// Map to the n = 2 chained system (Stratonovich drift; the Ito drift of
/// block 1 is diag(y1) r by construction).
ChainedSystem to_chained_system(const BasketSpec& basket, const Mat& wbar);
ChainedSystem to_chained_system(const BasketSpec& basket);

/// sqrt( t * sum_{i,m} rho_im w_i w_m Sigma_i Sigma_m s0^i s0^m / (6 pi) );
/// identical for calls and puts. Zero radicand returns 0 (degenerate basket).
double atm_asymptotic_price(const BasketSpec& basket, double t);

enum class PayoffKind { Call, Put };

struct PriceResult {
    double price = 0.0;
    double std_error = 0.0;
    double strike = 0.0;
    long paths_used = 0;
};

/// Undiscounted E[(avg - K)^+] (or put) of the weighted time-average,
/// estimated from the mapped chained system. strike = nullopt prices ATM
/// (K = w^T s0). `discount_rate` is an off-by-default toggle.
PriceResult mc_price(const BasketSpec& basket, double t, const mc::SimConfig& cfg,
                     std::optional<double> strike, PayoffKind kind,
                     std::optional<double> discount_rate = std::nullopt);

struct LimitVariance {
    double w_variance = 0.0;  // w^T sigma sigma^T(0,s0) w / 3
    Mat covariance;           // full 2d x 2d A Q A^T
    double route_difference = 0.0;  // block formula vs generic A Q A^T
};

/// Computed two ways (block display and generic A, Q on the mapped system);
/// both are returned along with their max abs discrepancy.
LimitVariance limit_variance(const BasketSpec& basket);

}  // namespace hypochain::pricing
