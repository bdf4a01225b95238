#pragma once

#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

#include "hypochain/asian_pricing.hpp"
#include "hypochain/chained_system.hpp"

namespace hypochain::models {

/// Linear chain: sigma = sigma0 * Id, B_1 = 0, B_j(x) = C_j x_{j-1} for j >= 2.
/// `couplings` holds C_2..C_n (defaults to identities when empty).
ChainedSystem kolmogorov_linear(int n, int d, double sigma0,
                                std::vector<Mat> couplings = {}, Vec xi = {});

/// dX1 = vol X1 o dW + r X1 dt, dX2 = X1 dt, xi = (s0, 0).
ChainedSystem bs_asian(double s0, double r, double vol);

/// dX1 = dW, dX2 = (X1)^2 dt, xi = (xi1, 0).
ChainedSystem quadratic_asian(double xi1);

/// Instantiate a registered model from its key and a JSON parameter map.
/// Known keys: kolmogorov_linear, bs_asian, quadratic_asian, local_vol_basket.
ChainedSystem make_model(const std::string& key, const nlohmann::json& params);

/// Constant-vol basket from the local_vol_basket parameter map (used directly
/// by the pricing subcommand).
pricing::BasketSpec basket_from_json(const nlohmann::json& params);

std::vector<std::string> model_keys();

}  // namespace hypochain::models
