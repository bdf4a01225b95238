#include "hypochain/models.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

#include "hypochain/asian_pricing.hpp"
#include "hypochain/errors.hpp"
#include "hypochain/json_util.hpp"

namespace hypochain::models {

ChainedSystem kolmogorov_linear(int n, int d, double sigma0, std::vector<Mat> couplings, Vec xi) {
    if (n < 1 || d < 1) throw ModelError("kolmogorov_linear needs n >= 1, d >= 1");
    if (couplings.empty())
        couplings.assign(static_cast<size_t>(std::max(0, n - 1)), Mat::Identity(d, d));
    if (static_cast<int>(couplings.size()) != n - 1)
        throw ModelError("kolmogorov_linear needs n-1 coupling matrices");
    for (const Mat& c : couplings)
        if (c.rows() != d || c.cols() != d) throw ModelError("coupling matrices must be d x d");
    if (xi.size() == 0) xi = Vec::Zero(n * d);
    if (xi.size() != n * d) throw ModelError("xi must have dimension n*d");

    ChainedSystem sys;
    sys.n = n;
    sys.d = d;
    sys.xi = xi;
    sys.horizon = 8.0;
    sys.key = "kolmogorov_linear";
    sys.family = HypothesisFamily::H2Prime;

    sys.drift.resize(n);
    sys.drift[0].eval = [d](double, const Vec&) { return Vec(Vec::Zero(d)); };
    sys.drift[0].jacobian = [d](double, const Vec&, int) { return Mat(Mat::Zero(d, d)); };
    for (int j = 2; j <= n; ++j) {
        const Mat c = couplings[j - 2];
        sys.drift[j - 1].eval = [c, d, j](double, const Vec& x) {
            return Vec(c * x.segment((j - 2) * d, d));
        };
        sys.drift[j - 1].jacobian = [c, d, j](double, const Vec&, int l) {
            return l == j - 1 ? c : Mat(Mat::Zero(d, d));
        };
    }
    sys.sigma.eval = [sigma0, d](double, const Vec&) { return Mat(sigma0 * Mat::Identity(d, d)); };
    sys.sigma.column_jacobian = [d](double, const Vec&, int, int) {
        return Mat(Mat::Zero(d, d));
    };
    sys.sigma.ito_correction = [d](double, const Vec&) { return Vec(Vec::Zero(d)); };

    ChainedSystem::LinearInfo info;
    info.flow = Mat::Zero(n * d, n * d);
    for (int j = 2; j <= n; ++j) info.flow.block((j - 1) * d, (j - 2) * d, d, d) = couplings[j - 2];
    info.shift = Vec::Zero(n * d);
    info.sigma_bar = Mat::Zero(n * d, d);
    info.sigma_bar.topRows(d) = sigma0 * Mat::Identity(d, d);
    sys.linear = std::move(info);
    return sys;
}

ChainedSystem bs_asian(double s0, double r, double vol) {
    if (s0 <= 0.0) throw ModelError("bs_asian needs s0 > 0");
    ChainedSystem sys;
    sys.n = 2;
    sys.d = 1;
    sys.xi = Vec::Zero(2);
    sys.xi[0] = s0;
    sys.horizon = 8.0;
    sys.key = "bs_asian";
    sys.family = HypothesisFamily::H2DoublePrime;

    sys.drift.resize(2);
    sys.drift[0].eval = [r](double, const Vec& x) { return Vec(Vec::Constant(1, r * x[0])); };
    sys.drift[0].jacobian = [r](double, const Vec&, int l) {
        return Mat(Mat::Constant(1, 1, l == 1 ? r : 0.0));
    };
    sys.drift[1].eval = [](double, const Vec& x) { return Vec(Vec::Constant(1, x[0])); };
    sys.drift[1].jacobian = [](double, const Vec&, int l) {
        return Mat(Mat::Constant(1, 1, l == 1 ? 1.0 : 0.0));
    };
    sys.sigma.eval = [vol](double, const Vec& x) { return Mat(Mat::Constant(1, 1, vol * x[0])); };
    sys.sigma.column_jacobian = [vol](double, const Vec&, int l, int) {
        return Mat(Mat::Constant(1, 1, l == 1 ? vol : 0.0));
    };
    sys.sigma.ito_correction = [vol](double, const Vec& x) {
        return Vec(Vec::Constant(1, 0.5 * vol * vol * x[0]));
    };
    return sys;
}

ChainedSystem quadratic_asian(double xi1) {
    ChainedSystem sys;
    sys.n = 2;
    sys.d = 1;
    sys.xi = Vec::Zero(2);
    sys.xi[0] = xi1;
    sys.horizon = 8.0;
    sys.key = "quadratic_asian";
    sys.family = HypothesisFamily::H2PrimeLocalized;

    sys.drift.resize(2);
    sys.drift[0].eval = [](double, const Vec&) { return Vec(Vec::Zero(1)); };
    sys.drift[0].jacobian = [](double, const Vec&, int) { return Mat(Mat::Zero(1, 1)); };
    sys.drift[1].eval = [](double, const Vec& x) { return Vec(Vec::Constant(1, x[0] * x[0])); };
    sys.drift[1].jacobian = [](double, const Vec& x, int l) {
        return Mat(Mat::Constant(1, 1, l == 1 ? 2.0 * x[0] : 0.0));
    };
    sys.sigma.eval = [](double, const Vec&) { return Mat(Mat::Identity(1, 1)); };
    sys.sigma.column_jacobian = [](double, const Vec&, int, int) { return Mat(Mat::Zero(1, 1)); };
    sys.sigma.ito_correction = [](double, const Vec&) { return Vec(Vec::Zero(1)); };
    return sys;
}

namespace {

using jsonu::json;

ChainedSystem make_kolmogorov(const json& params) {
    jsonu::reject_unknown_keys(params, {"n", "d", "sigma0", "couplings", "xi"}, "model.params");
    const int n = jsonu::get_or<int>(params, "n", 2, "model.params");
    const int d = jsonu::get_or<int>(params, "d", 1, "model.params");
    const double sigma0 = jsonu::get_or<double>(params, "sigma0", 1.0, "model.params");
    std::vector<Mat> couplings;
    if (params.contains("couplings")) {
        for (const auto& entry : params.at("couplings")) {
            if (entry.is_number())
                couplings.push_back(entry.get<double>() * Mat::Identity(d, d));
            else
                couplings.push_back(jsonu::parse_mat(entry, "model.params.couplings"));
        }
    }
    Vec xi;
    if (params.contains("xi")) xi = jsonu::parse_vec(params.at("xi"), "model.params.xi");
    return kolmogorov_linear(n, d, sigma0, std::move(couplings), std::move(xi));
}

}  // namespace

pricing::BasketSpec basket_from_json(const nlohmann::json& params_in) {
    const json params = params_in.is_null() ? json::object() : json(params_in);
    jsonu::reject_unknown_keys(params, {"d", "s0", "r", "rho", "w", "vols", "maturity"},
                               "model.params");
    if (!params.contains("s0")) throw ConfigError("missing required field", "model.params.s0");
    const Vec s0 = jsonu::parse_vec(params.at("s0"), "model.params.s0");
    const int d = static_cast<int>(s0.size());
    Vec rates = params.contains("r") ? jsonu::parse_vec(params.at("r"), "model.params.r")
                                     : Vec(Vec::Zero(d));
    if (rates.size() == 1 && d > 1) rates = Vec::Constant(d, rates[0]);
    Mat rho = params.contains("rho") ? jsonu::parse_mat(params.at("rho"), "model.params.rho")
                                     : Mat(Mat::Identity(d, d));
    const Vec w = params.contains("w") ? jsonu::parse_vec(params.at("w"), "model.params.w")
                                       : Vec(Vec::Ones(d));
    if (!params.contains("vols")) throw ConfigError("missing required field", "model.params.vols");
    Vec vols = jsonu::parse_vec(params.at("vols"), "model.params.vols");
    if (vols.size() == 1 && d > 1) vols = Vec::Constant(d, vols[0]);
    const double maturity = jsonu::get_or<double>(params, "maturity", 1.0, "model.params");
    return pricing::BasketSpec::with_constant_vol(s0, rates, rho, w, vols, maturity);
}

ChainedSystem make_model(const std::string& key, const nlohmann::json& params_in) {
    const json params = params_in.is_null() ? json::object() : json(params_in);
    if (key == "kolmogorov_linear") return make_kolmogorov(params);
    if (key == "bs_asian") {
        jsonu::reject_unknown_keys(params, {"s0", "r", "vol"}, "model.params");
        return bs_asian(jsonu::get_or<double>(params, "s0", 100.0, "model.params"),
                        jsonu::get_or<double>(params, "r", 0.05, "model.params"),
                        jsonu::get_or<double>(params, "vol", 0.2, "model.params"));
    }
    if (key == "quadratic_asian") {
        jsonu::reject_unknown_keys(params, {"xi1"}, "model.params");
        return quadratic_asian(jsonu::get_or<double>(params, "xi1", 1.0, "model.params"));
    }
    if (key == "local_vol_basket") return pricing::to_chained_system(basket_from_json(params));
    throw ConfigError("unknown model key '" + key + "'", "model.key");
}

std::vector<std::string> model_keys() {
    return {"kolmogorov_linear", "bs_asian", "quadratic_asian", "local_vol_basket"};
}

}  // namespace hypochain::models
