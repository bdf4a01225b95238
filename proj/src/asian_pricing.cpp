#include "hypochain/asian_pricing.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "hypochain/errors.hpp"
#include "hypochain/limit_gaussian.hpp"

namespace hypochain::pricing {

namespace {
constexpr double kSixPi = 18.849555921538759430775860299677;
}

void BasketSpec::validate() const {
    if (d < 1) throw ModelError("basket needs d >= 1");
    if (s0.size() != d || rates.size() != d || weights.size() != d)
        throw ModelError("basket vectors must have dimension d");
    if (rho.rows() != d || rho.cols() != d) throw ModelError("rho must be d x d");
    if ((s0.array() <= 0.0).any()) throw ModelError("initial prices must be positive");
    if (weights.norm() == 0.0) throw ModelError("weights must be nonzero");
    if ((rho - rho.transpose()).cwiseAbs().maxCoeff() > 1e-12)
        throw ModelError("invalid correlation: rho not symmetric");
    for (int i = 0; i < d; ++i)
        if (std::abs(rho(i, i) - 1.0) > 1e-12)
            throw ModelError("invalid correlation: rho diagonal must be 1");
    correlation_cholesky(rho);
    const Vec vols = local_vol.eval(0.0, s0);
    if (vols.size() != d) throw ModelError("local vol must return d components");
    if ((vols.array() <= 0.0).any())
        throw ModelError("hypoellipticity fails: Sigma_i(0, s0) must be positive");
}

BasketSpec BasketSpec::with_constant_vol(Vec s0, Vec rates, Mat rho, Vec weights, Vec vols,
                                         double maturity) {
    BasketSpec b;
    b.d = static_cast<int>(s0.size());
    b.s0 = std::move(s0);
    b.rates = std::move(rates);
    b.rho = std::move(rho);
    b.weights = std::move(weights);
    b.maturity = maturity;
    b.constant_vol = true;
    Vec v = std::move(vols);
    b.local_vol.eval = [v](double, const Vec&) { return v; };
    b.local_vol.jacobian = [dim = v.size()](double, const Vec&, int) {
        return Mat::Zero(dim, dim);
    };
    b.validate();
    return b;
}

Mat correlation_cholesky(const Mat& rho) {
    Eigen::LLT<Mat> llt(rho);
    if (llt.info() != Eigen::Success)
        throw ModelError("invalid correlation: rho is not strictly positive definite");
    return llt.matrixL();
}

Mat completion_matrix(const Vec& w) {
    const int d = static_cast<int>(w.size());
    Mat wbar = Mat::Zero(d, d);
    wbar.row(0) = w.transpose();
    int pivot = 0;
    w.cwiseAbs().maxCoeff(&pivot);
    int row = 1;
    for (int k = 0; k < d; ++k) {
        if (k == pivot) continue;
        wbar(row++, k) = 1.0;
    }
    return wbar;
}

ChainedSystem to_chained_system(const BasketSpec& basket, const Mat& wbar) {
    basket.validate();
    const int d = basket.d;
    const Mat chol = correlation_cholesky(basket.rho);

    MatrixField sigma;
    sigma.eval = [basket, chol, d](double t, const Vec& y) -> Mat {
        const Vec s = y.head(d);
        const Vec vols = basket.local_vol.eval(t, s);
        return s.cwiseProduct(vols).asDiagonal() * chol;
    };
    if (basket.constant_vol) {
        const Vec vols = basket.local_vol.eval(0.0, basket.s0);
        sigma.column_jacobian = [vols, chol, d](double, const Vec&, int l, int i) -> Mat {
            if (l != 1) return Mat::Zero(d, d);
            return Mat(vols.cwiseProduct(chol.col(i - 1)).asDiagonal());
        };
        // sum_i L_ki^2 = rho_kk = 1, so the conversion term is s_k vols_k^2 / 2
        sigma.ito_correction = [vols, d](double, const Vec& y) {
            return Vec(0.5 * y.head(d).cwiseProduct(vols.cwiseProduct(vols)));
        };
    }

    std::vector<VectorField> drift(2);
    // Stratonovich drift of block 1; the Ito correction restores diag(y1) r.
    drift[0].eval = [basket, sigma, d](double t, const Vec& y) -> Vec {
        const Vec s = y.head(d);
        Vec b = s.cwiseProduct(basket.rates);
        const Mat sig = sigma.eval(t, y);
        for (int i = 1; i <= d; ++i)
            b -= 0.5 * sigma_column_jacobian(sigma, 1, i, t, y, d) * sig.col(i - 1);
        return b;
    };
    drift[1].eval = [wbar, d](double, const Vec& y) -> Vec { return wbar * y.head(d); };
    drift[1].jacobian = [wbar, d](double, const Vec&, int l) -> Mat {
        return l == 1 ? wbar : Mat::Zero(d, d);
    };

    ChainedSystem sys;
    sys.n = 2;
    sys.d = d;
    sys.xi = Vec::Zero(2 * d);
    sys.xi.head(d) = basket.s0;
    sys.drift = std::move(drift);
    sys.sigma = std::move(sigma);
    sys.horizon = std::max(1.0, basket.maturity);
    sys.key = "local_vol_basket";
    sys.family = HypothesisFamily::H2DoublePrime;
    return sys;
}

ChainedSystem to_chained_system(const BasketSpec& basket) {
    return to_chained_system(basket, completion_matrix(basket.weights));
}

double atm_asymptotic_price(const BasketSpec& basket, double t) {
    if (t <= 0.0) throw Error("atm_asymptotic_price needs t > 0");
    basket.validate();
    const Vec vols = basket.local_vol.eval(0.0, basket.s0);
    double quad = 0.0;
    for (int i = 0; i < basket.d; ++i)
        for (int m = 0; m < basket.d; ++m)
            quad += basket.rho(i, m) * basket.weights[i] * basket.weights[m] * vols[i] * vols[m] *
                    basket.s0[i] * basket.s0[m];
    if (quad <= 0.0) return 0.0;  // degenerate basket, e.g. spread of identical assets
    return std::sqrt(t * quad / kSixPi);
}

PriceResult mc_price(const BasketSpec& basket, double t, const mc::SimConfig& cfg,
                     std::optional<double> strike, PayoffKind kind,
                     std::optional<double> discount_rate) {
    const ChainedSystem sys = to_chained_system(basket);
    mc::SimConfig run = cfg;
    run.t = t;
    const mc::SampleBatch batch = mc::simulate_paths(sys, run);

    PriceResult result;
    result.strike = strike.value_or(basket.weights.dot(basket.s0));
    double acc = 0.0, acc2 = 0.0;
    long count = 0;
    const int d = basket.d;
    for (Eigen::Index p = 0; p < batch.terminal.rows(); ++p) {
        if (batch.flagged[p]) continue;
        const double avg = batch.terminal(p, d) / t;  // w-row of the block-2 integral
        const double payoff = kind == PayoffKind::Call ? std::max(0.0, avg - result.strike)
                                                       : std::max(0.0, result.strike - avg);
        acc += payoff;
        acc2 += payoff * payoff;
        ++count;
    }
    if (count == 0) throw InsufficientDataError("all pricing paths flagged");
    result.price = acc / count;
    result.std_error = std::sqrt(std::max(0.0, acc2 / count - result.price * result.price) /
                                 static_cast<double>(count));
    result.paths_used = count;
    if (discount_rate) {
        const double df = std::exp(-*discount_rate * t);
        result.price *= df;
        result.std_error *= df;
    }
    return result;
}

LimitVariance limit_variance(const BasketSpec& basket) {
    basket.validate();
    const int d = basket.d;
    const Mat wbar = completion_matrix(basket.weights);
    const Mat chol = correlation_cholesky(basket.rho);
    const Vec vols = basket.local_vol.eval(0.0, basket.s0);
    const Mat sig0 = basket.s0.cwiseProduct(vols).asDiagonal() * chol;
    const Mat m = sig0 * sig0.transpose();

    Mat block(2 * d, 2 * d);
    block.topLeftCorner(d, d) = m;
    block.topRightCorner(d, d) = m * wbar.transpose() / 2.0;
    block.bottomLeftCorner(d, d) = wbar * m / 2.0;
    block.bottomRightCorner(d, d) = wbar * m * wbar.transpose() / 3.0;

    const ChainedSystem sys = to_chained_system(basket, wbar);
    const Mat a = limits::build_A(sys);
    const Mat generic = a * limits::build_Q(2, d) * a.transpose();

    LimitVariance out;
    out.covariance = block;
    out.route_difference = (block - generic).cwiseAbs().maxCoeff();
    out.w_variance = basket.weights.dot(m * basket.weights) / 3.0;
    return out;
}

}  // namespace hypochain::pricing
