#include "hypochain/chained_system.hpp"

#include <Eigen/SVD>
#include <cmath>

#include "hypochain/errors.hpp"
#include "hypochain/rng.hpp"

namespace hypochain {

const char* to_string(HypothesisFamily f) {
    switch (f) {
        case HypothesisFamily::H2: return "H2";
        case HypothesisFamily::H2Prime: return "H2'";
        case HypothesisFamily::H2DoublePrime: return "H2''";
        case HypothesisFamily::H2PrimeLocalized: return "H2' (after localization)";
        default: return "unspecified";
    }
}

Vec ChainedSystem::drift_value(double t, const Vec& x) const {
    Vec b(dim());
    for (int j = 0; j < n; ++j) b.segment(j * d, d) = drift[j].eval(t, x);
    return b;
}

namespace {

void check_dimensions(const ChainedSystem& sys) {
    if (sys.n < 1 || sys.d < 1) throw ModelError("chained system needs n >= 1, d >= 1");
    if (sys.xi.size() != sys.dim())
        throw ModelError("initial point has dimension " + std::to_string(sys.xi.size()) +
                         ", expected " + std::to_string(sys.dim()));
    if (static_cast<int>(sys.drift.size()) != sys.n)
        throw ModelError("expected " + std::to_string(sys.n) + " drift blocks, got " +
                         std::to_string(sys.drift.size()));
    for (int j = 0; j < sys.n; ++j) {
        Vec v = sys.drift[j].eval(0.0, sys.xi);
        if (v.size() != sys.d)
            throw ModelError("drift block " + std::to_string(j + 1) + " returns dimension " +
                             std::to_string(v.size()) + ", expected " + std::to_string(sys.d));
    }
    Mat s = sys.sigma.eval(0.0, sys.xi);
    if (s.rows() != sys.d || s.cols() != sys.d)
        throw ModelError("sigma must be d x d");
}

// Max |entry| of all first-derivative blocks of B and sigma at x.
double derivative_sup(const ChainedSystem& sys, const Vec& x) {
    double sup = 0.0;
    for (int j = 1; j <= sys.n; ++j)
        for (int l = 1; l <= sys.n; ++l) {
            Mat jac = jacobian_block(sys.drift[j - 1], l, 0.0, x, sys.d);
            sup = std::max(sup, jac.cwiseAbs().maxCoeff());
        }
    for (int i = 1; i <= sys.d; ++i)
        for (int l = 1; l <= sys.n; ++l) {
            Mat jac = sigma_column_jacobian(sys.sigma, l, i, 0.0, x, sys.d);
            sup = std::max(sup, jac.cwiseAbs().maxCoeff());
        }
    return sup;
}

double sigma_sup(const ChainedSystem& sys, const Vec& x) {
    return sys.sigma.eval(0.0, x).cwiseAbs().maxCoeff();
}

}  // namespace

std::vector<Vec> probe_points(const ChainedSystem& sys, const ValidationOptions& opts) {
    double half = opts.box_halfwidth;
    if (half <= 0.0) half = 1.0 + 0.5 * sys.xi.cwiseAbs().maxCoeff();
    rng::Stream stream = rng::make_stream(opts.seed, 0);
    std::vector<Vec> probes;
    probes.reserve(opts.probes);
    for (int p = 0; p < opts.probes; ++p) {
        Vec x(sys.dim());
        for (int k = 0; k < sys.dim(); ++k)
            x[k] = sys.xi[k] + half * (2.0 * stream.uniform() - 1.0);
        probes.push_back(std::move(x));
    }
    return probes;
}

ValidationReport validate_structure(const ChainedSystem& sys, const std::vector<Vec>& probes) {
    if (probes.empty()) throw ModelError("validate_structure needs at least one probe point");
    check_dimensions(sys);

    ValidationReport report;
    constexpr double kTol = 1e-10;

    // Forbidden dependence: for j > 1, B_j must not read x_1..x_{j-2}.
    for (int j = 2; j <= sys.n; ++j) {
        for (int l = 1; l <= j - 2; ++l) {
            double worst = 0.0;
            for (const Vec& x : probes) {
                Mat jac = jacobian_block(sys.drift[j - 1], l, 0.0, x, sys.d);
                worst = std::max(worst, jac.cwiseAbs().maxCoeff());
            }
            if (worst > kTol) {
                report.structure_ok = false;
                report.warnings.push_back(
                    {"forbidden_dependence", j, l,
                     "B_" + std::to_string(j) + " depends on x_" + std::to_string(l) +
                         " (j=" + std::to_string(j) + ", l=" + std::to_string(l) +
                         ", |dB|=" + std::to_string(worst) + ")"});
            }
        }
    }

    for (const Vec& x : probes)
        report.h2_box_bound = std::max(report.h2_box_bound, derivative_sup(sys, x));

    // Growth probing: compare field magnitudes on the box against a box of
    // twice the halfwidth. The H2-family constants are global, so this can
    // only warn, never fail.
    double sig_near = 0.0, sig_far = 0.0, der_near = 0.0, der_far = 0.0;
    for (const Vec& x : probes) {
        Vec far = sys.xi + 2.0 * (x - sys.xi);
        sig_near = std::max(sig_near, sigma_sup(sys, x));
        sig_far = std::max(sig_far, sigma_sup(sys, far));
        der_near = std::max(der_near, derivative_sup(sys, x));
        der_far = std::max(der_far, derivative_sup(sys, far));
    }
    if (sig_far > 1.2 * sig_near && sig_near > 0.0)
        report.warnings.push_back({"sigma_growth", 0, 0,
                                   "sigma magnitude grows with the sampled box (" +
                                       std::to_string(sig_near) + " -> " + std::to_string(sig_far) +
                                       "); (H2') bound unlikely, family declared: " +
                                       std::string(to_string(sys.family))});
    if (der_far > 1.2 * der_near && der_near > 0.0)
        report.warnings.push_back({"derivative_growth", 0, 0,
                                   "coefficient derivatives grow with the sampled box (" +
                                       std::to_string(der_near) + " -> " + std::to_string(der_far) +
                                       ")"});

    report.h1_lambda = check_H1(sys);
    if (report.h1_lambda < kH1DegenerateThreshold)
        report.warnings.push_back({"h1_degenerate", 0, 0,
                                   "H1 product is numerically singular (lambda=" +
                                       std::to_string(report.h1_lambda) + ")"});
    return report;
}

ValidationReport validate_structure(const ChainedSystem& sys, const ValidationOptions& opts) {
    return validate_structure(sys, probe_points(sys, opts));
}

double check_H1(const ChainedSystem& sys) {
    check_dimensions(sys);
    Mat product = sys.sigma.eval(0.0, sys.xi);
    for (int j = 2; j <= sys.n; ++j)
        product = jacobian_block(sys.drift[j - 1], j - 1, 0.0, sys.xi, sys.d) * product;
    Eigen::JacobiSVD<Mat> svd(product);
    return svd.singularValues().minCoeff();
}

Vec ito_drift(const ChainedSystem& sys, double t, const Vec& x) {
    Vec b = sys.drift_value(t, x);
    if (sys.sigma.ito_correction) {
        b.head(sys.d) += sys.sigma.ito_correction(t, x);
        return b;
    }
    Mat sig = sys.sigma.eval(t, x);
    for (int i = 1; i <= sys.d; ++i) {
        Mat jac = sigma_column_jacobian(sys.sigma, 1, i, t, x, sys.d);
        b.head(sys.d) += 0.5 * jac * sig.col(i - 1);
    }
    return b;
}

}  // namespace hypochain
