#include "hypochain/limit_gaussian.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

#include "hypochain/errors.hpp"

namespace hypochain::limits {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

double factorial(int k) {
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
}
}  // namespace

Mat build_A(const ChainedSystem& sys) {
    const double lambda = check_H1(sys);
    if (lambda < kH1DegenerateThreshold)
        throw ModelError("degenerate model: H1 product has smallest singular value " +
                         std::to_string(lambda));
    const int d = sys.d;
    Mat a = Mat::Zero(sys.dim(), sys.dim());
    Mat block = sys.sigma.eval(0.0, sys.xi);
    a.topLeftCorner(d, d) = block;
    for (int j = 2; j <= sys.n; ++j) {
        block = jacobian_block(sys.drift[j - 1], j - 1, 0.0, sys.xi, d) * block;
        a.block((j - 1) * d, (j - 1) * d, d, d) = block;
    }
    return a;
}

Mat build_Q(int n, int d) {
    if (n < 1 || d < 1) throw Error("build_Q needs n >= 1, d >= 1");
    Mat q = Mat::Zero(n * d, n * d);
    for (int l = 1; l <= n; ++l)
        for (int j = 1; j <= n; ++j) {
            const double value = 1.0 / ((l + j - 1) * factorial(l - 1) * factorial(j - 1));
            q.block((l - 1) * d, (j - 1) * d, d, d) = value * Mat::Identity(d, d);
        }
    // positive definiteness certified by the factorization succeeding
    Eigen::LLT<Mat> llt(q);
    if (llt.info() != Eigen::Success) throw NumericError("Q is not positive definite");
    return q;
}

double q_constant(int n) {
    if (n < 1) throw Error("q_constant needs n >= 1");
    double num = 1.0, den = 1.0;
    for (int j = 1; j <= n - 1; ++j) num *= factorial(j);
    for (int j = 1; j <= 2 * n - 1; ++j) den *= factorial(j);
    return std::pow(kTwoPi, 0.5 * n) * num / std::sqrt(den);
}

double q_constant_det_route(int n, int d) {
    if (n < 1 || d < 1) throw Error("q_constant_det_route needs n >= 1, d >= 1");
    // det of the nd x nd Q is (det of the scalar n x n core)^d, so the
    // exponent 1/(2d) cancels d. The Hilbert-like core is ill-conditioned;
    // extended precision keeps the route accurate through n ~ 8.
    std::vector<long double> q(static_cast<size_t>(n) * n);
    for (int l = 1; l <= n; ++l)
        for (int j = 1; j <= n; ++j) {
            long double denom = l + j - 1;
            for (int i = 2; i <= l - 1; ++i) denom *= i;
            for (int i = 2; i <= j - 1; ++i) denom *= i;
            q[(l - 1) * n + (j - 1)] = 1.0L / denom;
        }
    long double log_det = 0.0L;
    for (int k = 0; k < n; ++k) {  // Cholesky, lower triangle in place
        long double pivot = q[k * n + k];
        for (int m = 0; m < k; ++m) pivot -= q[k * n + m] * q[k * n + m];
        if (pivot <= 0.0L) throw NumericError("Q is not positive definite");
        const long double root = std::sqrt(pivot);
        q[k * n + k] = root;
        log_det += 2.0L * std::log(root);
        for (int r = k + 1; r < n; ++r) {
            long double value = q[r * n + k];
            for (int m = 0; m < k; ++m) value -= q[r * n + m] * q[k * n + m];
            q[r * n + k] = value / root;
        }
    }
    return std::pow(kTwoPi, 0.5 * n) *
           static_cast<double>(std::exp(log_det / 2.0L));
}

LimitModel LimitModel::build(const ChainedSystem& sys) {
    return from_parts(sys.n, sys.d, build_A(sys));
}

LimitModel LimitModel::from_parts(int n, int d, Mat a) {
    LimitModel m;
    m.n_ = n;
    m.d_ = d;
    m.a_ = std::move(a);
    m.q_ = build_Q(n, d);
    m.cov_ = m.a_ * m.q_ * m.a_.transpose();
    m.qn_ = q_constant(n);
    m.det_a_abs_ = std::abs(m.a_.determinant());
    m.cov_llt_.compute(m.cov_);
    if (m.cov_llt_.info() != Eigen::Success)
        throw NumericError("A Q A^T factorization failed (degenerate A?)");
    return m;
}

double LimitModel::density(const Vec& ybar) const {
    if (!ybar.allFinite()) throw NumericError("non-finite evaluation point");
    const double quad = ybar.dot(cov_llt_.solve(ybar));
    return std::exp(-0.5 * quad) / (std::pow(qn_, d_) * det_a_abs_);
}

Vec LimitModel::gradient(const Vec& ybar) const {
    return -density(ybar) * cov_llt_.solve(ybar);
}

Mat LimitModel::hessian(const Vec& ybar) const {
    const Vec s = cov_llt_.solve(ybar);
    const Mat inv = cov_llt_.solve(Mat::Identity(cov_.rows(), cov_.cols()));
    return density(ybar) * (s * s.transpose() - inv);
}

namespace {
std::vector<double> row_major(const Mat& m) {
    std::vector<double> out;
    out.reserve(m.size());
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
    return out;
}
}  // namespace

nlohmann::json LimitModel::to_json() const {
    return nlohmann::json{{"n", n_},
                          {"d", d_},
                          {"q_n", qn_},
                          {"det_a_abs", det_a_abs_},
                          {"A", row_major(a_)},
                          {"Q", row_major(q_)},
                          {"covariance", row_major(cov_)}};
}

namespace {

using Field = std::function<Vec(const Vec&)>;

// Richardson-extrapolated central-difference Jacobian. The step grows with
// the nesting depth: differentiating a depth-k bracket sees that bracket's
// own finite-difference noise, so the optimal step is larger.
Mat richardson_jacobian(const Field& f, const Vec& x, double h) {
    const auto central = [&](double step) {
        Vec probe = x;
        Mat jac(x.size(), x.size());
        for (Eigen::Index k = 0; k < x.size(); ++k) {
            probe[k] = x[k] + step;
            Vec fp = f(probe);
            probe[k] = x[k] - step;
            Vec fm = f(probe);
            probe[k] = x[k];
            jac.col(k) = (fp - fm) / (2.0 * step);
        }
        return jac;
    };
    Mat coarse = central(h);
    Mat fine = central(0.5 * h);
    return (4.0 * fine - coarse) / 3.0;
}

double bracket_step(int depth) { return 1e-4 * std::pow(10.0, depth - 1); }

// [g, f] = (Jf) g - (Jg) f with Jacobians at the given nesting depth.
Field lie_bracket(Field g, Field f, int depth) {
    return [g = std::move(g), f = std::move(f), depth](const Vec& x) -> Vec {
        const double h = bracket_step(depth);
        Mat jf = richardson_jacobian(f, x, h);
        Mat jg = richardson_jacobian(g, x, h);
        return jf * g(x) - jg * f(x);
    };
}

}  // namespace

HormanderReport build_hormander_matrix(const ChainedSystem& sys) {
    const int d = sys.d;
    const int nd = sys.dim();

    Field b_field = [&sys](const Vec& x) { return sys.drift_value(0.0, x); };

    HormanderReport report;
    report.matrix.resize(nd, nd);
    for (int i = 1; i <= d; ++i) {
        Field col = [&sys, i, d, nd](const Vec& x) -> Vec {
            Vec v = Vec::Zero(nd);
            v.head(d) = sys.sigma.eval(0.0, x).col(i - 1);
            return v;
        };
        report.matrix.col(i - 1) = col(sys.xi);
        for (int l = 2; l <= sys.n; ++l) {
            col = lie_bracket(b_field, std::move(col), l - 1);
            report.matrix.col((l - 1) * d + (i - 1)) = col(sys.xi);
        }
    }

    const double total = report.matrix.norm();
    double below = 0.0;
    for (int l = 1; l <= sys.n; ++l)
        for (int j = l + 1; j <= sys.n; ++j)
            below += report.matrix.block((j - 1) * d, (l - 1) * d, d, d).squaredNorm();
    report.below_diagonal_ratio = std::sqrt(below) / std::max(total, 1e-300);
    report.triangular_ok = report.below_diagonal_ratio <= 1e-6;

    const Mat a = build_A(sys);
    for (int l = 1; l <= sys.n; ++l) {
        const double sign = (l % 2 == 1) ? 1.0 : -1.0;
        const Mat want = sign * a.block((l - 1) * d, (l - 1) * d, d, d);
        const Mat got = report.matrix.block((l - 1) * d, (l - 1) * d, d, d);
        const double mismatch = (got - want).norm() / std::max(1.0, want.norm());
        report.diagonal_mismatch = std::max(report.diagonal_mismatch, mismatch);
    }
    report.diagonal_ok = report.diagonal_mismatch <= 1e-6;
    return report;
}

}  // namespace hypochain::limits
