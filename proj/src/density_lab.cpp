#include "hypochain/density_lab.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "hypochain/errors.hpp"
#include "hypochain/parallel.hpp"
#include "hypochain/rng.hpp"

namespace hypochain::density {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

double golden_minimize(const std::function<double(double)>& f, double lo, double hi, int iters) {
    const double phi = 0.61803398874989484820;
    double a = lo, b = hi;
    double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int i = 0; i < iters; ++i) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = f(x2);
        }
    }
    return 0.5 * (a + b);
}
}  // namespace

DensityEstimate::DensityEstimate(Mat chi_samples, Vec bandwidth, double t, int n, int d)
    : samples_(std::move(chi_samples)), h_(std::move(bandwidth)), t_(t), n_(n), d_(d) {
    if (samples_.rows() < 1) throw InsufficientDataError("empty sample set");
    if (h_.size() != samples_.cols()) throw Error("bandwidth dimension mismatch");
    if (h_.minCoeff() <= 0.0) throw Error("bandwidth must be positive");
    norm_const_ = std::pow(kTwoPi, -0.5 * h_.size()) / h_.prod();
}

double DensityEstimate::eval(const Vec& z) const {
    if (!z.allFinite()) throw NumericError("non-finite evaluation point");
    double acc = 0.0;
    for (Eigen::Index k = 0; k < samples_.rows(); ++k) {
        const double q = ((z - samples_.row(k).transpose()).cwiseQuotient(h_)).squaredNorm();
        acc += std::exp(-0.5 * q);
    }
    return norm_const_ * acc / samples_.rows();
}

double DensityEstimate::eval_std_error(const Vec& z) const {
    double acc = 0.0, acc2 = 0.0;
    for (Eigen::Index k = 0; k < samples_.rows(); ++k) {
        const double q = ((z - samples_.row(k).transpose()).cwiseQuotient(h_)).squaredNorm();
        const double w = std::exp(-0.5 * q);
        acc += w;
        acc2 += w * w;
    }
    const double nsamp = static_cast<double>(samples_.rows());
    const double mean = acc / nsamp;
    const double var = std::max(0.0, acc2 / nsamp - mean * mean);
    return norm_const_ * std::sqrt(var / nsamp);
}

Vec DensityEstimate::grad(const Vec& z) const {
    Vec acc = Vec::Zero(z.size());
    for (Eigen::Index k = 0; k < samples_.rows(); ++k) {
        Vec u = (z - samples_.row(k).transpose()).cwiseQuotient(h_);
        acc += std::exp(-0.5 * u.squaredNorm()) * (-u.cwiseQuotient(h_));
    }
    return norm_const_ * acc / samples_.rows();
}

Vec DensityEstimate::grad_std_error(const Vec& z) const {
    Vec acc = Vec::Zero(z.size()), acc2 = Vec::Zero(z.size());
    for (Eigen::Index k = 0; k < samples_.rows(); ++k) {
        Vec u = (z - samples_.row(k).transpose()).cwiseQuotient(h_);
        Vec g = std::exp(-0.5 * u.squaredNorm()) * (-u.cwiseQuotient(h_));
        acc += g;
        acc2 += g.cwiseProduct(g);
    }
    const double nsamp = static_cast<double>(samples_.rows());
    Vec mean = acc / nsamp;
    Vec var = (acc2 / nsamp - mean.cwiseProduct(mean)).cwiseMax(0.0);
    return norm_const_ * (var / nsamp).cwiseSqrt();
}

Mat DensityEstimate::hess(const Vec& z) const {
    const Eigen::Index dim = z.size();
    Mat acc = Mat::Zero(dim, dim);
    Vec inv_h2 = h_.cwiseProduct(h_).cwiseInverse();
    for (Eigen::Index k = 0; k < samples_.rows(); ++k) {
        Vec u = (z - samples_.row(k).transpose()).cwiseQuotient(h_);
        Vec s = u.cwiseQuotient(h_);
        const double w = std::exp(-0.5 * u.squaredNorm());
        acc += w * (s * s.transpose() - Mat(inv_h2.asDiagonal()));
    }
    return norm_const_ * acc / samples_.rows();
}

double DensityEstimate::eval_x(const Vec& y, const Vec& theta_t) const {
    ScalingMatrix scaling(t_, n_, d_);
    const Vec z = scaling.apply_inverse(y - theta_t);
    return eval(z) / scaling.determinant();
}

double DensityEstimate::integral_mc(long points, std::uint64_t seed) const {
    const Eigen::Index dim = samples_.cols();
    const Vec mean = samples_.colwise().mean();
    Mat centered = samples_.rowwise() - mean.transpose();
    Mat cov = (centered.transpose() * centered) / double(samples_.rows() - 1);
    cov *= 1.69;  // inflate the proposal so the kernel tails are covered
    Eigen::LLT<Mat> llt(cov);
    if (llt.info() != Eigen::Success) throw NumericError("degenerate sample covariance");
    const Mat l = llt.matrixL();
    double log_det = 0.0;
    for (Eigen::Index k = 0; k < dim; ++k) log_det += std::log(l(k, k));
    const double q_norm = std::exp(-log_det) * std::pow(kTwoPi, -0.5 * dim);

    std::vector<double> partial(static_cast<size_t>(points));
    parallel_for(points, 0, [&](long begin, long end, int) {
        for (long m = begin; m < end; ++m) {
            rng::Stream stream = rng::make_stream(seed, static_cast<std::uint64_t>(m));
            Vec zstd(dim);
            for (Eigen::Index k = 0; k < dim; ++k) zstd[k] = stream.gaussian();
            Vec x = mean + l * zstd;
            const double q = q_norm * std::exp(-0.5 * zstd.squaredNorm());
            partial[static_cast<size_t>(m)] = eval(x) / q;
        }
    });
    double acc = 0.0;
    for (double v : partial) acc += v;
    return acc / points;
}

long DensityEstimate::effective_count(const Vec& z, double radius) const {
    long count = 0;
    for (Eigen::Index k = 0; k < samples_.rows(); ++k) {
        const double q = ((z - samples_.row(k).transpose()).cwiseQuotient(h_)).norm();
        if (q <= radius) ++count;
    }
    return count;
}

DensityEstimate estimate_density(const mc::SampleBatch& batch, const Vec& theta_t, double t,
                                 double bandwidth_scale, std::optional<Vec> bandwidth_override) {
    if (t <= 0.0) throw Error("estimate_density needs t > 0");
    ScalingMatrix scaling(t, batch.n, batch.d);
    Mat chi = rescale(scaling, theta_t, batch.valid(batch.terminal));

    Vec h;
    if (bandwidth_override) {
        h = *bandwidth_override;
    } else {
        const Eigen::Index dim = chi.cols();
        const double nsamp = static_cast<double>(chi.rows());
        const double factor =
            std::pow(4.0 / ((dim + 2.0) * nsamp), 1.0 / (dim + 4.0)) * bandwidth_scale;
        Vec mean = chi.colwise().mean();
        Vec sd(dim);
        for (Eigen::Index c = 0; c < dim; ++c)
            sd[c] = std::sqrt((chi.col(c).array() - mean[c]).square().sum() / (nsamp - 1.0));
        h = factor * sd;
    }
    return DensityEstimate(std::move(chi), std::move(h), t, batch.n, batch.d);
}

namespace {
TailCurve survival_curve(std::vector<double> stats, const Vec& levels, int block, double t) {
    std::sort(stats.begin(), stats.end());
    const double nsamp = static_cast<double>(stats.size());
    TailCurve curve;
    curve.levels = levels;
    curve.survival.resize(levels.size());
    curve.wilson_low.resize(levels.size());
    curve.wilson_high.resize(levels.size());
    curve.paths = static_cast<long>(stats.size());
    curve.block = block;
    curve.t = t;
    constexpr double z = 1.959963984540054;  // 95%
    for (Eigen::Index i = 0; i < levels.size(); ++i) {
        auto it = std::lower_bound(stats.begin(), stats.end(), levels[i]);
        const double count = static_cast<double>(stats.end() - it);
        const double p = count / nsamp;
        curve.survival[i] = p;
        const double denom = 1.0 + z * z / nsamp;
        const double center = p + z * z / (2.0 * nsamp);
        const double spread = z * std::sqrt(p * (1.0 - p) / nsamp + z * z / (4.0 * nsamp * nsamp));
        curve.wilson_low[i] = std::max(0.0, (center - spread) / denom);
        curve.wilson_high[i] = std::min(1.0, (center + spread) / denom);
    }
    return curve;
}

void check_levels(const Vec& levels) {
    for (Eigen::Index i = 0; i < levels.size(); ++i) {
        if (levels[i] < 0.0) throw Error("tail levels must be nonnegative");
        if (i > 0 && levels[i] <= levels[i - 1]) throw Error("tail levels must increase");
    }
}
}  // namespace

TailCurve tail_curve(const mc::SampleBatch& batch, const Vec& theta_t, double t,
                     const Vec& levels) {
    check_levels(levels);
    ScalingMatrix scaling(t, batch.n, batch.d);
    Mat chi = rescale(scaling, theta_t, batch.valid(batch.terminal));
    std::vector<double> stats(static_cast<size_t>(chi.rows()));
    for (Eigen::Index r = 0; r < chi.rows(); ++r) stats[static_cast<size_t>(r)] = chi.row(r).norm();
    return survival_curve(std::move(stats), levels, 0, t);
}

TailCurve tail_curve_block(const mc::SampleBatch& batch, int j, double t, const Vec& levels) {
    check_levels(levels);
    if (batch.sup_tail.size() == 0)
        throw Error("per-level tail curve needs sup recording enabled");
    if (j < 1 || j > batch.n) throw Error("tail block out of range");
    const double scale = std::pow(t, 0.5 - j);
    Mat sup = batch.valid(batch.sup_tail);
    std::vector<double> stats(static_cast<size_t>(sup.rows()));
    for (Eigen::Index r = 0; r < sup.rows(); ++r)
        stats[static_cast<size_t>(r)] = scale * sup(r, j - 1);
    return survival_curve(std::move(stats), levels, j, t);
}

const char* to_string(EnvelopeRegime r) {
    switch (r) {
        case EnvelopeRegime::Polynomial: return "polynomial";
        case EnvelopeRegime::Gaussian: return "gaussian";
        default: return "lognormal";
    }
}

EnvelopeFit fit_envelope(const TailCurve& curve, EnvelopeRegime regime, double slack) {
    if (slack <= 0.0) slack = regime == EnvelopeRegime::Polynomial ? 7.0 : 4.5;
    std::vector<double> levels, logs;
    for (Eigen::Index i = 0; i < curve.levels.size(); ++i) {
        if (curve.survival[i] > 0.0 && curve.levels[i] > 0.0) {
            levels.push_back(curve.levels[i]);
            logs.push_back(std::log(curve.survival[i]));
        }
    }
    if (levels.size() < 8)
        throw InsufficientDataError("envelope fit needs >= 8 levels with nonzero counts");

    EnvelopeFit fit;
    fit.regime = regime;
    fit.slack = slack;
    const double t = curve.t;

    auto model_log = [&](double c, double p, double a) -> double {
        switch (regime) {
            case EnvelopeRegime::Polynomial: return std::log(c) - std::log1p(std::pow(a, p));
            case EnvelopeRegime::Gaussian: return std::log(c) - a * a / c;
            default: {
                const double la = std::log(a * std::sqrt(t));
                return std::log(c) - la * la / (c * t);
            }
        }
    };
    auto sse_for = [&](double c, double p) {
        double acc = 0.0;
        for (size_t k = 0; k < levels.size(); ++k) {
            const double r = logs[k] - model_log(c, p, levels[k]);
            acc += r * r;
        }
        return acc;
    };

    if (regime == EnvelopeRegime::Polynomial) {
        // closed-form C for fixed p, coarse grid then golden refinement on log p
        auto c_for_p = [&](double p) {
            double mean = 0.0;
            for (size_t k = 0; k < levels.size(); ++k)
                mean += logs[k] + std::log1p(std::pow(levels[k], p));
            return std::exp(mean / levels.size());
        };
        double best_p = 2.01, best = 1e300;
        for (double lp = std::log(2.01); lp <= std::log(64.0); lp += 0.05) {
            const double p = std::exp(lp);
            const double sse = sse_for(c_for_p(p), p);
            if (sse < best) {
                best = sse;
                best_p = p;
            }
        }
        const double lp = golden_minimize(
            [&](double l) {
                const double p = std::exp(l);
                return sse_for(c_for_p(p), p);
            },
            std::log(best_p) - 0.1, std::log(best_p) + 0.1, 60);
        fit.p = std::exp(lp);
        fit.C = c_for_p(fit.p);
    } else {
        const double lc = golden_minimize(
            [&](double l) { return sse_for(std::exp(l), 0.0); }, std::log(1e-8), std::log(1e8),
            200);
        fit.C = std::exp(lc);
    }

    fit.envelope.resize(curve.levels.size());
    for (Eigen::Index i = 0; i < curve.levels.size(); ++i)
        fit.envelope[i] = curve.levels[i] > 0.0
                              ? std::exp(model_log(fit.C, fit.p, curve.levels[i]))
                              : 1.0;

    // knee: first level from which the slacked envelope dominates
    const Eigen::Index m = curve.levels.size();
    fit.knee_index = -1;
    for (Eigen::Index i = 0; i < m; ++i) {
        if (curve.survival[i] <= slack * fit.envelope[i]) {
            fit.knee_index = static_cast<int>(i);
            break;
        }
    }
    if (fit.knee_index >= 0 && m - fit.knee_index >= 3) {
        fit.knee_level = curve.levels[fit.knee_index];
        fit.pass = true;
        for (Eigen::Index i = fit.knee_index; i < m; ++i) {
            if (curve.survival[i] > 0.0)
                fit.max_exceedance_log = std::max(
                    fit.max_exceedance_log, std::log(curve.survival[i] / fit.envelope[i]));
            if (curve.survival[i] > slack * fit.envelope[i]) fit.pass = false;
        }
    }
    return fit;
}

SlopeFit fit_loglog_slope(const Vec& x, const Vec& y) {
    const Eigen::Index m = x.size();
    if (m < 2 || y.size() != m) throw Error("slope fit needs >= 2 matching points");
    const double xbar = x.mean(), ybar = y.mean();
    const double sxx = (x.array() - xbar).square().sum();
    const double sxy = ((x.array() - xbar) * (y.array() - ybar)).sum();
    SlopeFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = ybar - fit.slope * xbar;
    if (m > 2) {
        const double sse = (y.array() - fit.intercept - fit.slope * x.array()).square().sum();
        fit.std_error = std::sqrt(sse / ((m - 2) * sxx));
    }
    return fit;
}

namespace {
void check_decade(const std::vector<double>& t_grid) {
    if (t_grid.size() < 3) throw Error("t grid needs >= 3 points");
    const auto [lo, hi] = std::minmax_element(t_grid.begin(), t_grid.end());
    if (*hi / *lo < 10.0 - 1e-9) throw Error("t grid must span at least one decade");
}
}  // namespace

SlopeFit moment_slope(const ChainedSystem& sys, int j, double p, const std::vector<double>& t_grid,
                      const mc::SimConfig& base_cfg) {
    check_decade(t_grid);
    if (j < 1 || j > sys.n) throw Error("moment_slope block out of range");
    Vec xs(t_grid.size()), ys(t_grid.size());
    for (size_t i = 0; i < t_grid.size(); ++i) {
        mc::SimConfig cfg = base_cfg;
        cfg.t = t_grid[i];
        cfg.seed = rng::derive_seed(base_cfg.seed, i);
        mc::SampleBatch batch = mc::simulate_paths(sys, cfg);
        Vec theta = solve_theta(sys, cfg.t, std::max(64, cfg.steps)).terminal();
        Mat dev = batch.terminal.rowwise() - theta.transpose();
        xs[i] = std::log(cfg.t);
        ys[i] = std::log(mc::stacked_block_norm(batch, dev, p, j, sys.n));
    }
    return fit_loglog_slope(xs, ys);
}

ResidualScan residual_scan(const ChainedSystem& sys, const limits::LimitModel& lim,
                           const std::vector<double>& t_grid, double p,
                           const mc::SimConfig& base_cfg) {
    check_decade(t_grid);
    ResidualScan scan;
    scan.t_grid = t_grid;
    scan.residual_norms.resize(t_grid.size(), sys.n);
    scan.deviation_norms.resize(t_grid.size(), sys.n);
    Vec xs(t_grid.size());
    for (size_t i = 0; i < t_grid.size(); ++i) {
        mc::SimConfig cfg = base_cfg;
        cfg.t = t_grid[i];
        cfg.seed = rng::derive_seed(base_cfg.seed, i);
        mc::SampleBatch batch = mc::simulate_joint_n(sys, cfg);
        Vec theta = solve_theta(sys, cfg.t, std::max(64, cfg.steps)).terminal();
        Mat r = mc::residuals(batch, lim.A(), theta);
        Mat dev = batch.terminal.rowwise() - theta.transpose();
        scan.residual_norms.row(i) = mc::block_norms(batch, r, p);
        scan.deviation_norms.row(i) = mc::block_norms(batch, dev, p);
        const double r_all = mc::stacked_block_norm(batch, r, p, 1, sys.n);
        const double dev_all = mc::stacked_block_norm(batch, dev, p, 1, sys.n);
        if (dev_all > 0.0)
            scan.max_relative_residual = std::max(scan.max_relative_residual, r_all / dev_all);
        xs[i] = std::log(cfg.t);
    }
    scan.fits.reserve(sys.n);
    for (int j = 0; j < sys.n; ++j) {
        Vec ys = scan.residual_norms.col(j).array().max(1e-300).log();
        scan.fits.push_back(fit_loglog_slope(xs, ys));
    }
    return scan;
}

std::vector<ConvergenceRow> convergence_experiment(const ChainedSystem& sys,
                                                   const limits::LimitModel& lim, const Vec& ybar,
                                                   const std::vector<double>& t_grid,
                                                   const mc::SimConfig& base_cfg,
                                                   double bandwidth_scale) {
    if (!ybar.allFinite()) throw NumericError("non-finite ybar");
    std::vector<ConvergenceRow> rows;
    rows.reserve(t_grid.size());
    const double limit = lim.density(ybar);
    for (size_t i = 0; i < t_grid.size(); ++i) {
        mc::SimConfig cfg = base_cfg;
        cfg.t = t_grid[i];
        cfg.seed = rng::derive_seed(base_cfg.seed, i);
        mc::SampleBatch batch = mc::simulate_paths(sys, cfg);
        Vec theta = solve_theta(sys, cfg.t, std::max(64, cfg.steps)).terminal();
        DensityEstimate kde = estimate_density(batch, theta, cfg.t, bandwidth_scale);
        ConvergenceRow row;
        row.t = cfg.t;
        row.estimate = kde.eval(ybar);
        row.limit = limit;
        row.rel_error = std::abs(row.estimate - limit) / limit;
        row.insufficient_tail = kde.effective_count(ybar) < 50;
        rows.push_back(row);
    }
    return rows;
}

std::vector<DerivativeRow> gradient_hessian_convergence(const ChainedSystem& sys,
                                                        const limits::LimitModel& lim,
                                                        const Vec& ybar,
                                                        const std::vector<double>& t_grid,
                                                        const mc::SimConfig& base_cfg,
                                                        double bandwidth_scale) {
    std::vector<DerivativeRow> rows;
    rows.reserve(t_grid.size());
    const Vec grad_limit = lim.gradient(ybar);
    const Mat hess_limit = lim.hessian(ybar);
    for (size_t i = 0; i < t_grid.size(); ++i) {
        mc::SimConfig cfg = base_cfg;
        cfg.t = t_grid[i];
        cfg.seed = rng::derive_seed(base_cfg.seed, i);
        mc::SampleBatch batch = mc::simulate_paths(sys, cfg);
        Vec theta = solve_theta(sys, cfg.t, std::max(64, cfg.steps)).terminal();
        DensityEstimate kde = estimate_density(batch, theta, cfg.t, bandwidth_scale);

        DerivativeRow row;
        row.t = cfg.t;
        row.grad_estimate = kde.grad(ybar);
        row.grad_limit = grad_limit;
        row.hess_estimate = kde.hess(ybar);
        row.hess_limit = hess_limit;
        Vec se = kde.grad_std_error(ybar);
        row.grad_max_sigmas = 0.0;
        for (Eigen::Index k = 0; k < se.size(); ++k)
            row.grad_max_sigmas = std::max(
                row.grad_max_sigmas,
                std::abs(row.grad_estimate[k] - grad_limit[k]) / std::max(se[k], 1e-300));
        const double gl = grad_limit.norm();
        row.grad_rel_error = gl > 1e-12 ? (row.grad_estimate - grad_limit).norm() / gl : 0.0;
        row.hess_rel_error = (row.hess_estimate - hess_limit).norm() / hess_limit.norm();
        if (gl > 1e-12)
            row.gradient_sign_match = row.grad_estimate.dot(grad_limit) > 0.0 ? 1 : -1;
        rows.push_back(row);
    }
    return rows;
}

Mat expm(const Mat& m) {
    const double norm = m.cwiseAbs().rowwise().sum().maxCoeff();
    int squarings = 0;
    Mat a = m;
    if (norm > 0.5) {
        squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
        a /= std::pow(2.0, squarings);
    }
    Mat result = Mat::Identity(m.rows(), m.cols());
    Mat term = result;
    for (int k = 1; k <= 18; ++k) {
        term = term * a / k;
        result += term;
    }
    for (int s = 0; s < squarings; ++s) result = result * result;
    return result;
}

Mat linear_flow_covariance(const ChainedSystem::LinearInfo& info, double t) {
    const int panels = 256;  // Simpson; integrand is polynomial-like in u
    const double du = t / panels;
    const auto node = [&](int k) {
        Mat phi = expm(info.flow * (k * du));
        Mat g = phi * info.sigma_bar;
        return Mat(g * g.transpose());
    };
    Mat acc = node(0) + node(panels);
    for (int k = 1; k < panels; ++k) acc += (k % 2 == 1 ? 4.0 : 2.0) * node(k);
    return (du / 3.0) * acc;
}

double linear_log_density(const ChainedSystem& sys, double t, const Vec& y) {
    if (!sys.linear)
        throw ModelError("unsupported model: exact density needs an exactly linear system");
    const Vec theta = solve_theta(sys, t, 2048).terminal();
    const Mat cov = linear_flow_covariance(*sys.linear, t);
    Eigen::LLT<Mat> llt(cov);
    if (llt.info() != Eigen::Success)
        throw NumericError("linear-flow covariance is numerically singular");
    double log_det = 0.0;
    for (Eigen::Index k = 0; k < cov.rows(); ++k) log_det += 2.0 * std::log(llt.matrixLLT()(k, k));
    const Vec diff = y - theta;
    const double quad = diff.dot(llt.solve(diff));
    return -0.5 * quad - 0.5 * log_det - 0.5 * cov.rows() * std::log(kTwoPi);
}

DiagonalDecayResult diagonal_decay(const ChainedSystem& sys, const std::vector<double>& t_grid) {
    if (!sys.linear)
        throw ModelError("unsupported model: diagonal decay needs an exactly linear system");
    DiagonalDecayResult result;
    for (int j = 2; j <= sys.n; ++j)
        if (sys.drift[j - 1].eval(0.0, sys.xi).norm() > 1e-12) result.j = j;
    if (result.j == 0) return result;  // hypothesis fails: not applicable
    result.applicable = true;
    result.t_grid = t_grid;
    result.upper_bound = -std::numeric_limits<double>::infinity();
    for (double t : t_grid) {
        const double v = std::pow(t, 2.0 * result.j - 3.0) * linear_log_density(sys, t, sys.xi);
        result.scaled_log_density.push_back(v);
        result.upper_bound = std::max(result.upper_bound, v);
    }
    return result;
}

}  // namespace hypochain::density
