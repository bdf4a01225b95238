#pragma once

#include <optional>
#include <vector>

#include "hypochain/limit_gaussian.hpp"
#include "hypochain/mc_engine.hpp"

namespace hypochain::density {

/// Gaussian-product-kernel KDE of the rescaled variable chi_t. Evaluation is
/// deterministic and safe from concurrent callers; derivative evaluations use
/// analytic kernel derivatives.
class DensityEstimate {
public:
    DensityEstimate(Mat chi_samples, Vec bandwidth, double t, int n, int d);

    double t() const { return t_; }
    long sample_count() const { return samples_.rows(); }
    const Vec& bandwidth() const { return h_; }
    bool low_sample_warning() const { return samples_.rows() < 10000; }

    /// p_chi(z).
    double eval(const Vec& z) const;
    Vec grad(const Vec& z) const;
    Mat hess(const Vec& z) const;
    /// Per-component kernel standard errors of eval/grad at z.
    double eval_std_error(const Vec& z) const;
    Vec grad_std_error(const Vec& z) const;

    /// p_t(xi, y) = t^{-n^2 d/2} p_chi(T_t^{-1}(y - theta_t)).
    double eval_x(const Vec& y, const Vec& theta_t) const;

    /// MC quadrature of the estimate against a Gaussian proposal matched to
    /// the sample moments; should be 1 up to kernel truncation.
    double integral_mc(long points, std::uint64_t seed) const;

    /// Number of samples within `radius` bandwidths of z (tail-mass guard).
    long effective_count(const Vec& z, double radius = 3.0) const;

private:
    Mat samples_;
    Vec h_;
    double t_;
    int n_, d_;
    double norm_const_;
};

/// Per-coordinate Silverman bandwidth on the rescaled samples (scale factor
/// and full override for experiments that need them).
DensityEstimate estimate_density(const mc::SampleBatch& batch, const Vec& theta_t, double t,
                                 double bandwidth_scale = 1.0,
                                 std::optional<Vec> bandwidth_override = std::nullopt);

struct TailCurve {
    Vec levels;
    Vec survival;       // empirical P(stat >= a)
    Vec wilson_low;     // 95% Wilson band
    Vec wilson_high;
    long paths = 0;
    int block = 0;      // 0 = |chi_t|, j >= 1 = rescaled sup of the tail vector X^{(j)}
    double t = 0.0;
};

/// P(|chi_t| >= a) over increasing positive levels.
TailCurve tail_curve(const mc::SampleBatch& batch, const Vec& theta_t, double t,
                     const Vec& levels);

/// Per-level variant, P(t^{1/2-j} sup_s |X^{(j)}_s - theta^{(j)}_s| >= a);
/// needs sup recording.
TailCurve tail_curve_block(const mc::SampleBatch& batch, int j, double t, const Vec& levels);

enum class EnvelopeRegime { Polynomial, Gaussian, Lognormal };

const char* to_string(EnvelopeRegime r);

struct EnvelopeFit {
    EnvelopeRegime regime = EnvelopeRegime::Gaussian;
    double C = 0.0;
    double p = 0.0;         // polynomial regime only
    double slack = 0.0;     // multiplicative domination margin actually used
    int knee_index = -1;    // first level from which the envelope dominates
    double knee_level = 0.0;
    bool pass = false;
    Vec envelope;           // envelope values on the curve's levels
    double max_exceedance_log = 0.0;  // max log(empirical/envelope) beyond the knee
};

/// Least-squares fit of the regime's envelope constant in log domain over the
/// nonzero-count levels (needs >= 8). Domination is required from the fitted
/// knee onward, within a multiplicative slack, with at least 3 levels at or
/// beyond the knee. slack = 0 picks the regime default, calibrated on
/// exact-law data: the single-constant families cross least-squares data by
/// up to ~x2.5 (gaussian/lognormal) and ~x4.5 (polynomial) even when the
/// regime is correct, while a wrong regime escapes by orders of magnitude.
EnvelopeFit fit_envelope(const TailCurve& curve, EnvelopeRegime regime, double slack = 0.0);

struct SlopeFit {
    double slope = 0.0;
    double std_error = 0.0;
    double intercept = 0.0;
};

SlopeFit fit_loglog_slope(const Vec& x, const Vec& y);

/// Slope of log (E|X^{(j)}_t - theta^{(j)}_t|^p)^{1/p} vs log t; the grid
/// must span at least one decade. X^{(j)} is the stacked tail vector.
SlopeFit moment_slope(const ChainedSystem& sys, int j, double p, const std::vector<double>& t_grid,
                      const mc::SimConfig& base_cfg);

/// Stochastic-Taylor residual experiment: per-block norms ||R^j_t||_p over a
/// t grid, their log-log slopes (the residual scaling predicts slope j), and the
/// worst residual relative to the full deviation (the exact-cancellation
/// diagnostic for linear chains).
struct ResidualScan {
    std::vector<double> t_grid;
    Mat residual_norms;   // one row per t, one column per block
    Mat deviation_norms;  // same layout, ||(X - theta)^j||_p
    std::vector<SlopeFit> fits;
    double max_relative_residual = 0.0;
};

ResidualScan residual_scan(const ChainedSystem& sys, const limits::LimitModel& lim,
                           const std::vector<double>& t_grid, double p,
                           const mc::SimConfig& base_cfg);

struct ConvergenceRow {
    double t = 0.0;
    double estimate = 0.0;  // t^{n^2 d/2} p_t(xi, y_t) = p_chi(ybar)
    double limit = 0.0;
    double rel_error = 0.0;
    bool insufficient_tail = false;
};

std::vector<ConvergenceRow> convergence_experiment(const ChainedSystem& sys,
                                                   const limits::LimitModel& lim, const Vec& ybar,
                                                   const std::vector<double>& t_grid,
                                                   const mc::SimConfig& base_cfg,
                                                   double bandwidth_scale = 1.0);

struct DerivativeRow {
    double t = 0.0;
    Vec grad_estimate, grad_limit;
    Mat hess_estimate, hess_limit;
    double grad_rel_error = 0.0;   // vs 3x kernel standard errors when limit ~ 0
    double hess_rel_error = 0.0;
    double grad_max_sigmas = 0.0;  // max componentwise |est - limit| / SE
    int gradient_sign_match = 0;   // +1: -p Sigma^{-1} z, -1: opposite, 0: undecided
};

std::vector<DerivativeRow> gradient_hessian_convergence(const ChainedSystem& sys,
                                                        const limits::LimitModel& lim,
                                                        const Vec& ybar,
                                                        const std::vector<double>& t_grid,
                                                        const mc::SimConfig& base_cfg,
                                                        double bandwidth_scale = 1.0);

/// exp(M) by scaling-and-squaring Taylor series (small matrices).
Mat expm(const Mat& m);

/// Covariance int_0^t e^{Fu} sigma_bar sigma_bar^T e^{F^T u} du of the linear
/// flow (composite Simpson).
Mat linear_flow_covariance(const ChainedSystem::LinearInfo& info, double t);

/// log p_t(xi, y) for an exactly linear system (exact Gaussian law: mean from
/// the drift ODE, covariance from the Ito isometry). Works where the density
/// is far below MC resolution.
double linear_log_density(const ChainedSystem& sys, double t, const Vec& y);

struct DiagonalDecayResult {
    bool applicable = false;  // false when B_j(0, xi) = 0 for all j >= 2
    int j = 0;                // largest j >= 2 with B_j(0, xi) != 0
    std::vector<double> t_grid;
    std::vector<double> scaled_log_density;  // t^{2j-3} log p_t(xi, xi)
    double upper_bound = 0.0;                // max of the column
};

/// Requires an exactly linear model (ChainedSystem::linear present), else
/// throws ModelError ("unsupported model").
DiagonalDecayResult diagonal_decay(const ChainedSystem& sys, const std::vector<double>& t_grid);

}  // namespace hypochain::density
