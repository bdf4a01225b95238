#pragma once

#include <span>
#include <vector>

#include "hypochain/chained_system.hpp"

namespace hypochain {

/// Degree of scalar coordinate h (1-based): g_h = 2*floor((h-1)/d) + 1.
int degree(int h, int d, int nd_bound = 0);

/// Degree of a multi-index, g(alpha) = sum g(alpha_k); g(empty) = 0.
int degree_multi(std::span<const int> alpha, int d, int nd_bound = 0);

/// Diagonal multi-scale matrix T_t with entries t^{g_h/2}.
class ScalingMatrix {
public:
    ScalingMatrix(double t, int n, int d);

    double t() const { return t_; }
    int dim() const { return n_ * d_; }
    double entry(int h) const { return diag_[h - 1]; }  // 1-based
    const Vec& diagonal() const { return diag_; }
    double determinant() const;  // t^{n^2 d / 2}

    Vec apply(const Vec& z) const { return diag_.cwiseProduct(z); }
    Vec apply_inverse(const Vec& v) const { return v.cwiseQuotient(diag_); }

private:
    double t_;
    int n_, d_;
    Vec diag_;
};

/// Deterministic skeleton theta on a uniform grid, solved with classical RK4
/// on d theta = B(t, theta) dt. Immutable after construction.
struct ThetaPath {
    std::vector<double> times;  // 0 = t_0 < ... < t_M = t
    Mat values;                 // (M+1) x nd, row k = theta_{t_k}
    int steps = 0;
    int order = 4;

    Vec terminal() const { return values.row(values.rows() - 1); }
    /// Linear interpolation between grid points (grid hits are exact).
    Vec at_time(double t) const;
};

/// steps >= 8; 0 picks the default 1024 steps per unit time (clamped to >= 8).
ThetaPath solve_theta(const ChainedSystem& sys, double t, int steps = 0);

/// Plot-ready CSV of the skeleton: header t,theta_1..theta_nd, one row per
/// grid point.
void write_theta_csv(const ThetaPath& path, const std::string& file);

/// chi = T_t^{-1}(X_t - theta_t), rows of `samples` are X_t draws.
Mat rescale(const ScalingMatrix& scaling, const Vec& theta_t, const Mat& samples);

/// Inverse map T_t z + theta_t.
Mat unrescale(const ScalingMatrix& scaling, const Vec& theta_t, const Mat& rescaled);

}  // namespace hypochain
