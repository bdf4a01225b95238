#pragma once

#include <Eigen/Cholesky>
#include <nlohmann/json_fwd.hpp>

#include "hypochain/chained_system.hpp"

namespace hypochain::limits {

/// Block-diagonal A with j-th block J_{x_{j-1}}B_j ... J_{x_1}B_2 sigma(0, xi).
/// Throws ModelError when the H1 product is degenerate.
Mat build_A(const ChainedSystem& sys);

/// Hilbert-type Q with block (l, j) = Id_d / ((l+j-1)(l-1)!(j-1)!).
Mat build_Q(int n, int d);

/// Normalizing constant, factorial route of the defining identity.
double q_constant(int n);

/// Same constant through (2 pi)^{n/2} (det Q)^{1/(2d)} with a Cholesky-based
/// determinant; the two routes must agree (tested).
double q_constant_det_route(int n, int d);

/// Limit objects of the short-time Gaussian: immutable, safe for concurrent
/// evaluation. Quadratic forms go through the stored Cholesky factorization,
/// never an explicit inverse.
class LimitModel {
public:
    static LimitModel build(const ChainedSystem& sys);
    static LimitModel from_parts(int n, int d, Mat A);

    int n() const { return n_; }
    int d() const { return d_; }
    const Mat& A() const { return a_; }
    const Mat& Q() const { return q_; }
    const Mat& covariance() const { return cov_; }
    double q_n() const { return qn_; }
    double det_a_abs() const { return det_a_abs_; }

    /// exp(-<(AQA^T)^{-1} y, y>/2) / (q_n^d |det A|).
    double density(const Vec& ybar) const;

    /// Gradient/Hessian of the centred limit Gaussian density:
    /// grad p(z) = -p(z) Sigma^{-1} z. Experiments report which sign
    /// convention the sampled data match.
    Vec gradient(const Vec& ybar) const;
    Mat hessian(const Vec& ybar) const;

    nlohmann::json to_json() const;

private:
    int n_ = 0, d_ = 0;
    Mat a_, q_, cov_;
    double qn_ = 0.0, det_a_abs_ = 0.0;
    Eigen::LLT<Mat> cov_llt_;
};

struct HormanderReport {
    Mat matrix;  // columns: sigma_bar, [B,sigma^i], [B,[B,sigma^i]], ... at (0, xi)
    double below_diagonal_ratio = 0.0;  // Frobenius mass below the block diagonal / total
    double diagonal_mismatch = 0.0;     // max relative error vs (-1)^{l-1} A_ll
    bool triangular_ok = false;
    bool diagonal_ok = false;
};

/// Assembles the commutator matrix by nested finite-difference Jacobians
/// ([g,f] = (Jf)g - (Jg)f, Richardson-extrapolated central differences) and
/// checks block upper-triangularity plus the signed match with build_A.
HormanderReport build_hormander_matrix(const ChainedSystem& sys);

}  // namespace hypochain::limits
