#pragma once

#include <Eigen/Dense>
#include <functional>

namespace hypochain {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Vector-valued coefficient: (t, x in R^{nd}) -> R^d.
/// `jacobian` is the optional analytic Jacobian w.r.t. the l-th d-dimensional
/// block of x (1-based l); when absent, callers fall back to central finite
/// differences.
struct VectorField {
    std::function<Vec(double, const Vec&)> eval;
    std::function<Mat(double, const Vec&, int)> jacobian;  // (t, x, l) -> d x d
};

/// Matrix-valued coefficient (the diffusion block): (t, x) -> R^{d x d}.
/// `column_jacobian` differentiates column i w.r.t. block l.
/// `ito_correction` is an optional closed form of 1/2 sum_i (J_{x_1} s^i) s^i,
/// the conversion term the simulation evaluates every step; when absent it is
/// assembled from the column Jacobians.
struct MatrixField {
    std::function<Mat(double, const Vec&)> eval;
    std::function<Mat(double, const Vec&, int, int)> column_jacobian;  // (t, x, l, i)
    std::function<Vec(double, const Vec&)> ito_correction;
};

/// Central-difference step per coordinate, h = max(1e-6, 1e-6*|x_k|).
double fd_step(double coordinate_value);

/// Central finite-difference Jacobian of a generic map f: R^m -> R^k w.r.t.
/// coordinates [offset, offset+width) of x. Throws NumericError (with the
/// offending coordinate) on non-finite evaluations.
Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x, int offset, int width);

/// Jacobian of a vector field w.r.t. the l-th d-dimensional block (1-based).
/// Analytic when supplied, finite differences otherwise.
Mat jacobian_block(const VectorField& field, int l, double t, const Vec& x, int d);

/// Same for column i (1-based) of a matrix field.
Mat sigma_column_jacobian(const MatrixField& sigma, int l, int i, double t, const Vec& x, int d);

}  // namespace hypochain
