#include "hypochain/coefficient_field.hpp"

#include <cmath>

#include "hypochain/errors.hpp"

namespace hypochain {

double fd_step(double coordinate_value) {
    return std::max(1e-6, 1e-6 * std::abs(coordinate_value));
}

Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x, int offset, int width) {
    Vec probe = x;
    Vec f0 = f(x);
    Mat jac(f0.size(), width);
    for (int k = 0; k < width; ++k) {
        const int idx = offset + k;
        const double h = fd_step(x[idx]);
        probe[idx] = x[idx] + h;
        Vec fp = f(probe);
        probe[idx] = x[idx] - h;
        Vec fm = f(probe);
        probe[idx] = x[idx];
        jac.col(k) = (fp - fm) / (2.0 * h);
        if (!jac.col(k).allFinite())
            throw NumericError("non-finite finite-difference derivative", idx);
    }
    return jac;
}

Mat jacobian_block(const VectorField& field, int l, double t, const Vec& x, int d) {
    if (field.jacobian) {
        Mat jac = field.jacobian(t, x, l);
        if (!jac.allFinite()) throw NumericError("non-finite analytic Jacobian");
        return jac;
    }
    auto frozen = [&](const Vec& p) { return field.eval(t, p); };
    return fd_jacobian(frozen, x, (l - 1) * d, d);
}

Mat sigma_column_jacobian(const MatrixField& sigma, int l, int i, double t, const Vec& x, int d) {
    if (sigma.column_jacobian) {
        Mat jac = sigma.column_jacobian(t, x, l, i);
        if (!jac.allFinite()) throw NumericError("non-finite analytic Jacobian");
        return jac;
    }
    auto column = [&](const Vec& p) -> Vec { return sigma.eval(t, p).col(i - 1); };
    return fd_jacobian(column, x, (l - 1) * d, d);
}

}  // namespace hypochain
