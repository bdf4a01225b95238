#include "hypochain/flow_scaling.hpp"

#include <cmath>

#include "hypochain/csv.hpp"
#include "hypochain/errors.hpp"

namespace hypochain {

int degree(int h, int d, int nd_bound) {
    if (h < 1 || d < 1 || (nd_bound > 0 && h > nd_bound))
        throw Error("degree: index " + std::to_string(h) + " out of range");
    return 2 * ((h - 1) / d) + 1;
}

int degree_multi(std::span<const int> alpha, int d, int nd_bound) {
    int total = 0;
    for (int h : alpha) total += degree(h, d, nd_bound);
    return total;
}

ScalingMatrix::ScalingMatrix(double t, int n, int d) : t_(t), n_(n), d_(d) {
    if (t <= 0.0) throw Error("ScalingMatrix needs t > 0");
    diag_.resize(dim());
    for (int h = 1; h <= dim(); ++h) diag_[h - 1] = std::pow(t, 0.5 * degree(h, d));
}

double ScalingMatrix::determinant() const {
    return std::pow(t_, 0.5 * static_cast<double>(n_) * n_ * d_);
}

Vec ThetaPath::at_time(double t) const {
    if (times.empty()) throw Error("empty theta path");
    if (t <= times.front()) return values.row(0);
    if (t >= times.back()) return values.row(values.rows() - 1);
    const double dt = times[1] - times[0];
    const auto k = static_cast<Eigen::Index>((t - times.front()) / dt);
    const double w = (t - times[k]) / dt;
    return (1.0 - w) * values.row(k) + w * values.row(k + 1);
}

ThetaPath solve_theta(const ChainedSystem& sys, double t, int steps) {
    if (t <= 0.0 || t > sys.horizon + 1e-12)
        throw Error("solve_theta: t must lie in (0, horizon]");
    if (steps == 0) steps = std::max(8, static_cast<int>(std::ceil(1024.0 * t)));
    if (steps < 8) throw Error("solve_theta needs steps >= 8");

    ThetaPath path;
    path.steps = steps;
    path.times.resize(steps + 1);
    path.values.resize(steps + 1, sys.dim());

    const double dt = t / steps;
    Vec state = sys.xi;
    path.times[0] = 0.0;
    path.values.row(0) = state;
    for (int k = 0; k < steps; ++k) {
        const double tk = k * dt;
        Vec k1 = sys.drift_value(tk, state);
        Vec k2 = sys.drift_value(tk + 0.5 * dt, state + 0.5 * dt * k1);
        Vec k3 = sys.drift_value(tk + 0.5 * dt, state + 0.5 * dt * k2);
        Vec k4 = sys.drift_value(tk + dt, state + dt * k3);
        state += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!state.allFinite())
            throw NumericError("theta integration blew up", -1, tk + dt);
        path.times[k + 1] = (k + 1) * dt;
        path.values.row(k + 1) = state;
    }
    return path;
}

void write_theta_csv(const ThetaPath& path, const std::string& file) {
    csv::Writer w(file);
    std::vector<std::string> cols{"t"};
    for (Eigen::Index c = 0; c < path.values.cols(); ++c)
        cols.push_back("theta_" + std::to_string(c + 1));
    w.header(cols);
    for (size_t k = 0; k < path.times.size(); ++k) {
        std::vector<double> row{path.times[k]};
        for (Eigen::Index c = 0; c < path.values.cols(); ++c)
            row.push_back(path.values(static_cast<Eigen::Index>(k), c));
        w.row(row);
    }
}

Mat rescale(const ScalingMatrix& scaling, const Vec& theta_t, const Mat& samples) {
    Mat out = samples.rowwise() - theta_t.transpose();
    out.array().rowwise() /= scaling.diagonal().transpose().array();
    return out;
}

Mat unrescale(const ScalingMatrix& scaling, const Vec& theta_t, const Mat& rescaled) {
    Mat out = rescaled;
    out.array().rowwise() *= scaling.diagonal().transpose().array();
    out.rowwise() += theta_t.transpose();
    return out;
}

}  // namespace hypochain
