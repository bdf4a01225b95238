#include "hypochain/mc_engine.hpp"

#include <cmath>
#include <limits>

#include "hypochain/errors.hpp"
#include "hypochain/parallel.hpp"
#include "hypochain/rng.hpp"

namespace hypochain::mc {

namespace {

void check_config(const SimConfig& cfg) {
    if (cfg.steps < 16) throw Error("SimConfig.steps must be >= 16");
    if (cfg.n_paths < 1) throw Error("SimConfig.n_paths must be >= 1");
    if (cfg.t <= 0.0) throw Error("SimConfig.t must be > 0");
}

// theta on the Euler grid (one RK4 step per Euler interval), used to recenter
// the running sup. Shared read-only by all workers.
Mat theta_grid(const ChainedSystem& sys, double t, int steps) {
    Mat grid(steps + 1, sys.dim());
    const double dt = t / steps;
    Vec state = sys.xi;
    grid.row(0) = state;
    for (int k = 0; k < steps; ++k) {
        const double tk = k * dt;
        Vec k1 = sys.drift_value(tk, state);
        Vec k2 = sys.drift_value(tk + 0.5 * dt, state + 0.5 * dt * k1);
        Vec k3 = sys.drift_value(tk + 0.5 * dt, state + 0.5 * dt * k2);
        Vec k4 = sys.drift_value(tk + dt, state + dt * k3);
        state += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        grid.row(k + 1) = state;
    }
    return grid;
}

}  // namespace

std::vector<Eigen::Index> SampleBatch::valid_rows() const {
    std::vector<Eigen::Index> rows;
    rows.reserve(terminal.rows());
    for (Eigen::Index p = 0; p < terminal.rows(); ++p)
        if (!flagged[p]) rows.push_back(p);
    return rows;
}

Mat SampleBatch::valid(const Mat& m) const {
    if (flagged_count == 0) return m;
    auto rows = valid_rows();
    Mat out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (Eigen::Index r = 0; r < out.rows(); ++r) out.row(r) = m.row(rows[r]);
    return out;
}

SampleBatch simulate_paths(const ChainedSystem& sys, const SimConfig& cfg) {
    check_config(cfg);
    const int nd = sys.dim();
    const int d = sys.d;
    const int n = sys.n;
    const double dt = cfg.t / cfg.steps;
    const double sqrt_dt = std::sqrt(dt);
    const double nan = std::numeric_limits<double>::quiet_NaN();

    SampleBatch batch;
    batch.n = n;
    batch.d = d;
    batch.config = cfg;
    batch.terminal.resize(cfg.n_paths, nd);
    if (cfg.record_joint_n) batch.iterated.resize(cfg.n_paths, nd);
    if (cfg.record_sup) batch.sup_tail.resize(cfg.n_paths, n);
    batch.flagged.assign(cfg.n_paths, 0);

    Mat theta;
    if (cfg.record_sup) theta = theta_grid(sys, cfg.t, cfg.steps);

    parallel_for(cfg.n_paths, cfg.workers, [&](long begin, long end, int) {
        Vec x(nd), drift(nd), dw(d), m(nd), sup(n);
        for (long p = begin; p < end; ++p) {
            rng::Stream stream = rng::make_stream(cfg.seed, static_cast<std::uint64_t>(p));
            x = sys.xi;
            m.setZero();
            sup.setZero();
            bool ok = true;
            for (int k = 0; k < cfg.steps; ++k) {
                const double tk = k * dt;
                drift = ito_drift(sys, tk, x);
                Mat sig = sys.sigma.eval(tk, x);
                for (int i = 0; i < d; ++i) dw[i] = sqrt_dt * stream.gaussian();
                if (cfg.record_joint_n) {
                    // left-endpoint rule, matching the Euler drift quadrature
                    for (int j = n - 1; j >= 1; --j)
                        m.segment(j * d, d) += dt * m.segment((j - 1) * d, d);
                    m.head(d) += dw;
                }
                x += dt * drift;
                x.head(d) += sig * dw;
                if (!x.allFinite()) {
                    ok = false;
                    break;
                }
                if (cfg.record_sup) {
                    double acc = 0.0;
                    for (int j = n; j >= 1; --j) {
                        const int c = (j - 1) * d;
                        acc += (x.segment(c, d) - theta.row(k + 1).segment(c, d).transpose())
                                   .squaredNorm();
                        sup[j - 1] = std::max(sup[j - 1], std::sqrt(acc));
                    }
                }
            }
            if (ok) {
                batch.terminal.row(p) = x;
                if (cfg.record_joint_n) batch.iterated.row(p) = m;
                if (cfg.record_sup) batch.sup_tail.row(p) = sup;
            } else {
                batch.flagged[p] = 1;
                batch.terminal.row(p).setConstant(nan);
                if (cfg.record_joint_n) batch.iterated.row(p).setConstant(nan);
                if (cfg.record_sup) batch.sup_tail.row(p).setConstant(nan);
            }
        }
    });

    for (auto f : batch.flagged) batch.flagged_count += f;
    if (batch.flagged_count * 1000 > cfg.n_paths)
        throw NumericError("batch aborted: " + std::to_string(batch.flagged_count) + " of " +
                           std::to_string(cfg.n_paths) + " paths hit non-finite values");
    return batch;
}

SampleBatch simulate_joint_n(const ChainedSystem& sys, SimConfig cfg) {
    cfg.record_joint_n = true;
    return simulate_paths(sys, cfg);
}

Mat residuals(const SampleBatch& batch, const Mat& A, const Vec& theta_t) {
    if (batch.iterated.size() == 0)
        throw Error("residuals need a batch with joint-N recording enabled");
    Mat r = batch.terminal;
    r.rowwise() -= theta_t.transpose();
    r.noalias() -= batch.iterated * A.transpose();
    return r;
}

double stacked_block_norm(const SampleBatch& batch, const Mat& rows, double p, int first_block,
                          int last_block) {
    const int d = batch.d;
    const int from = (first_block - 1) * d;
    const int width = (last_block - first_block + 1) * d;
    double acc = 0.0;
    long count = 0;
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
        if (batch.flagged[r]) continue;
        acc += std::pow(rows.row(r).segment(from, width).norm(), p);
        ++count;
    }
    if (count == 0) throw InsufficientDataError("all paths flagged");
    return std::pow(acc / count, 1.0 / p);
}

Vec block_norms(const SampleBatch& batch, const Mat& rows, double p) {
    Vec out(batch.n);
    for (int j = 1; j <= batch.n; ++j) out[j - 1] = stacked_block_norm(batch, rows, p, j, j);
    return out;
}

}  // namespace hypochain::mc
