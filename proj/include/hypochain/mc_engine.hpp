#pragma once

#include <cstdint>
#include <vector>

#include "hypochain/chained_system.hpp"
#include "hypochain/flow_scaling.hpp"

namespace hypochain::mc {

enum class Scheme { Euler };

struct SimConfig {
    double t = 1.0;
    int steps = 256;          // >= 16
    long n_paths = 10000;     // >= 1
    std::uint64_t seed = 1;
    Scheme scheme = Scheme::Euler;
    bool record_sup = false;      // running sup |(X - theta)^{(j)}_s| per level j
    bool record_joint_n = false;  // iterated Wiener integrals N_t
    int workers = 0;              // 0 = hardware concurrency
};

/// Terminal samples (rows ordered by path index; bitwise reproducible from
/// (model, config) independently of the worker count).
struct SampleBatch {
    int n = 0, d = 0;
    Mat terminal;               // n_paths x nd, column order X^1..X^n
    Mat iterated;               // n_paths x nd (N^1..N^n) when recorded, else 0 x 0
    Mat sup_tail;               // n_paths x n: sup_s |(X-theta)^{(j)}_s| when recorded
    std::vector<std::uint8_t> flagged;  // per-path non-finite flag
    long flagged_count = 0;
    SimConfig config;

    long n_paths() const { return terminal.rows(); }
    /// Row indices of non-flagged paths.
    std::vector<Eigen::Index> valid_rows() const;
    /// Copy of the non-flagged rows of `m` (must have n_paths rows).
    Mat valid(const Mat& m) const;
};

/// Euler-Maruyama on the Ito form (drift = ito_drift, diffusion on block 1).
/// Each path uses the stream derived from (seed, path index). Paths that hit
/// non-finite values are flagged; more than 0.1% flagged aborts the batch.
SampleBatch simulate_paths(const ChainedSystem& sys, const SimConfig& cfg);

/// Same simulation with N recorded: M^1 = W, M^j_t = int_0^t M^{j-1}_s ds on
/// the Euler grid with the left-endpoint rule that the Euler drift uses, so
/// the stochastic-Taylor identity is exact on linear chains. M^j = N^j by
/// stochastic Fubini.
SampleBatch simulate_joint_n(const ChainedSystem& sys, SimConfig cfg);

/// R_t = X_t - theta_t - A N_t per path (requires joint-N recording).
Mat residuals(const SampleBatch& batch, const Mat& A, const Vec& theta_t);

/// L^p norm per level j of the rows of a (paths x nd) block matrix:
/// result[j-1] = (mean |row block j|^p)^{1/p} over non-flagged paths.
Vec block_norms(const SampleBatch& batch, const Mat& rows, double p);

/// Same over the stacked blocks [first_block, last_block] (the tail vector
/// X^{(j)} uses first_block = j, last_block = n).
double stacked_block_norm(const SampleBatch& batch, const Mat& rows, double p, int first_block,
                          int last_block);

}  // namespace hypochain::mc
