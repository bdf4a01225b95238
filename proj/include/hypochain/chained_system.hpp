#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hypochain/coefficient_field.hpp"

namespace hypochain {

/// Which global-bound hypothesis family the model is declared to satisfy.
/// Declared by the built-in constructors; never inferred automatically.
enum class HypothesisFamily { Unspecified, H2, H2Prime, H2DoublePrime, H2PrimeLocalized };

const char* to_string(HypothesisFamily f);

/// Chained SDE in R^{nd}: noise enters block 1 only, drift block j > 1
/// depends only on (t, x_{j-1}, ..., x_n). Drift is stored in Stratonovich
/// convention (the simulation applies the Ito correction explicitly).
/// Immutable after construction; evaluation must be thread-safe.
struct ChainedSystem {
    int n = 0;  // chain levels
    int d = 0;  // block dimension
    Vec xi;     // initial point in R^{nd}
    std::vector<VectorField> drift;  // B_1..B_n, each -> R^d
    MatrixField sigma;               // d x d, acts on block 1 only
    double horizon = 1.0;

    std::string key;  // registry key of the built-in, empty for ad-hoc models
    HypothesisFamily family = HypothesisFamily::Unspecified;

    /// Present iff the system is exactly linear with constant diffusion:
    /// dX = (shift + flow * X) dt + sigma_bar dW. Enables closed-form
    /// Gaussian densities (diagonal-decay experiment).
    struct LinearInfo {
        Mat flow;       // nd x nd
        Vec shift;      // nd
        Mat sigma_bar;  // nd x d
    };
    std::optional<LinearInfo> linear;

    int dim() const { return n * d; }

    /// Stacked drift B(t, x) in R^{nd}.
    Vec drift_value(double t, const Vec& x) const;
};

struct StructureWarning {
    std::string code;  // e.g. "forbidden_dependence", "sigma_growth"
    int j = 0;         // block index (1-based), 0 when not applicable
    int l = 0;         // variable block index (1-based), 0 when not applicable
    std::string message;
};

struct ValidationReport {
    bool structure_ok = true;
    double h1_lambda = 0.0;    // smallest singular value of the (H1) product
    double h2_box_bound = 0.0; // sampled sup of |dB|, |dsigma| on the probe box
    std::vector<StructureWarning> warnings;
};

struct ValidationOptions {
    double box_halfwidth = 0.0;  // 0 => 1 + 0.5*max|xi|
    int probes = 24;
    std::uint64_t seed = 0x5eedu;
};

/// Structure check of the dependence pattern at explicit probe points plus
/// sampled H2-style bounds. Probes must be non-empty.
ValidationReport validate_structure(const ChainedSystem& sys, const std::vector<Vec>& probes);

/// Same, with probes drawn uniformly from a box around xi.
ValidationReport validate_structure(const ChainedSystem& sys, const ValidationOptions& opts = {});

std::vector<Vec> probe_points(const ChainedSystem& sys, const ValidationOptions& opts);

/// Smallest singular value of J_{x_{n-1}}B_n ... J_{x_1}B_2 sigma(0, xi).
double check_H1(const ChainedSystem& sys);

/// Below this the system is reported degenerate rather than ill-conditioned.
inline constexpr double kH1DegenerateThreshold = 1e-12;

/// Ito-form drift: B(t,x) plus 1/2 sum_i (J_{x_1} sigma^i) sigma^i added to
/// block 1 (sigma_bar^i vanishes outside block 1).
Vec ito_drift(const ChainedSystem& sys, double t, const Vec& x);

}  // namespace hypochain
