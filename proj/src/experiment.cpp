#include "hypochain/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>

#include "hypochain/csv.hpp"
#include "hypochain/density_lab.hpp"
#include "hypochain/errors.hpp"
#include "hypochain/json_util.hpp"
#include "hypochain/models.hpp"
#include "hypochain/rng.hpp"
#include "hypochain/version.hpp"

namespace hypochain::runner {

namespace fs = std::filesystem;
using jsonu::get_or;

namespace {

const std::vector<std::string> kSubcommands = {
    "validate", "limits",  "simulate",    "taylor-check",   "density",
    "tails",    "converge", "derivatives", "diagonal-decay", "price"};

const std::vector<std::string>& allowed_params(const std::string& sub) {
    static const std::map<std::string, std::vector<std::string>> table = {
        {"validate", {"probes", "box_halfwidth", "seed"}},
        {"limits", {}},
        {"simulate", {"t", "steps", "n_paths", "seed", "workers", "record", "max_export_rows"}},
        {"taylor-check",
         {"t_grid", "steps", "n_paths", "seed", "workers", "p", "expect", "exact_tol",
          "slope_tol", "blocks"}},
        {"density",
         {"t", "steps", "n_paths", "seed", "workers", "ybar", "bandwidth_scale",
          "integral_points", "integral_tol", "check_limit", "limit_rel_tol"}},
        {"tails",
         {"t", "steps", "n_paths", "seed", "workers", "levels", "block", "slack", "regimes",
          "expect_gaussian", "expect_lognormal", "expect_polynomial"}},
        {"converge",
         {"t_grid", "steps", "n_paths", "seed", "workers", "ybar", "bandwidth_scale",
          "max_rel_error"}},
        {"derivatives",
         {"t_grid", "steps", "n_paths", "seed", "workers", "ybar", "bandwidth_scale",
          "grad_max_sigmas", "hess_rel_tol"}},
        {"diagonal-decay", {"t_grid"}},
        {"price",
         {"t", "t_grid", "steps", "n_paths", "seed", "workers", "strike", "kind",
          "discount_rate", "max_ratio_error", "check_monotone"}},
    };
    auto it = table.find(sub);
    if (it == table.end()) throw ConfigError("unknown subcommand '" + sub + "'");
    return it->second;
}

struct Context {
    std::string subcommand;
    json config;
    json params;
    fs::path out_dir;
    json checks = json::array();
    json summary = json::object();
    bool all_pass = true;

    void check(const std::string& name, bool pass, json value = nullptr,
               json threshold = nullptr) {
        json entry{{"name", name}, {"pass", pass}};
        if (!value.is_null()) entry["value"] = value;
        if (!threshold.is_null()) entry["threshold"] = threshold;
        checks.push_back(entry);
        all_pass = all_pass && pass;
    }

    csv::Writer writer() const {
        csv::Writer w(out_dir / (subcommand + ".csv"));
        // workers and out_dir are execution plumbing, not experiment identity;
        // leaving them out keeps artifacts byte-identical across worker counts
        // and output locations
        json echo = config;
        if (echo.contains("params") && echo.at("params").contains("workers"))
            echo["params"].erase("workers");
        echo.erase("out_dir");
        w.comment("config " + echo.dump());
        return w;
    }
};

mc::SimConfig sim_config(const json& params) {
    mc::SimConfig cfg;
    cfg.t = get_or<double>(params, "t", 1.0, "params");
    cfg.steps = get_or<int>(params, "steps", 256, "params");
    cfg.n_paths = get_or<long>(params, "n_paths", 100000, "params");
    cfg.seed = get_or<std::uint64_t>(params, "seed", 1, "params");
    cfg.workers = get_or<int>(params, "workers", 0, "params");
    return cfg;
}

std::vector<double> t_grid_from(const json& params) {
    if (!params.contains("t_grid")) throw ConfigError("missing required field", "params.t_grid");
    std::vector<double> grid;
    for (const auto& v : params.at("t_grid")) {
        if (!v.is_number()) throw ConfigError("expected numbers", "params.t_grid");
        grid.push_back(v.get<double>());
    }
    if (grid.empty()) throw ConfigError("t_grid must be non-empty", "params.t_grid");
    return grid;
}

Vec ybar_from(const json& params, int nd) {
    if (!params.contains("ybar")) return Vec::Zero(nd);
    Vec y = jsonu::parse_vec(params.at("ybar"), "params.ybar");
    if (y.size() != nd) throw ConfigError("ybar must have dimension n*d", "params.ybar");
    return y;
}

ChainedSystem model_from(const json& config) {
    const json& model = config.at("model");
    return models::make_model(model.at("key").get<std::string>(),
                              model.contains("params") ? model.at("params") : json::object());
}

std::vector<std::string> number_header(const std::string& prefix, int count) {
    std::vector<std::string> cols;
    for (int i = 1; i <= count; ++i) cols.push_back(prefix + std::to_string(i));
    return cols;
}

void run_validate(Context& ctx, const ChainedSystem& sys) {
    ValidationOptions opts;
    opts.probes = get_or<int>(ctx.params, "probes", 24, "params");
    opts.box_halfwidth = get_or<double>(ctx.params, "box_halfwidth", 0.0, "params");
    opts.seed = get_or<std::uint64_t>(ctx.params, "seed", 0x5eed, "params");
    const ValidationReport report = validate_structure(sys, opts);

    auto w = ctx.writer();
    w.header({"metric", "value"});
    w.row_mixed({"structure_ok", report.structure_ok ? "1" : "0"});
    w.row_mixed({"h1_lambda", csv::format_double(report.h1_lambda)});
    w.row_mixed({"h2_box_bound", csv::format_double(report.h2_box_bound)});
    w.row_mixed({"warning_count", std::to_string(report.warnings.size())});

    json warnings = json::array();
    for (const auto& warning : report.warnings)
        warnings.push_back({{"code", warning.code},
                            {"j", warning.j},
                            {"l", warning.l},
                            {"message", warning.message}});
    ctx.summary["report"] = {{"structure_ok", report.structure_ok},
                             {"h1_lambda", report.h1_lambda},
                             {"h2_box_bound", report.h2_box_bound},
                             {"hypothesis_family", to_string(sys.family)},
                             {"warnings", warnings}};
    ctx.check("structure_ok", report.structure_ok);
    ctx.check("h1_nondegenerate", report.h1_lambda >= kH1DegenerateThreshold, report.h1_lambda,
              kH1DegenerateThreshold);
}

void run_limits(Context& ctx, const ChainedSystem& sys) {
    const auto lim = limits::LimitModel::build(sys);
    const auto hormander = limits::build_hormander_matrix(sys);
    const double qn_a = limits::q_constant(sys.n);
    const double qn_b = limits::q_constant_det_route(sys.n, sys.d);
    const double qn_rel = std::abs(qn_a - qn_b) / qn_a;

    auto w = ctx.writer();
    w.header({"matrix", "row", "col", "value"});
    auto dump = [&](const char* name, const Mat& m) {
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c)
                w.row_mixed({name, std::to_string(r), std::to_string(c),
                             csv::format_double(m(r, c))});
    };
    dump("A", lim.A());
    dump("Q", lim.Q());
    dump("covariance", lim.covariance());
    dump("hormander", hormander.matrix);

    ctx.summary["limit_model"] = lim.to_json();
    ctx.summary["hormander"] = {{"below_diagonal_ratio", hormander.below_diagonal_ratio},
                                {"diagonal_mismatch", hormander.diagonal_mismatch}};
    ctx.check("q_n_two_routes", qn_rel <= 1e-12, qn_rel, 1e-12);
    ctx.check("hormander_triangular", hormander.triangular_ok, hormander.below_diagonal_ratio,
              1e-6);
    ctx.check("hormander_diagonal_blocks", hormander.diagonal_ok, hormander.diagonal_mismatch,
              1e-6);
}

void run_simulate(Context& ctx, const ChainedSystem& sys) {
    mc::SimConfig cfg = sim_config(ctx.params);
    if (ctx.params.contains("record"))
        for (const auto& r : ctx.params.at("record")) {
            const auto mode = r.get<std::string>();
            if (mode == "sup_norm") cfg.record_sup = true;
            else if (mode == "joint_n") cfg.record_joint_n = true;
            else throw ConfigError("unknown record mode '" + mode + "'", "params.record");
        }
    const auto batch = mc::simulate_paths(sys, cfg);
    const long max_rows = get_or<long>(ctx.params, "max_export_rows", 100000, "params");

    auto w = ctx.writer();
    std::vector<std::string> cols{"path"};
    for (int j = 1; j <= sys.n; ++j)
        for (int k = 1; k <= sys.d; ++k) cols.push_back("X" + std::to_string(j) + "_" + std::to_string(k));
    if (cfg.record_joint_n)
        for (int j = 1; j <= sys.n; ++j)
            for (int k = 1; k <= sys.d; ++k)
                cols.push_back("N" + std::to_string(j) + "_" + std::to_string(k));
    w.header(cols);
    const long rows = std::min<long>(batch.n_paths(), max_rows);
    for (long p = 0; p < rows; ++p) {
        std::vector<std::string> cells{std::to_string(p)};
        for (Eigen::Index c = 0; c < batch.terminal.cols(); ++c)
            cells.push_back(csv::format_double(batch.terminal(p, c)));
        if (cfg.record_joint_n)
            for (Eigen::Index c = 0; c < batch.iterated.cols(); ++c)
                cells.push_back(csv::format_double(batch.iterated(p, c)));
        w.row_mixed(cells);
    }

    const Mat valid = batch.valid(batch.terminal);
    ctx.summary["mean"] = jsonu::vec_to_json(valid.colwise().mean());
    ctx.summary["flagged"] = batch.flagged_count;
    ctx.check("flagged_fraction",
              batch.flagged_count * 1000 <= cfg.n_paths,
              static_cast<double>(batch.flagged_count) / cfg.n_paths, 0.001);
}

void run_taylor_check(Context& ctx, const ChainedSystem& sys) {
    const auto t_grid = t_grid_from(ctx.params);
    mc::SimConfig cfg = sim_config(ctx.params);
    const double p = get_or<double>(ctx.params, "p", 2.0, "params");
    const auto lim = limits::LimitModel::build(sys);
    const auto scan = density::residual_scan(sys, lim, t_grid, p, cfg);

    auto w = ctx.writer();
    std::vector<std::string> cols{"t"};
    for (const auto& c : number_header("r_norm_", sys.n)) cols.push_back(c);
    for (const auto& c : number_header("dev_norm_", sys.n)) cols.push_back(c);
    w.header(cols);
    for (size_t i = 0; i < t_grid.size(); ++i) {
        std::vector<double> row{t_grid[i]};
        for (int j = 0; j < sys.n; ++j) row.push_back(scan.residual_norms(i, j));
        for (int j = 0; j < sys.n; ++j) row.push_back(scan.deviation_norms(i, j));
        w.row(row);
    }

    json slopes = json::array();
    for (int j = 0; j < sys.n; ++j)
        slopes.push_back({{"block", j + 1},
                          {"slope", scan.fits[j].slope},
                          {"std_error", scan.fits[j].std_error}});
    ctx.summary["slopes"] = slopes;
    ctx.summary["max_relative_residual"] = scan.max_relative_residual;

    const auto expect = get_or<std::string>(ctx.params, "expect", "", "params");
    if (expect == "exact") {
        const double tol = get_or<double>(ctx.params, "exact_tol", 1e-6, "params");
        ctx.check("residual_exact", scan.max_relative_residual <= tol,
                  scan.max_relative_residual, tol);
    } else if (expect == "slopes") {
        const double tol = get_or<double>(ctx.params, "slope_tol", 0.2, "params");
        std::vector<int> blocks;
        if (ctx.params.contains("blocks"))
            for (const auto& b : ctx.params.at("blocks")) blocks.push_back(b.get<int>());
        else
            for (int j = 1; j <= sys.n; ++j) blocks.push_back(j);
        for (int j : blocks) {
            if (j < 1 || j > sys.n) throw ConfigError("block out of range", "params.blocks");
            ctx.check("slope_block_" + std::to_string(j),
                      std::abs(scan.fits[j - 1].slope - j) <= tol, scan.fits[j - 1].slope,
                      static_cast<double>(j));
        }
    } else if (!expect.empty()) {
        throw ConfigError("expect must be 'exact' or 'slopes'", "params.expect");
    }
}

void run_density(Context& ctx, const ChainedSystem& sys) {
    mc::SimConfig cfg = sim_config(ctx.params);
    const double bw = get_or<double>(ctx.params, "bandwidth_scale", 1.0, "params");
    const Vec ybar = ybar_from(ctx.params, sys.dim());
    const auto batch = mc::simulate_paths(sys, cfg);
    const Vec theta = solve_theta(sys, cfg.t, std::max(64, cfg.steps)).terminal();
    const auto kde = density::estimate_density(batch, theta, cfg.t, bw);

    const long points = get_or<long>(ctx.params, "integral_points", 5000, "params");
    const double integral = kde.integral_mc(points, rng::derive_seed(cfg.seed, 77));
    const double p_chi = kde.eval(ybar);
    ScalingMatrix scaling(cfg.t, sys.n, sys.d);
    const Vec y = theta + scaling.apply(ybar);
    const double p_x = kde.eval_x(y, theta);

    auto w = ctx.writer();
    std::vector<std::string> cols{"t", "p_chi", "p_x", "scaled_p_x", "integral"};
    for (const auto& c : number_header("bandwidth_", sys.dim())) cols.push_back(c);
    w.header(cols);
    std::vector<double> row{cfg.t, p_chi, p_x, p_x * scaling.determinant(), integral};
    for (Eigen::Index k = 0; k < kde.bandwidth().size(); ++k) row.push_back(kde.bandwidth()[k]);
    w.row(row);

    ctx.summary["p_chi"] = p_chi;
    ctx.summary["integral"] = integral;
    ctx.summary["low_sample_warning"] = kde.low_sample_warning();
    const double integral_tol = get_or<double>(ctx.params, "integral_tol", 0.02, "params");
    ctx.check("integral_one", std::abs(integral - 1.0) <= integral_tol, integral, integral_tol);
    if (get_or<bool>(ctx.params, "check_limit", false, "params")) {
        const auto lim = limits::LimitModel::build(sys);
        const double limit = lim.density(ybar);
        const double rel = std::abs(p_chi - limit) / limit;
        const double tol = get_or<double>(ctx.params, "limit_rel_tol", 0.1, "params");
        ctx.check("limit_rel_error", rel <= tol, rel, tol);
    }
}

void run_tails(Context& ctx, const ChainedSystem& sys) {
    mc::SimConfig cfg = sim_config(ctx.params);
    const int block = get_or<int>(ctx.params, "block", 0, "params");
    if (block > 0) cfg.record_sup = true;
    if (!ctx.params.contains("levels")) throw ConfigError("missing required field", "params.levels");
    const Vec levels = jsonu::parse_vec(ctx.params.at("levels"), "params.levels");
    const double slack = get_or<double>(ctx.params, "slack", 0.0, "params");  // 0 = regime default

    const auto batch = mc::simulate_paths(sys, cfg);
    const Vec theta = solve_theta(sys, cfg.t, std::max(64, cfg.steps)).terminal();
    const auto curve = block == 0 ? density::tail_curve(batch, theta, cfg.t, levels)
                                  : density::tail_curve_block(batch, block, cfg.t, levels);

    std::vector<density::EnvelopeRegime> regimes;
    if (ctx.params.contains("regimes")) {
        for (const auto& r : ctx.params.at("regimes")) {
            const auto name = r.get<std::string>();
            if (name == "polynomial") regimes.push_back(density::EnvelopeRegime::Polynomial);
            else if (name == "gaussian") regimes.push_back(density::EnvelopeRegime::Gaussian);
            else if (name == "lognormal") regimes.push_back(density::EnvelopeRegime::Lognormal);
            else throw ConfigError("unknown regime '" + name + "'", "params.regimes");
        }
    } else {
        regimes = {density::EnvelopeRegime::Polynomial, density::EnvelopeRegime::Gaussian,
                   density::EnvelopeRegime::Lognormal};
    }

    std::map<std::string, density::EnvelopeFit> fits;
    for (auto regime : regimes)
        fits.emplace(density::to_string(regime), density::fit_envelope(curve, regime, slack));

    auto w = ctx.writer();
    std::vector<std::string> cols{"level", "survival", "wilson_low", "wilson_high"};
    for (const auto& [name, fit] : fits) cols.push_back("env_" + name);
    w.header(cols);
    for (Eigen::Index i = 0; i < levels.size(); ++i) {
        std::vector<double> row{curve.levels[i], curve.survival[i], curve.wilson_low[i],
                                curve.wilson_high[i]};
        for (const auto& [name, fit] : fits) row.push_back(fit.envelope[i]);
        w.row(row);
    }

    json fits_json = json::object();
    for (const auto& [name, fit] : fits) {
        fits_json[name] = {{"C", fit.C},
                           {"p", fit.p},
                           {"knee_index", fit.knee_index},
                           {"knee_level", fit.knee_level},
                           {"pass", fit.pass},
                           {"max_exceedance_log", fit.max_exceedance_log}};
    }
    ctx.summary["fits"] = fits_json;
    ctx.summary["paths"] = curve.paths;

    for (const auto& [name, fit] : fits) {
        const std::string key = "expect_" + name;
        if (ctx.params.contains(key)) {
            const bool expect = ctx.params.at(key).get<bool>();
            ctx.check("envelope_" + name + (expect ? "_passes" : "_fails"), fit.pass == expect,
                      fit.pass);
        }
    }
}

void run_converge(Context& ctx, const ChainedSystem& sys) {
    const auto t_grid = t_grid_from(ctx.params);
    mc::SimConfig cfg = sim_config(ctx.params);
    const double bw = get_or<double>(ctx.params, "bandwidth_scale", 1.0, "params");
    const auto lim = limits::LimitModel::build(sys);
    const Vec ybar = ybar_from(ctx.params, sys.dim());
    const auto rows = density::convergence_experiment(sys, lim, ybar, t_grid, cfg, bw);

    auto w = ctx.writer();
    w.header({"t", "scaled_estimate", "limit", "rel_error", "insufficient_tail"});
    for (const auto& row : rows)
        w.row({row.t, row.estimate, row.limit, row.rel_error,
               row.insufficient_tail ? 1.0 : 0.0});

    // error trend over decreasing t, ignoring tail-starved rows
    std::vector<std::pair<double, double>> usable;
    for (const auto& row : rows)
        if (!row.insufficient_tail) usable.emplace_back(row.t, row.rel_error);
    std::sort(usable.begin(), usable.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    bool monotone = usable.size() >= 2;
    for (size_t i = 1; i < usable.size(); ++i)
        if (usable[i].second > usable[i - 1].second + 1e-12) monotone = false;
    ctx.summary["error_monotone_in_t"] = monotone;

    if (ctx.params.contains("max_rel_error")) {
        const double tol = ctx.params.at("max_rel_error").get<double>();
        bool pass = true;
        double worst = 0.0;
        for (const auto& row : rows) {
            if (row.insufficient_tail) continue;
            worst = std::max(worst, row.rel_error);
            pass = pass && row.rel_error <= tol;
        }
        ctx.check("rel_error_max", pass, worst, tol);
    }
}

void run_derivatives(Context& ctx, const ChainedSystem& sys) {
    const auto t_grid = t_grid_from(ctx.params);
    mc::SimConfig cfg = sim_config(ctx.params);
    const double bw = get_or<double>(ctx.params, "bandwidth_scale", 1.0, "params");
    const auto lim = limits::LimitModel::build(sys);
    const Vec ybar = ybar_from(ctx.params, sys.dim());
    const auto rows = density::gradient_hessian_convergence(sys, lim, ybar, t_grid, cfg, bw);

    const int nd = sys.dim();
    auto w = ctx.writer();
    std::vector<std::string> cols{"t", "grad_max_sigmas", "grad_rel_error", "hess_rel_error",
                                  "sign_match"};
    for (const auto& c : number_header("grad_est_", nd)) cols.push_back(c);
    for (const auto& c : number_header("grad_lim_", nd)) cols.push_back(c);
    for (int r = 1; r <= nd; ++r)
        for (int c = 1; c <= nd; ++c)
            cols.push_back("hess_est_" + std::to_string(r) + "_" + std::to_string(c));
    for (int r = 1; r <= nd; ++r)
        for (int c = 1; c <= nd; ++c)
            cols.push_back("hess_lim_" + std::to_string(r) + "_" + std::to_string(c));
    w.header(cols);
    for (const auto& row : rows) {
        std::vector<double> cells{row.t, row.grad_max_sigmas, row.grad_rel_error,
                                  row.hess_rel_error, static_cast<double>(row.gradient_sign_match)};
        for (int k = 0; k < nd; ++k) cells.push_back(row.grad_estimate[k]);
        for (int k = 0; k < nd; ++k) cells.push_back(row.grad_limit[k]);
        for (int r = 0; r < nd; ++r)
            for (int c = 0; c < nd; ++c) cells.push_back(row.hess_estimate(r, c));
        for (int r = 0; r < nd; ++r)
            for (int c = 0; c < nd; ++c) cells.push_back(row.hess_limit(r, c));
        w.row(cells);
    }

    bool all_negative = true, any_sign = false;
    for (const auto& row : rows)
        if (row.gradient_sign_match != 0) {
            any_sign = true;
            all_negative = all_negative && row.gradient_sign_match == 1;
        }
    ctx.summary["gradient_sign_convention"] =
        !any_sign ? "undecided (gradient ~ 0)"
                  : (all_negative ? "-p Sigma^{-1} z" : "+p Sigma^{-1} z");

    // checks evaluated at the smallest t (closest to the limit)
    size_t best = 0;
    for (size_t i = 1; i < rows.size(); ++i)
        if (rows[i].t < rows[best].t) best = i;
    if (ctx.params.contains("grad_max_sigmas")) {
        const double tol = ctx.params.at("grad_max_sigmas").get<double>();
        ctx.check("grad_within_sigmas", rows[best].grad_max_sigmas <= tol,
                  rows[best].grad_max_sigmas, tol);
    }
    if (ctx.params.contains("hess_rel_tol")) {
        const double tol = ctx.params.at("hess_rel_tol").get<double>();
        ctx.check("hess_rel_error", rows[best].hess_rel_error <= tol, rows[best].hess_rel_error,
                  tol);
    }
}

void run_diagonal_decay(Context& ctx, const ChainedSystem& sys) {
    const auto t_grid = t_grid_from(ctx.params);
    const auto result = density::diagonal_decay(sys, t_grid);

    auto w = ctx.writer();
    w.header({"t", "scaled_log_density"});
    for (size_t i = 0; i < result.t_grid.size(); ++i)
        w.row({result.t_grid[i], result.scaled_log_density[i]});

    ctx.summary["applicable"] = result.applicable;
    ctx.summary["j"] = result.j;
    if (result.applicable) {
        ctx.summary["upper_bound"] = result.upper_bound;
        ctx.check("negative_upper_bound", result.upper_bound < 0.0, result.upper_bound, 0.0);
    } else {
        ctx.summary["note"] = "not applicable: B_j(0, xi) = 0 for all j >= 2";
    }
}

void run_price(Context& ctx) {
    const json& model = ctx.config.at("model");
    if (model.at("key").get<std::string>() != "local_vol_basket")
        throw ConfigError("price needs model.key = local_vol_basket", "model.key");
    const auto basket = models::basket_from_json(
        model.contains("params") ? model.at("params") : json::object());

    std::vector<double> t_grid;
    if (ctx.params.contains("t_grid")) t_grid = t_grid_from(ctx.params);
    else t_grid = {get_or<double>(ctx.params, "t", basket.maturity, "params")};

    mc::SimConfig cfg = sim_config(ctx.params);
    std::optional<double> strike;
    if (ctx.params.contains("strike")) strike = ctx.params.at("strike").get<double>();
    const auto kind_name = get_or<std::string>(ctx.params, "kind", "call", "params");
    if (kind_name != "call" && kind_name != "put")
        throw ConfigError("kind must be 'call' or 'put'", "params.kind");
    const auto kind = kind_name == "call" ? pricing::PayoffKind::Call : pricing::PayoffKind::Put;
    std::optional<double> discount;
    if (ctx.params.contains("discount_rate"))
        discount = ctx.params.at("discount_rate").get<double>();

    auto w = ctx.writer();
    w.header({"t", "mc", "se", "asymptotic", "ratio"});
    struct Row {
        double t, ratio, ratio_se;
    };
    std::vector<Row> rows;  // common random numbers across the grid
    double min_t = t_grid[0], min_t_ratio = 0.0;
    for (size_t i = 0; i < t_grid.size(); ++i) {
        const auto mc_result = pricing::mc_price(basket, t_grid[i], cfg, strike, kind, discount);
        const double asymptotic = pricing::atm_asymptotic_price(basket, t_grid[i]);
        const double ratio = asymptotic > 0.0 ? mc_result.price / asymptotic : 0.0;
        w.row({t_grid[i], mc_result.price, mc_result.std_error, asymptotic, ratio});
        rows.push_back({t_grid[i], ratio, asymptotic > 0.0 ? mc_result.std_error / asymptotic : 0.0});
        if (t_grid[i] <= min_t) {
            min_t = t_grid[i];
            min_t_ratio = ratio;
        }
    }
    ctx.summary["strike"] = strike ? json(*strike) : json("atm");

    if (ctx.params.contains("max_ratio_error")) {
        const double tol = ctx.params.at("max_ratio_error").get<double>();
        ctx.check("ratio_at_smallest_t", std::abs(min_t_ratio - 1.0) <= tol, min_t_ratio, tol);
    }
    if (get_or<bool>(ctx.params, "check_monotone", false, "params")) {
        std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.t > b.t; });
        // non-increasing |ratio - 1| toward small t, within 2 combined SE
        bool monotone = true;
        for (size_t i = 1; i < rows.size(); ++i)
            if (std::abs(rows[i].ratio - 1.0) >
                std::abs(rows[i - 1].ratio - 1.0) + 2.0 * (rows[i].ratio_se + rows[i - 1].ratio_se))
                monotone = false;
        ctx.check("ratio_monotone_to_one", monotone);
    }
}

}  // namespace

std::vector<std::string> subcommands() { return kSubcommands; }

json parse_config(const std::string& text) {
    json config;
    try {
        config = json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!config.is_object()) throw ConfigError("config must be a JSON object");
    jsonu::reject_unknown_keys(config, {"model", "params", "out_dir"}, "");
    if (!config.contains("model")) throw ConfigError("missing required field", "model");
    jsonu::reject_unknown_keys(config.at("model"), {"key", "params"}, "model");
    if (!config.at("model").contains("key"))
        throw ConfigError("missing required field", "model.key");
    if (!config.at("model").at("key").is_string())
        throw ConfigError("wrong type", "model.key");
    if (config.contains("params") && !config.at("params").is_object())
        throw ConfigError("expected an object", "params");
    return config;
}

void apply_overrides(json& config, const json& overrides) {
    if (overrides.is_null()) return;
    if (!overrides.is_object()) throw ConfigError("overrides must be a JSON object");
    for (const auto& [key, value] : overrides.items()) {
        if (key == "out_dir") {
            config["out_dir"] = value;
        } else if (key == "seed" || key == "n_paths" || key == "steps" || key == "workers") {
            config["params"][key] = value;
        } else {
            throw ConfigError("unknown override '" + key + "'");
        }
    }
}

RunOutcome run_experiment(const std::string& subcommand, json config) {
    const auto start = std::chrono::steady_clock::now();
    if (std::find(kSubcommands.begin(), kSubcommands.end(), subcommand) == kSubcommands.end())
        throw ConfigError("unknown subcommand '" + subcommand + "'");

    Context ctx;
    ctx.subcommand = subcommand;
    ctx.config = config;
    ctx.params = config.contains("params") ? config.at("params") : json::object();
    jsonu::reject_unknown_keys(ctx.params, allowed_params(subcommand), "params");
    ctx.out_dir = config.contains("out_dir") ? config.at("out_dir").get<std::string>() : ".";
    fs::create_directories(ctx.out_dir);

    if (subcommand == "price") {
        run_price(ctx);
    } else {
        const ChainedSystem sys = model_from(config);
        if (subcommand == "validate") run_validate(ctx, sys);
        else if (subcommand == "limits") run_limits(ctx, sys);
        else if (subcommand == "simulate") run_simulate(ctx, sys);
        else if (subcommand == "taylor-check") run_taylor_check(ctx, sys);
        else if (subcommand == "density") run_density(ctx, sys);
        else if (subcommand == "tails") run_tails(ctx, sys);
        else if (subcommand == "converge") run_converge(ctx, sys);
        else if (subcommand == "derivatives") run_derivatives(ctx, sys);
        else if (subcommand == "diagonal-decay") run_diagonal_decay(ctx, sys);
    }

    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    json summary;
    summary["subcommand"] = subcommand;
    summary["version"] = kVersion;
    summary["model_key"] = config.at("model").at("key");
    summary["seed"] = ctx.params.contains("seed") ? ctx.params.at("seed") : json(1);
    summary["wall_clock_seconds"] = elapsed;
    summary["config"] = config;
    for (auto& [key, value] : ctx.summary.items()) summary[key] = value;
    summary["checks"] = ctx.checks;
    summary["pass"] = ctx.all_pass;
    summary["outputs"] = {{"csv", (ctx.out_dir / (subcommand + ".csv")).string()}};

    std::ofstream out(ctx.out_dir / (subcommand + ".summary.json"), std::ios::binary);
    out << summary.dump(2) << "\n";

    return RunOutcome{std::move(summary), ctx.all_pass};
}

}  // namespace hypochain::runner
