#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

namespace hypochain::runner {

using json = nlohmann::ordered_json;

/// Subcommands exposed by the runner (and the CLI).
std::vector<std::string> subcommands();

/// Parse config text; strict: unknown keys anywhere are rejected with a
/// path-to-field diagnostic.
json parse_config(const std::string& text);

/// Flag overrides win over config fields. Recognized override keys:
/// seed, n_paths, steps, workers (into params) and out_dir (top level).
void apply_overrides(json& config, const json& overrides);

struct RunOutcome {
    json summary;
    bool checks_passed = true;
};

/// Runs one experiment; writes <out_dir>/<subcommand>.csv and
/// <out_dir>/<subcommand>.summary.json. Throws on config/model errors;
/// returns checks_passed = false when an assertion-tagged check fails.
RunOutcome run_experiment(const std::string& subcommand, json config);

}  // namespace hypochain::runner
