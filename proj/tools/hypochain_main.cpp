// hypochain CLI: thin front-end over the C API (hypochain.h).
//
//   hypochain <subcommand> --config <file> [--seed N] [--paths N]
//             [--steps N] [--workers N] [--out DIR]
//
// Flags override the corresponding config fields.

#include <CLI11.hpp>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "hypochain.h"

namespace {

const char* kSubcommands[] = {"validate", "limits",   "simulate",    "taylor-check",   "density",
                              "tails",    "converge", "derivatives", "diagonal-decay", "price"};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CLI::ValidationError("--config", "cannot read " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string("hypochain ") + hc_version() +
                 " - chained hypoelliptic SDE experiment runner"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::int64_t seed = -1, paths = -1, steps = -1, workers = -1;

    for (const char* name : kSubcommands) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "experiment config file (JSON)")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "override params.seed");
        sub->add_option("--paths", paths, "override params.n_paths");
        sub->add_option("--steps", steps, "override params.steps");
        sub->add_option("--workers", workers, "override params.workers");
        sub->add_option("--out", out_dir, "override out_dir");
    }

    CLI11_PARSE(app, argc, argv);
    const std::string subcommand = app.get_subcommands().front()->get_name();

    std::string config_text;
    try {
        config_text = read_file(config_path);
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    std::ostringstream overrides;
    overrides << "{";
    bool first = true;
    auto put = [&](const char* key, const std::string& value, bool quote) {
        if (!first) overrides << ",";
        overrides << "\"" << key << "\":" << (quote ? "\"" + value + "\"" : value);
        first = false;
    };
    if (seed >= 0) put("seed", std::to_string(seed), false);
    if (paths >= 0) put("n_paths", std::to_string(paths), false);
    if (steps >= 0) put("steps", std::to_string(steps), false);
    if (workers >= 0) put("workers", std::to_string(workers), false);
    if (!out_dir.empty()) put("out_dir", out_dir, true);
    overrides << "}";

    char* summary = nullptr;
    const hc_status status =
        hc_run(subcommand.c_str(), config_text.c_str(), overrides.str().c_str(), &summary);
    if (summary != nullptr) {
        std::cout << summary << "\n";
        hc_string_free(summary);
    }
    if (status == HC_OK) return 0;
    if (status == HC_ERR_CHECKS_FAILED) {
        std::cerr << "hypochain: checks failed\n";
        return 1;
    }
    std::cerr << "hypochain: " << hc_last_error() << "\n";
    return 2;
}
