#include "hypochain.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <memory>
#include <nlohmann/json.hpp>
#include <string>

#include "hypochain/chained_system.hpp"
#include "hypochain/errors.hpp"
#include "hypochain/experiment.hpp"
#include "hypochain/limit_gaussian.hpp"
#include "hypochain/models.hpp"
#include "hypochain/version.hpp"

struct hc_model {
    hypochain::ChainedSystem system;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

hc_status fail(hc_status code, const std::string& message) {
    g_last_error = message;
    return code;
}

template <typename Fn>
hc_status guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const hypochain::ConfigError& e) {
        return fail(HC_ERR_ARGUMENT, e.what());
    } catch (const hypochain::ModelError& e) {
        return fail(HC_ERR_MODEL, e.what());
    } catch (const hypochain::NumericError& e) {
        return fail(HC_ERR_NUMERIC, e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return fail(HC_ERR_IO, e.what());
    } catch (const std::exception& e) {
        return fail(HC_ERR_INTERNAL, e.what());
    }
}

nlohmann::ordered_json parse_or_empty(const char* text, const char* what) {
    if (text == nullptr || *text == '\0') return nlohmann::ordered_json::object();
    auto parsed = nlohmann::ordered_json::parse(text, nullptr, false);
    if (parsed.is_discarded())
        throw hypochain::ConfigError(std::string(what) + " is not valid JSON");
    return parsed;
}

}  // namespace

extern "C" {

const char* hc_version(void) { return hypochain::kVersion; }

const char* hc_last_error(void) { return g_last_error.c_str(); }

void hc_string_free(char* s) { std::free(s); }

hc_status hc_model_create(const char* key, const char* params_json, hc_model** out) {
    if (key == nullptr || out == nullptr)
        return fail(HC_ERR_ARGUMENT, "key and out must be non-null");
    *out = nullptr;
    return guarded([&]() -> hc_status {
        auto params = parse_or_empty(params_json, "params_json");
        auto model = std::make_unique<hc_model>();
        model->system = hypochain::models::make_model(key, params);
        *out = model.release();
        return HC_OK;
    });
}

void hc_model_free(hc_model* model) { delete model; }

hc_status hc_model_validate(const hc_model* model, char** report_json) {
    if (model == nullptr || report_json == nullptr)
        return fail(HC_ERR_ARGUMENT, "model and report_json must be non-null");
    return guarded([&]() -> hc_status {
        const auto report = hypochain::validate_structure(model->system);
        nlohmann::ordered_json warnings = nlohmann::ordered_json::array();
        for (const auto& w : report.warnings)
            warnings.push_back(
                {{"code", w.code}, {"j", w.j}, {"l", w.l}, {"message", w.message}});
        nlohmann::ordered_json doc{{"structure_ok", report.structure_ok},
                                   {"h1_lambda", report.h1_lambda},
                                   {"h2_box_bound", report.h2_box_bound},
                                   {"warnings", warnings}};
        *report_json = dup_string(doc.dump(2));
        return HC_OK;
    });
}

hc_status hc_model_h1(const hc_model* model, double* lambda_out) {
    if (model == nullptr || lambda_out == nullptr)
        return fail(HC_ERR_ARGUMENT, "model and lambda_out must be non-null");
    return guarded([&]() -> hc_status {
        *lambda_out = hypochain::check_H1(model->system);
        return HC_OK;
    });
}

hc_status hc_model_limits(const hc_model* model, char** limits_json) {
    if (model == nullptr || limits_json == nullptr)
        return fail(HC_ERR_ARGUMENT, "model and limits_json must be non-null");
    return guarded([&]() -> hc_status {
        const auto lim = hypochain::limits::LimitModel::build(model->system);
        *limits_json = dup_string(lim.to_json().dump(2));
        return HC_OK;
    });
}

hc_status hc_run(const char* subcommand, const char* config_json, const char* overrides_json,
                 char** summary_json) {
    if (subcommand == nullptr || config_json == nullptr)
        return fail(HC_ERR_ARGUMENT, "subcommand and config_json must be non-null");
    if (summary_json != nullptr) *summary_json = nullptr;
    return guarded([&]() -> hc_status {
        auto config = hypochain::runner::parse_config(config_json);
        hypochain::runner::apply_overrides(config, parse_or_empty(overrides_json, "overrides"));
        const auto outcome = hypochain::runner::run_experiment(subcommand, std::move(config));
        if (summary_json != nullptr) *summary_json = dup_string(outcome.summary.dump(2));
        if (!outcome.checks_passed)
            return fail(HC_ERR_CHECKS_FAILED, "one or more experiment checks failed");
        return HC_OK;
    });
}

}  // extern "C"
