#pragma once

#include <nlohmann/json.hpp>
#include <string>

#include "hypochain/coefficient_field.hpp"
#include "hypochain/errors.hpp"

namespace hypochain::jsonu {

using json = nlohmann::ordered_json;

/// Rejects keys outside `allowed`, naming the offending path and the nearest
/// known key when one is close.
void reject_unknown_keys(const json& node, const std::vector<std::string>& allowed,
                         const std::string& path);

template <typename T>
T get_or(const json& node, const std::string& key, T fallback, const std::string& path) {
    if (!node.contains(key)) return fallback;
    try {
        return node.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("wrong type", path + "." + key);
    }
}

template <typename T>
T require(const json& node, const std::string& key, const std::string& path) {
    if (!node.contains(key)) throw ConfigError("missing required field", path + "." + key);
    try {
        return node.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("wrong type", path + "." + key);
    }
}

Vec parse_vec(const json& node, const std::string& path);
Mat parse_mat(const json& node, const std::string& path);
json vec_to_json(const Vec& v);

}  // namespace hypochain::jsonu
