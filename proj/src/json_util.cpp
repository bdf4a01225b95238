#include "hypochain/json_util.hpp"

#include <algorithm>

namespace hypochain::jsonu {

namespace {
// plain Levenshtein distance, small strings only
size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (size_t j = 1; j <= b.size(); ++j) {
            const size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}
}  // namespace

void reject_unknown_keys(const json& node, const std::vector<std::string>& allowed,
                         const std::string& path) {
    if (!node.is_object()) throw ConfigError("expected an object", path);
    for (const auto& [key, value] : node.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) != allowed.end()) continue;
        std::string best;
        size_t best_dist = 3;  // suggest only near misses
        for (const auto& candidate : allowed) {
            const size_t dist = edit_distance(key, candidate);
            if (dist < best_dist) {
                best_dist = dist;
                best = candidate;
            }
        }
        std::string msg = "unknown field";
        if (!best.empty()) msg += " (did you mean '" + best + "'?)";
        throw ConfigError(msg, path.empty() ? key : path + "." + key);
    }
}

Vec parse_vec(const json& node, const std::string& path) {
    if (!node.is_array()) throw ConfigError("expected an array of numbers", path);
    Vec v(node.size());
    for (size_t i = 0; i < node.size(); ++i) {
        if (!node[i].is_number()) throw ConfigError("expected a number", path);
        v[static_cast<Eigen::Index>(i)] = node[i].get<double>();
    }
    return v;
}

Mat parse_mat(const json& node, const std::string& path) {
    if (!node.is_array() || node.empty()) throw ConfigError("expected an array of rows", path);
    const size_t cols = node[0].is_array() ? node[0].size() : 0;
    if (cols == 0) throw ConfigError("expected nested arrays (matrix rows)", path);
    Mat m(node.size(), cols);
    for (size_t r = 0; r < node.size(); ++r) {
        if (!node[r].is_array() || node[r].size() != cols)
            throw ConfigError("ragged matrix rows", path);
        for (size_t c = 0; c < cols; ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = node[r][c].get<double>();
    }
    return m;
}

json vec_to_json(const Vec& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

}  // namespace hypochain::jsonu
