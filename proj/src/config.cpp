#include "sramage/config.hpp"

#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "sramage/error.hpp"
#include "sramage/hash.hpp"

namespace sramage {

namespace {

using nlohmann::json;

json spaces_to_json(const SearchSpaces& s) {
    return json{{"knn_k", {s.knn_k_min, s.knn_k_max}},
                {"svm_c", {s.svm_c_min, s.svm_c_max}},
                {"svm_gamma", {s.svm_gamma_min, s.svm_gamma_max}},
                {"tree_max_depth", {s.tree_max_depth_min, s.tree_max_depth_max}},
                {"tree_min_samples_split",
                 {s.tree_min_samples_split_min, s.tree_min_samples_split_max}},
                {"tree_min_features", {s.tree_min_features_min, s.tree_min_features_max}},
                {"forest_num_trees", {s.forest_num_trees_min, s.forest_num_trees_max}}};
}

template <typename T>
void read_range(const json& j, const char* key, T& lo, T& hi) {
    if (!j.contains(key)) return;
    const auto& r = j.at(key);
    if (!r.is_array() || r.size() != 2)
        throw FormatError(std::string("config: range must be [lo, hi]: ") + key);
    lo = r[0].get<T>();
    hi = r[1].get<T>();
    if (hi < lo) throw FormatError(std::string("config: empty range: ") + key);
}

template <typename T>
void read_field(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}

std::string ToolkitConfig::to_json_string() const {
    const json j{{"format", "sramage-config"},
                 {"version", 1},
                 {"group_size", group_size},
                 {"block_bytes", block_bytes},
                 {"feature_k", feature_k},
                 {"pct1s_per_device", pct1s_per_device},
                 {"spearman_per_bit", spearman_per_bit},
                 {"train_fraction", train_fraction},
                 {"split_bin_months", split_bin_months},
                 {"mape_epsilon", mape_epsilon},
                 {"num_candidates", num_candidates},
                 {"k_folds", k_folds},
                 {"budget_overrides", budget_overrides},
                 {"resolutions", resolutions},
                 {"search_spaces", spaces_to_json(spaces)},
                 {"svm_tol", svm_tol},
                 {"svr_epsilon", svr_epsilon},
                 {"svm_max_passes", svm_max_passes},
                 {"svm_cache_mb", svm_cache_mb},
                 {"jobs", jobs},
                 {"selection_budget_mb", selection_budget_mb}};
    return j.dump(2);
}

ToolkitConfig ToolkitConfig::from_json_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("config: invalid JSON: ") + e.what());
    }
    try {
        if (j.contains("format") && j.at("format").get<std::string>() != "sramage-config")
            throw FormatError("config: unexpected document format");
        if (j.contains("version") && j.at("version").get<int>() != 1)
            throw FormatError("config: unsupported version");

        ToolkitConfig c;
        read_field(j, "group_size", c.group_size);
        read_field(j, "block_bytes", c.block_bytes);
        read_field(j, "feature_k", c.feature_k);
        read_field(j, "pct1s_per_device", c.pct1s_per_device);
        read_field(j, "spearman_per_bit", c.spearman_per_bit);
        read_field(j, "train_fraction", c.train_fraction);
        read_field(j, "split_bin_months", c.split_bin_months);
        read_field(j, "mape_epsilon", c.mape_epsilon);
        read_field(j, "num_candidates", c.num_candidates);
        read_field(j, "k_folds", c.k_folds);
        read_field(j, "budget_overrides", c.budget_overrides);
        read_field(j, "resolutions", c.resolutions);
        if (j.contains("search_spaces")) {
            const json& s = j.at("search_spaces");
            read_range(s, "knn_k", c.spaces.knn_k_min, c.spaces.knn_k_max);
            read_range(s, "svm_c", c.spaces.svm_c_min, c.spaces.svm_c_max);
            read_range(s, "svm_gamma", c.spaces.svm_gamma_min, c.spaces.svm_gamma_max);
            read_range(s, "tree_max_depth", c.spaces.tree_max_depth_min,
                       c.spaces.tree_max_depth_max);
            read_range(s, "tree_min_samples_split", c.spaces.tree_min_samples_split_min,
                       c.spaces.tree_min_samples_split_max);
            read_range(s, "tree_min_features", c.spaces.tree_min_features_min,
                       c.spaces.tree_min_features_max);
            read_range(s, "forest_num_trees", c.spaces.forest_num_trees_min,
                       c.spaces.forest_num_trees_max);
        }
        read_field(j, "svm_tol", c.svm_tol);
        read_field(j, "svr_epsilon", c.svr_epsilon);
        read_field(j, "svm_max_passes", c.svm_max_passes);
        read_field(j, "svm_cache_mb", c.svm_cache_mb);
        read_field(j, "jobs", c.jobs);
        read_field(j, "selection_budget_mb", c.selection_budget_mb);

        if (c.k_folds < 2) throw FormatError("config: k_folds must be >= 2");
        if (c.num_candidates < 1) throw FormatError("config: num_candidates must be >= 1");
        if (!(c.train_fraction > 0.0 && c.train_fraction < 1.0))
            throw FormatError("config: train_fraction must be in (0,1)");
        for (int r : c.resolutions)
            if (r < 1 || r > 9) throw FormatError("config: resolutions must lie in [1,9]");
        return c;
    } catch (const json::exception& e) {
        throw FormatError(std::string("config: mistyped field: ") + e.what());
    }
}

ToolkitConfig ToolkitConfig::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("config: cannot open: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_string(text);
}

std::string ToolkitConfig::hash() const { return fnv1a_hex(to_json_string()); }

}
