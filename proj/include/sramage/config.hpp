#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sramage/learners.hpp"

namespace sramage {

// Sampling distributions for the randomized hyperparameter search. The KNN
// neighbor range follows the published tuning setup; the rest are declared
// defaults, all overridable through the config document.
struct SearchSpaces {
    int knn_k_min = 100;
    int knn_k_max = 2000;
    double svm_c_min = 1e-2;
    double svm_c_max = 1e3;   // log-uniform
    double svm_gamma_min = 1e-4;
    double svm_gamma_max = 1e1;  // log-uniform
    int tree_max_depth_min = 2;
    int tree_max_depth_max = 32;
    int tree_min_samples_split_min = 2;
    int tree_min_samples_split_max = 100;
    int tree_min_features_min = 1;
    int tree_min_features_max = 56;
    int forest_num_trees_min = 10;
    int forest_num_trees_max = 300;
};

// Declarative configuration covering feature extraction, splitting, tuning
// and solver knobs. CLI flags override individual fields; the hash of the
// effective config goes into every artifact's repro stanza.
struct ToolkitConfig {
    // feature extraction
    size_t group_size = 10;
    size_t block_bytes = 1024;
    size_t feature_k = 50;
    bool pct1s_per_device = false;
    bool spearman_per_bit = false;

    // splitting
    double train_fraction = 0.7;
    double split_bin_months = 1.0;

    // metrics
    double mape_epsilon = 1e-9;

    // tuning
    size_t num_candidates = 1000;
    size_t k_folds = 5;
    std::map<std::string, size_t> budget_overrides = {{"svm", 50}};
    std::vector<int> resolutions = {1, 2, 3, 4, 5, 6, 7, 8, 9};
    SearchSpaces spaces;

    // solver
    double svm_tol = 1e-3;
    double svr_epsilon = 0.1;
    size_t svm_max_passes = 10;
    double svm_cache_mb = 256.0;

    // execution
    size_t jobs = 0;  // 0 = hardware concurrency
    double selection_budget_mb = 1024.0;  // spectrum matrix RAM for selection

    LearnerOptions learner_options() const {
        LearnerOptions opts;
        opts.smo.tol = svm_tol;
        opts.smo.max_passes = svm_max_passes;
        opts.smo.cache_mb = svm_cache_mb;
        opts.svr_epsilon = svr_epsilon;
        return opts;
    }

    size_t candidates_for(const std::string& learner) const {
        const auto it = budget_overrides.find(learner);
        return it != budget_overrides.end() ? it->second : num_candidates;
    }

    std::string to_json_string() const;
    static ToolkitConfig from_json_string(const std::string& text);
    static ToolkitConfig load(const std::string& path);

    // FNV-1a of the canonical serialization, hex-encoded.
    std::string hash() const;
};

}
