#pragma once

#include <map>
#include <string>
#include <vector>

#include "sramage/config.hpp"
#include "sramage/datasetio.hpp"
#include "sramage/features.hpp"
#include "sramage/learners.hpp"
#include "sramage/metrics.hpp"

namespace sramage {

// Randomized-search setup. Scoring follows the task: R^2 for regression,
// macro F1 for classification.
struct SearchConfig {
    size_t num_candidates = 1000;
    size_t k_folds = 5;
    uint64_t seed = 1;
    std::map<std::string, size_t> budget_overrides;
    SearchSpaces spaces;
    LearnerOptions learner_options;
    double mape_epsilon = 1e-9;
    double stratum_bin_months = 1.0;
    size_t jobs = 1;

    size_t candidates_for(const std::string& learner) const {
        const auto it = budget_overrides.find(learner);
        return it != budget_overrides.end() ? it->second : num_candidates;
    }
};

SearchConfig search_config_from(const ToolkitConfig& cfg, uint64_t seed);

// Training rows with device-level fold assignment baked in. A device's rows
// never straddle folds; folds are stratified by usage bin like the outer
// split.
struct TuningData {
    Matrix x;
    std::vector<double> usage;
    std::vector<int> labels;  // classification only
    std::vector<std::string> device_ids;
    std::vector<int> fold_of_row;
    int num_classes = 0;
    size_t k_folds = 0;
};

// Stratified device-level fold ids (0..k-1) keyed by device id.
std::map<std::string, int> assign_device_folds(
    const std::vector<std::pair<std::string, double>>& devices, size_t k_folds,
    double bin_months, uint64_t seed);

TuningData make_tuning_data(const LabeledDataset& train_rows, Task task,
                            const UsageDiscretizer* discretizer, const SearchConfig& config);

struct SearchOutcome {
    HyperParams best;
    double cv_score = 0.0;
    size_t best_index = 0;
    size_t num_failed = 0;
    size_t num_candidates = 0;
};

// Samples candidates from the configured distributions and scores each by
// device-level K-fold cross-validation. A candidate whose folds cannot be
// fit or scored (degenerate labels, solver non-convergence) is excluded.
// Ties go to the first sampled candidate. Throws DegenerateDataError when
// every candidate fails.
SearchOutcome random_search(const SearchConfig& config, LearnerKind family, Task task,
                            const TuningData& data);

// --- experiment reports -----------------------------------------------------

struct LearnerRegressionResult {
    std::string learner;
    HyperParams best_params;
    double cv_score = 0.0;
    size_t failed_candidates = 0;
    RegressionScore test;
    HyperParams ablation_params;
    double ablation_cv_score = 0.0;
    RegressionScore ablation_test;
    double wall_clock_s = 0.0;
};

struct RegressionReport {
    std::vector<LearnerRegressionResult> learners;
};

struct LearnerClassificationResult {
    std::string learner;
    HyperParams best_params;
    double cv_score = 0.0;
    size_t failed_candidates = 0;
    ClassificationScore test;
    double wall_clock_s = 0.0;
};

struct ResolutionReport {
    int resolution_months = 0;
    int num_classes = 0;
    bool skipped = false;
    std::string skip_reason;
    int majority_class = 0;
    double baseline_f1_macro = 0.0;  // majority-class predictor on test rows
    std::vector<LearnerClassificationResult> learners;
};

struct ClassificationReport {
    std::vector<ResolutionReport> resolutions;
};

struct ExperimentReport {
    uint64_t seed = 0;
    std::string config_hash;
    bool has_regression = false;
    RegressionReport regression;
    bool has_classification = false;
    ClassificationReport classification;

    std::string to_json_string() const;
    // Canonical form drops wall-clock timings; identical inputs, seed and
    // config must yield byte-identical canonical reports.
    std::string to_canonical_json_string() const;
    std::string to_text_table() const;
    void save(const std::string& path) const;
};

// --- experiment drivers -----------------------------------------------------

struct DatasetBundle {
    LabeledDataset dataset;
    FeatureSchema schema;
    size_t undefined_spearman = 0;
};

// Fits the frequency selection on the training split only, then extracts
// features for every device. Processes one device at a time; when the
// training spectra do not fit the configured memory budget, the selection
// statistics are accumulated in frequency-bin chunks over repeated passes.
DatasetBundle build_dataset(const DeviceManifest& manifest, const SplitAssignment& split,
                            const ToolkitConfig& cfg);

// Tunes, trains and evaluates all four regressor families on the held-out
// test rows, with and without the spectrum features.
RegressionReport run_regression_experiment(const LabeledDataset& dataset,
                                           const ToolkitConfig& cfg, uint64_t seed);

// Per resolution: discretizes usage, tunes per family, reports macro F1 on
// test rows plus the majority-class baseline row.
ClassificationReport run_classification_experiment(const LabeledDataset& dataset,
                                                   const ToolkitConfig& cfg, uint64_t seed);

// Full chain from a manifest: split, features, both experiments.
ExperimentReport run_full_experiment(const DeviceManifest& manifest, const ToolkitConfig& cfg,
                                     uint64_t seed, bool regression = true,
                                     bool classification = true);

}
