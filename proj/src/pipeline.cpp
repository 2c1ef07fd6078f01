#include "sramage/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "sramage/error.hpp"
#include "sramage/parallel.hpp"
#include "sramage/rng.hpp"

namespace sramage {

namespace {

using nlohmann::json;

constexpr double kFailedScore = -std::numeric_limits<double>::infinity();

// Sub-stream tags.
constexpr uint64_t kStreamFolds = 0xF01D;
constexpr uint64_t kStreamSampling = 0x5A3B;
constexpr uint64_t kStreamFinalFit = 0xFFF1;
constexpr uint64_t kStreamRegression = 0x0E60;
constexpr uint64_t kStreamAblation = 0x0AB0;
constexpr uint64_t kStreamClassification = 0xC1A0;

const std::vector<LearnerKind> kFamilies = {LearnerKind::knn, LearnerKind::svm,
                                            LearnerKind::decision_tree,
                                            LearnerKind::random_forest};

double elapsed_s(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}

SearchConfig search_config_from(const ToolkitConfig& cfg, uint64_t seed) {
    SearchConfig sc;
    sc.num_candidates = cfg.num_candidates;
    sc.k_folds = cfg.k_folds;
    sc.seed = seed;
    sc.budget_overrides = cfg.budget_overrides;
    sc.spaces = cfg.spaces;
    sc.learner_options = cfg.learner_options();
    sc.mape_epsilon = cfg.mape_epsilon;
    sc.stratum_bin_months = cfg.split_bin_months;
    sc.jobs = cfg.jobs;
    return sc;
}

std::map<std::string, int> assign_device_folds(
    const std::vector<std::pair<std::string, double>>& devices, size_t k_folds,
    double bin_months, uint64_t seed) {
    if (k_folds < 2) throw InvalidArgumentError("assign_device_folds: k_folds must be >= 2");
    if (devices.size() < k_folds)
        throw InvalidArgumentError("assign_device_folds: fewer devices than folds");
    if (bin_months <= 0.0)
        throw InvalidArgumentError("assign_device_folds: bin_months must be positive");

    std::map<int64_t, std::vector<size_t>> strata;
    for (size_t i = 0; i < devices.size(); ++i)
        strata[static_cast<int64_t>(std::floor(devices[i].second / bin_months))].push_back(i);

    Rng rng(Rng::derive(seed, kStreamFolds));
    std::map<std::string, int> fold_of;
    size_t offset = 0;
    // Deal shuffled devices round-robin within each stratum; the rotating
    // offset keeps global fold sizes balanced too.
    for (auto& [bin, members] : strata) {
        rng.shuffle(members);
        for (size_t i = 0; i < members.size(); ++i)
            fold_of[devices[members[i]].first] = static_cast<int>((offset + i) % k_folds);
        offset = (offset + members.size()) % k_folds;
    }
    return fold_of;
}

TuningData make_tuning_data(const LabeledDataset& train_rows, Task task,
                            const UsageDiscretizer* discretizer, const SearchConfig& config) {
    train_rows.validate();
    TuningData data;
    data.x = train_rows.X;
    data.usage = train_rows.usage;
    data.device_ids = train_rows.device_ids;
    data.k_folds = config.k_folds;

    if (task == Task::classification) {
        if (discretizer == nullptr)
            throw InvalidArgumentError("make_tuning_data: classification needs a discretizer");
        data.num_classes = discretizer->num_classes();
        data.labels.resize(data.usage.size());
        for (size_t i = 0; i < data.usage.size(); ++i)
            data.labels[i] = discretizer->class_of(data.usage[i]);
    }

    // Unique devices in row order, with their usage.
    std::vector<std::pair<std::string, double>> devices;
    std::map<std::string, size_t> seen;
    for (size_t i = 0; i < data.device_ids.size(); ++i) {
        if (seen.emplace(data.device_ids[i], devices.size()).second)
            devices.emplace_back(data.device_ids[i], data.usage[i]);
    }
    const auto fold_of = assign_device_folds(devices, config.k_folds, config.stratum_bin_months,
                                             config.seed);
    data.fold_of_row.resize(data.device_ids.size());
    for (size_t i = 0; i < data.device_ids.size(); ++i)
        data.fold_of_row[i] = fold_of.at(data.device_ids[i]);
    return data;
}

namespace {

HyperParams sample_candidate(LearnerKind family, const SearchSpaces& s, Rng& rng) {
    switch (family) {
        case LearnerKind::knn:
            return KnnParams{static_cast<int>(rng.uniform_int(s.knn_k_min, s.knn_k_max))};
        case LearnerKind::svm:
            return SvmParams{rng.log_uniform(s.svm_c_min, s.svm_c_max),
                             rng.log_uniform(s.svm_gamma_min, s.svm_gamma_max)};
        case LearnerKind::decision_tree:
            return TreeParams{
                static_cast<int>(rng.uniform_int(s.tree_max_depth_min, s.tree_max_depth_max)),
                static_cast<int>(rng.uniform_int(s.tree_min_samples_split_min,
                                                 s.tree_min_samples_split_max)),
                static_cast<int>(
                    rng.uniform_int(s.tree_min_features_min, s.tree_min_features_max))};
        case LearnerKind::random_forest:
            return ForestParams{
                TreeParams{
                    static_cast<int>(rng.uniform_int(s.tree_max_depth_min, s.tree_max_depth_max)),
                    static_cast<int>(rng.uniform_int(s.tree_min_samples_split_min,
                                                     s.tree_min_samples_split_max)),
                    static_cast<int>(
                        rng.uniform_int(s.tree_min_features_min, s.tree_min_features_max))},
                static_cast<int>(
                    rng.uniform_int(s.forest_num_trees_min, s.forest_num_trees_max)),
                true};
    }
    throw InvalidArgumentError("sample_candidate: unknown family");
}

bool svm_converged(const TrainedModel& model) {
    if (const auto* svc = std::get_if<SvmClassifierState>(&model.state)) {
        for (const auto& p : svc->pairs)
            if (!p.converged) return false;
        return true;
    }
    if (const auto* svr = std::get_if<SvmRegressorState>(&model.state)) return svr->converged;
    return true;
}

// Mean CV score of one candidate, or -inf when any fold fails.
double score_candidate(const HyperParams& params, Task task, const TuningData& data,
                       const SearchConfig& config, uint64_t candidate_seed) {
    double total = 0.0;
    for (size_t fold = 0; fold < config.k_folds; ++fold) {
        std::vector<size_t> fit_rows, val_rows;
        for (size_t i = 0; i < data.fold_of_row.size(); ++i) {
            if (data.fold_of_row[i] == static_cast<int>(fold))
                val_rows.push_back(i);
            else
                fit_rows.push_back(i);
        }
        if (fit_rows.empty() || val_rows.empty()) return kFailedScore;

        const Matrix x_fit = data.x.take_rows(fit_rows);
        const Matrix x_val = data.x.take_rows(val_rows);

        try {
            if (task == Task::regression) {
                std::vector<double> y_fit(fit_rows.size()), y_val(val_rows.size());
                for (size_t i = 0; i < fit_rows.size(); ++i) y_fit[i] = data.usage[fit_rows[i]];
                for (size_t i = 0; i < val_rows.size(); ++i) y_val[i] = data.usage[val_rows[i]];
                const TrainedModel model =
                    fit_regressor(params, x_fit, y_fit, Rng::derive(candidate_seed, fold),
                                  config.learner_options);
                if (!svm_converged(model)) return kFailedScore;
                total += r2_score(y_val, model.predict(x_val));
            } else {
                std::vector<int> y_fit(fit_rows.size()), y_val(val_rows.size());
                for (size_t i = 0; i < fit_rows.size(); ++i) y_fit[i] = data.labels[fit_rows[i]];
                for (size_t i = 0; i < val_rows.size(); ++i) y_val[i] = data.labels[val_rows[i]];
                const TrainedModel model = fit_classifier(params, x_fit, y_fit, data.num_classes,
                                                          Rng::derive(candidate_seed, fold),
                                                          config.learner_options);
                if (!svm_converged(model)) return kFailedScore;
                total += f1_multiclass(y_val, model.predict_labels(x_val), data.num_classes)
                             .f1_macro;
            }
        } catch (const DegenerateDataError&) {
            return kFailedScore;
        }
    }
    return total / static_cast<double>(config.k_folds);
}

}

SearchOutcome random_search(const SearchConfig& config, LearnerKind family, Task task,
                            const TuningData& data) {
    const size_t num_candidates = config.candidates_for(learner_name(family));
    if (num_candidates == 0) throw InvalidArgumentError("random_search: no candidates");

    // All candidates are drawn up front so candidate index i is identical
    // regardless of how evaluation is scheduled.
    Rng sampling_rng(Rng::derive(Rng::derive(config.seed, kStreamSampling),
                                 static_cast<uint64_t>(family)));
    std::vector<HyperParams> candidates;
    candidates.reserve(num_candidates);
    for (size_t i = 0; i < num_candidates; ++i)
        candidates.push_back(sample_candidate(family, config.spaces, sampling_rng));

    std::vector<double> scores(num_candidates, kFailedScore);
    parallel_for(num_candidates, config.jobs, [&](size_t i) {
        scores[i] = score_candidate(candidates[i], task, data, config,
                                    Rng::derive(config.seed, 7919 + i));
    });

    SearchOutcome outcome;
    outcome.num_candidates = num_candidates;
    size_t best = num_candidates;
    for (size_t i = 0; i < num_candidates; ++i) {
        if (std::isinf(scores[i]) && scores[i] < 0) {
            outcome.num_failed++;
            continue;
        }
        if (best == num_candidates || scores[i] > scores[best]) best = i;
    }
    if (best == num_candidates)
        throw DegenerateDataError("random_search: every candidate failed");
    outcome.best = candidates[best];
    outcome.cv_score = scores[best];
    outcome.best_index = best;
    return outcome;
}

// --- dataset building --------------------------------------------------------

namespace {

struct GroupRaw {
    PctOnesStats pct;
    AddressRegression reg;
    std::vector<double> spectrum;
};

GroupRaw compute_group_raw(const BitSampleSet& set, size_t first, size_t count,
                           const SchemaOptions& options, const PctOnesStats* device_pct) {
    GroupRaw raw;
    const P1Map p1 = compute_p1_range(set, first, count);
    raw.pct = device_pct ? *device_pct : pct_ones_stats_range(set, first, count);
    raw.reg = p1_address_regression(p1, options.block_bytes, options.spearman_per_bit);
    raw.spectrum = p1_spectrum(p1);
    return raw;
}

FeatureVector assemble_row(const BitSampleSet& set, const GroupRaw& raw,
                           const FeatureSchema& schema) {
    FeatureVector fv;
    fv.device_id = set.device_id;
    fv.usage_months = set.usage_months;
    fv.values = {raw.pct.max,       raw.pct.mean, raw.pct.min,
                 raw.reg.intercept, raw.reg.slope, raw.reg.spearman};
    fv.values.reserve(schema.num_features());
    for (size_t idx : schema.selected_freq_indices) fv.values.push_back(raw.spectrum[idx]);
    return fv;
}

}

DatasetBundle build_dataset(const DeviceManifest& manifest, const SplitAssignment& split,
                            const ToolkitConfig& cfg) {
    manifest.validate();
    if (manifest.entries.empty()) throw InvalidArgumentError("build_dataset: empty manifest");
    for (const auto& e : manifest.entries)
        if (!split.is_train(e.device_id) && split.test_devices.count(e.device_id) == 0)
            throw InvalidArgumentError("build_dataset: device missing from split: " + e.device_id);

    SchemaOptions options;
    options.num_bits = manifest.sram_bytes() * 8;
    options.group_size = cfg.group_size;
    options.block_bytes = cfg.block_bytes;
    options.pct1s_per_device = cfg.pct1s_per_device;
    options.spearman_per_bit = cfg.spearman_per_bit;

    const size_t bins = options.num_bits / 2 + 1;
    size_t train_groups = 0;
    for (const auto& e : manifest.entries)
        if (split.is_train(e.device_id)) train_groups += e.dump_paths.size() / cfg.group_size;
    if (train_groups == 0) throw InvalidArgumentError("build_dataset: no training groups");

    const double budget_bytes = cfg.selection_budget_mb * 1024.0 * 1024.0;
    const bool in_memory =
        static_cast<double>(train_groups) * static_cast<double>(bins) * 8.0 <= budget_bytes;

    DatasetBundle bundle;
    std::vector<FeatureVector> rows;
    std::vector<SplitTag> tags;
    ExtractStats stats;

    if (in_memory) {
        // Single pass over training devices: keep each group's spectrum and
        // base features, fit the selection, then assemble rows in manifest
        // order (test devices are loaded in the second sweep).
        std::vector<std::vector<GroupRaw>> train_raws;  // per train device
        std::vector<double> usages;
        std::vector<std::vector<double>> spectra;
        spectra.reserve(train_groups);
        for (size_t d = 0; d < manifest.entries.size(); ++d) {
            if (!split.is_train(manifest.entries[d].device_id)) continue;
            const BitSampleSet set = load_device(manifest, d);
            const size_t groups = set.num_samples() / cfg.group_size;
            PctOnesStats device_pct;
            if (options.pct1s_per_device) device_pct = pct_ones_stats(set);
            std::vector<GroupRaw> raws;
            raws.reserve(groups);
            for (size_t g = 0; g < groups; ++g) {
                raws.push_back(compute_group_raw(set, g * cfg.group_size, cfg.group_size,
                                                 options,
                                                 options.pct1s_per_device ? &device_pct : nullptr));
                spectra.push_back(raws.back().spectrum);
                usages.push_back(set.usage_months);
            }
            train_raws.push_back(std::move(raws));
        }
        bundle.schema = fit_frequency_selection(spectra, usages, cfg.feature_k, options);
        spectra.clear();
        spectra.shrink_to_fit();

        size_t train_cursor = 0;
        for (size_t d = 0; d < manifest.entries.size(); ++d) {
            const bool is_train = split.is_train(manifest.entries[d].device_id);
            if (is_train) {
                // Base features and spectra were computed in pass one; the
                // device is reloaded only for its id/usage metadata shell.
                const auto& raws = train_raws[train_cursor++];
                BitSampleSet shell;
                shell.device_id = manifest.entries[d].device_id;
                shell.usage_months = manifest.entries[d].usage_months;
                for (const auto& raw : raws) {
                    rows.push_back(assemble_row(shell, raw, bundle.schema));
                    tags.push_back(SplitTag::train);
                    if (!raw.reg.spearman_defined) stats.undefined_spearman++;
                }
            } else {
                const BitSampleSet set = load_device(manifest, d);
                for (auto& fv :
                     extract_features(set, bundle.schema, cfg.group_size, &stats)) {
                    rows.push_back(std::move(fv));
                    tags.push_back(SplitTag::test);
                }
            }
        }
    } else {
        // Chunked selection: accumulate |spearman| per frequency bin over
        // repeated passes, recomputing group spectra each pass.
        std::vector<double> usages;
        for (const auto& e : manifest.entries) {
            if (!split.is_train(e.device_id)) continue;
            const size_t groups = e.dump_paths.size() / cfg.group_size;
            for (size_t g = 0; g < groups; ++g) usages.push_back(e.usage_months);
        }

        std::vector<double> corr(bins, 0.0);
        const size_t chunk =
            std::max<size_t>(1, static_cast<size_t>(budget_bytes / (8.0 * train_groups)));
        for (size_t c0 = 0; c0 < bins; c0 += chunk) {
            const size_t cb = std::min(chunk, bins - c0);
            Matrix columns(train_groups, cb);
            size_t row = 0;
            for (size_t d = 0; d < manifest.entries.size(); ++d) {
                if (!split.is_train(manifest.entries[d].device_id)) continue;
                const BitSampleSet set = load_device(manifest, d);
                const size_t groups = set.num_samples() / cfg.group_size;
                for (size_t g = 0; g < groups; ++g) {
                    const P1Map p1 = compute_p1_range(set, g * cfg.group_size, cfg.group_size);
                    const std::vector<double> amplitude = p1_spectrum(p1);
                    auto out = columns.row(row++);
                    for (size_t c = 0; c < cb; ++c) out[c] = amplitude[c0 + c];
                }
            }
            const std::vector<double> chunk_corr = column_usage_correlations(columns, usages);
            for (size_t c = 0; c < cb; ++c) corr[c0 + c] = chunk_corr[c];
        }
        bundle.schema = schema_from_bin_correlations(corr, cfg.feature_k, options);

        for (size_t d = 0; d < manifest.entries.size(); ++d) {
            const BitSampleSet set = load_device(manifest, d);
            const SplitTag tag =
                split.is_train(set.device_id) ? SplitTag::train : SplitTag::test;
            for (auto& fv : extract_features(set, bundle.schema, cfg.group_size, &stats)) {
                rows.push_back(std::move(fv));
                tags.push_back(tag);
            }
        }
    }

    bundle.undefined_spearman = stats.undefined_spearman;
    LabeledDataset& ds = bundle.dataset;
    ds.feature_names = bundle.schema.names;
    ds.X = Matrix(rows.size(), bundle.schema.num_features());
    ds.usage.resize(rows.size());
    ds.device_ids.resize(rows.size());
    ds.split = std::move(tags);
    for (size_t r = 0; r < rows.size(); ++r) {
        auto dst = ds.X.row(r);
        for (size_t c = 0; c < rows[r].values.size(); ++c) dst[c] = rows[r].values[c];
        ds.usage[r] = rows[r].usage_months;
        ds.device_ids[r] = rows[r].device_id;
    }
    ds.validate();
    return bundle;
}

// --- experiments -------------------------------------------------------------

namespace {

RegressionScore evaluate_regression(const TrainedModel& model, const Matrix& x_test,
                                    const std::vector<double>& y_test, double epsilon) {
    const std::vector<double> pred = model.predict(x_test);
    RegressionScore score;
    score.r2 = r2_score(y_test, pred);
    score.mape = mape(y_test, pred, epsilon);
    return score;
}

}

RegressionReport run_regression_experiment(const LabeledDataset& dataset,
                                           const ToolkitConfig& cfg, uint64_t seed) {
    dataset.validate();
    const auto train_idx = dataset.train_indices();
    const auto test_idx = dataset.test_indices();
    if (train_idx.empty() || test_idx.empty())
        throw InvalidArgumentError("regression experiment: need both train and test rows");

    const LabeledDataset train = dataset.take_rows(train_idx);
    const LabeledDataset test = dataset.take_rows(test_idx);
    const LearnerOptions options = cfg.learner_options();

    RegressionReport report;
    for (size_t fi = 0; fi < kFamilies.size(); ++fi) {
        const LearnerKind family = kFamilies[fi];
        const auto start = std::chrono::steady_clock::now();

        LearnerRegressionResult result;
        result.learner = learner_name(family);

        // Full feature set.
        {
            SearchConfig sc = search_config_from(cfg, Rng::derive(seed, kStreamRegression + fi));
            const TuningData data = make_tuning_data(train, Task::regression, nullptr, sc);
            const SearchOutcome outcome = random_search(sc, family, Task::regression, data);
            result.best_params = outcome.best;
            result.cv_score = outcome.cv_score;
            result.failed_candidates = outcome.num_failed;
            std::vector<double> y_train = train.usage;
            const TrainedModel model =
                fit_regressor(outcome.best, train.X, y_train,
                              Rng::derive(sc.seed, kStreamFinalFit), options);
            result.test = evaluate_regression(model, test.X, test.usage, cfg.mape_epsilon);
        }

        // Ablation: base features only, re-tuned from scratch.
        {
            LabeledDataset train_base = train;
            train_base.X = train.X.take_prefix_columns(FeatureSchema::kNumBaseFeatures);
            train_base.feature_names.resize(FeatureSchema::kNumBaseFeatures);
            SearchConfig sc = search_config_from(cfg, Rng::derive(seed, kStreamAblation + fi));
            const TuningData data = make_tuning_data(train_base, Task::regression, nullptr, sc);
            const SearchOutcome outcome = random_search(sc, family, Task::regression, data);
            result.ablation_params = outcome.best;
            result.ablation_cv_score = outcome.cv_score;
            const TrainedModel model =
                fit_regressor(outcome.best, train_base.X, train_base.usage,
                              Rng::derive(sc.seed, kStreamFinalFit), options);
            result.ablation_test = evaluate_regression(
                model, test.X.take_prefix_columns(FeatureSchema::kNumBaseFeatures), test.usage,
                cfg.mape_epsilon);
        }

        result.wall_clock_s = elapsed_s(start);
        report.learners.push_back(std::move(result));
    }
    return report;
}

ClassificationReport run_classification_experiment(const LabeledDataset& dataset,
                                                   const ToolkitConfig& cfg, uint64_t seed) {
    dataset.validate();
    const auto train_idx = dataset.train_indices();
    const auto test_idx = dataset.test_indices();
    if (train_idx.empty() || test_idx.empty())
        throw InvalidArgumentError("classification experiment: need both train and test rows");

    const LabeledDataset train = dataset.take_rows(train_idx);
    const LabeledDataset test = dataset.take_rows(test_idx);
    const LearnerOptions options = cfg.learner_options();

    const double max_usage = *std::max_element(dataset.usage.begin(), dataset.usage.end());

    ClassificationReport report;
    for (int resolution : cfg.resolutions) {
        ResolutionReport rr;
        rr.resolution_months = resolution;
        const UsageDiscretizer discretizer(resolution, max_usage);
        rr.num_classes = discretizer.num_classes();

        std::vector<int> y_train(train.usage.size()), y_test(test.usage.size());
        for (size_t i = 0; i < train.usage.size(); ++i)
            y_train[i] = discretizer.class_of(train.usage[i]);
        for (size_t i = 0; i < test.usage.size(); ++i)
            y_test[i] = discretizer.class_of(test.usage[i]);

        std::vector<size_t> train_class_counts(discretizer.num_classes(), 0);
        for (int label : y_train) train_class_counts[label]++;
        const size_t occupied = static_cast<size_t>(
            std::count_if(train_class_counts.begin(), train_class_counts.end(),
                          [](size_t c) { return c > 0; }));
        if (occupied < 2) {
            rr.skipped = true;
            rr.skip_reason = "single occupied class at this resolution";
            report.resolutions.push_back(std::move(rr));
            continue;
        }

        // Majority-class baseline row.
        rr.majority_class = static_cast<int>(
            std::max_element(train_class_counts.begin(), train_class_counts.end()) -
            train_class_counts.begin());
        const std::vector<int> baseline_pred(y_test.size(), rr.majority_class);
        rr.baseline_f1_macro =
            f1_multiclass(y_test, baseline_pred, discretizer.num_classes()).f1_macro;

        for (size_t fi = 0; fi < kFamilies.size(); ++fi) {
            const LearnerKind family = kFamilies[fi];
            const auto start = std::chrono::steady_clock::now();

            LearnerClassificationResult result;
            result.learner = learner_name(family);

            SearchConfig sc = search_config_from(
                cfg, Rng::derive(Rng::derive(seed, kStreamClassification +
                                                       static_cast<uint64_t>(resolution)),
                                 fi));
            const TuningData data =
                make_tuning_data(train, Task::classification, &discretizer, sc);
            const SearchOutcome outcome =
                random_search(sc, family, Task::classification, data);
            result.best_params = outcome.best;
            result.cv_score = outcome.cv_score;
            result.failed_candidates = outcome.num_failed;

            const TrainedModel model =
                fit_classifier(outcome.best, train.X, y_train, discretizer.num_classes(),
                               Rng::derive(sc.seed, kStreamFinalFit), options);
            result.test =
                f1_multiclass(y_test, model.predict_labels(test.X), discretizer.num_classes());
            result.wall_clock_s = elapsed_s(start);
            rr.learners.push_back(std::move(result));
        }
        report.resolutions.push_back(std::move(rr));
    }
    return report;
}

ExperimentReport run_full_experiment(const DeviceManifest& manifest, const ToolkitConfig& cfg,
                                     uint64_t seed, bool regression, bool classification) {
    const SplitAssignment split =
        stratified_device_split(manifest, cfg.train_fraction, cfg.split_bin_months, seed);
    const DatasetBundle bundle = build_dataset(manifest, split, cfg);

    ExperimentReport report;
    report.seed = seed;
    report.config_hash = cfg.hash();
    if (regression) {
        report.has_regression = true;
        report.regression = run_regression_experiment(bundle.dataset, cfg, seed);
    }
    if (classification) {
        report.has_classification = true;
        report.classification = run_classification_experiment(bundle.dataset, cfg, seed);
    }
    return report;
}

// --- report serialization ----------------------------------------------------

namespace {

json params_json(const HyperParams& params) {
    if (const auto* p = std::get_if<KnnParams>(&params)) return json{{"k", p->k}};
    if (const auto* p = std::get_if<SvmParams>(&params))
        return json{{"c", p->c}, {"gamma", p->gamma}};
    if (const auto* p = std::get_if<TreeParams>(&params))
        return json{{"max_depth", p->max_depth},
                    {"min_samples_split", p->min_samples_split},
                    {"min_features_per_split", p->min_features_per_split}};
    const auto& p = std::get<ForestParams>(params);
    return json{{"max_depth", p.tree.max_depth},
                {"min_samples_split", p.tree.min_samples_split},
                {"min_features_per_split", p.tree.min_features_per_split},
                {"num_trees", p.num_trees},
                {"bootstrap", p.bootstrap}};
}

json report_json(const ExperimentReport& r, bool canonical) {
    json j{{"format", "sramage-report"},
           {"version", 1},
           {"repro",
            {{"seed", r.seed}, {"config", r.config_hash}, {"toolkit_version", kToolkitVersion}}}};
    if (r.has_regression) {
        json learners = json::array();
        for (const auto& lr : r.regression.learners) {
            json lj{{"learner", lr.learner},
                    {"best_params", params_json(lr.best_params)},
                    {"cv_score", lr.cv_score},
                    {"failed_candidates", lr.failed_candidates},
                    {"test", {{"r2", lr.test.r2}, {"mape", lr.test.mape}}},
                    {"ablation_no_spectrum",
                     {{"best_params", params_json(lr.ablation_params)},
                      {"cv_score", lr.ablation_cv_score},
                      {"test", {{"r2", lr.ablation_test.r2}, {"mape", lr.ablation_test.mape}}}}}};
            if (!canonical) lj["wall_clock_s"] = lr.wall_clock_s;
            learners.push_back(std::move(lj));
        }
        j["regression"] = {{"learners", std::move(learners)}};
    }
    if (r.has_classification) {
        json resolutions = json::array();
        for (const auto& rr : r.classification.resolutions) {
            json rj{{"resolution_months", rr.resolution_months},
                    {"num_classes", rr.num_classes},
                    {"skipped", rr.skipped}};
            if (rr.skipped) {
                rj["skip_reason"] = rr.skip_reason;
            } else {
                rj["majority_class"] = rr.majority_class;
                rj["baseline_f1_macro"] = rr.baseline_f1_macro;
                json learners = json::array();
                for (const auto& lr : rr.learners) {
                    json per_class = json::array();
                    for (const auto& cs : lr.test.per_class)
                        per_class.push_back(json::array({cs.precision, cs.recall, cs.f1}));
                    json lj{{"learner", lr.learner},
                            {"best_params", params_json(lr.best_params)},
                            {"cv_score", lr.cv_score},
                            {"failed_candidates", lr.failed_candidates},
                            {"test",
                             {{"f1_macro", lr.test.f1_macro},
                              {"per_class", std::move(per_class)}}}};
                    if (!canonical) lj["wall_clock_s"] = lr.wall_clock_s;
                    learners.push_back(std::move(lj));
                }
                rj["learners"] = std::move(learners);
            }
            resolutions.push_back(std::move(rj));
        }
        j["classification"] = {{"resolutions", std::move(resolutions)}};
    }
    return j;
}

std::string format_params_short(const HyperParams& params) {
    char buf[160];
    if (const auto* p = std::get_if<KnnParams>(&params)) {
        std::snprintf(buf, sizeof(buf), "k=%d", p->k);
    } else if (const auto* p = std::get_if<SvmParams>(&params)) {
        std::snprintf(buf, sizeof(buf), "C=%.4g gamma=%.4g", p->c, p->gamma);
    } else if (const auto* p = std::get_if<TreeParams>(&params)) {
        std::snprintf(buf, sizeof(buf), "depth=%d min_split=%d feats=%d", p->max_depth,
                      p->min_samples_split, p->min_features_per_split);
    } else {
        const auto& fp = std::get<ForestParams>(params);
        std::snprintf(buf, sizeof(buf), "trees=%d depth=%d min_split=%d feats=%d", fp.num_trees,
                      fp.tree.max_depth, fp.tree.min_samples_split,
                      fp.tree.min_features_per_split);
    }
    return buf;
}

}

std::string ExperimentReport::to_json_string() const { return report_json(*this, false).dump(2); }

std::string ExperimentReport::to_canonical_json_string() const {
    return report_json(*this, true).dump(2);
}

std::string ExperimentReport::to_text_table() const {
    std::ostringstream out;
    out << "seed " << seed << "  config " << config_hash << "  toolkit " << kToolkitVersion
        << "\n";
    if (has_regression) {
        out << "\nRegression on held-out test devices\n";
        out << "learner  r2        mape      cv_r2     abl_r2    abl_mape  params\n";
        for (const auto& lr : regression.learners) {
            char line[256];
            std::snprintf(line, sizeof(line), "%-8s %-9.4f %-9.4f %-9.4f %-9.4f %-9.4f %s\n",
                          lr.learner.c_str(), lr.test.r2, lr.test.mape, lr.cv_score,
                          lr.ablation_test.r2, lr.ablation_test.mape,
                          format_params_short(lr.best_params).c_str());
            out << line;
        }
    }
    if (has_classification) {
        out << "\nClassification macro F1 on held-out test devices\n";
        out << "res  classes  baseline  ";
        if (!classification.resolutions.empty() && !classification.resolutions[0].learners.empty())
            for (const auto& lr : classification.resolutions[0].learners)
                out << lr.learner << "      ";
        out << "\n";
        for (const auto& rr : classification.resolutions) {
            char head[64];
            std::snprintf(head, sizeof(head), "%-4d %-8d ", rr.resolution_months, rr.num_classes);
            out << head;
            if (rr.skipped) {
                out << "skipped: " << rr.skip_reason << "\n";
                continue;
            }
            char base[32];
            std::snprintf(base, sizeof(base), "%-9.4f ", rr.baseline_f1_macro);
            out << base;
            for (const auto& lr : rr.learners) {
                char cell[32];
                std::snprintf(cell, sizeof(cell), "%-9.4f", lr.test.f1_macro);
                out << cell;
            }
            out << "\n";
        }
    }
    return out.str();
}

void ExperimentReport::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("report: cannot open for writing: " + path);
    out << to_json_string() << "\n";
    if (!out) throw IoError("report: write failed: " + path);
}

}
