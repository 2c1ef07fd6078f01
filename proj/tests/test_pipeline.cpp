#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <map>
#include <random>
#include <set>

#include "sramage/agesim.hpp"
#include "sramage/pipeline.hpp"
#include "sramage/rng.hpp"

using namespace sramage;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("sramage_pipe_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

// Synthetic monotone tuning data: one feature equal to usage plus noise,
// several devices, a handful of rows per device.
TuningData monotone_data(size_t devices, size_t rows_per_device, const SearchConfig& config,
                         uint64_t seed, double noise = 0.05) {
    Rng rng(seed);
    LabeledDataset ds;
    ds.feature_names = {"f0", "f1"};
    const size_t n = devices * rows_per_device;
    ds.X = Matrix(n, 2);
    for (size_t d = 0; d < devices; ++d) {
        const double usage = 1.0 + static_cast<double>(d);
        for (size_t r = 0; r < rows_per_device; ++r) {
            const size_t row = d * rows_per_device + r;
            ds.X.at(row, 0) = usage + noise * rng.normal();
            ds.X.at(row, 1) = rng.normal();
            ds.usage.push_back(usage);
            ds.device_ids.push_back("dev" + std::to_string(d));
            ds.split.push_back(SplitTag::train);
        }
    }
    return make_tuning_data(ds, Task::regression, nullptr, config);
}

}

TEST_CASE("device folds partition and stratify") {
    Rng rng(1);
    for (int trial = 0; trial < 150; ++trial) {
        const size_t n = 10 + rng.below(50);
        std::vector<std::pair<std::string, double>> devices;
        for (size_t i = 0; i < n; ++i)
            devices.emplace_back("dev" + std::to_string(i), rng.uniform_real(0, 18));
        const size_t k = 2 + rng.below(4);
        const auto folds = assign_device_folds(devices, k, 1.0, rng.next_u64());

        // every device in exactly one fold
        CHECK(folds.size() == n);
        std::map<int64_t, std::map<int, size_t>> stratum_fold_counts;
        for (const auto& [id, fold] : folds) {
            CHECK(fold >= 0);
            CHECK(fold < static_cast<int>(k));
        }
        for (const auto& [id, usage] : devices) {
            const int64_t bin = static_cast<int64_t>(std::floor(usage));
            stratum_fold_counts[bin][folds.at(id)]++;
        }
        // fold sizes differ by <= 1 inside each stratum
        for (const auto& [bin, counts] : stratum_fold_counts) {
            size_t lo = SIZE_MAX, hi = 0;
            for (size_t f = 0; f < k; ++f) {
                const auto it = counts.find(static_cast<int>(f));
                const size_t c = it == counts.end() ? 0 : it->second;
                lo = std::min(lo, c);
                hi = std::max(hi, c);
            }
            CHECK(hi - lo <= 1);
        }
    }
}

TEST_CASE("fold assignment is deterministic per seed") {
    std::vector<std::pair<std::string, double>> devices;
    for (size_t i = 0; i < 23; ++i)
        devices.emplace_back("dev" + std::to_string(i), static_cast<double>(i % 7));
    const auto a = assign_device_folds(devices, 5, 1.0, 99);
    const auto b = assign_device_folds(devices, 5, 1.0, 99);
    CHECK(a == b);
}

TEST_CASE("random_search basics") {
    SearchConfig config;
    config.num_candidates = 1;
    config.k_folds = 3;
    config.seed = 5;
    config.jobs = 1;
    const TuningData data = monotone_data(9, 4, config, 7);

    SUBCASE("a single candidate wins by default") {
        const SearchOutcome outcome =
            random_search(config, LearnerKind::decision_tree, Task::regression, data);
        CHECK(outcome.best_index == 0);
        CHECK(outcome.num_candidates == 1);
    }

    SUBCASE("the degenerate full-neighborhood knn loses to a useful one") {
        SearchConfig sc = config;
        sc.num_candidates = 40;
        sc.spaces.knn_k_min = 1;
        sc.spaces.knn_k_max = 50;  // oversized ks clamp to the whole fold (36 rows)
        const SearchOutcome outcome = random_search(sc, LearnerKind::knn, Task::regression, data);
        // with monotone data, small k beats the global-mean predictor
        CHECK(std::get<KnnParams>(outcome.best).k < 30);
        CHECK(outcome.cv_score > 0.5);
    }
}

TEST_CASE("random_search determinism across jobs") {
    SearchConfig config;
    config.num_candidates = 12;
    config.k_folds = 3;
    config.seed = 11;
    const TuningData data = monotone_data(9, 3, config, 13);

    config.jobs = 1;
    const SearchOutcome a = random_search(config, LearnerKind::random_forest, Task::regression,
                                          data);
    config.jobs = 4;
    const SearchOutcome b = random_search(config, LearnerKind::random_forest, Task::regression,
                                          data);
    CHECK(a.best_index == b.best_index);
    CHECK(a.cv_score == b.cv_score);
}

TEST_CASE("random_search excludes degenerate candidates instead of aborting") {
    // All validation folds hold a single usage value: r2 is undefined, every
    // candidate fails, and the search reports that rather than crashing.
    SearchConfig config;
    config.num_candidates = 3;
    config.k_folds = 2;
    config.seed = 3;
    config.jobs = 1;

    LabeledDataset ds;
    ds.feature_names = {"f0"};
    ds.X = Matrix(4, 1, {0.0, 0.1, 1.0, 1.1});
    ds.usage = {5.0, 5.0, 5.0, 5.0};
    ds.device_ids = {"a", "a", "b", "b"};
    ds.split.assign(4, SplitTag::train);
    const TuningData data = make_tuning_data(ds, Task::regression, nullptr, config);
    CHECK_THROWS_AS(random_search(config, LearnerKind::knn, Task::regression, data),
                    DegenerateDataError);
}

TEST_CASE("experiment report json and canonical form") {
    ExperimentReport report;
    report.seed = 9;
    report.config_hash = "cafe";
    report.has_regression = true;
    LearnerRegressionResult lr;
    lr.learner = "knn";
    lr.best_params = KnnParams{17};
    lr.cv_score = 0.5;
    lr.test = {0.9, 0.1};
    lr.ablation_params = KnnParams{3};
    lr.ablation_test = {0.4, 0.3};
    lr.wall_clock_s = 12.34;
    report.regression.learners.push_back(lr);

    const std::string full = report.to_json_string();
    const std::string canonical = report.to_canonical_json_string();
    CHECK(full.find("wall_clock_s") != std::string::npos);
    CHECK(canonical.find("wall_clock_s") == std::string::npos);

    ExperimentReport other = report;
    other.regression.learners[0].wall_clock_s = 99.0;
    CHECK(other.to_canonical_json_string() == canonical);
    CHECK(other.to_json_string() != full);
}

TEST_CASE("full experiment on a small strong-drift fleet") {
    TempDir dir;
    FleetConfig fleet;
    fleet.num_devices = 14;
    fleet.num_samples = 20;
    fleet.sram_bytes = 512;
    fleet.usage_min = 2.0;
    fleet.usage_max = 18.0;
    fleet.population.unstable_fraction = 0.9;
    fleet.population.sigma_narrow = 1.0;
    fleet.profile.drift_rate = 0.1;
    fleet.profile.fraction_positive = 1.0;
    fleet.profile.fraction_negative = 0.0;
    fleet.profile.address_gradient = -0.2;
    // many small components: the stacked field stays inside the logistic
    // transition band over the whole usage span
    for (size_t c = 1; c <= 12; ++c) fleet.profile.low_freq_components.push_back({c, 0.05});
    const DeviceManifest manifest =
        generate_fleet(fleet, 51, dir.path.string(), ReproStanza{51, "h", "0.1.0"});

    ToolkitConfig cfg;
    cfg.group_size = 5;
    cfg.block_bytes = 16;
    cfg.feature_k = 10;
    cfg.num_candidates = 6;
    cfg.budget_overrides.clear();
    cfg.k_folds = 3;
    cfg.resolutions = {9};
    cfg.jobs = 1;
    cfg.spaces.knn_k_min = 1;
    cfg.spaces.knn_k_max = 12;
    cfg.spaces.forest_num_trees_min = 5;
    cfg.spaces.forest_num_trees_max = 20;
    cfg.spaces.tree_max_depth_max = 8;

    const SplitAssignment split = stratified_device_split(manifest, 0.7, 1.0, 51);
    const DatasetBundle bundle = build_dataset(manifest, split, cfg);

    // dataset shape: 14 devices x 4 groups of 5 (20 samples / 5)
    CHECK(bundle.dataset.num_rows() == 14 * 4);
    CHECK(bundle.dataset.feature_names.size() == 6 + 10);
    CHECK(bundle.schema.selected_freq_indices.size() == 10);
    CHECK(std::is_sorted(bundle.schema.selected_freq_indices.begin(),
                         bundle.schema.selected_freq_indices.end()));

    // split tags are per-device
    std::map<std::string, SplitTag> tag_of;
    for (size_t r = 0; r < bundle.dataset.num_rows(); ++r) {
        const auto [it, fresh] =
            tag_of.try_emplace(bundle.dataset.device_ids[r], bundle.dataset.split[r]);
        if (!fresh) CHECK(it->second == bundle.dataset.split[r]);
    }

    const RegressionReport reg = run_regression_experiment(bundle.dataset, cfg, 51);
    REQUIRE(reg.learners.size() == 4);
    // strong drift is learnable: the best family does well on held-out devices
    double best_r2 = -1e9;
    for (const auto& lr : reg.learners) best_r2 = std::max(best_r2, lr.test.r2);
    CHECK(best_r2 > 0.5);

    const ClassificationReport cls = run_classification_experiment(bundle.dataset, cfg, 51);
    REQUIRE(cls.resolutions.size() == 1);
    CHECK(cls.resolutions[0].num_classes == 2);
    CHECK_FALSE(cls.resolutions[0].skipped);
    REQUIRE(cls.resolutions[0].learners.size() == 4);

    // baseline row equals an independently computed majority-class F1
    const auto test_rows = bundle.dataset.test_indices();
    const double max_usage =
        *std::max_element(bundle.dataset.usage.begin(), bundle.dataset.usage.end());
    const UsageDiscretizer disc(9, max_usage);
    std::map<int, size_t> train_counts;
    for (size_t r : bundle.dataset.train_indices())
        train_counts[disc.class_of(bundle.dataset.usage[r])]++;
    int majority = 0;
    size_t majority_count = 0;
    for (const auto& [c, count] : train_counts) {
        if (count > majority_count) {
            majority = c;
            majority_count = count;
        }
    }
    std::vector<int> truth, pred;
    for (size_t r : test_rows) {
        truth.push_back(disc.class_of(bundle.dataset.usage[r]));
        pred.push_back(majority);
    }
    const double baseline = f1_multiclass(truth, pred, disc.num_classes()).f1_macro;
    CHECK(cls.resolutions[0].baseline_f1_macro == baseline);
    CHECK(cls.resolutions[0].majority_class == majority);
}

TEST_CASE("build_dataset chunked selection matches the in-memory path") {
    TempDir dir;
    FleetConfig fleet;
    fleet.num_devices = 6;
    fleet.num_samples = 8;
    fleet.sram_bytes = 64;
    fleet.usage_min = 1.0;
    fleet.usage_max = 12.0;
    fleet.profile.drift_rate = 0.2;
    fleet.profile.fraction_positive = 0.4;
    const DeviceManifest manifest =
        generate_fleet(fleet, 61, dir.path.string(), ReproStanza{61, "h", "0.1.0"});
    const SplitAssignment split = stratified_device_split(manifest, 0.7, 1.0, 61);

    ToolkitConfig cfg;
    cfg.group_size = 4;
    cfg.block_bytes = 8;
    cfg.feature_k = 12;

    ToolkitConfig tiny = cfg;
    tiny.selection_budget_mb = 1e-5;  // forces many chunked passes

    const DatasetBundle a = build_dataset(manifest, split, cfg);
    const DatasetBundle b = build_dataset(manifest, split, tiny);
    CHECK(a.schema.selected_freq_indices == b.schema.selected_freq_indices);
    REQUIRE(a.dataset.num_rows() == b.dataset.num_rows());
    for (size_t r = 0; r < a.dataset.num_rows(); ++r)
        for (size_t c = 0; c < a.dataset.X.cols(); ++c)
            CHECK(a.dataset.X.at(r, c) == b.dataset.X.at(r, c));
}
