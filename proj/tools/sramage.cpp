// sramage: analyses uninitialized-SRAM startup dumps for ageing evidence and
// trains usage-time estimators. Subcommands cover the whole flow: simulate a
// synthetic fleet, ingest and validate dumps, build features, split devices,
// tune and train learners, evaluate, render diagnostics and run full reports.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sramage/agesim.hpp"
#include "sramage/config.hpp"
#include "sramage/datasetio.hpp"
#include "sramage/features.hpp"
#include "sramage/hash.hpp"
#include "sramage/learners.hpp"
#include "sramage/pipeline.hpp"
#include "sramage/render.hpp"
#include "sramage/version.hpp"

namespace fs = std::filesystem;
using namespace sramage;

namespace {

// Exit codes by failure category.
constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitFormat = 4;
constexpr int kExitSchema = 5;
constexpr int kExitDegenerate = 6;
constexpr int kExitInvalid = 7;

struct CommonOptions {
    std::string config_path;
    uint64_t seed = 1;
    size_t jobs = 0;
};

ToolkitConfig effective_config(const CommonOptions& common) {
    ToolkitConfig cfg;
    if (!common.config_path.empty()) cfg = ToolkitConfig::load(common.config_path);
    if (common.jobs != 0) cfg.jobs = common.jobs;
    return cfg;
}

ReproStanza make_repro(uint64_t seed, const ToolkitConfig& cfg) {
    ReproStanza repro;
    repro.seed = seed;
    repro.config_hash = cfg.hash();
    return repro;
}

std::vector<std::pair<size_t, double>> parse_low_freq(const std::string& spec) {
    std::vector<std::pair<size_t, double>> components;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const size_t colon = item.find(':');
        if (colon == std::string::npos)
            throw InvalidArgumentError("--low-freq expects bin:amplitude[,bin:amplitude...]");
        components.emplace_back(std::stoul(item.substr(0, colon)),
                                std::stod(item.substr(colon + 1)));
    }
    return components;
}

std::vector<double> parse_double_list(const std::string& spec) {
    std::vector<double> values;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) values.push_back(std::stod(item));
    return values;
}

HyperParams params_from_file(const std::string& path, LearnerKind family) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("params: cannot open: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("params: invalid JSON: ") + e.what());
    }
    const nlohmann::json& p = j.contains("best_params") ? j.at("best_params") : j;
    try {
        switch (family) {
            case LearnerKind::knn:
                return KnnParams{p.at("k").get<int>()};
            case LearnerKind::svm:
                return SvmParams{p.at("c").get<double>(), p.at("gamma").get<double>()};
            case LearnerKind::decision_tree:
                return TreeParams{p.at("max_depth").get<int>(),
                                  p.at("min_samples_split").get<int>(),
                                  p.at("min_features_per_split").get<int>()};
            case LearnerKind::random_forest:
                return ForestParams{
                    TreeParams{p.at("max_depth").get<int>(), p.at("min_samples_split").get<int>(),
                               p.at("min_features_per_split").get<int>()},
                    p.at("num_trees").get<int>(),
                    p.contains("bootstrap") ? p.at("bootstrap").get<bool>() : true};
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("params: missing field for this family: ") + e.what());
    }
    throw FormatError("params: unknown family");
}

nlohmann::json params_to_json(const HyperParams& params) {
    if (const auto* p = std::get_if<KnnParams>(&params)) return {{"k", p->k}};
    if (const auto* p = std::get_if<SvmParams>(&params))
        return {{"c", p->c}, {"gamma", p->gamma}};
    if (const auto* p = std::get_if<TreeParams>(&params))
        return {{"max_depth", p->max_depth},
                {"min_samples_split", p->min_samples_split},
                {"min_features_per_split", p->min_features_per_split}};
    const auto& p = std::get<ForestParams>(params);
    return {{"max_depth", p.tree.max_depth},
            {"min_samples_split", p.tree.min_samples_split},
            {"min_features_per_split", p.tree.min_features_per_split},
            {"num_trees", p.num_trees},
            {"bootstrap", p.bootstrap}};
}

void write_json(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << j.dump(2) << "\n";
    if (!out) throw IoError("write failed: " + path);
}

// --- subcommand bodies -------------------------------------------------------

int cmd_simulate(const CommonOptions& common, const std::string& out_dir, FleetConfig fleet,
                 const std::string& usages_spec, const std::string& low_freq_spec) {
    if (!usages_spec.empty()) fleet.usage_list = parse_double_list(usages_spec);
    if (!low_freq_spec.empty())
        fleet.profile.low_freq_components = parse_low_freq(low_freq_spec);

    nlohmann::json fleet_doc{{"devices", fleet.num_devices},
                             {"samples", fleet.num_samples},
                             {"sram_bytes", fleet.sram_bytes},
                             {"usage_min", fleet.usage_min},
                             {"usage_max", fleet.usage_max},
                             {"drift_rate", fleet.profile.drift_rate},
                             {"address_gradient", fleet.profile.address_gradient}};
    ReproStanza repro;
    repro.seed = common.seed;
    repro.config_hash = fnv1a_hex(fleet_doc.dump());

    const DeviceManifest manifest = generate_fleet(fleet, common.seed, out_dir, repro);
    std::cout << "wrote " << manifest.num_devices() << " devices to " << out_dir
              << " (manifest.json, " << fleet.num_samples << " samples x "
              << fleet.sram_bytes << " bytes each)\n";
    return kExitOk;
}

int cmd_ingest(const std::string& manifest_path) {
    const DeviceManifest manifest = DeviceManifest::load(manifest_path);
    std::cout << "manifest: " << manifest.num_devices() << " devices, " << manifest.sram_bytes()
              << " bytes of SRAM each\n";
    std::cout << "device        usage_months  samples  mean_pct1s\n";
    size_t total_samples = 0;
    for (size_t d = 0; d < manifest.num_devices(); ++d) {
        const BitSampleSet set = load_device(manifest, d);
        const PctOnesStats pct = pct_ones_stats(set);
        char line[128];
        std::snprintf(line, sizeof(line), "%-13s %-13.3f %-8zu %.6f\n", set.device_id.c_str(),
                      set.usage_months, set.num_samples(), pct.mean);
        std::cout << line;
        total_samples += set.num_samples();
    }
    std::cout << "total samples: " << total_samples << "\n";
    return kExitOk;
}

int cmd_split(const CommonOptions& common, const std::string& manifest_path,
              const std::string& out_path, double train_fraction, double bin_months) {
    const ToolkitConfig cfg = effective_config(common);
    const DeviceManifest manifest = DeviceManifest::load(manifest_path);
    const SplitAssignment split =
        stratified_device_split(manifest, train_fraction, bin_months, common.seed);
    split.save(out_path, make_repro(common.seed, cfg));
    std::cout << "split: " << split.train_devices.size() << " train / "
              << split.test_devices.size() << " test devices -> " << out_path << "\n";
    return kExitOk;
}

int cmd_features(const CommonOptions& common, const std::string& manifest_path,
                 const std::string& split_path, const std::string& schema_in,
                 const std::string& out_dataset, const std::string& out_schema,
                 size_t group_size_override, size_t block_bytes_override,
                 size_t feature_k_override) {
    ToolkitConfig cfg = effective_config(common);
    if (group_size_override) cfg.group_size = group_size_override;
    if (block_bytes_override) cfg.block_bytes = block_bytes_override;
    if (feature_k_override) cfg.feature_k = feature_k_override;

    const DeviceManifest manifest = DeviceManifest::load(manifest_path);
    const SplitAssignment split = SplitAssignment::load(split_path);
    const ReproStanza repro = make_repro(common.seed, cfg);

    if (!schema_in.empty()) {
        // Frozen schema: extraction only.
        const FeatureSchema schema = FeatureSchema::load(schema_in);
        LabeledDataset ds;
        ds.feature_names = schema.names;
        std::vector<FeatureVector> rows;
        std::vector<SplitTag> tags;
        ExtractStats stats;
        for_each_device(manifest, [&](const BitSampleSet& set) {
            const SplitTag tag =
                split.is_train(set.device_id) ? SplitTag::train : SplitTag::test;
            for (auto& fv : extract_features(set, schema, cfg.group_size, &stats)) {
                rows.push_back(std::move(fv));
                tags.push_back(tag);
            }
        });
        ds.X = Matrix(rows.size(), schema.num_features());
        ds.usage.resize(rows.size());
        ds.device_ids.resize(rows.size());
        ds.split = std::move(tags);
        for (size_t r = 0; r < rows.size(); ++r) {
            auto dst = ds.X.row(r);
            for (size_t c = 0; c < rows[r].values.size(); ++c) dst[c] = rows[r].values[c];
            ds.usage[r] = rows[r].usage_months;
            ds.device_ids[r] = rows[r].device_id;
        }
        ds.save_csv(out_dataset, repro);
        if (stats.undefined_spearman > 0)
            std::cerr << "warning: " << stats.undefined_spearman
                      << " groups had an undefined address correlation (set to 0)\n";
        std::cout << "extracted " << ds.num_rows() << " rows -> " << out_dataset << "\n";
        return kExitOk;
    }

    const DatasetBundle bundle = build_dataset(manifest, split, cfg);
    bundle.dataset.save_csv(out_dataset, repro);
    if (!out_schema.empty()) bundle.schema.save(out_schema);
    if (bundle.undefined_spearman > 0)
        std::cerr << "warning: " << bundle.undefined_spearman
                  << " groups had an undefined address correlation (set to 0)\n";
    std::cout << "fitted schema (" << bundle.schema.selected_freq_indices.size()
              << " frequency bins) and extracted " << bundle.dataset.num_rows() << " rows -> "
              << out_dataset << "\n";
    return kExitOk;
}

int cmd_tune(const CommonOptions& common, const std::string& dataset_path,
             const std::string& family_name, const std::string& task_name, int resolution,
             const std::string& out_path, size_t candidates_override, size_t folds_override) {
    ToolkitConfig cfg = effective_config(common);
    if (candidates_override) {
        cfg.num_candidates = candidates_override;
        cfg.budget_overrides.clear();
    }
    if (folds_override) cfg.k_folds = folds_override;

    const LabeledDataset dataset = LabeledDataset::load_csv(dataset_path);
    const LabeledDataset train = dataset.take_rows(dataset.train_indices());
    if (train.num_rows() == 0) throw DegenerateDataError("tune: no training rows in dataset");

    const LearnerKind family = learner_from_name(family_name);
    const Task task = task_name == "regression" ? Task::regression : Task::classification;
    SearchConfig sc = search_config_from(cfg, common.seed);

    SearchOutcome outcome;
    int num_classes = 0;
    if (task == Task::classification) {
        const double max_usage = *std::max_element(dataset.usage.begin(), dataset.usage.end());
        const UsageDiscretizer discretizer(resolution, max_usage);
        num_classes = discretizer.num_classes();
        const TuningData data = make_tuning_data(train, task, &discretizer, sc);
        outcome = random_search(sc, family, task, data);
    } else {
        const TuningData data = make_tuning_data(train, task, nullptr, sc);
        outcome = random_search(sc, family, task, data);
    }

    nlohmann::json j{{"format", "sramage-tuned"},
                     {"version", 1},
                     {"family", family_name},
                     {"task", task_name},
                     {"resolution_months", resolution},
                     {"num_classes", num_classes},
                     {"cv_score", outcome.cv_score},
                     {"candidates", outcome.num_candidates},
                     {"failed_candidates", outcome.num_failed},
                     {"best_params", params_to_json(outcome.best)},
                     {"repro",
                      {{"seed", common.seed},
                       {"config", cfg.hash()},
                       {"toolkit_version", kToolkitVersion}}}};
    write_json(out_path, j);
    std::cout << family_name << " " << task_name << " cv_score=" << outcome.cv_score << " ("
              << outcome.num_failed << "/" << outcome.num_candidates << " failed) -> "
              << out_path << "\n";
    return kExitOk;
}

int cmd_train(const CommonOptions& common, const std::string& dataset_path,
              const std::string& family_name, const std::string& task_name, int resolution,
              const std::string& params_path, const std::string& out_path) {
    const ToolkitConfig cfg = effective_config(common);
    const LabeledDataset dataset = LabeledDataset::load_csv(dataset_path);
    const LabeledDataset train = dataset.take_rows(dataset.train_indices());
    if (train.num_rows() == 0) throw DegenerateDataError("train: no training rows in dataset");

    const LearnerKind family = learner_from_name(family_name);
    const HyperParams params = params_from_file(params_path, family);

    TrainedModel model;
    if (task_name == "regression") {
        model = fit_regressor(params, train.X, train.usage, common.seed, cfg.learner_options());
    } else {
        const double max_usage = *std::max_element(dataset.usage.begin(), dataset.usage.end());
        const UsageDiscretizer discretizer(resolution, max_usage);
        std::vector<int> labels(train.usage.size());
        for (size_t i = 0; i < labels.size(); ++i)
            labels[i] = discretizer.class_of(train.usage[i]);
        model = fit_classifier(params, train.X, labels, discretizer.num_classes(), common.seed,
                               cfg.learner_options());
    }
    model.schema_hash = fnv1a(dataset.feature_names.empty()
                                  ? std::string()
                                  : std::accumulate(dataset.feature_names.begin() + 1,
                                                    dataset.feature_names.end(),
                                                    dataset.feature_names[0],
                                                    [](std::string a, const std::string& b) {
                                                        return std::move(a) + "," + b;
                                                    }));
    model.save(out_path, common.seed, cfg.hash());
    std::cout << "trained " << family_name << " on " << train.num_rows() << " rows -> "
              << out_path << "\n";
    return kExitOk;
}

int cmd_evaluate(const CommonOptions& common, const std::string& model_path,
                 const std::string& dataset_path, int resolution, const std::string& rows_which,
                 const std::string& out_path) {
    const ToolkitConfig cfg = effective_config(common);
    const TrainedModel model = TrainedModel::load(model_path);
    const LabeledDataset dataset = LabeledDataset::load_csv(dataset_path);

    std::vector<size_t> indices;
    if (rows_which == "train")
        indices = dataset.train_indices();
    else if (rows_which == "test")
        indices = dataset.test_indices();
    else {
        indices.resize(dataset.num_rows());
        std::iota(indices.begin(), indices.end(), size_t{0});
    }
    const LabeledDataset rows = dataset.take_rows(indices);
    if (rows.num_rows() == 0) throw DegenerateDataError("evaluate: no rows selected");
    if (rows.X.cols() != model.num_features)
        throw SchemaMismatchError("evaluate: dataset feature count does not match the model");

    nlohmann::json j{{"format", "sramage-eval"},
                     {"version", 1},
                     {"rows", rows.num_rows()},
                     {"split", rows_which},
                     {"repro",
                      {{"seed", common.seed},
                       {"config", cfg.hash()},
                       {"toolkit_version", kToolkitVersion}}}};

    if (model.task == Task::regression) {
        const std::vector<double> pred = model.predict(rows.X);
        const double r2 = r2_score(rows.usage, pred);
        const double err = mape(rows.usage, pred, cfg.mape_epsilon);
        j["regression"] = {{"r2", r2}, {"mape", err}};
        std::cout << "rows=" << rows.num_rows() << " r2=" << r2 << " mape=" << err << "\n";
    } else {
        const double max_usage = *std::max_element(dataset.usage.begin(), dataset.usage.end());
        const UsageDiscretizer discretizer(resolution, max_usage);
        if (discretizer.num_classes() != model.num_classes)
            throw SchemaMismatchError("evaluate: resolution yields " +
                                      std::to_string(discretizer.num_classes()) +
                                      " classes but the model was trained with " +
                                      std::to_string(model.num_classes));
        std::vector<int> truth(rows.usage.size());
        for (size_t i = 0; i < truth.size(); ++i) truth[i] = discretizer.class_of(rows.usage[i]);
        const ClassificationScore score =
            f1_multiclass(truth, model.predict_labels(rows.X), model.num_classes);
        nlohmann::json per_class = nlohmann::json::array();
        for (const auto& cs : score.per_class)
            per_class.push_back(nlohmann::json::array({cs.precision, cs.recall, cs.f1}));
        j["classification"] = {{"f1_macro", score.f1_macro}, {"per_class", per_class}};
        std::cout << "rows=" << rows.num_rows() << " f1_macro=" << score.f1_macro << "\n";
    }
    if (!out_path.empty()) write_json(out_path, j);
    return kExitOk;
}

BitSampleSet load_named_device(const DeviceManifest& manifest, const std::string& device_id) {
    for (size_t d = 0; d < manifest.num_devices(); ++d)
        if (manifest.entries[d].device_id == device_id) return load_device(manifest, d);
    throw InvalidArgumentError("device not in manifest: " + device_id);
}

int cmd_render_bitmap(const CommonOptions& common, const std::string& manifest_path,
                      const std::string& device_id, const std::string& metric, bool ranked,
                      const std::string& out_path) {
    const ToolkitConfig cfg = effective_config(common);
    const DeviceManifest manifest = DeviceManifest::load(manifest_path);
    const BitSampleSet set = load_named_device(manifest, device_id);
    const P1Map p1 = compute_p1(set);
    const BitmapMode mode = ranked ? BitmapMode::row_ranked : BitmapMode::unsorted;
    const ReproStanza repro = make_repro(common.seed, cfg);
    if (metric == "p1")
        render_bitmap(p1, mode, out_path, repro);
    else if (metric == "instability")
        render_bitmap(compute_instability(p1), mode, out_path, repro);
    else
        throw InvalidArgumentError("render bitmap: metric must be p1 or instability");
    std::cout << "wrote " << out_path << "\n";
    return kExitOk;
}

int cmd_render_blocks(const CommonOptions& common, const std::string& manifest_path,
                      const std::string& device_id, size_t block_bytes,
                      const std::string& out_base) {
    const ToolkitConfig cfg = effective_config(common);
    const DeviceManifest manifest = DeviceManifest::load(manifest_path);
    const BitSampleSet set = load_named_device(manifest, device_id);
    const P1Map p1 = compute_p1(set);
    const std::vector<double> means = blockwise_p1(p1, block_bytes);
    const AddressRegression reg = p1_address_regression(p1, block_bytes);

    XySeries series;
    series.name = device_id;
    series.x.resize(means.size());
    std::iota(series.x.begin(), series.x.end(), 0.0);
    series.y = means;
    // The regression ran on normalized addresses; rescale to block index.
    FitLine fit;
    fit.intercept = reg.intercept;
    fit.slope = means.size() > 1 ? reg.slope / static_cast<double>(means.size() - 1) : 0.0;
    render_xy({series}, fit, out_base, make_repro(common.seed, cfg));
    std::cout << "wrote " << out_base << ".csv and " << out_base << ".svg ("
              << means.size() << " blocks, spearman=" << reg.spearman << ")\n";
    return kExitOk;
}

int cmd_render_spectrum(const CommonOptions& common, const std::string& manifest_path,
                        const std::vector<std::string>& device_ids, size_t max_bins,
                        const std::string& out_base) {
    const ToolkitConfig cfg = effective_config(common);
    const DeviceManifest manifest = DeviceManifest::load(manifest_path);
    std::vector<XySeries> series;
    for (const auto& id : device_ids) {
        const BitSampleSet set = load_named_device(manifest, id);
        const std::vector<double> amplitude = p1_spectrum(compute_p1(set));
        const size_t bins = max_bins ? std::min(max_bins, amplitude.size()) : amplitude.size();
        XySeries s;
        s.name = id;
        s.x.resize(bins);
        std::iota(s.x.begin(), s.x.end(), 0.0);
        s.y.assign(amplitude.begin(), amplitude.begin() + static_cast<ptrdiff_t>(bins));
        series.push_back(std::move(s));
    }
    render_xy(series, std::nullopt, out_base, make_repro(common.seed, cfg));
    std::cout << "wrote " << out_base << ".csv and " << out_base << ".svg\n";
    return kExitOk;
}

int cmd_report(const CommonOptions& common, const std::string& manifest_path,
               const std::string& out_prefix, bool regression_only, bool classification_only,
               size_t candidates_override) {
    ToolkitConfig cfg = effective_config(common);
    if (candidates_override) {
        cfg.num_candidates = candidates_override;
        cfg.budget_overrides.clear();
    }
    const DeviceManifest manifest = DeviceManifest::load(manifest_path);
    const ExperimentReport report =
        run_full_experiment(manifest, cfg, common.seed, !classification_only, !regression_only);
    report.save(out_prefix + ".json");
    std::ofstream txt(out_prefix + ".txt", std::ios::binary);
    if (!txt) throw IoError("report: cannot open for writing: " + out_prefix + ".txt");
    txt << report.to_text_table();
    std::cout << report.to_text_table();
    std::cout << "wrote " << out_prefix << ".json and " << out_prefix << ".txt\n";
    return kExitOk;
}

}

int main(int argc, char** argv) {
    CLI::App app{"SRAM ageing analytics toolkit"};
    app.set_version_flag("--version", std::string("sramage ") + kToolkitVersion);
    app.require_subcommand(1);

    CommonOptions common;

    // simulate
    auto* sim = app.add_subcommand("simulate", "generate a synthetic aged fleet");
    std::string sim_out = "fleet";
    FleetConfig fleet;
    std::string usages_spec, low_freq_spec;
    sim->add_option("--out", sim_out, "output directory");
    sim->add_option("--devices", fleet.num_devices, "number of devices");
    sim->add_option("--samples", fleet.num_samples, "startup samples per device");
    sim->add_option("--sram-bytes", fleet.sram_bytes, "SRAM size in bytes");
    sim->add_option("--usage-min", fleet.usage_min, "minimum usage in months");
    sim->add_option("--usage-max", fleet.usage_max, "maximum usage in months");
    sim->add_option("--usages", usages_spec, "explicit per-device usages, comma-separated");
    sim->add_option("--drift-rate", fleet.profile.drift_rate, "skew drift per month");
    sim->add_option("--address-gradient", fleet.profile.address_gradient,
                    "extra drift per month at the top address");
    sim->add_option("--low-freq", low_freq_spec, "cosine stress components bin:amp,...");
    sim->add_option("--fraction-positive", fleet.profile.fraction_positive,
                    "cells stressed toward 1");
    sim->add_option("--fraction-negative", fleet.profile.fraction_negative,
                    "cells stressed toward 0");
    sim->add_option("--unstable-fraction", fleet.population.unstable_fraction,
                    "share of near-coin-flip cells");
    sim->add_option("--noise-scale", fleet.population.noise_scale, "thermal noise scale");
    sim->add_flag("--per-device-footprint",
                  [&fleet](int64_t) { fleet.profile.shared_footprint = false; },
                  "draw a fresh stress footprint per device");
    sim->add_flag("--lower-half-only",
                  [&fleet](int64_t) { fleet.profile.lower_half_only = true; },
                  "restrict stress to the lower address half");
    sim->add_option("--seed", common.seed, "random seed");

    // ingest
    auto* ing = app.add_subcommand("ingest", "validate a manifest and print device stats");
    std::string ing_manifest;
    ing->add_option("--manifest", ing_manifest, "manifest path")->required();

    // split
    auto* spl = app.add_subcommand("split", "stratified per-device train/test split");
    std::string spl_manifest, spl_out = "split.json";
    double spl_fraction = 0.7, spl_bin = 1.0;
    spl->add_option("--manifest", spl_manifest, "manifest path")->required();
    spl->add_option("--out", spl_out, "output split file");
    spl->add_option("--train-fraction", spl_fraction, "train share in (0,1)");
    spl->add_option("--bin-months", spl_bin, "stratification bin width");
    spl->add_option("--seed", common.seed, "random seed");
    spl->add_option("--config", common.config_path, "config file");

    // features
    auto* fea = app.add_subcommand("features", "fit frequency selection and extract features");
    std::string fea_manifest, fea_split, fea_schema_in, fea_out = "dataset.csv",
                              fea_out_schema = "schema.json";
    size_t fea_group = 0, fea_block = 0, fea_k = 0;
    fea->add_option("--manifest", fea_manifest, "manifest path")->required();
    fea->add_option("--split", fea_split, "split file")->required();
    fea->add_option("--schema", fea_schema_in, "existing schema (skip fitting)");
    fea->add_option("--out-dataset", fea_out, "output dataset CSV");
    fea->add_option("--out-schema", fea_out_schema, "output schema document");
    fea->add_option("--group-size", fea_group, "samples per P1 group");
    fea->add_option("--block-bytes", fea_block, "blockwise P1 block size");
    fea->add_option("--feature-k", fea_k, "frequency bins to keep");
    fea->add_option("--seed", common.seed, "random seed (repro stanza)");
    fea->add_option("--config", common.config_path, "config file");

    // tune
    auto* tun = app.add_subcommand("tune", "randomized hyperparameter search with K-fold CV");
    std::string tun_dataset, tun_family, tun_task = "regression", tun_out = "tuned.json";
    int tun_resolution = 9;
    size_t tun_candidates = 0, tun_folds = 0;
    tun->add_option("--dataset", tun_dataset, "dataset CSV")->required();
    tun->add_option("--family", tun_family, "knn|svm|dt|rf")->required();
    tun->add_option("--task", tun_task, "regression|classification")
        ->check(CLI::IsMember({"regression", "classification"}));
    tun->add_option("--resolution", tun_resolution, "months per class (classification)");
    tun->add_option("--out", tun_out, "output tuned-params file");
    tun->add_option("--candidates", tun_candidates, "parameter combinations to try");
    tun->add_option("--folds", tun_folds, "CV folds");
    tun->add_option("--seed", common.seed, "random seed");
    tun->add_option("--jobs", common.jobs, "worker threads (0 = all)");
    tun->add_option("--config", common.config_path, "config file");

    // train
    auto* tra = app.add_subcommand("train", "fit a learner with given hyperparameters");
    std::string tra_dataset, tra_family, tra_task = "regression", tra_params,
                tra_out = "model.json";
    int tra_resolution = 9;
    tra->add_option("--dataset", tra_dataset, "dataset CSV")->required();
    tra->add_option("--family", tra_family, "knn|svm|dt|rf")->required();
    tra->add_option("--task", tra_task, "regression|classification")
        ->check(CLI::IsMember({"regression", "classification"}));
    tra->add_option("--resolution", tra_resolution, "months per class (classification)");
    tra->add_option("--params", tra_params, "params file (tune output)")->required();
    tra->add_option("--out", tra_out, "output model file");
    tra->add_option("--seed", common.seed, "random seed");
    tra->add_option("--config", common.config_path, "config file");

    // evaluate
    auto* eva = app.add_subcommand("evaluate", "score a trained model on dataset rows");
    std::string eva_model, eva_dataset, eva_rows = "test", eva_out;
    int eva_resolution = 9;
    eva->add_option("--model", eva_model, "model file")->required();
    eva->add_option("--dataset", eva_dataset, "dataset CSV")->required();
    eva->add_option("--rows", eva_rows, "train|test|all")
        ->check(CLI::IsMember({"train", "test", "all"}));
    eva->add_option("--resolution", eva_resolution, "months per class (classification)");
    eva->add_option("--out", eva_out, "output metrics JSON");
    eva->add_option("--seed", common.seed, "random seed (repro stanza)");
    eva->add_option("--config", common.config_path, "config file");

    // render
    auto* ren = app.add_subcommand("render", "emit diagnostic artifacts");
    ren->require_subcommand(1);
    auto* ren_bmp = ren->add_subcommand("bitmap", "P1/instability graymap image");
    std::string bmp_manifest, bmp_device, bmp_metric = "p1", bmp_out = "bitmap.pgm";
    bool bmp_ranked = false;
    ren_bmp->add_option("--manifest", bmp_manifest, "manifest path")->required();
    ren_bmp->add_option("--device", bmp_device, "device id")->required();
    ren_bmp->add_option("--metric", bmp_metric, "p1|instability")
        ->check(CLI::IsMember({"p1", "instability"}));
    ren_bmp->add_flag("--ranked", bmp_ranked, "sort each presentation row");
    ren_bmp->add_option("--out", bmp_out, "output PGM path");

    auto* ren_blk = ren->add_subcommand("blocks", "blockwise P1 vs address with fit line");
    std::string blk_manifest, blk_device, blk_out = "blocks";
    size_t blk_bytes = 1024;
    ren_blk->add_option("--manifest", blk_manifest, "manifest path")->required();
    ren_blk->add_option("--device", blk_device, "device id")->required();
    ren_blk->add_option("--block-bytes", blk_bytes, "block size in bytes");
    ren_blk->add_option("--out", blk_out, "output base path (.csv/.svg)");

    auto* ren_spc = ren->add_subcommand("spectrum", "P1 spatial spectrum of one or more devices");
    std::string spc_manifest, spc_out = "spectrum";
    std::vector<std::string> spc_devices;
    size_t spc_max_bins = 0;
    ren_spc->add_option("--manifest", spc_manifest, "manifest path")->required();
    ren_spc->add_option("--device", spc_devices, "device id (repeatable)")->required();
    ren_spc->add_option("--max-bins", spc_max_bins, "truncate the emitted bins (0 = all)");
    ren_spc->add_option("--out", spc_out, "output base path (.csv/.svg)");

    // report
    auto* rep = app.add_subcommand("report", "full tuning + evaluation experiment");
    std::string rep_manifest, rep_out = "report";
    bool rep_reg_only = false, rep_cls_only = false;
    size_t rep_candidates = 0;
    rep->add_option("--manifest", rep_manifest, "manifest path")->required();
    rep->add_option("--out-prefix", rep_out, "output prefix (.json/.txt)");
    rep->add_flag("--regression-only", rep_reg_only, "skip the classification sweep");
    rep->add_flag("--classification-only", rep_cls_only, "skip the regression experiment");
    rep->add_option("--candidates", rep_candidates, "override candidates for all families");
    rep->add_option("--seed", common.seed, "random seed");
    rep->add_option("--jobs", common.jobs, "worker threads (0 = all)");
    rep->add_option("--config", common.config_path, "config file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (sim->parsed()) return cmd_simulate(common, sim_out, fleet, usages_spec, low_freq_spec);
        if (ing->parsed()) return cmd_ingest(ing_manifest);
        if (spl->parsed()) return cmd_split(common, spl_manifest, spl_out, spl_fraction, spl_bin);
        if (fea->parsed())
            return cmd_features(common, fea_manifest, fea_split, fea_schema_in, fea_out,
                                fea_out_schema, fea_group, fea_block, fea_k);
        if (tun->parsed())
            return cmd_tune(common, tun_dataset, tun_family, tun_task, tun_resolution, tun_out,
                            tun_candidates, tun_folds);
        if (tra->parsed())
            return cmd_train(common, tra_dataset, tra_family, tra_task, tra_resolution,
                             tra_params, tra_out);
        if (eva->parsed())
            return cmd_evaluate(common, eva_model, eva_dataset, eva_resolution, eva_rows, eva_out);
        if (ren->parsed()) {
            if (ren_bmp->parsed())
                return cmd_render_bitmap(common, bmp_manifest, bmp_device, bmp_metric, bmp_ranked,
                                         bmp_out);
            if (ren_blk->parsed())
                return cmd_render_blocks(common, blk_manifest, blk_device, blk_bytes, blk_out);
            if (ren_spc->parsed())
                return cmd_render_spectrum(common, spc_manifest, spc_devices, spc_max_bins,
                                           spc_out);
        }
        if (rep->parsed())
            return cmd_report(common, rep_manifest, rep_out, rep_reg_only, rep_cls_only,
                              rep_candidates);
        std::cerr << "no subcommand\n";
        return kExitUsage;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const SchemaMismatchError& e) {
        std::cerr << "schema mismatch: " << e.what() << "\n";
        return kExitSchema;
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return kExitFormat;
    } catch (const DegenerateDataError& e) {
        std::cerr << "degenerate data: " << e.what() << "\n";
        return kExitDegenerate;
    } catch (const InvalidArgumentError& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInternal;
    }
}
