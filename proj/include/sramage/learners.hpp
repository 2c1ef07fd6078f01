#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "sramage/matrix.hpp"
#include "sramage/svm_solver.hpp"

namespace sramage {

enum class Task { regression, classification };
enum class LearnerKind { knn, svm, decision_tree, random_forest };

std::string learner_name(LearnerKind kind);
LearnerKind learner_from_name(const std::string& name);

struct KnnParams {
    int k = 100;
};

struct SvmParams {
    double c = 1.0;
    double gamma = 0.1;
};

struct TreeParams {
    int max_depth = 16;
    int min_samples_split = 2;
    int min_features_per_split = 56;  // size of the random feature subset per split
};

struct ForestParams {
    TreeParams tree;
    int num_trees = 100;
    bool bootstrap = true;
};

using HyperParams = std::variant<KnnParams, SvmParams, TreeParams, ForestParams>;

LearnerKind kind_of(const HyperParams& params);

// Solver knobs shared by every fit call; defaults match the documented
// behaviour (SVM tolerance 1e-3, SVR epsilon 0.1 months).
struct LearnerOptions {
    SmoOptions smo;
    double svr_epsilon = 0.1;
};

// Per-feature affine normalization fitted on training data. Constant
// features keep a standard deviation of 1 and are recorded.
class Standardizer {
public:
    Standardizer() = default;

    static Standardizer fit(const Matrix& x);

    Matrix transform(const Matrix& x) const;
    void transform_row(std::span<const double> in, std::span<double> out) const;

    const std::vector<double>& means() const { return means_; }
    const std::vector<double>& stds() const { return stds_; }
    const std::vector<size_t>& constant_features() const { return constant_features_; }

    void set(std::vector<double> means, std::vector<double> stds,
             std::vector<size_t> constant_features);

private:
    std::vector<double> means_;
    std::vector<double> stds_;
    std::vector<size_t> constant_features_;
};

// Fitted states -------------------------------------------------------------

struct KnnState {
    Matrix x;                // standardized training rows
    std::vector<double> y;   // targets (class index for classification)
};

struct SvmPairMachine {
    int class_a = 0;  // decision > 0 votes class_a (the lower index)
    int class_b = 0;
    Matrix support_vectors;       // standardized
    std::vector<double> coefs;    // alpha_u * y_u per support vector
    double bias = 0.0;
    bool converged = true;
};

struct SvmClassifierState {
    std::vector<SvmPairMachine> pairs;
};

struct SvmRegressorState {
    Matrix support_vectors;
    std::vector<double> coefs;  // alpha_i - alpha*_i per support vector
    double bias = 0.0;
    bool converged = true;
};

struct TreeNode {
    int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int32_t left = -1;
    int32_t right = -1;
    double value = 0.0;  // leaf prediction (mean or class index)
};

struct TreeState {
    std::vector<TreeNode> nodes;  // root at 0
};

struct ForestState {
    std::vector<TreeState> trees;
};

using ModelState =
    std::variant<KnnState, SvmClassifierState, SvmRegressorState, TreeState, ForestState>;

// A fitted learner plus everything needed to reproduce its predictions:
// the standardizer, the task, the schema hash it was trained against.
struct TrainedModel {
    LearnerKind kind = LearnerKind::knn;
    Task task = Task::regression;
    int num_classes = 0;  // classification only
    HyperParams params;
    Standardizer standardizer;
    uint64_t schema_hash = 0;
    size_t num_features = 0;
    ModelState state;

    // Regression values; for classification, class indices widened to double.
    std::vector<double> predict(const Matrix& x) const;
    std::vector<int> predict_labels(const Matrix& x) const;

    std::string to_json_string() const;
    static TrainedModel from_json_string(const std::string& text);
    void save(const std::string& path, uint64_t seed, const std::string& config_hash) const;
    static TrainedModel load(const std::string& path);
};

TrainedModel fit_regressor(const HyperParams& params, const Matrix& x,
                           const std::vector<double>& y, uint64_t seed,
                           const LearnerOptions& options = {});

// Throws DegenerateDataError when fewer than two classes are present.
TrainedModel fit_classifier(const HyperParams& params, const Matrix& x,
                            const std::vector<int>& labels, int num_classes, uint64_t seed,
                            const LearnerOptions& options = {});

}
