#include "sramage/learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sramage/error.hpp"

namespace sramage {

std::string learner_name(LearnerKind kind) {
    switch (kind) {
        case LearnerKind::knn: return "knn";
        case LearnerKind::svm: return "svm";
        case LearnerKind::decision_tree: return "dt";
        case LearnerKind::random_forest: return "rf";
    }
    return "?";
}

LearnerKind learner_from_name(const std::string& name) {
    if (name == "knn") return LearnerKind::knn;
    if (name == "svm") return LearnerKind::svm;
    if (name == "dt") return LearnerKind::decision_tree;
    if (name == "rf") return LearnerKind::random_forest;
    throw InvalidArgumentError("unknown learner: " + name);
}

LearnerKind kind_of(const HyperParams& params) {
    if (std::holds_alternative<KnnParams>(params)) return LearnerKind::knn;
    if (std::holds_alternative<SvmParams>(params)) return LearnerKind::svm;
    if (std::holds_alternative<TreeParams>(params)) return LearnerKind::decision_tree;
    return LearnerKind::random_forest;
}

Standardizer Standardizer::fit(const Matrix& x) {
    if (x.rows() == 0) throw InvalidArgumentError("Standardizer: empty matrix");
    const size_t n = x.rows(), f = x.cols();
    Standardizer s;
    s.means_.assign(f, 0.0);
    s.stds_.assign(f, 0.0);
    for (size_t r = 0; r < n; ++r) {
        const auto row = x.row(r);
        for (size_t c = 0; c < f; ++c) s.means_[c] += row[c];
    }
    for (size_t c = 0; c < f; ++c) s.means_[c] /= static_cast<double>(n);
    for (size_t r = 0; r < n; ++r) {
        const auto row = x.row(r);
        for (size_t c = 0; c < f; ++c) {
            const double d = row[c] - s.means_[c];
            s.stds_[c] += d * d;
        }
    }
    for (size_t c = 0; c < f; ++c) {
        s.stds_[c] = std::sqrt(s.stds_[c] / static_cast<double>(n));
        if (s.stds_[c] == 0.0) {
            s.stds_[c] = 1.0;
            s.constant_features_.push_back(c);
        }
    }
    return s;
}

Matrix Standardizer::transform(const Matrix& x) const {
    if (x.cols() != means_.size())
        throw SchemaMismatchError("Standardizer: feature count mismatch");
    Matrix out(x.rows(), x.cols());
    for (size_t r = 0; r < x.rows(); ++r) transform_row(x.row(r), out.row(r));
    return out;
}

void Standardizer::transform_row(std::span<const double> in, std::span<double> out) const {
    for (size_t c = 0; c < in.size(); ++c) out[c] = (in[c] - means_[c]) / stds_[c];
}

void Standardizer::set(std::vector<double> means, std::vector<double> stds,
                       std::vector<size_t> constant_features) {
    if (means.size() != stds.size())
        throw FormatError("Standardizer: mean/std length mismatch");
    for (double s : stds)
        if (s <= 0.0) throw FormatError("Standardizer: non-positive std");
    means_ = std::move(means);
    stds_ = std::move(stds);
    constant_features_ = std::move(constant_features);
}

// --- KNN ---------------------------------------------------------------

namespace {

std::vector<size_t> k_nearest(const Matrix& train, std::span<const double> query, size_t k) {
    const size_t n = train.rows();
    std::vector<std::pair<double, size_t>> dist(n);
    for (size_t i = 0; i < n; ++i) {
        const auto row = train.row(i);
        double d2 = 0.0;
        for (size_t c = 0; c < row.size(); ++c) {
            const double d = query[c] - row[c];
            d2 += d * d;
        }
        dist[i] = {d2, i};
    }
    // Ties at the k-boundary resolve to the lower training index.
    std::partial_sort(dist.begin(), dist.begin() + static_cast<ptrdiff_t>(k), dist.end());
    std::vector<size_t> idx(k);
    for (size_t i = 0; i < k; ++i) idx[i] = dist[i].second;
    return idx;
}

int majority_class(const std::vector<double>& votes, int num_classes) {
    // Ties resolve to the lowest class index.
    int best = 0;
    for (int c = 1; c < num_classes; ++c)
        if (votes[c] > votes[best]) best = c;
    return best;
}

}

// --- Trees (built in tree.cpp) ------------------------------------------

TreeState build_tree(const Matrix& x, const std::vector<double>& y, Task task, int num_classes,
                     const TreeParams& params, uint64_t tree_seed);
ForestState build_forest(const Matrix& x, const std::vector<double>& y, Task task,
                         int num_classes, const ForestParams& params, uint64_t seed);
double tree_predict_row(const TreeState& tree, std::span<const double> row);

// --- SVM fits (svm.cpp) ---------------------------------------------------

SvmClassifierState fit_svm_classifier(const Matrix& x, const std::vector<int>& labels,
                                      const SvmParams& params, const LearnerOptions& options);
SvmRegressorState fit_svm_regressor(const Matrix& x, const std::vector<double>& y,
                                    const SvmParams& params, const LearnerOptions& options);
double svm_decision(const Matrix& support_vectors, const std::vector<double>& coefs, double bias,
                    double gamma, std::span<const double> row);

// --- fit -----------------------------------------------------------------

namespace {

TrainedModel fit_common(const HyperParams& params, Task task, const Matrix& x,
                        const std::vector<double>& y, int num_classes, uint64_t seed,
                        const LearnerOptions& options) {
    if (x.rows() == 0) throw InvalidArgumentError("fit: empty training set");
    if (y.size() != x.rows()) throw InvalidArgumentError("fit: target length mismatch");

    TrainedModel model;
    model.kind = kind_of(params);
    model.task = task;
    model.num_classes = num_classes;
    model.params = params;
    model.num_features = x.cols();
    model.standardizer = Standardizer::fit(x);
    const Matrix xs = model.standardizer.transform(x);

    switch (model.kind) {
        case LearnerKind::knn: {
            KnnParams p = std::get<KnnParams>(params);
            if (p.k < 1) throw InvalidArgumentError("fit: knn k must be >= 1");
            p.k = std::min<int>(p.k, static_cast<int>(x.rows()));
            model.params = p;  // effective (clamped) neighbor count
            model.state = KnnState{xs, y};
            break;
        }
        case LearnerKind::svm: {
            const SvmParams& p = std::get<SvmParams>(params);
            if (task == Task::regression)
                model.state = fit_svm_regressor(xs, y, p, options);
            else {
                std::vector<int> labels(y.size());
                for (size_t i = 0; i < y.size(); ++i) labels[i] = static_cast<int>(y[i]);
                model.state = fit_svm_classifier(xs, labels, p, options);
            }
            break;
        }
        case LearnerKind::decision_tree: {
            model.state =
                build_tree(xs, y, task, num_classes, std::get<TreeParams>(params), seed);
            break;
        }
        case LearnerKind::random_forest: {
            model.state =
                build_forest(xs, y, task, num_classes, std::get<ForestParams>(params), seed);
            break;
        }
    }
    return model;
}

}

TrainedModel fit_regressor(const HyperParams& params, const Matrix& x,
                           const std::vector<double>& y, uint64_t seed,
                           const LearnerOptions& options) {
    return fit_common(params, Task::regression, x, y, 0, seed, options);
}

TrainedModel fit_classifier(const HyperParams& params, const Matrix& x,
                            const std::vector<int>& labels, int num_classes, uint64_t seed,
                            const LearnerOptions& options) {
    if (num_classes < 2) throw InvalidArgumentError("fit_classifier: need >= 2 classes");
    std::vector<bool> present(num_classes, false);
    std::vector<double> y(labels.size());
    for (size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= num_classes)
            throw InvalidArgumentError("fit_classifier: label out of range");
        present[labels[i]] = true;
        y[i] = static_cast<double>(labels[i]);
    }
    if (std::count(present.begin(), present.end(), true) < 2)
        throw DegenerateDataError("fit_classifier: single class in training data");
    return fit_common(params, Task::classification, x, y, num_classes, seed, options);
}

// --- predict ---------------------------------------------------------------

std::vector<double> TrainedModel::predict(const Matrix& x) const {
    if (x.cols() != num_features)
        throw SchemaMismatchError("predict: feature count does not match the trained model");
    const Matrix xs = standardizer.transform(x);
    std::vector<double> out(x.rows(), 0.0);

    if (const auto* knn = std::get_if<KnnState>(&state)) {
        const size_t k = static_cast<size_t>(std::get<KnnParams>(params).k);
        for (size_t r = 0; r < xs.rows(); ++r) {
            const auto idx = k_nearest(knn->x, xs.row(r), k);
            if (task == Task::regression) {
                double sum = 0.0;
                for (size_t i : idx) sum += knn->y[i];
                out[r] = sum / static_cast<double>(k);
            } else {
                std::vector<double> votes(num_classes, 0.0);
                for (size_t i : idx) votes[static_cast<int>(knn->y[i])] += 1.0;
                out[r] = majority_class(votes, num_classes);
            }
        }
    } else if (const auto* svc = std::get_if<SvmClassifierState>(&state)) {
        const double gamma = std::get<SvmParams>(params).gamma;
        for (size_t r = 0; r < xs.rows(); ++r) {
            std::vector<double> votes(num_classes, 0.0);
            for (const auto& pair : svc->pairs) {
                const double d =
                    svm_decision(pair.support_vectors, pair.coefs, pair.bias, gamma, xs.row(r));
                votes[d >= 0.0 ? pair.class_a : pair.class_b] += 1.0;
            }
            out[r] = majority_class(votes, num_classes);
        }
    } else if (const auto* svr = std::get_if<SvmRegressorState>(&state)) {
        const double gamma = std::get<SvmParams>(params).gamma;
        for (size_t r = 0; r < xs.rows(); ++r)
            out[r] = svm_decision(svr->support_vectors, svr->coefs, svr->bias, gamma, xs.row(r));
    } else if (const auto* tree = std::get_if<TreeState>(&state)) {
        for (size_t r = 0; r < xs.rows(); ++r) out[r] = tree_predict_row(*tree, xs.row(r));
    } else if (const auto* forest = std::get_if<ForestState>(&state)) {
        for (size_t r = 0; r < xs.rows(); ++r) {
            if (task == Task::regression) {
                double sum = 0.0;
                for (const auto& tree : forest->trees) sum += tree_predict_row(tree, xs.row(r));
                out[r] = sum / static_cast<double>(forest->trees.size());
            } else {
                std::vector<double> votes(num_classes, 0.0);
                for (const auto& tree : forest->trees)
                    votes[static_cast<int>(tree_predict_row(tree, xs.row(r)))] += 1.0;
                out[r] = majority_class(votes, num_classes);
            }
        }
    }
    return out;
}

std::vector<int> TrainedModel::predict_labels(const Matrix& x) const {
    if (task != Task::classification)
        throw InvalidArgumentError("predict_labels: model is a regressor");
    const std::vector<double> raw = predict(x);
    std::vector<int> labels(raw.size());
    for (size_t i = 0; i < raw.size(); ++i) labels[i] = static_cast<int>(raw[i]);
    return labels;
}

}
