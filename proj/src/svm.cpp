#include <algorithm>
#include <cmath>
#include <set>

#include "sramage/error.hpp"
#include "sramage/learners.hpp"
#include "sramage/svm_solver.hpp"

namespace sramage {

double svm_decision(const Matrix& support_vectors, const std::vector<double>& coefs, double bias,
                    double gamma, std::span<const double> row) {
    double sum = bias;
    for (size_t i = 0; i < support_vectors.rows(); ++i)
        sum += coefs[i] * rbf_kernel(support_vectors.row(i), row, gamma);
    return sum;
}

namespace {

constexpr double kSvThreshold = 1e-12;

}

SvmClassifierState fit_svm_classifier(const Matrix& x, const std::vector<int>& labels,
                                      const SvmParams& params, const LearnerOptions& options) {
    std::set<int> class_set(labels.begin(), labels.end());
    const std::vector<int> classes(class_set.begin(), class_set.end());
    if (classes.size() < 2)
        throw DegenerateDataError("svm: single class in training data");

    SvmClassifierState state;
    // One machine per class pair (one-vs-one); the lower class takes the
    // positive side of the decision.
    for (size_t a = 0; a < classes.size(); ++a) {
        for (size_t b = a + 1; b < classes.size(); ++b) {
            std::vector<size_t> rows;
            std::vector<int8_t> y;
            for (size_t i = 0; i < labels.size(); ++i) {
                if (labels[i] == classes[a]) {
                    rows.push_back(i);
                    y.push_back(1);
                } else if (labels[i] == classes[b]) {
                    rows.push_back(i);
                    y.push_back(-1);
                }
            }
            const Matrix sub = x.take_rows(rows);
            const SmoResult solved = solve_svc(sub, y, params.c, params.gamma, options.smo);

            SvmPairMachine machine;
            machine.class_a = classes[a];
            machine.class_b = classes[b];
            machine.bias = solved.bias;
            machine.converged = solved.converged;
            std::vector<size_t> sv_rows;
            for (size_t i = 0; i < rows.size(); ++i) {
                if (solved.alpha[i] > kSvThreshold) {
                    sv_rows.push_back(i);
                    machine.coefs.push_back(solved.alpha[i] * static_cast<double>(y[i]));
                }
            }
            machine.support_vectors = sub.take_rows(sv_rows);
            state.pairs.push_back(std::move(machine));
        }
    }
    return state;
}

SvmRegressorState fit_svm_regressor(const Matrix& x, const std::vector<double>& y,
                                    const SvmParams& params, const LearnerOptions& options) {
    const SmoResult solved =
        solve_svr(x, y, params.c, params.gamma, options.svr_epsilon, options.smo);

    SvmRegressorState state;
    state.bias = solved.bias;
    state.converged = solved.converged;
    const size_t n = x.rows();
    std::vector<size_t> sv_rows;
    for (size_t i = 0; i < n; ++i) {
        const double coef = solved.alpha[i] - solved.alpha[n + i];
        if (std::abs(coef) > kSvThreshold) {
            sv_rows.push_back(i);
            state.coefs.push_back(coef);
        }
    }
    state.support_vectors = x.take_rows(sv_rows);
    return state;
}

}
