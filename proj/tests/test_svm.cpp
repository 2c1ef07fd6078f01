#include <doctest.h>

#include <cmath>
#include <vector>

#include "sramage/learners.hpp"
#include "sramage/rng.hpp"
#include "sramage/svm_solver.hpp"

using namespace sramage;

namespace {

Matrix matrix_of(const std::vector<std::vector<double>>& rows) {
    Matrix m(rows.size(), rows[0].size());
    for (size_t r = 0; r < rows.size(); ++r)
        for (size_t c = 0; c < rows[0].size(); ++c) m.at(r, c) = rows[r][c];
    return m;
}

double decision_value(const Matrix& x, const std::vector<int8_t>& y,
                      const std::vector<double>& alpha, double bias, double gamma,
                      std::span<const double> q) {
    double f = bias;
    for (size_t i = 0; i < x.rows(); ++i)
        f += alpha[i] * static_cast<double>(y[i]) * rbf_kernel(x.row(i), q, gamma);
    return f;
}

// Independent KKT audit of a solved SVC dual: margin conditions per alpha
// status, plus the equality constraint. Returns the worst violation.
double kkt_violation_svc(const Matrix& x, const std::vector<int8_t>& y,
                         const std::vector<double>& alpha, double bias, double c, double gamma) {
    double worst = 0.0;
    double balance = 0.0;
    for (size_t i = 0; i < x.rows(); ++i) {
        balance += alpha[i] * static_cast<double>(y[i]);
        const double margin = static_cast<double>(y[i]) *
                              decision_value(x, y, alpha, bias, gamma, x.row(i));
        if (alpha[i] <= 1e-9) {
            worst = std::max(worst, 1.0 - margin);  // must be >= 1
        } else if (alpha[i] >= c - 1e-9) {
            worst = std::max(worst, margin - 1.0);  // must be <= 1
        } else {
            worst = std::max(worst, std::fabs(margin - 1.0));
        }
    }
    return std::max(worst, std::fabs(balance));
}

}

TEST_CASE("svc solves the symmetric 2-point problem in closed form") {
    const Matrix x = matrix_of({{-1, 0}, {1, 0}});
    const std::vector<int8_t> y = {-1, 1};
    const double gamma = 1.0, c = 100.0;
    const SmoResult res = solve_svc(x, y, c, gamma, {});
    CHECK(res.converged);

    // equal duals alpha = 1 / (1 - K12), bias 0, boundary at x = 0
    const double k12 = std::exp(-gamma * 4.0);
    CHECK(res.alpha[0] == doctest::Approx(1.0 / (1.0 - k12)).epsilon(1e-3));
    CHECK(res.alpha[1] == doctest::Approx(res.alpha[0]).epsilon(1e-9));
    CHECK(res.bias == doctest::Approx(0.0).scale(1.0).epsilon(1e-6));

    const std::vector<double> left = {-0.5, 0.0};
    const std::vector<double> right = {0.5, 0.0};
    CHECK(decision_value(x, y, res.alpha, res.bias, gamma, left) < 0.0);
    CHECK(decision_value(x, y, res.alpha, res.bias, gamma, right) > 0.0);
}

TEST_CASE("svc satisfies KKT on 500 random 2-class problems") {
    Rng rng(2718);
    for (int trial = 0; trial < 500; ++trial) {
        const size_t n = 4 + rng.below(37);  // up to 40 points
        const size_t d = 1 + rng.below(4);
        Matrix x(n, d);
        for (auto& v : x.data()) v = rng.uniform_real(-2, 2);
        std::vector<int8_t> y(n);
        bool pos = false, neg = false;
        for (size_t i = 0; i < n; ++i) {
            y[i] = rng.bernoulli(0.5) ? 1 : -1;
            (y[i] > 0 ? pos : neg) = true;
        }
        if (!pos) y[0] = 1;
        if (!neg) y[n - 1] = -1;

        const double c = rng.log_uniform(0.1, 100.0);
        const double gamma = rng.log_uniform(0.05, 5.0);
        const SmoResult res = solve_svc(x, y, c, gamma, {});
        CHECK(res.converged);
        CHECK(res.kkt_gap <= 1e-3 + 1e-12);
        // the audited margin violations match the solver's gap criterion
        CHECK(kkt_violation_svc(x, y, res.alpha, res.bias, c, gamma) <= 1.5e-3);
        for (double a : res.alpha) {
            CHECK(a >= 0.0);
            CHECK(a <= c);
        }
    }
}

TEST_CASE("svr basics") {
    SUBCASE("constant target with zero alphas predicts the constant") {
        const Matrix x = matrix_of({{0}, {1}, {2}});
        const std::vector<double> y = {4.0, 4.0, 4.0};
        const SmoResult res = solve_svr(x, y, 10.0, 1.0, 0.1, {});
        CHECK(res.converged);
        for (double a : res.alpha) CHECK(a == 0.0);
        CHECK(res.bias == doctest::Approx(4.0));
    }
    SUBCASE("fits a smooth trend within epsilon + tolerance") {
        Rng rng(31);
        const size_t n = 30;
        Matrix x(n, 1);
        std::vector<double> y(n);
        for (size_t i = 0; i < n; ++i) {
            x.at(i, 0) = static_cast<double>(i) / n;
            y[i] = std::sin(3.0 * x.at(i, 0));
        }
        const double eps = 0.1;
        const TrainedModel m = fit_regressor(SvmParams{100.0, 5.0}, x, y, 0);
        const auto pred = m.predict(x);
        for (size_t i = 0; i < n; ++i)
            CHECK(std::fabs(pred[i] - y[i]) <= eps + 0.05);
    }
    SUBCASE("the equality constraint holds for the 2n duals") {
        Rng rng(33);
        Matrix x(12, 2);
        for (auto& v : x.data()) v = rng.uniform_real(-1, 1);
        std::vector<double> y(12);
        for (auto& v : y) v = rng.uniform_real(-2, 2);
        const SmoResult res = solve_svr(x, y, 5.0, 0.7, 0.1, {});
        double balance = 0.0;
        for (size_t i = 0; i < 12; ++i) balance += res.alpha[i] - res.alpha[12 + i];
        CHECK(balance == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
    }
}

TEST_CASE("one-vs-one classifier trains one machine per class pair") {
    Rng rng(37);
    Matrix x(30, 2);
    std::vector<int> labels(30);
    for (size_t i = 0; i < 30; ++i) {
        const int c = static_cast<int>(i % 3);
        labels[i] = c;
        x.at(i, 0) = 3.0 * c + rng.uniform_real(-0.5, 0.5);
        x.at(i, 1) = rng.uniform_real(-0.5, 0.5);
    }
    const TrainedModel m = fit_classifier(SvmParams{10.0, 1.0}, x, labels, 3, 0);
    const auto& state = std::get<SvmClassifierState>(m.state);
    CHECK(state.pairs.size() == 3);  // (0,1), (0,2), (1,2)

    // well-separated clusters classify correctly
    const auto pred = m.predict_labels(x);
    for (size_t i = 0; i < 30; ++i) CHECK(pred[i] == labels[i]);
}

TEST_CASE("svm binary classification on the symmetric toy problem") {
    const Matrix x = matrix_of({{-1, 0}, {1, 0}});
    const std::vector<int> labels = {0, 1};
    const TrainedModel m = fit_classifier(SvmParams{100.0, 1.0}, x, labels, 2, 0);
    CHECK(m.predict_labels(matrix_of({{-0.5, 0}}))[0] == 0);
    CHECK(m.predict_labels(matrix_of({{0.5, 0}}))[0] == 1);
}
