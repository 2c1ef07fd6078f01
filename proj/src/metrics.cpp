#include "sramage/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>

#include "sramage/error.hpp"

namespace sramage {

namespace {

void check_pair(size_t n, size_t m, const char* who) {
    if (n == 0) throw InvalidArgumentError(std::string(who) + ": empty input");
    if (n != m) throw InvalidArgumentError(std::string(who) + ": length mismatch");
}

}

double r2_score(std::span<const double> y, std::span<const double> y_hat) {
    check_pair(y.size(), y_hat.size(), "r2_score");
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());

    double ss_res = 0.0, ss_tot = 0.0;
    for (size_t i = 0; i < y.size(); ++i) {
        const double r = y[i] - y_hat[i];
        const double t = y[i] - mean;
        ss_res += r * r;
        ss_tot += t * t;
    }
    if (ss_tot == 0.0)
        throw DegenerateDataError("r2_score: constant truth vector, denominator is zero");
    return 1.0 - ss_res / ss_tot;
}

double mape(std::span<const double> y, std::span<const double> y_hat, double epsilon) {
    check_pair(y.size(), y_hat.size(), "mape");
    if (epsilon <= 0.0) throw InvalidArgumentError("mape: epsilon must be positive");
    double total = 0.0;
    for (size_t i = 0; i < y.size(); ++i)
        total += std::abs(y[i] - y_hat[i]) / std::max(epsilon, std::abs(y[i]));
    return total / static_cast<double>(y.size());
}

ClassificationScore f1_multiclass(std::span<const int> y, std::span<const int> y_hat,
                                  int num_classes) {
    check_pair(y.size(), y_hat.size(), "f1_multiclass");
    if (num_classes <= 0) throw InvalidArgumentError("f1_multiclass: num_classes must be positive");

    std::vector<size_t> tp(num_classes, 0), fp(num_classes, 0), fn(num_classes, 0);
    for (size_t i = 0; i < y.size(); ++i) {
        if (y[i] < 0 || y[i] >= num_classes || y_hat[i] < 0 || y_hat[i] >= num_classes)
            throw InvalidArgumentError("f1_multiclass: label out of range");
        if (y[i] == y_hat[i]) {
            tp[y[i]]++;
        } else {
            fp[y_hat[i]]++;
            fn[y[i]]++;
        }
    }

    ClassificationScore score;
    score.per_class.resize(num_classes);
    double sum_f1 = 0.0;
    for (int c = 0; c < num_classes; ++c) {
        ClassScore& cs = score.per_class[c];
        const double p_den = static_cast<double>(tp[c] + fp[c]);
        const double r_den = static_cast<double>(tp[c] + fn[c]);
        cs.precision = p_den > 0 ? static_cast<double>(tp[c]) / p_den : 0.0;
        cs.recall = r_den > 0 ? static_cast<double>(tp[c]) / r_den : 0.0;
        cs.f1 = (cs.precision + cs.recall) > 0
                    ? 2.0 * cs.precision * cs.recall / (cs.precision + cs.recall)
                    : 0.0;
        sum_f1 += cs.f1;
    }
    score.f1_macro = sum_f1 / static_cast<double>(num_classes);
    return score;
}

std::vector<double> average_ranks(std::span<const double> x) {
    const size_t n = x.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return x[a] < x[b] || (x[a] == x[b] && a < b);
    });

    std::vector<double> ranks(n, 0.0);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
        // Tied run spans sorted positions [i, j]; all get the mean rank.
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

double spearman_r(std::span<const double> x, std::span<const double> y) {
    check_pair(x.size(), y.size(), "spearman_r");
    if (x.size() < 2) throw InvalidArgumentError("spearman_r: need at least 2 points");

    const std::vector<double> rx = average_ranks(x);
    const std::vector<double> ry = average_ranks(y);

    const size_t n = x.size();
    const double mean = 0.5 * static_cast<double>(n + 1);  // mean of 1..n
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double dx = rx[i] - mean;
        const double dy = ry[i] - mean;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        throw DegenerateDataError("spearman_r: constant input vector");
    return sxy / std::sqrt(sxx * syy);
}

}
