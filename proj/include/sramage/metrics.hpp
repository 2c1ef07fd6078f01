#pragma once

#include <span>
#include <vector>

namespace sramage {

struct RegressionScore {
    double r2 = 0.0;
    double mape = 0.0;  // fraction, not percent
};

struct ClassScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct ClassificationScore {
    double f1_macro = 0.0;
    std::vector<ClassScore> per_class;
};

// Coefficient of determination, 1 - SS_res / SS_tot.
// Throws DegenerateDataError when y is constant (SS_tot == 0) and
// InvalidArgumentError on empty or mismatched inputs.
double r2_score(std::span<const double> y, std::span<const double> y_hat);

// Mean of |y_i - y_hat_i| / max(epsilon, |y_i|).
double mape(std::span<const double> y, std::span<const double> y_hat,
            double epsilon = 1e-9);

// Macro-averaged F1 over classes [0, num_classes). Classes with zero
// predicted and zero actual positives contribute F1 = 0.
ClassificationScore f1_multiclass(std::span<const int> y, std::span<const int> y_hat,
                                  int num_classes);

// Average fractional ranks (ties get the mean of the ranks they span).
// Ranks are 1-based.
std::vector<double> average_ranks(std::span<const double> x);

// Spearman rank-order correlation: Pearson correlation of average ranks.
// Throws DegenerateDataError when either input is constant.
double spearman_r(std::span<const double> x, std::span<const double> y);

// initializer_list conveniences (spans cannot bind to brace lists)
inline double r2_score(std::initializer_list<double> y, std::initializer_list<double> y_hat) {
    return r2_score(std::span<const double>(y.begin(), y.size()),
                    std::span<const double>(y_hat.begin(), y_hat.size()));
}
inline double mape(std::initializer_list<double> y, std::initializer_list<double> y_hat,
                   double epsilon = 1e-9) {
    return mape(std::span<const double>(y.begin(), y.size()),
                std::span<const double>(y_hat.begin(), y_hat.size()), epsilon);
}
inline ClassificationScore f1_multiclass(std::initializer_list<int> y,
                                         std::initializer_list<int> y_hat, int num_classes) {
    return f1_multiclass(std::span<const int>(y.begin(), y.size()),
                         std::span<const int>(y_hat.begin(), y_hat.size()), num_classes);
}
inline double spearman_r(std::initializer_list<double> x, std::initializer_list<double> y) {
    return spearman_r(std::span<const double>(x.begin(), x.size()),
                      std::span<const double>(y.begin(), y.size()));
}

}
