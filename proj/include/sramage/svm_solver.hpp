#pragma once

#include <cstdint>
#include <vector>

#include "sramage/matrix.hpp"

namespace sramage {

struct SmoOptions {
    double tol = 1e-3;           // stopping tolerance on the KKT gap
    size_t max_passes = 10;      // iteration cap = max_passes * n sweeps of n steps
    size_t hard_iteration_cap = 5'000'000;
    double cache_mb = 256.0;     // kernel cache budget
};

struct SmoResult {
    std::vector<double> alpha;   // dual variables, 0 <= alpha <= C
    double bias = 0.0;           // decision(x) = sum alpha_u y_u K(x_u, x) + bias
    size_t iterations = 0;
    bool converged = false;
    double kkt_gap = 0.0;        // final m - M violating-pair gap
};

// RBF kernel exp(-gamma * ||a - b||^2).
double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma);

// Soft-margin binary SVC dual: min 1/2 a'Qa - sum(a), 0 <= a <= C, y'a = 0,
// solved by maximal-violating-pair SMO with second-order pair selection.
// y entries must be +1 or -1.
SmoResult solve_svc(const Matrix& X, const std::vector<int8_t>& y, double c, double gamma,
                    const SmoOptions& options = {});

// Epsilon-insensitive SVR via the equivalent 2n-variable problem. The
// returned alpha has length 2n (up/down components); beta_i = alpha[i] -
// alpha[i+n] are the usual expansion coefficients.
SmoResult solve_svr(const Matrix& X, const std::vector<double>& y, double c, double gamma,
                    double epsilon, const SmoOptions& options = {});

}
