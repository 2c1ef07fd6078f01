#include "sramage/svm_solver.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "sramage/error.hpp"

namespace sramage {

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma) {
    double d2 = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        d2 += d * d;
    }
    return std::exp(-gamma * d2);
}

namespace {

constexpr double kTau = 1e-12;

// FIFO cache of base-kernel rows. Full matrix when the budget allows.
class KernelCache {
public:
    KernelCache(const Matrix& x, double gamma, double cache_mb)
        : x_(x), gamma_(gamma), slot_of_(x.rows(), -1) {
        const size_t n = x.rows();
        size_t max_rows = static_cast<size_t>(cache_mb * 1024.0 * 1024.0 / (8.0 * n));
        max_rows_ = std::clamp<size_t>(max_rows, 2, n);
        rows_.reserve(max_rows_);
    }

    const std::vector<double>& row(size_t i) {
        if (slot_of_[i] >= 0) return rows_[static_cast<size_t>(slot_of_[i])];
        if (rows_.size() < max_rows_) {
            rows_.emplace_back();
            fill(i, rows_.back());
            slot_of_[i] = static_cast<int64_t>(rows_.size() - 1);
            order_.push_back(i);
            return rows_.back();
        }
        const size_t victim = order_.front();
        order_.pop_front();
        const size_t slot = static_cast<size_t>(slot_of_[victim]);
        slot_of_[victim] = -1;
        fill(i, rows_[slot]);
        slot_of_[i] = static_cast<int64_t>(slot);
        order_.push_back(i);
        return rows_[slot];
    }

private:
    void fill(size_t i, std::vector<double>& out) {
        const size_t n = x_.rows();
        out.resize(n);
        const auto xi = x_.row(i);
        for (size_t j = 0; j < n; ++j) out[j] = rbf_kernel(xi, x_.row(j), gamma_);
    }

    const Matrix& x_;
    double gamma_;
    size_t max_rows_ = 0;
    std::vector<std::vector<double>> rows_;
    std::vector<int64_t> slot_of_;
    std::deque<size_t> order_;
};

// Generic problem: min 1/2 a'Qa + p'a, 0 <= a <= C, y'a = 0, with
// Q_uv = y_u y_v Khat(u, v). For SVC, Khat is the base kernel; for SVR the
// 2n-variable wrapper maps indices down to base rows.
struct DualProblem {
    size_t size = 0;
    std::vector<int8_t> y;
    std::vector<double> p;
    double c = 1.0;
    // base row index and kernel handle
    std::vector<size_t> base;
    KernelCache* cache = nullptr;
};

void q_row(const DualProblem& prob, size_t u, std::vector<double>& out) {
    const std::vector<double>& k = prob.cache->row(prob.base[u]);
    out.resize(prob.size);
    const double yu = prob.y[u];
    for (size_t v = 0; v < prob.size; ++v) out[v] = yu * prob.y[v] * k[prob.base[v]];
}

SmoResult solve(const DualProblem& prob, const SmoOptions& options) {
    const size_t n = prob.size;
    SmoResult res;
    res.alpha.assign(n, 0.0);

    std::vector<double> grad = prob.p;  // gradient of the objective at alpha = 0
    std::vector<double> qi, qj;

    const size_t cap = std::min<size_t>(options.hard_iteration_cap,
                                        options.max_passes * n * n + 1);

    auto in_up = [&](size_t u) {
        return (prob.y[u] > 0 && res.alpha[u] < prob.c) || (prob.y[u] < 0 && res.alpha[u] > 0);
    };
    auto in_low = [&](size_t u) {
        return (prob.y[u] < 0 && res.alpha[u] < prob.c) || (prob.y[u] > 0 && res.alpha[u] > 0);
    };

    double m_val = 0.0, big_m_val = 0.0;
    size_t it = 0;
    for (; it < cap; ++it) {
        // First-order choice of i within I_up.
        size_t i = n;
        m_val = -std::numeric_limits<double>::infinity();
        for (size_t u = 0; u < n; ++u) {
            if (!in_up(u)) continue;
            const double v = -prob.y[u] * grad[u];
            if (v > m_val) {
                m_val = v;
                i = u;
            }
        }
        big_m_val = std::numeric_limits<double>::infinity();
        for (size_t u = 0; u < n; ++u) {
            if (!in_low(u)) continue;
            big_m_val = std::min(big_m_val, -prob.y[u] * grad[u]);
        }
        if (i == n || m_val - big_m_val <= options.tol) break;

        q_row(prob, i, qi);

        // Second-order choice of j within I_low (largest decrease).
        size_t j = n;
        double best_gain = -1.0;
        for (size_t v = 0; v < n; ++v) {
            if (!in_low(v)) continue;
            const double vv = -prob.y[v] * grad[v];
            const double b = m_val - vv;
            if (b <= 0.0) continue;
            // eta = Khat_ii + Khat_vv - 2 Khat_iv; the RBF diagonal is 1.
            double eta = qi[i] + 1.0 - 2.0 * prob.y[i] * prob.y[v] * qi[v];
            if (eta <= 0.0) eta = kTau;
            const double gain = b * b / eta;
            if (gain > best_gain) {
                best_gain = gain;
                j = v;
            }
        }
        if (j == n) break;  // no improving partner within the box

        q_row(prob, j, qj);

        double eta = qi[i] + qj[j] - 2.0 * prob.y[i] * prob.y[j] * qi[j];
        if (eta <= 0.0) eta = kTau;
        const double vj = -prob.y[j] * grad[j];
        double t = (m_val - vj) / eta;

        // Box constraints on both coordinates along the feasible direction.
        const double bound_i = prob.y[i] > 0 ? prob.c - res.alpha[i] : res.alpha[i];
        const double bound_j = prob.y[j] > 0 ? res.alpha[j] : prob.c - res.alpha[j];
        t = std::min(t, std::min(bound_i, bound_j));
        if (t <= 0.0) break;  // pinned at the box; no progress possible

        const double delta_i = prob.y[i] * t;
        const double delta_j = -prob.y[j] * t;
        res.alpha[i] += delta_i;
        res.alpha[j] += delta_j;
        // Clamp tiny numerical spill outside the box.
        res.alpha[i] = std::clamp(res.alpha[i], 0.0, prob.c);
        res.alpha[j] = std::clamp(res.alpha[j], 0.0, prob.c);

        for (size_t u = 0; u < n; ++u) grad[u] += qi[u] * delta_i + qj[u] * delta_j;
    }
    res.iterations = it;

    // Final gap and bias from the violating-pair bounds.
    double m_fin = -std::numeric_limits<double>::infinity();
    double big_m_fin = std::numeric_limits<double>::infinity();
    for (size_t u = 0; u < n; ++u) {
        const double v = -prob.y[u] * grad[u];
        if (in_up(u)) m_fin = std::max(m_fin, v);
        if (in_low(u)) big_m_fin = std::min(big_m_fin, v);
    }
    if (std::isinf(m_fin) && std::isinf(big_m_fin)) {
        res.bias = 0.0;
        res.kkt_gap = 0.0;
    } else if (std::isinf(m_fin)) {
        res.bias = big_m_fin;
        res.kkt_gap = 0.0;
    } else if (std::isinf(big_m_fin)) {
        res.bias = m_fin;
        res.kkt_gap = 0.0;
    } else {
        res.bias = 0.5 * (m_fin + big_m_fin);
        res.kkt_gap = m_fin - big_m_fin;
    }
    if (res.kkt_gap <= options.tol) res.converged = true;
    return res;
}

}

SmoResult solve_svc(const Matrix& X, const std::vector<int8_t>& y, double c, double gamma,
                    const SmoOptions& options) {
    const size_t n = X.rows();
    if (n == 0 || y.size() != n) throw InvalidArgumentError("solve_svc: bad problem size");
    if (c <= 0.0 || gamma <= 0.0) throw InvalidArgumentError("solve_svc: c and gamma must be positive");
    bool has_pos = false, has_neg = false;
    for (int8_t v : y) {
        if (v == 1) has_pos = true;
        else if (v == -1) has_neg = true;
        else throw InvalidArgumentError("solve_svc: labels must be +1/-1");
    }
    if (!has_pos || !has_neg) throw DegenerateDataError("solve_svc: single-class problem");

    KernelCache cache(X, gamma, options.cache_mb);
    DualProblem prob;
    prob.size = n;
    prob.y = y;
    prob.p.assign(n, -1.0);
    prob.c = c;
    prob.base.resize(n);
    for (size_t i = 0; i < n; ++i) prob.base[i] = i;
    prob.cache = &cache;
    return solve(prob, options);
}

SmoResult solve_svr(const Matrix& X, const std::vector<double>& y, double c, double gamma,
                    double epsilon, const SmoOptions& options) {
    const size_t n = X.rows();
    if (n == 0 || y.size() != n) throw InvalidArgumentError("solve_svr: bad problem size");
    if (c <= 0.0 || gamma <= 0.0) throw InvalidArgumentError("solve_svr: c and gamma must be positive");
    if (epsilon < 0.0) throw InvalidArgumentError("solve_svr: epsilon must be non-negative");

    KernelCache cache(X, gamma, options.cache_mb);
    DualProblem prob;
    prob.size = 2 * n;
    prob.y.resize(2 * n);
    prob.p.resize(2 * n);
    prob.base.resize(2 * n);
    for (size_t i = 0; i < n; ++i) {
        prob.y[i] = 1;
        prob.p[i] = epsilon - y[i];
        prob.base[i] = i;
        prob.y[n + i] = -1;
        prob.p[n + i] = epsilon + y[i];
        prob.base[n + i] = i;
    }
    prob.c = c;
    prob.cache = &cache;
    return solve(prob, options);
}

}
