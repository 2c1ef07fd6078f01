#include <algorithm>
#include <cmath>
#include <numeric>

#include "sramage/error.hpp"
#include "sramage/learners.hpp"
#include "sramage/rng.hpp"

namespace sramage {

namespace {

// Node impurity totals. Classification uses size-weighted Gini
// (n - sum c^2 / n); regression uses the sum of squared errors. Both scale
// linearly with sample count, so split decisions are unchanged when every
// row is duplicated.
struct ClassCounter {
    std::vector<double> counts;
    double total = 0.0;

    explicit ClassCounter(int num_classes) : counts(num_classes, 0.0) {}

    void add(int c, double sign) {
        counts[c] += sign;
        total += sign;
    }

    double impurity() const {
        if (total <= 0.0) return 0.0;
        double sq = 0.0;
        for (double c : counts) sq += c * c;
        return total - sq / total;
    }
};

struct VarianceCounter {
    double sum = 0.0;
    double sum_sq = 0.0;
    double total = 0.0;

    void add(double y, double sign) {
        sum += sign * y;
        sum_sq += sign * y * y;
        total += sign;
    }

    double impurity() const {
        if (total <= 0.0) return 0.0;
        return sum_sq - sum * sum / total;
    }
};

struct SplitChoice {
    bool found = false;
    size_t feature = 0;
    double threshold = 0.0;
    double children_impurity = 0.0;
};

class TreeBuilder {
public:
    TreeBuilder(const Matrix& x, const std::vector<double>& y, Task task, int num_classes,
                const TreeParams& params, Rng rng)
        : x_(x), y_(y), task_(task), num_classes_(num_classes), params_(params),
          rng_(std::move(rng)) {}

    TreeState build(std::vector<size_t> rows) {
        TreeState tree;
        build_node(tree, std::move(rows), 0);
        return tree;
    }

private:
    double leaf_value(const std::vector<size_t>& rows) const {
        if (task_ == Task::regression) {
            double sum = 0.0;
            for (size_t r : rows) sum += y_[r];
            return sum / static_cast<double>(rows.size());
        }
        std::vector<size_t> counts(num_classes_, 0);
        for (size_t r : rows) counts[static_cast<int>(y_[r])]++;
        size_t best = 0;
        for (size_t c = 1; c < counts.size(); ++c)
            if (counts[c] > counts[best]) best = c;  // tie keeps the lower class
        return static_cast<double>(best);
    }

    double node_impurity(const std::vector<size_t>& rows) const {
        if (task_ == Task::regression) {
            VarianceCounter v;
            for (size_t r : rows) v.add(y_[r], 1.0);
            return v.impurity();
        }
        ClassCounter c(num_classes_);
        for (size_t r : rows) c.add(static_cast<int>(y_[r]), 1.0);
        return c.impurity();
    }

    std::vector<size_t> sample_features() {
        const size_t f = x_.cols();
        const size_t m = std::min<size_t>(std::max(1, params_.min_features_per_split), f);
        std::vector<size_t> pool(f);
        std::iota(pool.begin(), pool.end(), size_t{0});
        for (size_t i = 0; i < m; ++i) {
            const size_t j = i + static_cast<size_t>(rng_.below(f - i));
            std::swap(pool[i], pool[j]);
        }
        pool.resize(m);
        std::sort(pool.begin(), pool.end());  // scan order: ascending feature index
        return pool;
    }

    template <typename Counter>
    void scan_feature(size_t feature, const std::vector<std::pair<double, size_t>>& sorted,
                      Counter left, Counter right, SplitChoice& best) const {
        // sorted holds (value, row) ascending; left starts empty, right full.
        for (size_t i = 0; i + 1 < sorted.size(); ++i) {
            const size_t row = sorted[i].second;
            if (task_ == Task::regression) {
                left.add(y_[row], 1.0);
                right.add(y_[row], -1.0);
            } else {
                left.add(static_cast<int>(y_[row]), 1.0);
                right.add(static_cast<int>(y_[row]), -1.0);
            }
            if (sorted[i].first == sorted[i + 1].first) continue;
            const double threshold =
                sorted[i].first + 0.5 * (sorted[i + 1].first - sorted[i].first);
            // Adjacent doubles can collapse the midpoint onto the right value.
            if (!(sorted[i].first <= threshold && threshold < sorted[i + 1].first)) continue;
            const double score = left.impurity() + right.impurity();
            if (!best.found || score < best.children_impurity) {
                best.found = true;
                best.feature = feature;
                best.threshold = threshold;
                best.children_impurity = score;
            }
        }
    }

    SplitChoice find_split(const std::vector<size_t>& rows) {
        SplitChoice best;
        const auto features = sample_features();
        std::vector<std::pair<double, size_t>> sorted(rows.size());
        for (size_t feature : features) {
            for (size_t i = 0; i < rows.size(); ++i)
                sorted[i] = {x_.at(rows[i], feature), rows[i]};
            std::sort(sorted.begin(), sorted.end());
            if (sorted.front().first == sorted.back().first) continue;
            if (task_ == Task::regression) {
                VarianceCounter right;
                for (size_t r : rows) right.add(y_[r], 1.0);
                scan_feature(feature, sorted, VarianceCounter{}, right, best);
            } else {
                ClassCounter right(num_classes_);
                for (size_t r : rows) right.add(static_cast<int>(y_[r]), 1.0);
                scan_feature(feature, sorted, ClassCounter(num_classes_), right, best);
            }
        }
        return best;
    }

    int32_t build_node(TreeState& tree, std::vector<size_t> rows, int depth) {
        const int32_t index = static_cast<int32_t>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes[index].value = leaf_value(rows);

        if (depth >= params_.max_depth) return index;
        if (rows.size() < static_cast<size_t>(std::max(2, params_.min_samples_split)))
            return index;
        const double parent_impurity = node_impurity(rows);
        if (parent_impurity <= 0.0) return index;  // pure node

        const SplitChoice split = find_split(rows);
        if (!split.found) return index;
        const double gain = parent_impurity - split.children_impurity;
        if (gain <= 1e-12 * std::max(1.0, parent_impurity)) return index;

        std::vector<size_t> left_rows, right_rows;
        for (size_t r : rows) {
            if (x_.at(r, split.feature) <= split.threshold)
                left_rows.push_back(r);
            else
                right_rows.push_back(r);
        }
        if (left_rows.empty() || right_rows.empty()) return index;
        rows.clear();
        rows.shrink_to_fit();

        tree.nodes[index].feature = static_cast<int32_t>(split.feature);
        tree.nodes[index].threshold = split.threshold;
        const int32_t left = build_node(tree, std::move(left_rows), depth + 1);
        tree.nodes[index].left = left;
        const int32_t right = build_node(tree, std::move(right_rows), depth + 1);
        tree.nodes[index].right = right;
        return index;
    }

    const Matrix& x_;
    const std::vector<double>& y_;
    Task task_;
    int num_classes_;
    TreeParams params_;
    Rng rng_;
};

std::vector<size_t> all_rows(size_t n) {
    std::vector<size_t> rows(n);
    std::iota(rows.begin(), rows.end(), size_t{0});
    return rows;
}

void validate_tree_params(const TreeParams& p) {
    if (p.max_depth < 1) throw InvalidArgumentError("tree: max_depth must be >= 1");
    if (p.min_samples_split < 2)
        throw InvalidArgumentError("tree: min_samples_split must be >= 2");
    if (p.min_features_per_split < 1)
        throw InvalidArgumentError("tree: min_features_per_split must be >= 1");
}

}

TreeState build_tree(const Matrix& x, const std::vector<double>& y, Task task, int num_classes,
                     const TreeParams& params, uint64_t tree_seed) {
    validate_tree_params(params);
    TreeBuilder builder(x, y, task, num_classes, params, Rng(Rng::derive(tree_seed, 0)));
    return builder.build(all_rows(x.rows()));
}

ForestState build_forest(const Matrix& x, const std::vector<double>& y, Task task,
                         int num_classes, const ForestParams& params, uint64_t seed) {
    validate_tree_params(params.tree);
    if (params.num_trees < 1) throw InvalidArgumentError("forest: num_trees must be >= 1");

    ForestState forest;
    forest.trees.reserve(params.num_trees);
    for (int t = 0; t < params.num_trees; ++t) {
        // Tree t draws from the stream derived for index t, so a one-tree
        // forest without bootstrap reproduces build_tree(seed) exactly.
        Rng rng(Rng::derive(seed, static_cast<uint64_t>(t)));
        std::vector<size_t> rows;
        if (params.bootstrap) {
            rows.resize(x.rows());
            for (auto& r : rows) r = static_cast<size_t>(rng.below(x.rows()));
        } else {
            rows = all_rows(x.rows());
        }
        TreeBuilder builder(x, y, task, num_classes, params.tree, std::move(rng));
        forest.trees.push_back(builder.build(std::move(rows)));
    }
    return forest;
}

double tree_predict_row(const TreeState& tree, std::span<const double> row) {
    int32_t node = 0;
    while (tree.nodes[node].feature >= 0) {
        const TreeNode& n = tree.nodes[node];
        node = row[static_cast<size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return tree.nodes[node].value;
}

}
