#include <fstream>

#include <json.hpp>

#include "sramage/error.hpp"
#include "sramage/learners.hpp"
#include "sramage/repro.hpp"

namespace sramage {

namespace {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (size_t r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (size_t c = 0; c < m.cols(); ++c) row.push_back(m.at(r, c));
        rows.push_back(std::move(row));
    }
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

Matrix matrix_from_json(const json& j) {
    const size_t rows = j.at("rows").get<size_t>();
    const size_t cols = j.at("cols").get<size_t>();
    Matrix m(rows, cols);
    const json& data = j.at("data");
    if (data.size() != rows) throw FormatError("model: matrix row count mismatch");
    for (size_t r = 0; r < rows; ++r) {
        if (data[r].size() != cols) throw FormatError("model: matrix column count mismatch");
        for (size_t c = 0; c < cols; ++c) m.at(r, c) = data[r][c].get<double>();
    }
    return m;
}

json params_to_json(const HyperParams& params) {
    if (const auto* p = std::get_if<KnnParams>(&params)) return json{{"k", p->k}};
    if (const auto* p = std::get_if<SvmParams>(&params))
        return json{{"c", p->c}, {"gamma", p->gamma}};
    if (const auto* p = std::get_if<TreeParams>(&params))
        return json{{"max_depth", p->max_depth},
                    {"min_samples_split", p->min_samples_split},
                    {"min_features_per_split", p->min_features_per_split}};
    const auto& p = std::get<ForestParams>(params);
    return json{{"max_depth", p.tree.max_depth},
                {"min_samples_split", p.tree.min_samples_split},
                {"min_features_per_split", p.tree.min_features_per_split},
                {"num_trees", p.num_trees},
                {"bootstrap", p.bootstrap}};
}

HyperParams params_from_json(LearnerKind kind, const json& j) {
    switch (kind) {
        case LearnerKind::knn:
            return KnnParams{j.at("k").get<int>()};
        case LearnerKind::svm:
            return SvmParams{j.at("c").get<double>(), j.at("gamma").get<double>()};
        case LearnerKind::decision_tree:
            return TreeParams{j.at("max_depth").get<int>(), j.at("min_samples_split").get<int>(),
                              j.at("min_features_per_split").get<int>()};
        case LearnerKind::random_forest:
            return ForestParams{TreeParams{j.at("max_depth").get<int>(),
                                           j.at("min_samples_split").get<int>(),
                                           j.at("min_features_per_split").get<int>()},
                                j.at("num_trees").get<int>(), j.at("bootstrap").get<bool>()};
    }
    throw FormatError("model: unknown learner kind");
}

json tree_to_json(const TreeState& tree) {
    json nodes = json::array();
    for (const auto& n : tree.nodes)
        nodes.push_back(json::array({n.feature, n.threshold, n.left, n.right, n.value}));
    return nodes;
}

TreeState tree_from_json(const json& j) {
    TreeState tree;
    for (const auto& n : j) {
        TreeNode node;
        node.feature = n.at(0).get<int32_t>();
        node.threshold = n.at(1).get<double>();
        node.left = n.at(2).get<int32_t>();
        node.right = n.at(3).get<int32_t>();
        node.value = n.at(4).get<double>();
        tree.nodes.push_back(node);
    }
    if (tree.nodes.empty()) throw FormatError("model: empty tree");
    return tree;
}

json state_to_json(const ModelState& state) {
    if (const auto* knn = std::get_if<KnnState>(&state))
        return json{{"x", matrix_to_json(knn->x)}, {"y", knn->y}};
    if (const auto* svc = std::get_if<SvmClassifierState>(&state)) {
        json pairs = json::array();
        for (const auto& p : svc->pairs)
            pairs.push_back(json{{"class_a", p.class_a},
                                 {"class_b", p.class_b},
                                 {"support_vectors", matrix_to_json(p.support_vectors)},
                                 {"coefs", p.coefs},
                                 {"bias", p.bias},
                                 {"converged", p.converged}});
        return json{{"pairs", std::move(pairs)}};
    }
    if (const auto* svr = std::get_if<SvmRegressorState>(&state))
        return json{{"support_vectors", matrix_to_json(svr->support_vectors)},
                    {"coefs", svr->coefs},
                    {"bias", svr->bias},
                    {"converged", svr->converged}};
    if (const auto* tree = std::get_if<TreeState>(&state))
        return json{{"nodes", tree_to_json(*tree)}};
    const auto& forest = std::get<ForestState>(state);
    json trees = json::array();
    for (const auto& t : forest.trees) trees.push_back(tree_to_json(t));
    return json{{"trees", std::move(trees)}};
}

ModelState state_from_json(LearnerKind kind, Task task, const json& j) {
    switch (kind) {
        case LearnerKind::knn: {
            KnnState s;
            s.x = matrix_from_json(j.at("x"));
            s.y = j.at("y").get<std::vector<double>>();
            if (s.y.size() != s.x.rows()) throw FormatError("model: knn target length mismatch");
            return s;
        }
        case LearnerKind::svm: {
            if (task == Task::regression) {
                SvmRegressorState s;
                s.support_vectors = matrix_from_json(j.at("support_vectors"));
                s.coefs = j.at("coefs").get<std::vector<double>>();
                s.bias = j.at("bias").get<double>();
                s.converged = j.at("converged").get<bool>();
                if (s.coefs.size() != s.support_vectors.rows())
                    throw FormatError("model: svm coef count mismatch");
                return s;
            }
            SvmClassifierState s;
            for (const auto& pj : j.at("pairs")) {
                SvmPairMachine p;
                p.class_a = pj.at("class_a").get<int>();
                p.class_b = pj.at("class_b").get<int>();
                p.support_vectors = matrix_from_json(pj.at("support_vectors"));
                p.coefs = pj.at("coefs").get<std::vector<double>>();
                p.bias = pj.at("bias").get<double>();
                p.converged = pj.at("converged").get<bool>();
                if (p.coefs.size() != p.support_vectors.rows())
                    throw FormatError("model: svm pair coef count mismatch");
                s.pairs.push_back(std::move(p));
            }
            return s;
        }
        case LearnerKind::decision_tree:
            return tree_from_json(j.at("nodes"));
        case LearnerKind::random_forest: {
            ForestState s;
            for (const auto& tj : j.at("trees")) s.trees.push_back(tree_from_json(tj));
            if (s.trees.empty()) throw FormatError("model: empty forest");
            return s;
        }
    }
    throw FormatError("model: unknown learner kind");
}

}

std::string TrainedModel::to_json_string() const {
    json j{{"format", "sramage-model"},
           {"version", 1},
           {"kind", learner_name(kind)},
           {"task", task == Task::regression ? "regression" : "classification"},
           {"num_classes", num_classes},
           {"num_features", num_features},
           {"schema_hash", schema_hash},
           {"params", params_to_json(params)},
           {"standardizer",
            {{"mean", standardizer.means()},
             {"std", standardizer.stds()},
             {"constant_features", standardizer.constant_features()}}},
           {"state", state_to_json(state)}};
    return j.dump();
}

TrainedModel TrainedModel::from_json_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("model: invalid JSON: ") + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != "sramage-model")
            throw FormatError("model: unexpected document format");
        if (j.at("version").get<int>() != 1) throw FormatError("model: unsupported version");

        TrainedModel m;
        m.kind = learner_from_name(j.at("kind").get<std::string>());
        const std::string task = j.at("task").get<std::string>();
        if (task == "regression")
            m.task = Task::regression;
        else if (task == "classification")
            m.task = Task::classification;
        else
            throw FormatError("model: unknown task: " + task);
        m.num_classes = j.at("num_classes").get<int>();
        m.num_features = j.at("num_features").get<size_t>();
        m.schema_hash = j.at("schema_hash").get<uint64_t>();
        m.params = params_from_json(m.kind, j.at("params"));
        const json& st = j.at("standardizer");
        m.standardizer.set(st.at("mean").get<std::vector<double>>(),
                           st.at("std").get<std::vector<double>>(),
                           st.at("constant_features").get<std::vector<size_t>>());
        if (m.standardizer.means().size() != m.num_features)
            throw FormatError("model: standardizer width mismatch");
        m.state = state_from_json(m.kind, m.task, j.at("state"));
        return m;
    } catch (const json::exception& e) {
        throw FormatError(std::string("model: missing or mistyped field: ") + e.what());
    }
}

void TrainedModel::save(const std::string& path, uint64_t seed,
                        const std::string& config_hash) const {
    json j = json::parse(to_json_string());
    j["repro"] = {{"seed", seed}, {"config", config_hash}, {"toolkit_version", kToolkitVersion}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("model: cannot open for writing: " + path);
    out << j.dump(2) << "\n";
    if (!out) throw IoError("model: write failed: " + path);
}

TrainedModel TrainedModel::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("model: cannot open: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_string(text);
}

}
