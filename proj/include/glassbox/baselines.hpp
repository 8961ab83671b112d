#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "glassbox/boost.hpp"
#include "glassbox/config.hpp"
#include "glassbox/model.hpp"
#include "glassbox/serialize.hpp"

namespace glassbox {

// ---------------------------------------------------------------------------
// Linear / logistic regression
// ---------------------------------------------------------------------------

struct LinearModelConfig {
    double l2 = 1.0;
    int max_iters = 200;
    double tol = 1e-6;

    void check() const {
        if (!(l2 >= 0.0)) throw ConfigError("linear l2 must be >= 0");
        if (max_iters < 1) throw ConfigError("linear max_iters must be >= 1");
        if (!(tol > 0.0)) throw ConfigError("linear tol must be > 0");
    }

    static LinearModelConfig from(const KeyValueConfig& kv) {
        LinearModelConfig c;
        c.l2 = kv.get_double("linear.l2", c.l2);
        c.max_iters = static_cast<int>(kv.get_int("linear.max_iters", c.max_iters));
        c.tol = kv.get_double("linear.tol", c.tol);
        c.check();
        return c;
    }
};

/// Column layout of the linear design: intercept first, then one standardized column per
/// non-constant numeric feature and one indicator per non-reference categorical level.
struct LinearDesign {
    struct Column {
        int feature = 0;
        bool categorical = false;
        std::size_t level = 0;          // categorical
        double mean = 0.0, scale = 1.0;  // numeric
    };
    std::vector<Column> columns;  // excludes the intercept
    Eigen::MatrixXd matrix;       // rows x (1 + columns)

    std::size_t width() const { return columns.size() + 1; }
};

struct LinearFitInfo {
    LinearDesign design;
    Eigen::VectorXd beta;               // on the design columns, intercept first
    std::vector<double> objective;      // penalized objective per Newton iteration (logistic)
    int iterations = 0;
    bool converged = true;
    double ridge = 0.0;                 // extra jitter added to the normal matrix
};

namespace detail {

inline LinearDesign linear_design(const Dataset& d, const LinearDesign* layout = nullptr) {
    LinearDesign out;
    if (layout) {
        out.columns = layout->columns;
    } else {
        for (std::size_t j = 0; j < d.cols(); ++j) {
            const auto& info = d.schema.features[j];
            if (info.kind == FeatureKind::categorical) {
                for (std::size_t l = 1; l < info.levels.size(); ++l)
                    out.columns.push_back({static_cast<int>(j), true, l, 0.0, 1.0});
                continue;
            }
            const auto col = d.column(j);
            double mean = 0.0;
            for (double x : col) mean += x;
            mean /= static_cast<double>(col.size());
            double var = 0.0;
            for (double x : col) var += (x - mean) * (x - mean);
            var /= static_cast<double>(col.size());
            if (var <= 0.0) continue;
            out.columns.push_back({static_cast<int>(j), false, 0, mean, std::sqrt(var)});
        }
    }
    out.matrix.resize(static_cast<Eigen::Index>(d.rows()), static_cast<Eigen::Index>(out.width()));
    for (std::size_t i = 0; i < d.rows(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        out.matrix(r, 0) = 1.0;
        for (std::size_t c = 0; c < out.columns.size(); ++c) {
            const auto& col = out.columns[c];
            const double x = d.at(i, static_cast<std::size_t>(col.feature));
            out.matrix(r, static_cast<Eigen::Index>(c + 1)) =
                col.categorical ? (x == static_cast<double>(col.level) ? 1.0 : 0.0) : (x - col.mean) / col.scale;
        }
    }
    return out;
}

/// Solves A x = b with A symmetric positive semi-definite. On failure retries with a diagonal
/// jitter starting at 1e-8 * max diag, growing 10x up to six times.
inline Eigen::VectorXd solve_spd(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double* ridge_used = nullptr) {
    const double scale = std::max(a.diagonal().cwiseAbs().maxCoeff(), 1.0);
    double jitter = 0.0;
    for (int attempt = 0; attempt <= 6; ++attempt) {
        Eigen::MatrixXd m = a;
        if (jitter > 0.0) m.diagonal().array() += jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(m);
        if (llt.info() == Eigen::Success) {
            Eigen::VectorXd x = llt.solve(b);
            if (x.allFinite()) {
                if (ridge_used) *ridge_used = jitter;
                return x;
            }
        }
        jitter = jitter == 0.0 ? 1e-8 * scale : jitter * 10.0;
    }
    throw FitError("normal matrix is singular even after diagonal jitter");
}

inline double logistic_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& beta,
                                 double l2) {
    const Eigen::VectorXd s = x * beta;
    double loss = 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        const double v = s(i);
        const double softplus = v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
        loss += softplus - y(i) * v;
    }
    return loss + 0.5 * l2 * beta.tail(beta.size() - 1).squaredNorm();
}

}  // namespace detail

/// Ridge regression (minimizes |y - X b|^2 + l2 |b|^2) or L2-penalized logistic regression
/// (minimizes sum logloss + l2/2 |b|^2 by damped Newton). The intercept is not penalized.
/// The result is an AdditiveModel of straight lines (numeric) and level tables (categorical).
inline AdditiveModel fit_linear(const Dataset& train, const LinearModelConfig& cfg, LinearFitInfo* info_out = nullptr) {
    cfg.check();
    if (train.rows() == 0) throw DataError("empty training set");
    detail::check_binary_target(train);
    LinearFitInfo info;
    info.design = detail::linear_design(train);
    const auto& x = info.design.matrix;
    const Eigen::Index p = x.cols();
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(train.y.data(), static_cast<Eigen::Index>(train.rows()));
    Eigen::VectorXd penalty = Eigen::VectorXd::Constant(p, cfg.l2);
    penalty(0) = 0.0;

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    if (train.task == Task::regression) {
        Eigen::MatrixXd a = x.transpose() * x;
        a.diagonal() += penalty;
        beta = detail::solve_spd(a, x.transpose() * y, &info.ridge);
    } else {
        beta(0) = detail::base_score(train);
        double obj = detail::logistic_objective(x, y, beta, cfg.l2);
        info.objective.push_back(obj);
        info.converged = false;
        for (int it = 0; it < cfg.max_iters; ++it) {
            const Eigen::VectorXd s = x * beta;
            Eigen::VectorXd mu(s.size()), w(s.size());
            for (Eigen::Index i = 0; i < s.size(); ++i) {
                mu(i) = sigmoid(s(i));
                w(i) = std::max(mu(i) * (1.0 - mu(i)), 1e-12);
            }
            const Eigen::VectorXd grad = x.transpose() * (mu - y) + penalty.cwiseProduct(beta);
            Eigen::MatrixXd h = x.transpose() * w.asDiagonal() * x;
            h.diagonal() += penalty;
            double ridge = 0.0;
            const Eigen::VectorXd step = detail::solve_spd(h, grad, &ridge);
            info.ridge = std::max(info.ridge, ridge);
            double t = 1.0, next_obj = obj;
            Eigen::VectorXd next = beta;
            for (int halving = 0; halving < 30; ++halving) {
                next = beta - t * step;
                next_obj = detail::logistic_objective(x, y, next, cfg.l2);
                if (std::isfinite(next_obj) && next_obj <= obj) break;
                t *= 0.5;
            }
            if (!(std::isfinite(next_obj) && next_obj <= obj)) {
                info.converged = true;  // no descent direction left at working precision
                break;
            }
            const double change = obj - next_obj;
            beta = next;
            obj = next_obj;
            info.objective.push_back(obj);
            info.iterations = it + 1;
            if (change <= cfg.tol * (std::abs(obj) + cfg.tol) || t * step.cwiseAbs().maxCoeff() <= cfg.tol) {
                info.converged = true;
                break;
            }
        }
    }
    info.beta = beta;

    AdditiveModel model;
    model.schema = train.schema;
    model.task = train.task;
    model.link = Link::for_task(train.task);
    model.intercept = beta(0);
    model.metadata["backend"] = "linear";
    if (!info.converged) model.metadata["warning"] = "newton iterations did not converge";
    for (std::size_t j = 0; j < train.cols(); ++j) {
        const auto& feat = train.schema.features[j];
        if (feat.kind == FeatureKind::categorical) {
            CategoricalTable t;
            t.levels = feat.levels;
            t.values.assign(feat.levels.size(), 0.0);
            bool any = false;
            for (std::size_t c = 0; c < info.design.columns.size(); ++c) {
                const auto& col = info.design.columns[c];
                if (col.feature != static_cast<int>(j)) continue;
                t.values[col.level] = beta(static_cast<Eigen::Index>(c + 1));
                any = true;
            }
            if (any) model.terms.push_back({{static_cast<int>(j)}, std::move(t)});
            continue;
        }
        for (std::size_t c = 0; c < info.design.columns.size(); ++c) {
            const auto& col = info.design.columns[c];
            if (col.feature != static_cast<int>(j)) continue;
            const auto column = train.column(j);
            const auto [lo, hi] = std::minmax_element(column.begin(), column.end());
            const double slope = beta(static_cast<Eigen::Index>(c + 1)) / col.scale;
            Sampled1D s;
            s.grid = {*lo, *hi};
            s.values = {slope * (*lo - col.mean), slope * (*hi - col.mean)};
            model.terms.push_back({{static_cast<int>(j)}, std::move(s)});
        }
    }
    model = center_terms(std::move(model), train);
    if (info_out) *info_out = std::move(info);
    return model;
}

// ---------------------------------------------------------------------------
// CART decision tree
// ---------------------------------------------------------------------------

enum class SplitCriterion { gini, mse };

struct TreeConfig {
    int max_depth = 12;
    int min_leaf = 1;
    SplitCriterion criterion = SplitCriterion::gini;  // replaced by mse for regression data

    void check() const {
        if (max_depth < 1) throw ConfigError("tree max_depth must be >= 1");
        if (min_leaf < 1) throw ConfigError("tree min_leaf must be >= 1");
    }

    static TreeConfig from(const KeyValueConfig& kv) {
        TreeConfig c;
        c.max_depth = static_cast<int>(kv.get_int("tree.max_depth", c.max_depth));
        c.min_leaf = static_cast<int>(kv.get_int("tree.min_leaf", c.min_leaf));
        const auto crit = kv.get_string("tree.criterion", "gini");
        if (crit == "gini") c.criterion = SplitCriterion::gini;
        else if (crit == "mse") c.criterion = SplitCriterion::mse;
        else throw ConfigError("tree.criterion must be gini or mse");
        c.check();
        return c;
    }
};

struct TreeNode {
    int feature = -1;  // -1 for a leaf
    double threshold = 0.0;  // rows with x <= threshold go left
    int left = -1, right = -1;
    double value = 0.0;  // positive-class fraction or mean target
    std::size_t samples = 0;

    bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
    Task task = Task::classification;
    Schema schema;
    std::vector<TreeNode> nodes;  // nodes[0] is the root
    std::optional<TargetScaling> target_scaling;

    int depth() const {
        int best = 0;
        std::vector<std::pair<int, int>> stack{{0, 0}};
        while (!stack.empty()) {
            const auto [n, d] = stack.back();
            stack.pop_back();
            best = std::max(best, d);
            const auto& node = nodes[static_cast<std::size_t>(n)];
            if (!node.is_leaf()) {
                stack.emplace_back(node.left, d + 1);
                stack.emplace_back(node.right, d + 1);
            }
        }
        return best;
    }
};

/// Leaf value for a row: positive-class probability (classification) or mean target, mapped back
/// through the target scaling when present.
inline double predict(const DecisionTree& tree, std::span<const double> row) {
    if (row.size() != tree.schema.size()) throw DataError("schema mismatch: row width differs from tree schema");
    std::size_t n = 0;
    while (!tree.nodes[n].is_leaf()) {
        const auto& node = tree.nodes[n];
        n = static_cast<std::size_t>(row[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right);
    }
    const double v = tree.nodes[n].value;
    return tree.target_scaling ? v * tree.target_scaling->std + tree.target_scaling->mean : v;
}

namespace detail {

/// Node impurity times sample count: n * gini or the sum of squared deviations.
inline double weighted_impurity(SplitCriterion crit, double n, double sum, double sum_sq) {
    if (n <= 0.0) return 0.0;
    if (crit == SplitCriterion::gini) {
        const double p = sum / n;  // y in {0,1}
        return n * 2.0 * p * (1.0 - p);
    }
    return std::max(sum_sq - sum * sum / n, 0.0);
}

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

/// Exhaustive best split of `rows`: every feature, every midpoint between consecutive distinct
/// values. Ties keep the first (lowest feature, lowest threshold).
inline SplitChoice best_split(const Dataset& d, std::span<const std::size_t> rows, SplitCriterion crit, int min_leaf) {
    const double n = static_cast<double>(rows.size());
    double sum = 0.0, sum_sq = 0.0;
    for (auto i : rows) {
        sum += d.y[i];
        sum_sq += d.y[i] * d.y[i];
    }
    const double parent = weighted_impurity(crit, n, sum, sum_sq);
    SplitChoice best;
    if (parent <= 0.0) return best;
    std::vector<std::pair<double, double>> pts(rows.size());
    for (std::size_t j = 0; j < d.cols(); ++j) {
        for (std::size_t k = 0; k < rows.size(); ++k) pts[k] = {d.at(rows[k], j), d.y[rows[k]]};
        std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        double ls = 0.0, lss = 0.0;
        for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
            ls += pts[k].second;
            lss += pts[k].second * pts[k].second;
            if (pts[k].first == pts[k + 1].first) continue;
            const double nl = static_cast<double>(k + 1), nr = n - nl;
            if (nl < min_leaf || nr < min_leaf) continue;
            const double child = weighted_impurity(crit, nl, ls, lss) + weighted_impurity(crit, nr, sum - ls, sum_sq - lss);
            const double gain = parent - child;
            if (gain > best.gain + 1e-12 * parent) {
                best.feature = static_cast<int>(j);
                best.gain = gain;
                best.threshold = pts[k].first + 0.5 * (pts[k + 1].first - pts[k].first);
                if (!(best.threshold > pts[k].first)) best.threshold = pts[k].first;
            }
        }
    }
    return best;
}

inline int grow_tree(DecisionTree& tree, const Dataset& d, std::vector<std::size_t> rows, int depth, const TreeConfig& cfg,
                     SplitCriterion crit) {
    TreeNode node;
    node.samples = rows.size();
    double sum = 0.0;
    for (auto i : rows) sum += d.y[i];
    node.value = sum / static_cast<double>(rows.size());
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(node);
    if (depth >= cfg.max_depth) return id;
    const auto split = best_split(d, rows, crit, cfg.min_leaf);
    if (split.feature < 0) return id;
    std::vector<std::size_t> left, right;
    for (auto i : rows) (d.at(i, static_cast<std::size_t>(split.feature)) <= split.threshold ? left : right).push_back(i);
    rows.clear();
    rows.shrink_to_fit();
    const int l = grow_tree(tree, d, std::move(left), depth + 1, cfg, crit);
    const int r = grow_tree(tree, d, std::move(right), depth + 1, cfg, crit);
    auto& self = tree.nodes[static_cast<std::size_t>(id)];
    self.feature = split.feature;
    self.threshold = split.threshold;
    self.left = l;
    self.right = r;
    return id;
}

}  // namespace detail

/// Greedy CART grown to cfg.max_depth or purity. Classification uses Gini, regression MSE.
inline DecisionTree fit_tree(const Dataset& train, TreeConfig cfg) {
    cfg.check();
    if (train.rows() == 0) throw DataError("empty training set");
    detail::check_binary_target(train);
    if (train.task == Task::regression) cfg.criterion = SplitCriterion::mse;
    DecisionTree tree;
    tree.task = train.task;
    tree.schema = train.schema;
    std::vector<std::size_t> rows(train.rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    detail::grow_tree(tree, train, std::move(rows), 0, cfg, cfg.criterion);
    return tree;
}

inline constexpr const char* kTreeVersion = "glassbox-tree/1";

inline nlohmann::json tree_to_json(const DecisionTree& t) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : t.nodes)
        nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left},
                         {"right", n.right}, {"value", n.value}, {"samples", n.samples}});
    nlohmann::json j = {{"version", kTreeVersion}, {"task", std::string(to_string(t.task))},
                        {"schema", schema_to_json(t.schema)}, {"nodes", nodes}};
    if (t.target_scaling) j["target_scaling"] = {{"mean", t.target_scaling->mean}, {"std", t.target_scaling->std}};
    return j;
}

inline DecisionTree tree_from_json(const nlohmann::json& j) {
    try {
        if (j.at("version").get<std::string>() != kTreeVersion) throw DataError("unsupported tree version");
        DecisionTree t;
        t.task = task_from_string(j.at("task").get<std::string>());
        t.schema = schema_from_json(j.at("schema"));
        for (const auto& n : j.at("nodes")) {
            TreeNode node;
            node.feature = n.at("feature").get<int>();
            node.threshold = n.at("threshold").get<double>();
            node.left = n.at("left").get<int>();
            node.right = n.at("right").get<int>();
            node.value = n.at("value").get<double>();
            node.samples = n.value("samples", std::size_t{0});
            t.nodes.push_back(node);
        }
        if (j.contains("target_scaling"))
            t.target_scaling = TargetScaling{j["target_scaling"].at("mean").get<double>(),
                                             j["target_scaling"].at("std").get<double>()};
        const int count = static_cast<int>(t.nodes.size());
        if (count == 0) throw DataError("tree has no nodes");
        for (int k = 0; k < count; ++k) {
            const auto& n = t.nodes[static_cast<std::size_t>(k)];
            if (!n.is_leaf() && (n.feature >= static_cast<int>(t.schema.size()) || n.left <= k || n.right <= k ||
                                 n.left >= count || n.right >= count))
                throw DataError("tree node references out of range");
        }
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed tree document: ") + e.what());
    }
}

inline void save_tree(const DecisionTree& t, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << tree_to_json(t).dump(1) << '\n';
}

inline DecisionTree load_tree(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read tree file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("tree file '" + path + "' is not valid JSON: " + e.what());
    }
    return tree_from_json(j);
}

}  // namespace glassbox
