#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "glassbox/error.hpp"

namespace glassbox {

enum class Task { classification, regression };

enum class FeatureKind { numeric, categorical };

inline std::string_view to_string(Task t) {
    return t == Task::classification ? "classification" : "regression";
}

inline Task task_from_string(std::string_view s) {
    if (s == "classification") return Task::classification;
    if (s == "regression") return Task::regression;
    throw ConfigError("unknown task '" + std::string(s) + "' (expected classification|regression)");
}

/// One model input column.
///
/// Categorical cells are stored as the index into `levels`. Indicator columns produced by
/// one-hot encoding are categorical with levels {"0","1"}, so the cell value equals the
/// indicator value; `source_column`/`source_level` record where they came from.
struct FeatureInfo {
    std::string name;
    FeatureKind kind = FeatureKind::numeric;
    std::vector<std::string> levels;
    std::string source_column;
    std::string source_level;
    // Value substituted for a missing cell at predict time (training median / mode index).
    double fill = 0.0;

    bool is_indicator() const { return !source_column.empty(); }

    /// Level index of `level`, or -1 when unseen.
    int level_index(std::string_view level) const {
        for (std::size_t i = 0; i < levels.size(); ++i)
            if (levels[i] == level) return static_cast<int>(i);
        return -1;
    }
};

struct Schema {
    std::vector<FeatureInfo> features;

    std::size_t size() const { return features.size(); }

    int index_of(std::string_view name) const {
        for (std::size_t i = 0; i < features.size(); ++i)
            if (features[i].name == name) return static_cast<int>(i);
        return -1;
    }
};

/// A categorical source column that was expanded into indicator columns.
struct OneHotGroup {
    std::string source;
    std::vector<std::string> levels;
    std::vector<int> columns;  // indicator column per level, same order as `levels`
};

/// Column-typed tabular data after preprocessing: N rows, n features, dense row-major storage.
struct Dataset {
    Schema schema;
    std::vector<double> x;  // row-major N x n
    std::vector<double> y;
    Task task = Task::regression;
    std::string target_name;
    std::vector<OneHotGroup> one_hot_groups;

    std::size_t rows() const { return y.size(); }
    std::size_t cols() const { return schema.size(); }

    std::span<const double> row(std::size_t i) const {
        return {x.data() + i * cols(), cols()};
    }
    double at(std::size_t i, std::size_t j) const { return x[i * cols() + j]; }
    double& at(std::size_t i, std::size_t j) { return x[i * cols() + j]; }

    std::vector<double> column(std::size_t j) const {
        std::vector<double> out(rows());
        for (std::size_t i = 0; i < rows(); ++i) out[i] = at(i, j);
        return out;
    }

    /// Level index of row `i` within one-hot group `g`, or -1 when no indicator is set.
    int group_level(std::size_t i, const OneHotGroup& g) const {
        for (std::size_t l = 0; l < g.columns.size(); ++l)
            if (at(i, static_cast<std::size_t>(g.columns[l])) == 1.0) return static_cast<int>(l);
        return -1;
    }

    /// Rows picked by `indices`, in that order.
    Dataset subset(std::span<const std::size_t> indices) const {
        Dataset out;
        out.schema = schema;
        out.task = task;
        out.target_name = target_name;
        out.one_hot_groups = one_hot_groups;
        out.x.reserve(indices.size() * cols());
        out.y.reserve(indices.size());
        for (std::size_t i : indices) {
            auto r = row(i);
            out.x.insert(out.x.end(), r.begin(), r.end());
            out.y.push_back(y[i]);
        }
        return out;
    }
};

}  // namespace glassbox
