#pragma once

#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "glassbox/dataset.hpp"
#include "glassbox/error.hpp"

namespace glassbox {

/// Out-of-sample scores for one fitted model. Classification fills accuracy..f1_weighted,
/// regression fills rmse, mae and mse; the other group stays NaN.
struct MetricSet {
    Task task = Task::classification;
    double accuracy = NAN, precision = NAN, recall = NAN, f1 = NAN, f1_weighted = NAN;
    double rmse = NAN, mae = NAN, mse = NAN;
    double train_seconds = 0.0;

    static const std::vector<std::string>& names(Task t) {
        static const std::vector<std::string> cls{"accuracy", "precision", "recall", "f1", "f1_weighted"};
        static const std::vector<std::string> reg{"rmse", "mae", "mse"};
        return t == Task::classification ? cls : reg;
    }

    static const std::vector<std::string>& all_names() {
        static const std::vector<std::string> all{"accuracy", "precision", "recall", "f1",
                                                  "f1_weighted", "rmse", "mae", "mse"};
        return all;
    }

    double get(std::string_view name) const {
        if (name == "accuracy") return accuracy;
        if (name == "precision") return precision;
        if (name == "recall") return recall;
        if (name == "f1") return f1;
        if (name == "f1_weighted") return f1_weighted;
        if (name == "rmse") return rmse;
        if (name == "mae") return mae;
        if (name == "mse") return mse;
        if (name == "train_seconds") return train_seconds;
        throw ConfigError("unknown metric '" + std::string(name) + "'");
    }

    /// True when a larger value is better.
    static bool higher_is_better(std::string_view name) {
        return !(name == "rmse" || name == "mae" || name == "mse" || name == "train_seconds");
    }
};

struct ConfusionCounts {
    double tp = 0, fp = 0, fn = 0, tn = 0;
};

inline double safe_ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

inline double f1_from(double tp, double fp, double fn) {
    const double p = safe_ratio(tp, tp + fp), r = safe_ratio(tp, tp + fn);
    return safe_ratio(2.0 * p * r, p + r);
}

/// Predicted positive iff p_hat >= threshold. Precision, recall and F1 use the positive class and
/// are 0 when their denominator is 0. f1_weighted averages both classes' F1 by true support.
inline MetricSet classification_metrics(std::span<const double> y_true, std::span<const double> p_hat,
                                        double threshold = 0.5) {
    if (y_true.size() != p_hat.size())
        throw DataError("length mismatch: " + std::to_string(y_true.size()) + " labels vs " +
                        std::to_string(p_hat.size()) + " predictions");
    if (y_true.empty()) throw DataError("no predictions to score");
    ConfusionCounts c;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (y_true[i] != 0.0 && y_true[i] != 1.0) throw DataError("classification labels must be 0/1");
        if (!(p_hat[i] >= 0.0 && p_hat[i] <= 1.0)) throw DataError("predicted probability outside [0, 1]");
        const bool pred = p_hat[i] >= threshold;
        const bool truth = y_true[i] == 1.0;
        if (pred && truth) c.tp += 1;
        else if (pred) c.fp += 1;
        else if (truth) c.fn += 1;
        else c.tn += 1;
    }
    MetricSet m;
    m.task = Task::classification;
    const double n = c.tp + c.fp + c.fn + c.tn;
    m.accuracy = (c.tp + c.tn) / n;
    m.precision = safe_ratio(c.tp, c.tp + c.fp);
    m.recall = safe_ratio(c.tp, c.tp + c.fn);
    m.f1 = safe_ratio(2.0 * m.precision * m.recall, m.precision + m.recall);
    const double f1_neg = f1_from(c.tn, c.fn, c.fp);
    m.f1_weighted = ((c.tp + c.fn) * m.f1 + (c.tn + c.fp) * f1_neg) / n;
    return m;
}

inline MetricSet regression_metrics(std::span<const double> y_true, std::span<const double> y_hat) {
    if (y_true.size() != y_hat.size())
        throw DataError("length mismatch: " + std::to_string(y_true.size()) + " targets vs " +
                        std::to_string(y_hat.size()) + " predictions");
    if (y_true.empty()) throw DataError("no predictions to score");
    double se = 0.0, ae = 0.0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const double r = y_true[i] - y_hat[i];
        se += r * r;
        ae += std::abs(r);
    }
    const double n = static_cast<double>(y_true.size());
    MetricSet m;
    m.task = Task::regression;
    m.mse = se / n;
    m.rmse = std::sqrt(m.mse);
    m.mae = ae / n;
    return m;
}

}  // namespace glassbox
