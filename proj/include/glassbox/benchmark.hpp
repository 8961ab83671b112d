#pragma once

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "glassbox/csv.hpp"
#include "glassbox/ingest.hpp"
#include "glassbox/metrics.hpp"
#include "glassbox/parallel.hpp"
#include "glassbox/pipeline.hpp"

namespace glassbox {

/// Probability (classification) or standardized target (regression) for one row.
using Predictor = std::function<double(std::span<const double>)>;

struct ModelSpec {
    std::string name;
    std::function<Predictor(const Dataset& train)> fit;
};

inline ModelSpec model_spec(const FitConfig& cfg) {
    return {std::string(display_name(cfg.kind)), [cfg](const Dataset& train) -> Predictor {
                auto fitted = std::make_shared<FittedModel>(fit_backend(train, cfg));
                return [fitted](std::span<const double> row) { return fitted->predict(row); };
            }};
}

struct NamedDataset {
    std::string name;
    Task task = Task::classification;
    std::optional<Dataset> data;
    std::string error;  // why `data` is empty
};

struct BenchmarkOptions {
    int folds = 5;
    std::uint64_t seed = 0;
    int jobs = 1;
};

struct FoldRecord {
    std::string dataset, model;
    Task task = Task::classification;
    int fold = 0;
    bool ok = false;
    std::string error;
    MetricSet metrics;
};

struct CellAggregate {
    std::string dataset, model;
    Task task = Task::classification;
    bool ok = false;
    std::string error;
    std::map<std::string, double> mean, std;  // over fold values (population std)
    double seconds_mean = NAN, seconds_std = NAN;
};

struct BenchmarkReport {
    BenchmarkOptions options;
    std::vector<std::string> datasets, models;
    std::map<std::string, std::string> config;
    std::vector<FoldRecord> folds;
    std::vector<CellAggregate> aggregates;

    const CellAggregate* find(const std::string& dataset, const std::string& model) const {
        for (const auto& a : aggregates)
            if (a.dataset == dataset && a.model == model) return &a;
        return nullptr;
    }
};

inline std::pair<double, double> mean_std(std::span<const double> v) {
    if (v.empty()) return {NAN, NAN};
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return {m, std::sqrt(s / static_cast<double>(v.size()))};
}

/// Scores one fold: regression targets are standardized with training-fold statistics, the model
/// is fitted and timed, then evaluated on the held-out rows in the standardized scale.
inline FoldRecord run_fold(const Dataset& data, const FoldPlan& plan, int fold, const ModelSpec& model) {
    FoldRecord rec;
    rec.model = model.name;
    rec.task = data.task;
    rec.fold = fold;
    try {
        const auto train_rows = plan.train_rows(fold);
        const auto test_rows = plan.test_rows(fold);
        Dataset train = data.subset(train_rows);
        Dataset test = data.subset(test_rows);
        if (data.task == Task::regression) {
            const auto s = target_scaling_of(train.y);
            train = with_scaled_target(std::move(train), s);
            test = with_scaled_target(std::move(test), s);
        }
        const auto t0 = std::chrono::steady_clock::now();
        const Predictor predict = model.fit(train);
        const auto t1 = std::chrono::steady_clock::now();
        std::vector<double> pred(test.rows());
        for (std::size_t i = 0; i < test.rows(); ++i) pred[i] = predict(test.row(i));
        rec.metrics = data.task == Task::classification ? classification_metrics(test.y, pred)
                                                        : regression_metrics(test.y, pred);
        for (const auto& name : MetricSet::names(data.task))
            if (!std::isfinite(rec.metrics.get(name))) throw FitError("non-finite " + name);
        rec.metrics.train_seconds = std::chrono::duration<double>(t1 - t0).count();
        rec.ok = true;
    } catch (const std::exception& e) {
        rec.ok = false;
        rec.error = e.what();
    }
    return rec;
}

/// k-fold CV of every model on every dataset. One fold plan per dataset is shared by all models.
/// A failing fold (or an unavailable dataset) marks its cell failed; the run continues.
inline BenchmarkReport run_benchmark(const std::vector<NamedDataset>& datasets, const std::vector<ModelSpec>& models,
                                     const BenchmarkOptions& opt) {
    if (opt.folds < 2) throw ConfigError("benchmark needs at least 2 folds");
    BenchmarkReport report;
    report.options = opt;
    for (const auto& d : datasets) report.datasets.push_back(d.name);
    for (const auto& m : models) report.models.push_back(m.name);

    std::vector<std::optional<FoldPlan>> plans(datasets.size());
    std::vector<std::string> plan_errors(datasets.size());
    for (std::size_t d = 0; d < datasets.size(); ++d) {
        if (!datasets[d].data) continue;
        try {
            plans[d] = kfold_split(datasets[d].data->rows(), opt.folds, opt.seed);
        } catch (const std::exception& e) {
            plan_errors[d] = e.what();
        }
    }

    const std::size_t per_dataset = models.size() * static_cast<std::size_t>(opt.folds);
    report.folds.resize(datasets.size() * per_dataset);
    parallel_for(report.folds.size(), opt.jobs, [&](std::size_t cell) {
        const std::size_t d = cell / per_dataset;
        const std::size_t m = (cell % per_dataset) / static_cast<std::size_t>(opt.folds);
        const int f = static_cast<int>(cell % static_cast<std::size_t>(opt.folds));
        FoldRecord rec;
        if (plans[d]) {
            rec = run_fold(*datasets[d].data, *plans[d], f, models[m]);
        } else {
            rec.model = models[m].name;
            rec.fold = f;
            rec.error = datasets[d].data ? plan_errors[d] : "dataset unavailable: " + datasets[d].error;
            rec.task = datasets[d].data ? datasets[d].data->task : datasets[d].task;
        }
        rec.dataset = datasets[d].name;
        report.folds[cell] = std::move(rec);
    });

    for (std::size_t d = 0; d < datasets.size(); ++d)
        for (std::size_t m = 0; m < models.size(); ++m) {
            CellAggregate agg;
            agg.dataset = datasets[d].name;
            agg.model = models[m].name;
            const std::size_t first = d * per_dataset + m * static_cast<std::size_t>(opt.folds);
            const std::span<const FoldRecord> rows(report.folds.data() + first, static_cast<std::size_t>(opt.folds));
            agg.task = rows.front().task;
            agg.ok = true;
            for (const auto& r : rows)
                if (!r.ok) {
                    agg.ok = false;
                    if (agg.error.empty()) agg.error = "fold " + std::to_string(r.fold) + ": " + r.error;
                }
            if (agg.ok) {
                for (const auto& name : MetricSet::names(agg.task)) {
                    std::vector<double> v;
                    for (const auto& r : rows) v.push_back(r.metrics.get(name));
                    const auto [mu, sd] = mean_std(v);
                    agg.mean[name] = mu;
                    agg.std[name] = sd;
                }
                std::vector<double> secs;
                for (const auto& r : rows) secs.push_back(r.metrics.train_seconds);
                std::tie(agg.seconds_mean, agg.seconds_std) = mean_std(secs);
            }
            report.aggregates.push_back(std::move(agg));
        }
    return report;
}

inline std::vector<NamedDataset> load_manifest_datasets(const Manifest& manifest) {
    std::vector<NamedDataset> out;
    for (const auto& e : manifest.datasets) {
        NamedDataset nd;
        nd.name = e.name;
        nd.task = e.load.task;
        try {
            nd.data = load_dataset(e);
        } catch (const std::exception& ex) {
            nd.error = ex.what();
        }
        out.push_back(std::move(nd));
    }
    return out;
}

inline BenchmarkReport run_benchmark(const Manifest& manifest, const std::vector<ModelSpec>& models,
                                     const BenchmarkOptions& opt) {
    return run_benchmark(load_manifest_datasets(manifest), models, opt);
}

// ---------------------------------------------------------------------------
// Report output
// ---------------------------------------------------------------------------

namespace detail {
inline std::string num(double v) { return std::isfinite(v) ? csv::format_number(v) : std::string(); }
}  // namespace detail

/// One row per (dataset, model, fold) plus one aggregate row per (dataset, model) holding the
/// fold mean in the metric columns and the fold std in the *_std columns. Timings are kept out
/// so reruns are byte-identical.
inline std::string report_csv(const BenchmarkReport& r) {
    const auto& names = MetricSet::all_names();
    std::vector<std::string> header{"dataset", "model", "task", "fold", "status"};
    for (const auto& n : names) header.push_back(n);
    for (const auto& n : names) header.push_back(n + "_std");
    header.push_back("error");
    std::string out = csv::join_row(header) + "\n";
    for (std::size_t d = 0; d < r.datasets.size(); ++d)
        for (std::size_t m = 0; m < r.models.size(); ++m) {
            const std::size_t first = (d * r.models.size() + m) * static_cast<std::size_t>(r.options.folds);
            for (int f = 0; f < r.options.folds; ++f) {
                const auto& rec = r.folds[first + static_cast<std::size_t>(f)];
                std::vector<std::string> row{rec.dataset, rec.model, std::string(to_string(rec.task)),
                                             std::to_string(rec.fold), rec.ok ? "ok" : "failed"};
                for (const auto& n : names) row.push_back(rec.ok ? detail::num(rec.metrics.get(n)) : "");
                for (std::size_t k = 0; k < names.size(); ++k) row.emplace_back();
                row.push_back(rec.error);
                out += csv::join_row(row) + "\n";
            }
            const auto& agg = r.aggregates[d * r.models.size() + m];
            std::vector<std::string> row{agg.dataset, agg.model, std::string(to_string(agg.task)), "aggregate",
                                         agg.ok ? "ok" : "failed"};
            for (const auto& n : names) row.push_back(agg.mean.count(n) ? detail::num(agg.mean.at(n)) : "");
            for (const auto& n : names) row.push_back(agg.std.count(n) ? detail::num(agg.std.at(n)) : "");
            row.push_back(agg.error);
            out += csv::join_row(row) + "\n";
        }
    return out;
}

inline std::string timings_csv(const BenchmarkReport& r) {
    std::string out = "dataset,model,fold,train_seconds\n";
    for (const auto& rec : r.folds)
        out += csv::join_row({rec.dataset, rec.model, std::to_string(rec.fold),
                              rec.ok ? detail::num(rec.metrics.train_seconds) : ""}) + "\n";
    for (const auto& agg : r.aggregates) {
        out += csv::join_row({agg.dataset, agg.model, "mean", detail::num(agg.seconds_mean)}) + "\n";
        out += csv::join_row({agg.dataset, agg.model, "std", detail::num(agg.seconds_std)}) + "\n";
    }
    return out;
}

/// Reference scores keyed by table ("f1", "rmse", "train_seconds"), then lower-case dataset
/// name, then model column label; values are display strings such as ".866±.001".
using ReferenceScores = std::map<std::string, std::map<std::string, std::map<std::string, std::string>>>;

inline ReferenceScores load_reference_scores(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read reference scores '" + path + "'");
    try {
        nlohmann::json j;
        in >> j;
        return j.get<ReferenceScores>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed reference scores '" + path + "': " + e.what());
    }
}

namespace detail {

inline std::string fmt_fixed(double v, int digits) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(digits);
    s << v;
    return s.str();
}

/// ".866±.001" style: three decimals, leading zero dropped for |v| < 1.
inline std::string fmt_score(double v) {
    std::string s = fmt_fixed(v, 3);
    if (s.rfind("0.", 0) == 0) s.erase(0, 1);
    else if (s.rfind("-0.", 0) == 0) s.erase(1, 1);
    return s;
}

inline std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

struct TableSpec {
    std::string title;
    Task task;
    std::string metric;     // MetricSet name or "train_seconds"
    std::string reference;  // key into ReferenceScores, empty for none
};

}  // namespace detail

/// Markdown tables with datasets as rows and models as columns, cells "mean±std", best value per
/// row in bold. Reference scores, when given, are inlaid as an extra row under each dataset and
/// contribute extra columns for models not in the run.
inline std::string report_markdown(const BenchmarkReport& r, const ReferenceScores* reference = nullptr) {
    const std::vector<detail::TableSpec> tables{
        {"Classification: F1 (support-weighted)", Task::classification, "f1_weighted", "f1"},
        {"Classification: F1 (positive class)", Task::classification, "f1", ""},
        {"Classification: accuracy", Task::classification, "accuracy", ""},
        {"Classification: precision", Task::classification, "precision", ""},
        {"Classification: recall", Task::classification, "recall", ""},
        {"Regression: MSE (standardized target)", Task::regression, "mse", "rmse"},
        {"Regression: RMSE (standardized target)", Task::regression, "rmse", ""},
        {"Regression: MAE (standardized target)", Task::regression, "mae", ""},
        {"Training time (seconds per fold)", Task::classification, "train_seconds", "train_seconds"},
    };
    std::ostringstream out;
    for (const auto& t : tables) {
        std::vector<std::string> rows;
        for (const auto& d : r.datasets) {
            bool match = false;
            for (const auto& a : r.aggregates)
                if (a.dataset == d && (t.metric == "train_seconds" || a.task == t.task)) match = true;
            if (match) rows.push_back(d);
        }
        if (rows.empty()) continue;

        std::vector<std::string> columns = r.models;
        const std::map<std::string, std::map<std::string, std::string>>* ref = nullptr;
        if (reference && !t.reference.empty() && reference->count(t.reference)) {
            ref = &reference->at(t.reference);
            for (const auto& d : rows)
                if (ref->count(detail::lower(d)))
                    for (const auto& [model, v] : ref->at(detail::lower(d)))
                        if (std::find(columns.begin(), columns.end(), model) == columns.end()) columns.push_back(model);
        }

        out << "### " << t.title << "\n\n| Dataset |";
        for (const auto& c : columns) out << ' ' << c << " |";
        out << "\n|---|";
        for (std::size_t k = 0; k < columns.size(); ++k) out << "---|";
        out << '\n';
        const bool higher = MetricSet::higher_is_better(t.metric);
        for (const auto& d : rows) {
            double best = higher ? -INFINITY : INFINITY;
            std::map<std::string, std::pair<double, double>> vals;
            for (const auto& c : r.models) {
                const auto* a = r.find(d, c);
                if (!a || !a->ok) continue;
                const double mu = t.metric == "train_seconds" ? a->seconds_mean : a->mean.count(t.metric) ? a->mean.at(t.metric) : NAN;
                const double sd = t.metric == "train_seconds" ? a->seconds_std : a->std.count(t.metric) ? a->std.at(t.metric) : NAN;
                if (!std::isfinite(mu)) continue;
                vals[c] = {mu, sd};
                best = higher ? std::max(best, mu) : std::min(best, mu);
            }
            out << "| " << d << " |";
            for (const auto& c : columns) {
                const auto* a = r.find(d, c);
                if (vals.count(c)) {
                    const auto [mu, sd] = vals[c];
                    const std::string cell = t.metric == "train_seconds"
                                                 ? detail::fmt_fixed(mu, 3)
                                                 : detail::fmt_score(mu) + "±" + detail::fmt_score(sd);
                    out << ' ' << (mu == best ? "**" + cell + "**" : cell) << " |";
                } else if (a && !a->ok) {
                    out << " failed |";
                } else {
                    out << " – |";
                }
            }
            out << '\n';
            if (ref && ref->count(detail::lower(d))) {
                const auto& rr = ref->at(detail::lower(d));
                out << "| " << d << " (reference) |";
                for (const auto& c : columns) out << ' ' << (rr.count(c) ? rr.at(c) : "–") << " |";
                out << '\n';
            }
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace glassbox
