// Acceptance run: one PASS/FAIL line per criterion. Pass criterion numbers as arguments to run a
// subset. Benchmark datasets come from GLASSBOX_DATA_MANIFEST (default /root/data/manifest.json).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include "glassbox/glassbox.hpp"

using namespace glassbox;

namespace {

// Tolerances and thresholds.
constexpr double kDecompositionTol = 1e-9;
constexpr double kGradientRelTol = 1e-4;
constexpr double kGradientFloor = 1e-6;
constexpr double kShapeFidelityMax = 0.1;
constexpr int kPairRuns = 100;
constexpr int kPairRunsRequired = 95;
constexpr double kMetricTol = 1e-12;
constexpr double kLinearBand = 0.03;
constexpr double kOverfitRatio = 2.0;
constexpr double kRoundTripTol = 1e-12;
constexpr double kPlotTol = 1e-9;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

Dataset numeric_dataset(const std::vector<std::vector<double>>& cols, std::vector<double> y, Task task) {
    Dataset d;
    d.task = task;
    d.target_name = "y";
    for (std::size_t j = 0; j < cols.size(); ++j) d.schema.features.push_back({"x" + std::to_string(j + 1)});
    d.x.resize(y.size() * cols.size());
    for (std::size_t i = 0; i < y.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) d.x[i * cols.size() + j] = cols[j][i];
    d.y = std::move(y);
    return d;
}

/// Three numeric features plus one categorical with four levels; target mixes all of them.
Dataset mixed_dataset(std::size_t n, Task task, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::normal_distribution<double> g(0.0, 0.3);
    std::vector<std::vector<double>> cols(4, std::vector<double>(n));
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (int j = 0; j < 3; ++j) cols[static_cast<std::size_t>(j)][i] = u(rng);
        cols[3][i] = static_cast<double>(rng() % 4);
        const double s = std::sin(cols[0][i]) + 0.5 * cols[1][i] * cols[2][i] + 0.3 * cols[3][i] + g(rng);
        y[i] = task == Task::classification ? (s > 0.3 ? 1.0 : 0.0) : s;
    }
    auto d = numeric_dataset(cols, y, task);
    d.schema.features[3].kind = FeatureKind::categorical;
    d.schema.features[3].levels = {"a", "b", "c", "d"};
    return d;
}

double mean_deviance(const AdditiveModel& m, const Dataset& d) {
    double acc = 0.0;
    for (std::size_t i = 0; i < d.rows(); ++i) {
        if (m.task == Task::classification) {
            const double p = std::clamp(predict(m, d.row(i)), 1e-12, 1.0 - 1e-12);
            acc -= 2.0 * (d.y[i] * std::log(p) + (1.0 - d.y[i]) * std::log(1.0 - p));
        } else {
            acc += std::pow(d.y[i] - predict(m, d.row(i)), 2);
        }
    }
    return acc / static_cast<double>(d.rows());
}

FitConfig quick_config(ModelKind kind, std::uint64_t seed) {
    FitConfig c;
    c.kind = kind;
    c.ebm.outer_bags = 2;
    c.ebm.max_rounds = 300;
    c.ebm.interactions = 2;
    c.nam.epochs = 15;
    c.nam.hidden_units = 16;
    c.nam.batch_size = 64;
    c.nam.learning_rate = 0.01;
    c.tree.max_depth = 5;
    c.set_seed(seed);
    return c;
}

const std::vector<ModelKind> kAdditive{ModelKind::spline, ModelKind::ebm, ModelKind::nam, ModelKind::linear};

// ---------------------------------------------------------------------------

Outcome c1_decomposition() {
    double worst = 0.0;
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    int models = 0;
    for (ModelKind kind : kAdditive)
        for (int k = 0; k < 20; ++k) {
            const Task task = k % 2 ? Task::classification : Task::regression;
            const auto data = mixed_dataset(300, task, 1000 + static_cast<std::uint64_t>(k));
            const auto m = *fit_model(data, quick_config(kind, static_cast<std::uint64_t>(k))).gam;
            ++models;
            for (int r = 0; r < 1000; ++r) {
                const std::vector<double> row{u(rng), u(rng), u(rng), static_cast<double>(rng() % 4)};
                const auto d = decompose(m, row);
                double sum = d.intercept;
                for (const auto& [t, v] : d.contributions) sum += v;
                // Second route: each term evaluated directly from its shape, independent of decompose.
                double direct = m.intercept;
                for (const auto& term : m.terms)
                    direct += term.is_pair() ? evaluate_shape(term.shape, row[static_cast<std::size_t>(term.features[0])],
                                                              row[static_cast<std::size_t>(term.features[1])])
                                             : evaluate_shape(term.shape, row[static_cast<std::size_t>(term.features[0])]);
                worst = std::max({worst, std::abs(sum - d.score), std::abs(direct - d.score),
                                  std::abs(score(m, row) - d.score)});
            }
        }
    return {worst <= kDecompositionTol && models == 80,
            std::to_string(models) + " models x 1000 rows, max |intercept + sum - score| = " + fmt("%.3g", worst)};
}

Outcome c2_gradient() {
    double worst = 0.0;
    for (Task task : {Task::regression, Task::classification}) {
        std::mt19937_64 rng(202);
        std::normal_distribution<double> g(0.0, 1.0);
        const std::size_t n = 64;
        std::vector<std::vector<double>> cols(3, std::vector<double>(n));
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (auto& c : cols) c[i] = g(rng);
            y[i] = task == Task::classification ? static_cast<double>(rng() % 2) : g(rng);
        }
        const auto d = numeric_dataset(cols, y, task);
        NamConfig cfg;
        cfg.hidden_units = 8;
        cfg.weight_decay = 0.01;
        cfg.output_penalty = 0.1;
        auto net = init_nam(d, cfg);
        for_each_parameter(net, [&](ParamClass cls, double& p) { p = cls == ParamClass::w ? 0.3 * g(rng) : g(rng); });
        std::vector<std::size_t> rows(n);
        for (std::size_t i = 0; i < n; ++i) rows[i] = i;
        NamNetwork grad = net;
        nam_objective(net, d, rows, cfg, &grad);
        std::vector<double*> params;
        std::vector<double> analytic;
        for_each_parameter(net, [&](ParamClass, double& p) { params.push_back(&p); });
        for_each_parameter(grad, [&](ParamClass, double& p) { analytic.push_back(p); });
        const double h = 1e-5;
        for (std::size_t k = 0; k < params.size(); ++k) {
            const double keep = *params[k];
            *params[k] = keep + h;
            const double up = nam_objective(net, d, rows, cfg);
            *params[k] = keep - h;
            const double down = nam_objective(net, d, rows, cfg);
            *params[k] = keep;
            const double fd = (up - down) / (2 * h);
            worst = std::max(worst, std::abs(fd - analytic[k]) /
                                        std::max({kGradientFloor, std::abs(fd), std::abs(analytic[k])}));
        }
    }
    return {worst < kGradientRelTol, "3 features x 8 ExU units, max relative error = " + fmt("%.3g", worst)};
}

Outcome c3_shape_recovery() {
    SyntheticSpec spec;
    spec.n = 5000;
    spec.noise_std = 0.1;
    spec.seed = 303;
    spec.features = {{"x1", Distribution::uniform, 0.0, 1.0, TrueShape::sin, 4.0},
                     {"x2", Distribution::uniform, -1.0, 1.0, TrueShape::abs, 1.0},
                     {"x3", Distribution::uniform, -1.0, 1.0, TrueShape::step, 0.0}};
    const auto [data, truth] = generate(spec);
    bool pass = true;
    std::string detail;
    for (ModelKind kind : {ModelKind::spline, ModelKind::ebm}) {
        FitConfig cfg;
        cfg.kind = kind;
        cfg.ebm.interactions = 0;
        const auto m = *fit_backend(data, cfg).gam;
        detail += std::string(to_string(kind)) + " fidelity";
        for (std::size_t j = 0; j < 3; ++j) {
            const auto& term = m.terms.at(j);
            const double fid = shape_fidelity(term.shape, truth.shapes[j], truth.ranges[j].first, truth.ranges[j].second);
            pass = pass && term.features[0] == static_cast<int>(j) && fid < kShapeFidelityMax;
            detail += " " + fmt("%.4f", fid);
        }
        detail += "; ";
        if (kind == ModelKind::ebm) {
            const auto& s = std::get<BinnedStep1D>(m.terms.at(2).shape);
            std::size_t k = 0;
            for (std::size_t t = 1; t < s.thresholds.size(); ++t)
                if (std::abs(s.values[t + 1] - s.values[t]) > std::abs(s.values[k + 1] - s.values[k])) k = t;
            // The true jump at 0 must fall in one of the bins adjacent to the largest jump.
            const double lo = k > 0 ? s.thresholds[k - 1] : -INFINITY;
            const double hi = k + 1 < s.thresholds.size() ? s.thresholds[k + 1] : INFINITY;
            const bool located = lo <= 0.0 && 0.0 < hi;
            pass = pass && located;
            detail += "largest ebm jump at " + fmt("%.4f", s.thresholds[k]) + (located ? " (within one bin)" : " (off)");
        }
    }
    return {pass, detail};
}

Outcome c4_interaction_detection() {
    int hits = 0;
    for (int run = 0; run < kPairRuns; ++run) {
        std::mt19937_64 rng(4000 + static_cast<std::uint64_t>(run));
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        std::normal_distribution<double> g(0.0, 0.1);
        const std::size_t n = 1000;
        std::vector<std::vector<double>> cols(3, std::vector<double>(n));
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (auto& c : cols) c[i] = u(rng);
            y[i] = cols[0][i] * cols[1][i] + std::sin(std::numbers::pi * cols[2][i]) + g(rng);
        }
        const auto d = numeric_dataset(cols, y, Task::regression);
        BoostConfig cfg;
        cfg.outer_bags = 1;
        cfg.interactions = 0;
        cfg.seed = static_cast<std::uint64_t>(run);
        const auto main = fit_ebm(d, cfg);
        std::vector<double> residuals(n);
        for (std::size_t i = 0; i < n; ++i) residuals[i] = d.y[i] - score(main, d.row(i));
        const auto ranked = fast_rank_pairs(residuals, d, cfg);
        hits += !ranked.empty() && ranked[0].first == 0 && ranked[0].second == 1;
    }
    return {hits >= kPairRunsRequired, "(x1, x2) ranked first in " + std::to_string(hits) + "/" +
                                           std::to_string(kPairRuns) + " runs"};
}

Outcome c7_metric_oracles() {
    std::mt19937_64 rng(707);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> g(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng() % 80;
        std::vector<double> y(n), p(n), t(n), h(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = u(rng) < 0.35 ? 1.0 : 0.0;
            p[i] = u(rng);
            t[i] = g(rng);
            h[i] = g(rng);
        }
        double tp = 0, fp = 0, fn = 0, tn = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const bool pos = p[i] >= 0.5, truth = y[i] == 1.0;
            tp += pos && truth;
            fp += pos && !truth;
            fn += !pos && truth;
            tn += !pos && !truth;
        }
        auto f1_of = [](double a, double b, double c) {
            const double pr = a + b > 0 ? a / (a + b) : 0.0, rc = a + c > 0 ? a / (a + c) : 0.0;
            return pr + rc > 0 ? 2 * pr * rc / (pr + rc) : 0.0;
        };
        const auto m = classification_metrics(y, p);
        const double f1_pos = f1_of(tp, fp, fn), f1_neg = f1_of(tn, fn, fp);
        worst = std::max({worst, std::abs(m.accuracy - (tp + tn) / static_cast<double>(n)),
                          std::abs(m.precision - (tp + fp > 0 ? tp / (tp + fp) : 0.0)),
                          std::abs(m.recall - (tp + fn > 0 ? tp / (tp + fn) : 0.0)), std::abs(m.f1 - f1_pos),
                          std::abs(m.f1_weighted - ((tp + fn) * f1_pos + (tn + fp) * f1_neg) / static_cast<double>(n))});
        const auto r = regression_metrics(t, h);
        double se = 0, ae = 0;
        for (std::size_t i = 0; i < n; ++i) {
            se += (t[i] - h[i]) * (t[i] - h[i]);
            ae += std::abs(t[i] - h[i]);
        }
        worst = std::max({worst, std::abs(r.mse - se / static_cast<double>(n)),
                          std::abs(r.rmse - std::sqrt(se / static_cast<double>(n))),
                          std::abs(r.mae - ae / static_cast<double>(n))});
    }
    return {worst <= kMetricTol, "1000 random instances, max deviation = " + fmt("%.3g", worst)};
}

Outcome c9_nam_overfitting() {
    SyntheticSpec spec;
    spec.n = 1000;
    spec.noise_std = 1.0;
    spec.seed = 909;
    spec.features = {{"x1", Distribution::uniform, -1.0, 1.0, TrueShape::sin, 1.0},
                     {"x2", Distribution::uniform, -1.0, 1.0, TrueShape::linear, 0.5},
                     {"x3", Distribution::uniform, -1.0, 1.0, TrueShape::zero, 1.0}};
    const auto train = generate(spec).first;
    spec.n = 5000;
    spec.seed = 910;
    const auto test = generate(spec).first;
    NamConfig loose;
    loose.hidden_units = 32;
    loose.learning_rate = 0.05;
    loose.batch_size = 16;
    loose.epochs = 300;
    loose.exu_init_mean = 4.0;
    loose.weight_decay = 0.0;
    loose.output_penalty = 0.0;
    NamConfig tight = loose;
    tight.weight_decay = 1e-3;
    tight.output_penalty = 0.5;
    auto gap = [&](const NamConfig& c) {
        const auto m = fit_nam(train, c);
        return mean_deviance(m, test) - mean_deviance(m, train);
    };
    const double g_loose = gap(loose), g_tight = gap(tight);
    return {g_loose > 0.0 && g_loose >= kOverfitRatio * std::max(g_tight, 0.0),
            "deviance gap unregularized " + fmt("%.4f", g_loose) + " vs regularized " + fmt("%.4f", g_tight) +
                " (ratio " + fmt("%.2f", g_tight > 0 ? g_loose / g_tight : INFINITY) + ")"};
}

Outcome c10_determinism() {
    std::vector<NamedDataset> data;
    for (Task task : {Task::classification, Task::regression}) {
        NamedDataset nd;
        nd.name = task == Task::classification ? "mixed-cls" : "mixed-reg";
        nd.task = task;
        nd.data = mixed_dataset(400, task, 1010);
        data.push_back(std::move(nd));
    }
    std::vector<ModelSpec> models;
    for (ModelKind kind : {ModelKind::spline, ModelKind::ebm, ModelKind::linear, ModelKind::tree}) {
        FitConfig c;
        c.kind = kind;
        c.ebm.outer_bags = 1;
        c.set_seed(7);
        models.push_back(model_spec(c));
    }
    const BenchmarkOptions opt{5, 7, default_jobs()};
    const auto a = report_csv(run_benchmark(data, models, opt));
    const auto b = report_csv(run_benchmark(data, models, opt));
    const bool all_ok = a.find(",failed,") == std::string::npos;
    return {a == b && all_ok, std::string(a == b ? "identical" : "different") + " reports (" +
                                  std::to_string(a.size()) + " bytes)" + (all_ok ? "" : ", some cells failed")};
}

/// Frame attributes of an SVG root plus the points of its first polyline, in data coordinates.
std::vector<std::pair<double, double>> plotted_points(const std::string& svg) {
    auto attr = [&](const std::string& name) {
        const std::regex re(name + "=\"([^\"]+)\"");
        std::smatch m;
        if (!std::regex_search(svg, m, re)) throw std::runtime_error("missing " + name);
        return std::stod(m[1].str());
    };
    const double x0 = attr("data-x0"), x1 = attr("data-x1"), y0 = attr("data-y0"), y1 = attr("data-y1");
    const double left = attr("data-left"), right = attr("data-right"), top = attr("data-top"), bottom = attr("data-bottom");
    const std::regex pts_re("<polyline[^>]*points=\"([^\"]*)\"");
    std::smatch pm;
    std::vector<std::pair<double, double>> out;
    if (!std::regex_search(svg, pm, pts_re)) return out;
    const std::string pts = pm[1].str();
    const std::regex pair_re("([-0-9.eE+]+),([-0-9.eE+]+)");
    for (auto it = std::sregex_iterator(pts.begin(), pts.end(), pair_re); it != std::sregex_iterator(); ++it) {
        const double px = std::stod((*it)[1].str()), py = std::stod((*it)[2].str());
        out.emplace_back(x0 + (px - left) / (right - left) * (x1 - x0), y0 + (bottom - py) / (bottom - top) * (y1 - y0));
    }
    return out;
}

Outcome c11_export_fidelity() {
    double worst_pred = 0.0, worst_plot = 0.0;
    int plots = 0;
    const auto dir = std::filesystem::temp_directory_path() / "glassbox_acceptance_export";
    std::filesystem::create_directories(dir);
    for (Task task : {Task::regression, Task::classification}) {
        const auto data = mixed_dataset(300, task, 1111);
        for (ModelKind kind : {ModelKind::spline, ModelKind::ebm, ModelKind::nam, ModelKind::linear, ModelKind::tree}) {
            const auto fitted = fit_model(data, quick_config(kind, 11));
            const auto path = (dir / (std::string(to_string(kind)) + ".json")).string();
            save_fitted(fitted, path);
            const auto back = load_fitted(path);
            for (std::size_t i = 0; i < data.rows(); ++i)
                worst_pred = std::max(worst_pred, std::abs(back.predict(data.row(i)) - fitted.predict(data.row(i))));
            if (!fitted.gam) continue;
            const auto& m = *fitted.gam;
            for (std::size_t t = 0; t < m.terms.size(); ++t) {
                const auto& term = m.terms[t];
                if (term.is_pair() || std::holds_alternative<CategoricalTable>(term.shape)) continue;
                const auto svg = render_term_svg(m, t, {}, column_range(data, term.features[0]));
                const auto pts = plotted_points(svg);
                if (pts.empty()) return {false, "no polyline in plot of term " + std::to_string(t)};
                ++plots;
                const bool step = std::holds_alternative<BinnedStep1D>(term.shape);
                for (std::size_t k = 0; k < pts.size(); ++k) {
                    // Step vertices sit on bin edges, where recovered x may round to either side;
                    // a horizontal segment is checked against the shape at its midpoint instead.
                    const std::size_t s0 = k & ~std::size_t{1};
                    const double x = step ? 0.5 * (pts[s0].first + pts[s0 + 1].first) : pts[k].first;
                    const double expect = evaluate_shape(term.shape, x);
                    worst_plot = std::max(worst_plot, std::abs(pts[k].second - expect) / std::max(1.0, std::abs(expect)));
                }
            }
        }
    }
    return {worst_pred <= kRoundTripTol && worst_plot <= kPlotTol && plots > 0,
            "round-trip max |dp| = " + fmt("%.3g", worst_pred) + "; " + std::to_string(plots) +
                " plots, max plotted-vs-shape deviation = " + fmt("%.3g", worst_plot)};
}

// ---------------------------------------------------------------------------
// Criteria 5, 6, 8: cross-validated scores on the benchmark datasets.

struct Reference {
    std::string dataset;
    std::string metric;  // compared column of the report
    double bound;        // F1 lower bound or MSE upper bound
};

// Published F1 scores are support-weighted; published regression errors are standardized MSE.
const std::vector<Reference> kEbmTargets{{"adult", "f1_weighted", 0.836}, {"telco", "f1_weighted", 0.767},
                                         {"fico", "f1_weighted", 0.695},  {"housing", "mse", 0.22},
                                         {"crimes", "mse", 0.36}};
const std::vector<std::pair<std::string, double>> kLinearTargets{{"telco", 0.799}, {"stroke", 0.928}};

struct BenchmarkScores {
    std::optional<BenchmarkReport> report;
    std::string error;
};

BenchmarkScores& benchmark_scores() {
    static BenchmarkScores scores = [] {
        BenchmarkScores s;
        const char* env = std::getenv("GLASSBOX_DATA_MANIFEST");
        const std::string path = env && *env ? env : "/root/data/manifest.json";
        std::vector<NamedDataset> wanted;
        std::set<std::string> names;
        for (const auto& r : kEbmTargets) names.insert(r.dataset);
        for (const auto& r : kLinearTargets) names.insert(r.first);
        std::map<std::string, NamedDataset> loaded;
        try {
            for (auto& nd : load_manifest_datasets(load_manifest(path))) loaded[nd.name] = std::move(nd);
        } catch (const std::exception& e) {
            s.error = e.what();
        }
        for (const auto& n : names) {
            if (loaded.count(n)) {
                wanted.push_back(loaded[n]);
            } else {
                NamedDataset nd;
                nd.name = n;
                nd.error = "not in manifest " + path;
                wanted.push_back(std::move(nd));
            }
        }
        FitConfig ebm, lin;
        ebm.kind = ModelKind::ebm;
        lin.kind = ModelKind::linear;
        s.report = run_benchmark(wanted, {model_spec(ebm), model_spec(lin)}, BenchmarkOptions{5, 0, default_jobs()});
        std::printf("%s", report_markdown(*s.report).c_str());
        return s;
    }();
    return scores;
}

std::optional<double> cell_mean(const std::string& dataset, const std::string& model, const std::string& metric,
                                std::string& why) {
    const auto& r = *benchmark_scores().report;
    const auto* a = r.find(dataset, model);
    if (!a) {
        why = "no cell";
        return std::nullopt;
    }
    if (!a->ok) {
        why = a->error;
        return std::nullopt;
    }
    return a->mean.at(metric);
}

Outcome c5_ebm_scores() {
    bool pass = true;
    std::string detail;
    for (const auto& t : kEbmTargets) {
        std::string why;
        const auto v = cell_mean(t.dataset, "EBM", t.metric, why);
        const bool higher = MetricSet::higher_is_better(t.metric);
        const bool ok = v && (higher ? *v >= t.bound : *v <= t.bound);
        pass = pass && ok;
        detail += t.dataset + " " + t.metric + " " + (v ? fmt("%.4f", *v) : "n/a (" + why + ")") +
                  (higher ? " >= " : " <= ") + fmt("%.3f", t.bound) + (ok ? " ok" : " FAIL") + "; ";
    }
    return {pass, detail};
}

Outcome c6_linear_scores() {
    bool pass = true;
    std::string detail;
    for (const auto& [dataset, published] : kLinearTargets) {
        std::string why;
        const auto v = cell_mean(dataset, "LR", "f1_weighted", why);
        const bool ok = v && std::abs(*v - published) <= kLinearBand;
        pass = pass && ok;
        detail += dataset + " f1_weighted " + (v ? fmt("%.4f", *v) : "n/a (" + why + ")") + " vs " +
                  fmt("%.3f", published) + " +- " + fmt("%.2f", kLinearBand) + (ok ? " ok" : " FAIL") + "; ";
    }
    return {pass, detail};
}

Outcome c8_ordering() {
    int better = 0, compared = 0;
    std::string detail;
    for (const auto& t : kEbmTargets) {
        if (t.dataset == "telco") continue;  // LR and EBM tie there; excluded from the ordering check
        std::string why_e, why_l;
        const auto e = cell_mean(t.dataset, "EBM", t.metric, why_e);
        const auto l = cell_mean(t.dataset, "LR", t.metric, why_l);
        if (!e || !l) {
            detail += t.dataset + " n/a (" + (e ? why_l : why_e) + "); ";
            continue;
        }
        ++compared;
        const bool win = MetricSet::higher_is_better(t.metric) ? *e > *l : *e < *l;
        better += win;
        detail += t.dataset + " EBM " + fmt("%.4f", *e) + " vs LR " + fmt("%.4f", *l) + (win ? " better" : " not better") + "; ";
    }
    // Four datasets remain after excluding telco; all four must favour EBM.
    return {better >= 4, std::to_string(better) + "/4 datasets favour EBM (" + std::to_string(compared) +
                             " comparable): " + detail};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
        {1, c1_decomposition},      {2, c2_gradient},      {3, c3_shape_recovery},  {4, c4_interaction_detection},
        {5, c5_ebm_scores},         {6, c6_linear_scores}, {7, c7_metric_oracles},  {8, c8_ordering},
        {9, c9_nam_overfitting},    {10, c10_determinism}, {11, c11_export_fidelity}};
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

    int failed = 0;
    for (const auto& [id, run] : criteria) {
        if (!only.empty() && !only.count(id)) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("criterion %2d: %s  %s [%.1fs]\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
        std::fflush(stdout);
        failed += !o.pass;
    }
    return failed == 0 ? 0 : 1;
}
