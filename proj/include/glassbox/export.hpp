#pragma once

#include <algorithm>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "glassbox/model.hpp"
#include "glassbox/serialize.hpp"
#include "glassbox/svg.hpp"

namespace glassbox {

inline constexpr const char* kShapesVersion = "glassbox-shapes/1";

struct ShapeEntry {
    std::size_t id = 0;
    std::string name;
    std::vector<int> features;
    ShapeFunction shape;
    std::optional<std::pair<double, double>> training_range;  // 1D numeric terms only
    double importance = 0.0;
};

/// Portable description of a fitted additive model's shape functions.
struct ShapeDocument {
    std::string link;
    Task task = Task::regression;
    double intercept = 0.0;
    Schema schema;
    std::map<std::string, std::string> metadata;
    std::optional<TargetScaling> target_scaling;
    std::vector<ShapeEntry> terms;
    std::vector<std::size_t> ranking;  // term ids by descending importance
};

/// Min and max of feature `f` over `data`.
inline std::pair<double, double> column_range(const Dataset& data, int f) {
    const auto j = static_cast<std::size_t>(f);
    double lo = data.at(0, j), hi = lo;
    for (std::size_t i = 1; i < data.rows(); ++i) {
        lo = std::min(lo, data.at(i, j));
        hi = std::max(hi, data.at(i, j));
    }
    return {lo, hi};
}

inline ShapeDocument export_shapes(const AdditiveModel& m, const Dataset& train) {
    validate(m);
    ShapeDocument doc;
    doc.link = std::string(to_string(m.link.kind));
    doc.task = m.task;
    doc.intercept = m.intercept;
    doc.schema = m.schema;
    doc.metadata = m.metadata;
    doc.target_scaling = m.target_scaling;
    const auto imp = feature_importance(m, train);
    std::vector<double> by_term(m.terms.size(), 0.0);
    for (const auto& ti : imp) by_term[ti.term] = ti.importance;
    for (std::size_t t = 0; t < m.terms.size(); ++t) {
        ShapeEntry e;
        e.id = t;
        e.name = term_name(m, t);
        e.features = m.terms[t].features;
        e.shape = m.terms[t].shape;
        if (!m.terms[t].is_pair() && !std::holds_alternative<CategoricalTable>(e.shape))
            e.training_range = column_range(train, e.features[0]);
        e.importance = by_term[t];
        doc.terms.push_back(std::move(e));
    }
    for (const auto& ti : imp) doc.ranking.push_back(ti.term);
    return doc;
}

inline AdditiveModel import_shapes(const ShapeDocument& doc) {
    AdditiveModel m;
    m.intercept = doc.intercept;
    m.task = doc.task;
    m.link.kind = doc.link == "logistic" ? LinkKind::logistic : LinkKind::identity;
    m.schema = doc.schema;
    m.metadata = doc.metadata;
    m.target_scaling = doc.target_scaling;
    for (const auto& e : doc.terms) m.terms.push_back({e.features, e.shape});
    validate(m);
    return m;
}

inline json shapes_to_json(const ShapeDocument& doc) {
    json j;
    j["version"] = kShapesVersion;
    j["link"] = doc.link;
    j["task"] = std::string(to_string(doc.task));
    j["intercept"] = doc.intercept;
    j["schema"] = schema_to_json(doc.schema);
    j["metadata"] = doc.metadata;
    if (doc.target_scaling) j["target_scaling"] = {{"mean", doc.target_scaling->mean}, {"std", doc.target_scaling->std}};
    j["terms"] = json::array();
    for (const auto& e : doc.terms) {
        json t;
        t["id"] = e.id;
        t["name"] = e.name;
        t["features"] = e.features;
        t["variant"] = std::string(variant_name(e.shape));
        t["shape"] = detail::shape_to_json(e.shape);
        if (e.training_range) t["training_range"] = {e.training_range->first, e.training_range->second};
        t["importance"] = e.importance;
        j["terms"].push_back(std::move(t));
    }
    j["ranking"] = doc.ranking;
    return j;
}

inline ShapeDocument shapes_from_json(const json& j) {
    try {
        if (j.at("version").get<std::string>() != kShapesVersion)
            throw DataError("unsupported shape document version '" + j.at("version").get<std::string>() + "'");
        ShapeDocument doc;
        doc.link = j.at("link").get<std::string>();
        doc.task = task_from_string(j.at("task").get<std::string>());
        doc.intercept = j.at("intercept").get<double>();
        doc.schema = schema_from_json(j.at("schema"));
        doc.metadata = j.value("metadata", std::map<std::string, std::string>{});
        if (j.contains("target_scaling"))
            doc.target_scaling = TargetScaling{j["target_scaling"].at("mean").get<double>(),
                                               j["target_scaling"].at("std").get<double>()};
        for (const auto& t : j.at("terms")) {
            ShapeEntry e;
            e.id = t.at("id").get<std::size_t>();
            e.name = t.at("name").get<std::string>();
            e.features = t.at("features").get<std::vector<int>>();
            e.shape = detail::shape_from_json(t.at("shape"));
            if (t.contains("training_range"))
                e.training_range = std::pair{t["training_range"].at(0).get<double>(), t["training_range"].at(1).get<double>()};
            e.importance = t.at("importance").get<double>();
            doc.terms.push_back(std::move(e));
        }
        doc.ranking = j.at("ranking").get<std::vector<std::size_t>>();
        return doc;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed shape document: ") + e.what());
    }
}

inline void save_shapes(const ShapeDocument& doc, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << shapes_to_json(doc).dump(1) << '\n';
}

inline ShapeDocument load_shapes(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("cannot parse " + path + ": " + e.what());
    }
    return shapes_from_json(j);
}

/// Plot of term `t` of `m`. One-hot indicator terms are drawn as two bars (level 0 vs 1), pair
/// terms as heatmaps.
inline std::string render_term_svg(const AdditiveModel& m, std::size_t t, const PlotStyle& style = {},
                                   std::optional<std::pair<double, double>> x_range = std::nullopt) {
    const auto& term = m.terms.at(t);
    const auto name = term_name(m, t);
    if (term.is_pair())
        return render_heatmap_svg(term, name, m.schema.features.at(static_cast<std::size_t>(term.features[0])).name,
                                  m.schema.features.at(static_cast<std::size_t>(term.features[1])).name, style);
    const auto& info = m.schema.features.at(static_cast<std::size_t>(term.features[0]));
    if (info.is_indicator() && !std::holds_alternative<CategoricalTable>(term.shape)) {
        Term bars{term.features, CategoricalTable{{"0", "1"},
                                                  {evaluate_shape(term.shape, 0.0), evaluate_shape(term.shape, 1.0)},
                                                  0.0}};
        return render_shape_svg(bars, name, style);
    }
    return render_shape_svg(term, name, style, x_range);
}

/// Importance bar chart of the top `top_n` terms of `m` on `data`.
inline std::string render_importance_svg(const AdditiveModel& m, const Dataset& data, int top_n = 10,
                                          const PlotStyle& style = {}) {
    std::vector<std::pair<std::string, double>> ranked;
    for (const auto& ti : feature_importance(m, data)) ranked.emplace_back(term_name(m, ti.term), ti.importance);
    return render_importance_bars(ranked, top_n, style);
}

/// Common y-range over all 1D terms of `m`, for plots sharing one scale.
inline std::pair<double, double> shared_y_range(const AdditiveModel& m, const PlotStyle& style = {}) {
    std::vector<double> ys;
    for (const auto& term : m.terms) {
        if (term.is_pair()) continue;
        std::visit(
            [&](const auto& s) {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, SplineCurve1D>) {
                    const auto p = static_cast<std::size_t>(s.degree);
                    const double a = s.knots[p], b = s.knots[s.knots.size() - p - 1];
                    for (int k = 0; k < style.samples; ++k)
                        ys.push_back(detail::eval_spline(s, a + (b - a) * k / (style.samples - 1.0)));
                } else if constexpr (!std::is_same_v<T, Grid2D>) {
                    ys.insert(ys.end(), s.values.begin(), s.values.end());
                }
            },
            term.shape);
    }
    PlotStyle free = style;
    free.y_range.reset();
    return svg::y_range_for(ys, free);
}

}  // namespace glassbox
