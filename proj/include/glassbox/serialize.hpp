#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "glassbox/model.hpp"

namespace glassbox {

inline constexpr const char* kModelVersion = "glassbox-gam/1";

using json = nlohmann::json;

namespace detail {

inline json shape_to_json(const ShapeFunction& shape) {
    json j;
    j["type"] = std::string(variant_name(shape));
    std::visit(
        [&j](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, BinnedStep1D>) {
                j["thresholds"] = s.thresholds;
                j["values"] = s.values;
            } else if constexpr (std::is_same_v<T, SplineCurve1D>) {
                j["knots"] = s.knots;
                j["degree"] = s.degree;
                j["coefficients"] = s.coefficients;
            } else if constexpr (std::is_same_v<T, Sampled1D>) {
                j["grid"] = s.grid;
                j["values"] = s.values;
            } else if constexpr (std::is_same_v<T, CategoricalTable>) {
                j["levels"] = s.levels;
                j["values"] = s.values;
                j["default"] = s.default_value;
            } else {
                j["row_thresholds"] = s.row_thresholds;
                j["col_thresholds"] = s.col_thresholds;
                j["values"] = s.values;
            }
        },
        shape);
    return j;
}

inline ShapeFunction shape_from_json(const json& j) {
    const auto type = j.at("type").get<std::string>();
    if (type == "binned_step")
        return BinnedStep1D{j.at("thresholds").get<std::vector<double>>(),
                            j.at("values").get<std::vector<double>>()};
    if (type == "spline_curve")
        return SplineCurve1D{j.at("knots").get<std::vector<double>>(), j.at("degree").get<int>(),
                             j.at("coefficients").get<std::vector<double>>()};
    if (type == "sampled")
        return Sampled1D{j.at("grid").get<std::vector<double>>(),
                         j.at("values").get<std::vector<double>>()};
    if (type == "categorical_table")
        return CategoricalTable{j.at("levels").get<std::vector<std::string>>(),
                                j.at("values").get<std::vector<double>>(),
                                j.at("default").get<double>()};
    if (type == "grid2d")
        return Grid2D{j.at("row_thresholds").get<std::vector<double>>(),
                      j.at("col_thresholds").get<std::vector<double>>(),
                      j.at("values").get<std::vector<double>>()};
    throw DataError("unknown shape type '" + type + "'");
}

}  // namespace detail

inline json schema_to_json(const Schema& schema) {
    json arr = json::array();
    for (const auto& f : schema.features) {
        json jf;
        jf["name"] = f.name;
        jf["kind"] = f.kind == FeatureKind::numeric ? "numeric" : "categorical";
        if (f.kind == FeatureKind::categorical) jf["levels"] = f.levels;
        if (f.is_indicator()) {
            jf["source_column"] = f.source_column;
            jf["source_level"] = f.source_level;
        }
        jf["fill"] = f.fill;
        arr.push_back(std::move(jf));
    }
    return arr;
}

inline Schema schema_from_json(const json& arr) {
    Schema schema;
    for (const auto& jf : arr) {
        FeatureInfo f;
        f.name = jf.at("name").get<std::string>();
        const auto kind = jf.at("kind").get<std::string>();
        if (kind == "numeric") {
            f.kind = FeatureKind::numeric;
        } else if (kind == "categorical") {
            f.kind = FeatureKind::categorical;
            f.levels = jf.at("levels").get<std::vector<std::string>>();
        } else {
            throw DataError("unknown feature kind '" + kind + "'");
        }
        f.source_column = jf.value("source_column", std::string{});
        f.source_level = jf.value("source_level", std::string{});
        f.fill = jf.value("fill", 0.0);
        schema.features.push_back(std::move(f));
    }
    return schema;
}

inline json to_json(const AdditiveModel& m) {
    json j;
    j["version"] = kModelVersion;
    j["task"] = std::string(to_string(m.task));
    j["link"] = std::string(to_string(m.link.kind));
    j["intercept"] = m.intercept;
    if (m.target_scaling)
        j["target_scaling"] = {{"mean", m.target_scaling->mean}, {"std", m.target_scaling->std}};
    else
        j["target_scaling"] = nullptr;
    j["schema"] = schema_to_json(m.schema);
    json terms = json::array();
    for (const auto& t : m.terms) terms.push_back({{"features", t.features}, {"shape", detail::shape_to_json(t.shape)}});
    j["terms"] = std::move(terms);
    j["metadata"] = m.metadata;
    return j;
}

inline AdditiveModel model_from_json(const json& j) {
    try {
        const auto version = j.at("version").get<std::string>();
        if (version != kModelVersion)
            throw DataError("unsupported model version '" + version + "'");
        AdditiveModel m;
        m.task = task_from_string(j.at("task").get<std::string>());
        const auto link = j.at("link").get<std::string>();
        if (link == "identity") m.link.kind = LinkKind::identity;
        else if (link == "logistic") m.link.kind = LinkKind::logistic;
        else throw DataError("unknown link '" + link + "'");
        m.intercept = j.at("intercept").get<double>();
        if (j.contains("target_scaling") && !j["target_scaling"].is_null())
            m.target_scaling = TargetScaling{j["target_scaling"].at("mean").get<double>(),
                                             j["target_scaling"].at("std").get<double>()};
        m.schema = schema_from_json(j.at("schema"));
        for (const auto& jt : j.at("terms"))
            m.terms.push_back({jt.at("features").get<std::vector<int>>(),
                               detail::shape_from_json(jt.at("shape"))});
        if (j.contains("metadata"))
            m.metadata = j["metadata"].get<std::map<std::string, std::string>>();
        validate(m);
        return m;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed model document: ") + e.what());
    } catch (const ConfigError& e) {
        throw DataError(std::string("malformed model document: ") + e.what());
    }
}

inline std::string serialize(const AdditiveModel& m) { return to_json(m).dump(1); }

inline AdditiveModel deserialize(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("model file is not valid JSON: ") + e.what());
    }
    return model_from_json(j);
}

inline void save_model(const AdditiveModel& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << serialize(m) << '\n';
}

inline AdditiveModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read model file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return deserialize(ss.str());
}

}  // namespace glassbox
