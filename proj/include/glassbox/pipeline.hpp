#pragma once

#include <cmath>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "glassbox/baselines.hpp"
#include "glassbox/boost.hpp"
#include "glassbox/config.hpp"
#include "glassbox/model.hpp"
#include "glassbox/nam.hpp"
#include "glassbox/serialize.hpp"
#include "glassbox/spline.hpp"

namespace glassbox {

enum class ModelKind { spline, ebm, nam, linear, tree };

inline constexpr const char* kValidBackends = "spline, ebm, nam, linear, tree";

inline ModelKind model_kind_from_string(std::string_view s) {
    if (s == "spline" || s == "splines") return ModelKind::spline;
    if (s == "ebm") return ModelKind::ebm;
    if (s == "nam") return ModelKind::nam;
    if (s == "linear" || s == "lr") return ModelKind::linear;
    if (s == "tree" || s == "dt") return ModelKind::tree;
    throw ConfigError("unknown backend '" + std::string(s) + "' (valid backends: " + kValidBackends + ")");
}

inline std::string_view to_string(ModelKind k) {
    switch (k) {
        case ModelKind::spline: return "spline";
        case ModelKind::ebm: return "ebm";
        case ModelKind::nam: return "nam";
        case ModelKind::linear: return "linear";
        case ModelKind::tree: return "tree";
    }
    return "?";
}

/// Column label used in benchmark tables.
inline std::string_view display_name(ModelKind k) {
    switch (k) {
        case ModelKind::spline: return "Splines";
        case ModelKind::ebm: return "EBM";
        case ModelKind::nam: return "NAM";
        case ModelKind::linear: return "LR";
        case ModelKind::tree: return "DT";
    }
    return "?";
}

/// Backend selection plus every backend's hyperparameters.
struct FitConfig {
    ModelKind kind = ModelKind::ebm;
    SplineConfig spline;
    BoostConfig ebm;
    NamConfig nam;
    LinearModelConfig linear;
    TreeConfig tree;

    /// Reads all `<backend>.*` keys; `seed` and `jobs` apply to every stochastic/parallel backend.
    static FitConfig from(ModelKind kind, const KeyValueConfig& kv, std::uint64_t seed, int jobs) {
        FitConfig c;
        c.kind = kind;
        c.spline = SplineConfig::from(kv);
        c.ebm = BoostConfig::from(kv);
        c.nam = NamConfig::from(kv);
        c.linear = LinearModelConfig::from(kv);
        c.tree = TreeConfig::from(kv);
        c.set_seed(seed);
        c.ebm.jobs = jobs;
        return c;
    }

    void set_seed(std::uint64_t seed) {
        ebm.seed = seed;
        nam.seed = seed;
    }
};

/// Either an additive model or a decision tree.
struct FittedModel {
    ModelKind kind = ModelKind::ebm;
    std::optional<AdditiveModel> gam;
    std::optional<DecisionTree> tree;

    /// Probability (classification) or target-scale value (regression).
    double predict(std::span<const double> row) const {
        return gam ? glassbox::predict(*gam, row) : glassbox::predict(*tree, row);
    }
};

/// Fits the selected backend on `train` as given (no target scaling).
inline FittedModel fit_backend(const Dataset& train, const FitConfig& cfg) {
    FittedModel out;
    out.kind = cfg.kind;
    switch (cfg.kind) {
        case ModelKind::spline: out.gam = fit_spline_gam(train, cfg.spline); break;
        case ModelKind::ebm: out.gam = fit_ebm(train, cfg.ebm); break;
        case ModelKind::nam: out.gam = fit_nam(train, cfg.nam); break;
        case ModelKind::linear: out.gam = fit_linear(train, cfg.linear); break;
        case ModelKind::tree: out.tree = fit_tree(train, cfg.tree); break;
    }
    return out;
}

/// Mean and population standard deviation of y; a zero spread maps to 1.
inline TargetScaling target_scaling_of(std::span<const double> y) {
    if (y.empty()) throw DataError("empty target");
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    double var = 0.0;
    for (double v : y) var += (v - mean) * (v - mean);
    var /= static_cast<double>(y.size());
    return {mean, var > 0.0 ? std::sqrt(var) : 1.0};
}

inline Dataset with_scaled_target(Dataset d, const TargetScaling& s) {
    for (double& v : d.y) v = (v - s.mean) / s.std;
    return d;
}

/// Full training path: regression targets are standardized before fitting and the scaling is
/// stored with the model so predictions come back in original units.
inline FittedModel fit_model(const Dataset& train, const FitConfig& cfg) {
    if (train.task == Task::classification) return fit_backend(train, cfg);
    const auto scaling = target_scaling_of(train.y);
    auto out = fit_backend(with_scaled_target(train, scaling), cfg);
    if (out.gam) out.gam->target_scaling = scaling;
    else out.tree->target_scaling = scaling;
    return out;
}

/// Writes a glassbox-gam/1 or glassbox-tree/1 document.
inline void save_fitted(const FittedModel& m, const std::string& path) {
    if (m.gam) save_model(*m.gam, path);
    else save_tree(*m.tree, path);
}

/// Reads either model document, dispatching on its version tag.
inline FittedModel load_fitted(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read model file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("model file '" + path + "' is not valid JSON: " + e.what());
    }
    const auto version = j.is_object() ? j.value("version", std::string()) : std::string();
    FittedModel out;
    if (version == kModelVersion) {
        out.gam = model_from_json(j);
        const auto it = out.gam->metadata.find("backend");
        out.kind = it != out.gam->metadata.end() ? model_kind_from_string(it->second) : ModelKind::ebm;
    } else if (version == kTreeVersion) {
        out.tree = tree_from_json(j);
        out.kind = ModelKind::tree;
    } else {
        throw DataError("model file '" + path + "' has unknown version '" + version + "'");
    }
    return out;
}

}  // namespace glassbox
