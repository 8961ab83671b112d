#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "glassbox/config.hpp"
#include "glassbox/dataset.hpp"
#include "glassbox/model.hpp"

namespace glassbox {

enum class Distribution { uniform, normal, bernoulli };

/// Closed-form ground-truth shapes with one parameter `a`:
/// zero; linear a*x; sin sin(a*pi*x); abs |x|; step 1[x > a]; square x^2; cubic x^3.
enum class TrueShape { zero, linear, sin, abs, step, square, cubic };

struct SynthFeature {
    std::string name;
    Distribution dist = Distribution::uniform;
    double p1 = -1.0, p2 = 1.0;  // uniform lo/hi, normal mean/sd, bernoulli p
    TrueShape shape = TrueShape::zero;
    double a = 1.0;
};

enum class InteractionKind { product, xor_ };

struct SynthInteraction {
    int first = 0, second = 1;
    InteractionKind kind = InteractionKind::product;
    double scale = 1.0;
};

struct SyntheticSpec {
    std::size_t n = 1000;
    std::vector<SynthFeature> features;
    std::vector<SynthInteraction> interactions;
    double noise_std = 0.0;
    Task task = Task::regression;
    std::uint64_t seed = 0;

    void check() const {
        if (n == 0) throw ConfigError("synthetic spec needs n >= 1");
        if (features.empty()) throw ConfigError("synthetic spec needs at least one feature");
        if (noise_std < 0.0) throw ConfigError("synthetic noise must be >= 0");
        const int nf = static_cast<int>(features.size());
        for (const auto& f : features) {
            if (f.dist == Distribution::uniform && !(f.p1 < f.p2)) throw ConfigError("uniform needs lo < hi");
            if (f.dist == Distribution::normal && !(f.p2 > 0.0)) throw ConfigError("normal needs sd > 0");
            if (f.dist == Distribution::bernoulli && !(f.p1 >= 0.0 && f.p1 <= 1.0))
                throw ConfigError("bernoulli needs p in [0, 1]");
        }
        for (const auto& it : interactions)
            if (it.first < 0 || it.second < 0 || it.first >= nf || it.second >= nf || it.first == it.second)
                throw ConfigError("synthetic interaction references invalid features");
    }
};

inline double true_shape(TrueShape s, double a, double x) {
    switch (s) {
        case TrueShape::zero: return 0.0;
        case TrueShape::linear: return a * x;
        case TrueShape::sin: return std::sin(a * std::numbers::pi * x);
        case TrueShape::abs: return std::abs(x);
        case TrueShape::step: return x > a ? 1.0 : 0.0;
        case TrueShape::square: return x * x;
        case TrueShape::cubic: return x * x * x;
    }
    return 0.0;
}

inline double true_interaction(const SynthInteraction& it, double x1, double x2) {
    if (it.kind == InteractionKind::product) return it.scale * x1 * x2;
    return it.scale * (((x1 > 0.5) != (x2 > 0.5)) ? 1.0 : 0.0);
}

struct GroundTruth {
    std::vector<std::function<double(double)>> shapes;
    std::vector<SynthInteraction> interactions;
    std::vector<std::pair<double, double>> ranges;  // sampled min/max per feature
    std::vector<double> additive_score;             // noiseless link-scale truth per row
};

/// Draws X row by row (features in order) from one mt19937_64 stream, then the noise.
inline std::pair<Dataset, GroundTruth> generate(const SyntheticSpec& spec) {
    spec.check();
    std::mt19937_64 rng(spec.seed);
    Dataset d;
    d.task = spec.task;
    d.target_name = "y";
    for (const auto& f : spec.features) d.schema.features.push_back({f.name, FeatureKind::numeric, {}, {}, {}, 0.0});
    const std::size_t nf = spec.features.size();
    d.x.resize(spec.n * nf);
    d.y.resize(spec.n);

    GroundTruth truth;
    for (const auto& f : spec.features) {
        const auto shape = f.shape;
        const double a = f.a;
        truth.shapes.push_back([shape, a](double x) { return true_shape(shape, a, x); });
    }
    truth.interactions = spec.interactions;
    truth.ranges.assign(nf, {INFINITY, -INFINITY});
    truth.additive_score.resize(spec.n);

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t i = 0; i < spec.n; ++i) {
        for (std::size_t j = 0; j < nf; ++j) {
            const auto& f = spec.features[j];
            double x = 0.0;
            switch (f.dist) {
                case Distribution::uniform: x = f.p1 + (f.p2 - f.p1) * unit(rng); break;
                case Distribution::normal: x = f.p1 + f.p2 * gauss(rng); break;
                case Distribution::bernoulli: x = unit(rng) < f.p1 ? 1.0 : 0.0; break;
            }
            d.x[i * nf + j] = x;
            truth.ranges[j].first = std::min(truth.ranges[j].first, x);
            truth.ranges[j].second = std::max(truth.ranges[j].second, x);
        }
    }
    for (std::size_t i = 0; i < spec.n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < nf; ++j) s += truth.shapes[j](d.x[i * nf + j]);
        for (const auto& it : spec.interactions)
            s += true_interaction(it, d.x[i * nf + static_cast<std::size_t>(it.first)],
                                  d.x[i * nf + static_cast<std::size_t>(it.second)]);
        truth.additive_score[i] = s;
    }
    for (std::size_t i = 0; i < spec.n; ++i) {
        const double s = truth.additive_score[i] + (spec.noise_std > 0.0 ? spec.noise_std * gauss(rng) : 0.0);
        d.y[i] = spec.task == Task::regression ? s : (unit(rng) < sigmoid(s) ? 1.0 : 0.0);
    }
    return {std::move(d), std::move(truth)};
}

/// RMSE between the fitted shape and the truth on `grid_points` evenly spaced points of
/// [lo, hi], after centering both to mean zero over that grid.
inline double shape_fidelity(const std::function<double(double)>& fitted, const std::function<double(double)>& truth,
                             double lo, double hi, int grid_points = 512) {
    if (!(lo < hi)) throw DataError("shape_fidelity: empty range");
    if (grid_points < 2) throw ConfigError("shape_fidelity: grid_points must be >= 2");
    const auto g = static_cast<std::size_t>(grid_points);
    std::vector<double> f(g), t(g);
    double fm = 0.0, tm = 0.0;
    for (std::size_t k = 0; k < g; ++k) {
        const double x = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(g - 1);
        f[k] = fitted(x);
        t[k] = truth(x);
        fm += f[k];
        tm += t[k];
    }
    fm /= static_cast<double>(g);
    tm /= static_cast<double>(g);
    double se = 0.0;
    for (std::size_t k = 0; k < g; ++k) {
        const double r = (f[k] - fm) - (t[k] - tm);
        se += r * r;
    }
    return std::sqrt(se / static_cast<double>(g));
}

inline double shape_fidelity(const ShapeFunction& fitted, const std::function<double(double)>& truth, double lo,
                             double hi, int grid_points = 512) {
    return shape_fidelity([&fitted](double x) { return evaluate_shape(fitted, x); }, truth, lo, hi, grid_points);
}

namespace detail {

inline std::vector<std::string> split_list(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) {
        const auto t = csv::trim(item);
        if (!t.empty()) out.emplace_back(t);
    }
    return out;
}

inline std::vector<double> parse_params(const std::vector<std::string>& words, std::size_t from, const std::string& key) {
    std::vector<double> out;
    for (std::size_t i = from; i < words.size(); ++i) {
        const auto v = csv::parse_number(words[i]);
        if (!v) throw ConfigError("config key '" + key + "': '" + words[i] + "' is not a number");
        out.push_back(*v);
    }
    return out;
}

}  // namespace detail

/// Reads a spec from flat keys:
///   synth.n, synth.seed, synth.noise, synth.task, synth.features = a, b, ...
///   synth.<f>.dist  = uniform LO HI | normal MEAN SD | bernoulli P
///   synth.<f>.shape = zero | linear A | sin A | abs | step T | square | cubic
///   synth.interactions = a*b, c^d   (product, xor; optional "SCALE:" prefix e.g. 2:a*b)
inline SyntheticSpec synthetic_spec_from(const KeyValueConfig& kv) {
    SyntheticSpec s;
    s.n = static_cast<std::size_t>(kv.get_int("synth.n", 1000));
    s.seed = static_cast<std::uint64_t>(kv.get_int("synth.seed", 0));
    s.noise_std = kv.get_double("synth.noise", 0.0);
    s.task = task_from_string(kv.get_string("synth.task", "regression"));
    const auto names = detail::split_list(kv.get_string("synth.features", ""), ',');
    if (names.empty()) throw ConfigError("synth.features must list at least one feature");
    for (const auto& name : names) {
        SynthFeature f;
        f.name = name;
        const std::string dkey = "synth." + name + ".dist";
        const auto dist = detail::split_list(kv.get_string(dkey, "uniform -1 1"), ' ');
        const auto dp = detail::parse_params(dist, 1, dkey);
        if (dist[0] == "uniform" && dp.size() == 2) {
            f.dist = Distribution::uniform;
            f.p1 = dp[0];
            f.p2 = dp[1];
        } else if (dist[0] == "normal" && dp.size() == 2) {
            f.dist = Distribution::normal;
            f.p1 = dp[0];
            f.p2 = dp[1];
        } else if (dist[0] == "bernoulli" && dp.size() == 1) {
            f.dist = Distribution::bernoulli;
            f.p1 = dp[0];
        } else {
            throw ConfigError("config key '" + dkey + "': expected uniform LO HI, normal MEAN SD or bernoulli P");
        }
        const std::string skey = "synth." + name + ".shape";
        const auto shape = detail::split_list(kv.get_string(skey, "zero"), ' ');
        const auto sp = detail::parse_params(shape, 1, skey);
        static const std::pair<const char*, TrueShape> kinds[] = {
            {"zero", TrueShape::zero}, {"linear", TrueShape::linear}, {"sin", TrueShape::sin},
            {"abs", TrueShape::abs},   {"step", TrueShape::step},     {"square", TrueShape::square},
            {"cubic", TrueShape::cubic}};
        bool found = false;
        for (const auto& [kname, kind] : kinds)
            if (shape[0] == kname) {
                f.shape = kind;
                found = true;
            }
        if (!found) throw ConfigError("config key '" + skey + "': unknown shape '" + shape[0] + "'");
        const bool takes_param = f.shape == TrueShape::linear || f.shape == TrueShape::sin || f.shape == TrueShape::step;
        if (sp.size() != (takes_param ? 1u : 0u))
            throw ConfigError("config key '" + skey + "': wrong number of parameters");
        f.a = takes_param ? sp[0] : 1.0;
        s.features.push_back(f);
    }
    for (auto item : detail::split_list(kv.get_string("synth.interactions", ""), ',')) {
        SynthInteraction it;
        if (const auto colon = item.find(':'); colon != std::string::npos) {
            const auto v = csv::parse_number(item.substr(0, colon));
            if (!v) throw ConfigError("synth.interactions: bad scale in '" + item + "'");
            it.scale = *v;
            item = item.substr(colon + 1);
        }
        const auto op = item.find_first_of("*^");
        if (op == std::string::npos) throw ConfigError("synth.interactions: expected a*b or a^b, got '" + item + "'");
        it.kind = item[op] == '*' ? InteractionKind::product : InteractionKind::xor_;
        const std::string a(csv::trim(item.substr(0, op))), b(csv::trim(item.substr(op + 1)));
        auto index = [&](const std::string& nm) {
            for (std::size_t j = 0; j < names.size(); ++j)
                if (names[j] == nm) return static_cast<int>(j);
            throw ConfigError("synth.interactions: unknown feature '" + nm + "'");
        };
        it.first = index(a);
        it.second = index(b);
        s.interactions.push_back(it);
    }
    s.check();
    return s;
}

}  // namespace glassbox
