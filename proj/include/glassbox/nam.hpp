#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "glassbox/boost.hpp"
#include "glassbox/config.hpp"
#include "glassbox/model.hpp"

namespace glassbox {

enum class UnitKind { exu, standard };

struct NamConfig {
    int hidden_units = 64;
    UnitKind unit_kind = UnitKind::exu;
    int epochs = 200;
    int batch_size = 256;
    double learning_rate = 1e-3;
    double weight_decay = 1e-5;
    double output_penalty = 1e-3;
    std::uint64_t seed = 0;
    int grid_points = 512;
    double exu_init_mean = 2.0;  // mean of the log-scale weights w at initialization
    double exu_init_std = 0.5;
    double head_init_std = 0.01;

    void check() const {
        if (hidden_units < 1) throw ConfigError("nam hidden_units must be >= 1");
        if (epochs < 0) throw ConfigError("nam epochs must be >= 0");
        if (batch_size < 1) throw ConfigError("nam batch_size must be >= 1");
        if (learning_rate < 0.0 || weight_decay < 0.0 || output_penalty < 0.0)
            throw ConfigError("nam rates must be >= 0");
        if (grid_points < 2) throw ConfigError("nam grid_points must be >= 2");
        if (exu_init_std < 0.0 || head_init_std < 0.0) throw ConfigError("nam init std must be >= 0");
    }

    static NamConfig from(const KeyValueConfig& kv) {
        NamConfig c;
        c.hidden_units = static_cast<int>(kv.get_int("nam.hidden_units", c.hidden_units));
        const auto kind = kv.get_string("nam.unit_kind", "exu");
        if (kind == "exu") c.unit_kind = UnitKind::exu;
        else if (kind == "standard") c.unit_kind = UnitKind::standard;
        else throw ConfigError("nam.unit_kind must be exu or standard");
        c.epochs = static_cast<int>(kv.get_int("nam.epochs", c.epochs));
        c.batch_size = static_cast<int>(kv.get_int("nam.batch_size", c.batch_size));
        c.learning_rate = kv.get_double("nam.learning_rate", c.learning_rate);
        c.weight_decay = kv.get_double("nam.weight_decay", c.weight_decay);
        c.output_penalty = kv.get_double("nam.output_penalty", c.output_penalty);
        c.grid_points = static_cast<int>(kv.get_int("nam.grid_points", c.grid_points));
        c.exu_init_mean = kv.get_double("nam.exu_init_mean", c.exu_init_mean);
        c.exu_init_std = kv.get_double("nam.exu_init_std", c.exu_init_std);
        c.head_init_std = kv.get_double("nam.head_init_std", c.head_init_std);
        c.check();
        return c;
    }
};

/// One hidden layer of `w.size()` units and a linear head.
///   exu:      h_u = clip((z - b_u) * exp(w_u), 0, 1)
///   standard: h_u = max(0, w_u * z + b_u)
///   output  = sum_u v_u h_u + c
struct Subnet {
    std::vector<double> w, b, v;
    double c = 0.0;

    std::size_t size() const { return w.size(); }
};

namespace detail {

inline double unit_preactivation(UnitKind kind, double w, double b, double z) {
    return kind == UnitKind::exu ? (z - b) * std::exp(w) : w * z + b;
}

inline double unit_activation(UnitKind kind, double a) {
    return kind == UnitKind::exu ? std::clamp(a, 0.0, 1.0) : std::max(a, 0.0);
}

inline double unit_slope(UnitKind kind, double a) {
    return kind == UnitKind::exu ? (a > 0.0 && a < 1.0 ? 1.0 : 0.0) : (a > 0.0 ? 1.0 : 0.0);
}

/// Standardized inputs at which a unit's activation changes slope.
inline std::vector<double> subnet_hinges(const Subnet& net, UnitKind kind) {
    std::vector<double> z;
    for (std::size_t u = 0; u < net.size(); ++u) {
        if (net.v[u] == 0.0) continue;
        if (kind == UnitKind::exu) {
            z.push_back(net.b[u]);
            z.push_back(net.b[u] + std::exp(-net.w[u]));
        } else if (net.w[u] != 0.0) {
            z.push_back(-net.b[u] / net.w[u]);
        }
    }
    return z;
}

}  // namespace detail

inline double subnet_forward(const Subnet& net, double z, UnitKind kind = UnitKind::exu) {
    double out = net.c;
    for (std::size_t u = 0; u < net.size(); ++u)
        out += net.v[u] * detail::unit_activation(kind, detail::unit_preactivation(kind, net.w[u], net.b[u], z));
    return out;
}

/// Per-feature block: a subnet on the standardized value for numeric features, a learned
/// contribution per level for categorical ones.
struct NamFeature {
    int feature = 0;
    bool categorical = false;
    double mean = 0.0, scale = 1.0;  // standardization (numeric)
    double lo = 0.0, hi = 0.0;       // training range (numeric)
    Subnet net;
    std::vector<double> table;
};

struct NamNetwork {
    UnitKind kind = UnitKind::exu;
    double intercept = 0.0;
    std::vector<NamFeature> features;
};

enum class ParamClass { intercept, w, b, v, c, table };

/// Visits every trainable parameter as (class, reference).
template <class Net, class Fn>
void for_each_parameter(Net& net, Fn&& fn) {
    fn(ParamClass::intercept, net.intercept);
    for (auto& f : net.features) {
        if (f.categorical) {
            for (auto& t : f.table) fn(ParamClass::table, t);
            continue;
        }
        for (auto& x : f.net.w) fn(ParamClass::w, x);
        for (auto& x : f.net.b) fn(ParamClass::b, x);
        for (auto& x : f.net.v) fn(ParamClass::v, x);
        fn(ParamClass::c, f.net.c);
    }
}

/// Output of feature block `f` for raw cell value `x`.
inline double feature_output(const NamNetwork& net, const NamFeature& f, double x) {
    if (f.categorical) {
        if (!(x >= 0.0) || x != std::floor(x) || x >= static_cast<double>(f.table.size())) return 0.0;
        return f.table[static_cast<std::size_t>(x)];
    }
    return subnet_forward(f.net, (x - f.mean) / f.scale, net.kind);
}

inline double nam_score(const NamNetwork& net, std::span<const double> row) {
    double s = net.intercept;
    for (const auto& f : net.features) s += feature_output(net, f, row[static_cast<std::size_t>(f.feature)]);
    return s;
}

/// Mini-batch objective
///   mean_i loss(y_i, s_i) + weight_decay * |theta|^2 + output_penalty * mean_{i,j} o_ij^2
/// with squared error (regression) or log loss (classification). When `grad` is non-null it
/// must have the same layout as `net`; it is overwritten with the analytic gradient.
inline double nam_objective(const NamNetwork& net, const Dataset& data, std::span<const std::size_t> batch,
                            const NamConfig& cfg, NamNetwork* grad = nullptr) {
    const bool logistic = data.task == Task::classification;
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    const std::size_t nfeat = net.features.size();
    const double out_scale = nfeat ? cfg.output_penalty * inv_b / static_cast<double>(nfeat) : 0.0;

    if (grad) for_each_parameter(*grad, [](ParamClass, double& p) { p = 0.0; });

    double loss = 0.0, penalty_out = 0.0;
    std::vector<double> outputs(nfeat);
    std::vector<double> pre;
    for (std::size_t i : batch) {
        const auto row = data.row(i);
        double s = net.intercept;
        for (std::size_t j = 0; j < nfeat; ++j) {
            outputs[j] = feature_output(net, net.features[j], row[static_cast<std::size_t>(net.features[j].feature)]);
            s += outputs[j];
            penalty_out += outputs[j] * outputs[j];
        }
        const double y = data.y[i];
        double dlds;
        if (logistic) {
            const double softplus = s > 0.0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
            loss += softplus - y * s;
            dlds = (sigmoid(s) - y) * inv_b;
        } else {
            loss += (s - y) * (s - y);
            dlds = 2.0 * (s - y) * inv_b;
        }
        if (!grad) continue;

        grad->intercept += dlds;
        for (std::size_t j = 0; j < nfeat; ++j) {
            const auto& f = net.features[j];
            auto& g = grad->features[j];
            const double x = row[static_cast<std::size_t>(f.feature)];
            const double dldo = dlds + 2.0 * out_scale * outputs[j];
            if (f.categorical) {
                if (x >= 0.0 && x == std::floor(x) && x < static_cast<double>(f.table.size()))
                    g.table[static_cast<std::size_t>(x)] += dldo;
                continue;
            }
            const double z = (x - f.mean) / f.scale;
            g.net.c += dldo;
            for (std::size_t u = 0; u < f.net.size(); ++u) {
                const double a = detail::unit_preactivation(net.kind, f.net.w[u], f.net.b[u], z);
                const double h = detail::unit_activation(net.kind, a);
                g.net.v[u] += dldo * h;
                const double dlda = dldo * f.net.v[u] * detail::unit_slope(net.kind, a);
                if (dlda == 0.0) continue;
                if (net.kind == UnitKind::exu) {
                    g.net.w[u] += dlda * a;                      // da/dw = (z-b) e^w
                    g.net.b[u] += dlda * -std::exp(f.net.w[u]);  // da/db = -e^w
                } else {
                    g.net.w[u] += dlda * z;
                    g.net.b[u] += dlda;
                }
            }
        }
    }

    double l2 = 0.0;  // the intercept is not decayed
    for_each_parameter(net, [&](ParamClass cls, const double& p) {
        if (cls != ParamClass::intercept) l2 += p * p;
    });
    if (grad && cfg.weight_decay > 0.0) {
        // Walk net and grad in lockstep.
        std::vector<double*> gp;
        for_each_parameter(*grad, [&](ParamClass, double& p) { gp.push_back(&p); });
        std::size_t k = 0;
        for_each_parameter(net, [&](ParamClass cls, const double& p) {
            if (cls != ParamClass::intercept) *gp[k] += 2.0 * cfg.weight_decay * p;
            ++k;
        });
    }
    return loss * inv_b + cfg.weight_decay * l2 + out_scale * penalty_out;
}

/// Parameters initialized from `train`: standardization statistics, ExU shifts b drawn from the
/// training values, log-weights w ~ N(exu_init_mean, exu_init_std), head v ~ N(0, head_init_std).
inline NamNetwork init_nam(const Dataset& train, const NamConfig& cfg) {
    cfg.check();
    if (train.rows() == 0) throw DataError("empty training set");
    detail::check_binary_target(train);
    NamNetwork net;
    net.kind = cfg.unit_kind;
    net.intercept = detail::base_score(train);
    std::mt19937_64 rng(detail::bag_seed(cfg.seed, 7, 0));
    std::normal_distribution<double> w_dist(cfg.unit_kind == UnitKind::exu ? cfg.exu_init_mean : 0.0,
                                            cfg.unit_kind == UnitKind::exu ? cfg.exu_init_std : 1.0);
    std::normal_distribution<double> v_dist(0.0, 1.0);
    const std::size_t n = train.rows();
    for (std::size_t j = 0; j < train.cols(); ++j) {
        const auto& info = train.schema.features[j];
        NamFeature f;
        f.feature = static_cast<int>(j);
        if (info.kind == FeatureKind::categorical) {
            f.categorical = true;
            f.table.assign(info.levels.size(), 0.0);
            net.features.push_back(std::move(f));
            continue;
        }
        const auto col = train.column(j);
        double mean = 0.0;
        for (double x : col) mean += x;
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (double x : col) var += (x - mean) * (x - mean);
        var /= static_cast<double>(n);
        f.mean = mean;
        f.scale = var > 0.0 ? std::sqrt(var) : 1.0;
        const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
        f.lo = *lo;
        f.hi = *hi;
        const auto h = static_cast<std::size_t>(cfg.hidden_units);
        f.net.w.resize(h);
        f.net.b.resize(h);
        f.net.v.resize(h);
        for (std::size_t u = 0; u < h; ++u) {
            f.net.w[u] = w_dist(rng);
            const double z = (col[static_cast<std::size_t>(rng() % n)] - f.mean) / f.scale;
            // exu: kink at the sampled value; standard: ReLU hinge at the sampled value.
            f.net.b[u] = cfg.unit_kind == UnitKind::exu ? z : -f.net.w[u] * z;
            f.net.v[u] = cfg.head_init_std * v_dist(rng);
        }
        net.features.push_back(std::move(f));
    }
    return net;
}

struct NamFitInfo {
    std::vector<double> epoch_loss;  // mean batch objective per epoch
};

/// Plain mini-batch gradient descent; batch order reshuffled every epoch from cfg.seed.
inline void train_nam(NamNetwork& net, const Dataset& train, const NamConfig& cfg, NamFitInfo* info = nullptr) {
    cfg.check();
    const std::size_t n = train.rows();
    NamNetwork grad = net;
    std::vector<double*> params, grads;
    for_each_parameter(net, [&](ParamClass, double& p) { params.push_back(&p); });
    for_each_parameter(grad, [&](ParamClass, double& p) { grads.push_back(&p); });
    const auto bs = static_cast<std::size_t>(cfg.batch_size);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto order = seeded_permutation(n, detail::bag_seed(cfg.seed, 8, static_cast<std::uint64_t>(epoch)));
        double acc = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < n; start += bs) {
            const std::span<const std::size_t> batch(order.data() + start, std::min(bs, n - start));
            const double obj = nam_objective(net, train, batch, cfg, &grad);
            if (!std::isfinite(obj))
                throw FitError("nam training diverged (non-finite loss) at epoch " + std::to_string(epoch + 1) +
                               ", batch " + std::to_string(batches + 1) + "; lower the learning rate");
            for (std::size_t k = 0; k < params.size(); ++k) {
                if (!std::isfinite(*grads[k]))
                    throw FitError("nam training produced a non-finite gradient at epoch " + std::to_string(epoch + 1));
                *params[k] -= cfg.learning_rate * *grads[k];
            }
            acc += obj;
            ++batches;
        }
        if (info) info->epoch_loss.push_back(acc / static_cast<double>(std::max<std::size_t>(batches, 1)));
    }
}

/// Samples every block into a Sampled1D / CategoricalTable term and centers the model on `train`.
inline AdditiveModel nam_to_model(const NamNetwork& net, const Dataset& train, const NamConfig& cfg) {
    AdditiveModel model;
    model.schema = train.schema;
    model.task = train.task;
    model.link = Link::for_task(train.task);
    model.intercept = net.intercept;
    model.metadata["backend"] = "nam";
    model.metadata["unit_kind"] = cfg.unit_kind == UnitKind::exu ? "exu" : "standard";
    for (const auto& f : net.features) {
        if (f.categorical) {
            CategoricalTable t;
            t.levels = train.schema.features[static_cast<std::size_t>(f.feature)].levels;
            t.values = f.table;
            model.terms.push_back({{f.feature}, std::move(t)});
            continue;
        }
        Sampled1D s;
        if (f.hi > f.lo) {
            const auto g = static_cast<std::size_t>(cfg.grid_points);
            std::vector<double> xs;
            for (std::size_t k = 0; k < g; ++k)
                xs.push_back(k == g - 1 ? f.hi : f.lo + (f.hi - f.lo) * static_cast<double>(k) / static_cast<double>(g - 1));
            // The subnet is piecewise linear in x; adding its hinges makes interpolation exact.
            for (double z : detail::subnet_hinges(f.net, net.kind)) {
                const double x = f.mean + f.scale * z;
                if (x > f.lo && x < f.hi) xs.push_back(x);
            }
            std::sort(xs.begin(), xs.end());
            for (double x : xs) {
                if (!s.grid.empty() && !(x > s.grid.back())) continue;
                s.grid.push_back(x);
                s.values.push_back(feature_output(net, f, x));
            }
        } else {
            s.grid = {f.lo};
            s.values = {feature_output(net, f, f.lo)};
        }
        model.terms.push_back({{f.feature}, std::move(s)});
    }
    return center_terms(std::move(model), train);
}

inline AdditiveModel fit_nam(const Dataset& train, const NamConfig& cfg, NamFitInfo* info = nullptr) {
    auto net = init_nam(train, cfg);
    train_nam(net, train, cfg, info);
    return nam_to_model(net, train, cfg);
}

}  // namespace glassbox
