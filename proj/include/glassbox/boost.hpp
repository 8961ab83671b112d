#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "glassbox/config.hpp"
#include "glassbox/ingest.hpp"
#include "glassbox/model.hpp"
#include "glassbox/parallel.hpp"

namespace glassbox {

struct BoostConfig {
    double learning_rate = 0.01;
    int max_rounds = 5000;
    int max_leaves = 3;
    int outer_bags = 8;
    int interactions = 10;
    double validation_fraction = 0.15;
    int early_stop_patience = 50;
    std::uint64_t seed = 0;
    int max_bins = 256;
    int interaction_bins = 32;
    int min_samples_leaf = 2;
    int jobs = 1;

    void check() const {
        if (!(learning_rate > 0.0 && learning_rate <= 1.0))
            throw ConfigError("ebm learning_rate must be in (0, 1]");
        if (max_rounds < 1) throw ConfigError("ebm max_rounds must be >= 1");
        if (max_leaves < 2) throw ConfigError("ebm max_leaves must be >= 2");
        if (outer_bags < 1) throw ConfigError("ebm outer_bags must be >= 1");
        if (interactions < 0) throw ConfigError("ebm interactions must be >= 0");
        if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
            throw ConfigError("ebm validation_fraction must be in [0, 1)");
        if (early_stop_patience < 1) throw ConfigError("ebm early_stop_patience must be >= 1");
        if (max_bins < 2 || max_bins > 65535) throw ConfigError("ebm max_bins must be in [2, 65535]");
        if (interaction_bins < 2 || interaction_bins > 65535)
            throw ConfigError("ebm interaction_bins must be in [2, 65535]");
        if (min_samples_leaf < 1) throw ConfigError("ebm min_samples_leaf must be >= 1");
    }

    static BoostConfig from(const KeyValueConfig& kv) {
        BoostConfig c;
        c.learning_rate = kv.get_double("ebm.learning_rate", c.learning_rate);
        c.max_rounds = static_cast<int>(kv.get_int("ebm.max_rounds", c.max_rounds));
        c.max_leaves = static_cast<int>(kv.get_int("ebm.max_leaves", c.max_leaves));
        c.outer_bags = static_cast<int>(kv.get_int("ebm.outer_bags", c.outer_bags));
        c.interactions = static_cast<int>(kv.get_int("ebm.interactions", c.interactions));
        c.validation_fraction = kv.get_double("ebm.validation_fraction", c.validation_fraction);
        c.early_stop_patience = static_cast<int>(kv.get_int("ebm.early_stop_patience", c.early_stop_patience));
        c.max_bins = static_cast<int>(kv.get_int("ebm.max_bins", c.max_bins));
        c.interaction_bins = static_cast<int>(kv.get_int("ebm.interaction_bins", c.interaction_bins));
        c.min_samples_leaf = static_cast<int>(kv.get_int("ebm.min_samples_leaf", c.min_samples_leaf));
        c.check();
        return c;
    }
};

struct PairGain {
    int first = 0;
    int second = 0;
    double gain = 0.0;
};

struct BoostFitInfo {
    std::vector<int> rounds;               // rounds kept per bag (main stage)
    std::vector<bool> early_stopped;       // per bag (main stage)
    std::vector<double> train_deviance;    // bag 0, one entry per round (main stage)
    std::vector<std::string> skipped_features;
    std::vector<PairGain> ranked_pairs;
    std::vector<int> pair_rounds;          // per bag (interaction stage)
    std::vector<std::string> warnings;
};

namespace detail {

/// A feature discretized on the training rows: bin code per row plus the cut points.
struct BinnedColumn {
    int feature = 0;
    bool categorical = false;
    std::vector<double> thresholds;  // numeric only
    std::size_t n_bins = 1;
    std::vector<std::uint16_t> codes;

    /// Thresholds usable by BinnedStep1D / Grid2D: categorical level k sits in (k-0.5, k+0.5].
    std::vector<double> cut_points() const {
        if (!categorical) return thresholds;
        std::vector<double> out;
        for (std::size_t k = 1; k < n_bins; ++k) out.push_back(static_cast<double>(k) - 0.5);
        return out;
    }

    bool degenerate() const {
        std::vector<char> seen(n_bins, 0);
        std::size_t distinct = 0;
        for (auto c : codes)
            if (!seen[c]) {
                seen[c] = 1;
                if (++distinct > 1) return false;
            }
        return true;
    }
};

inline BinnedColumn bin_column(const Dataset& d, std::size_t j, int max_bins) {
    BinnedColumn b;
    b.feature = static_cast<int>(j);
    const auto& info = d.schema.features[j];
    const auto col = d.column(j);
    b.codes.resize(col.size());
    if (info.kind == FeatureKind::categorical) {
        b.categorical = true;
        b.n_bins = std::max<std::size_t>(info.levels.size(), 1);
        if (b.n_bins > 65535) throw DataError("feature '" + info.name + "' has too many levels to bin");
        for (std::size_t i = 0; i < col.size(); ++i) {
            const double v = col[i];
            if (!(v >= 0.0) || v != std::floor(v) || v >= static_cast<double>(b.n_bins))
                throw DataError("feature '" + info.name + "': invalid level code in training data");
            b.codes[i] = static_cast<std::uint16_t>(v);
        }
    } else {
        b.thresholds = quantile_bins(col, max_bins);
        b.n_bins = b.thresholds.size() + 1;
        for (std::size_t i = 0; i < col.size(); ++i)
            b.codes[i] = static_cast<std::uint16_t>(
                std::upper_bound(b.thresholds.begin(), b.thresholds.end(), col[i]) - b.thresholds.begin());
    }
    return b;
}

inline double mean_response(Task task, double f) { return task == Task::classification ? sigmoid(f) : f; }

/// Pointwise negative loss gradient: y - F for squared loss, y - sigmoid(F) for log loss.
inline double gradient(Task task, double y, double f) { return y - mean_response(task, f); }

/// Mean deviance: squared error, or binomial deviance 2 * (softplus(F) - y F).
inline double mean_deviance(Task task, std::span<const double> y, std::span<const double> f) {
    if (y.empty()) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (task == Task::classification) {
            const double s = f[i];
            const double softplus = s > 0.0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
            acc += 2.0 * (softplus - y[i] * s);
        } else {
            const double r = y[i] - f[i];
            acc += r * r;
        }
    }
    return acc / static_cast<double>(y.size());
}

inline std::uint64_t bag_seed(std::uint64_t seed, std::uint64_t stage, std::uint64_t bag) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stage * 1024 + bag + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

struct BagSplit {
    std::vector<std::size_t> fit;
    std::vector<std::size_t> val;
};

inline BagSplit bag_split(std::size_t n, double fraction, std::uint64_t seed) {
    BagSplit s;
    const auto perm = seeded_permutation(n, seed);
    auto n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    if (n_val >= n) n_val = n - 1;
    s.val.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_val));
    s.fit.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_val), perm.end());
    std::sort(s.val.begin(), s.val.end());
    std::sort(s.fit.begin(), s.fit.end());
    return s;
}

/// Greedy histogram "tree": up to max_leaves-1 cuts on the bin order, each maximizing
/// sum_leaf G^2/C. Returns learning_rate * mean gradient of the leaf, per bin.
inline std::vector<double> leaf_deltas(std::span<const double> grad_sum, std::span<const double> count,
                                       int max_leaves, int min_samples_leaf, double learning_rate) {
    const std::size_t nb = grad_sum.size();
    std::vector<double> pg(nb + 1, 0.0), pc(nb + 1, 0.0);
    for (std::size_t b = 0; b < nb; ++b) {
        pg[b + 1] = pg[b] + grad_sum[b];
        pc[b + 1] = pc[b] + count[b];
    }
    auto leaf_score = [&](std::size_t lo, std::size_t hi) {
        const double c = pc[hi] - pc[lo];
        if (c <= 0.0) return 0.0;
        const double g = pg[hi] - pg[lo];
        return g * g / c;
    };
    const double min_leaf = static_cast<double>(min_samples_leaf);

    std::vector<std::pair<std::size_t, std::size_t>> segments{{0, nb}};
    for (int cut = 0; cut + 1 < max_leaves; ++cut) {
        double best_gain = 0.0;
        std::size_t best_seg = 0, best_pos = 0;
        for (std::size_t s = 0; s < segments.size(); ++s) {
            const auto [lo, hi] = segments[s];
            const double parent = leaf_score(lo, hi);
            for (std::size_t pos = lo + 1; pos < hi; ++pos) {
                if (pc[pos] - pc[lo] < min_leaf || pc[hi] - pc[pos] < min_leaf) continue;
                const double gain = leaf_score(lo, pos) + leaf_score(pos, hi) - parent;
                if (gain > best_gain) {
                    best_gain = gain;
                    best_seg = s;
                    best_pos = pos;
                }
            }
        }
        if (best_pos == 0) break;
        const auto [lo, hi] = segments[best_seg];
        segments[best_seg] = {lo, best_pos};
        segments.insert(segments.begin() + static_cast<std::ptrdiff_t>(best_seg) + 1, {best_pos, hi});
    }

    std::vector<double> delta(nb, 0.0);
    for (const auto& [lo, hi] : segments) {
        const double c = pc[hi] - pc[lo];
        const double v = c > 0.0 ? learning_rate * (pg[hi] - pg[lo]) / c : 0.0;
        for (std::size_t b = lo; b < hi; ++b) delta[b] = v;
    }
    return delta;
}

/// Tracks validation deviance and decides when to stop.
struct EarlyStopper {
    int patience;
    bool enabled;
    double best = std::numeric_limits<double>::infinity();
    int best_round = 0;

    /// Returns true when `dev` is a new best.
    bool improved(double dev, int round) {
        if (!enabled) {
            best_round = round;
            return true;
        }
        if (dev < best) {
            best = dev;
            best_round = round;
            return true;
        }
        return false;
    }
    bool should_stop(int round) const { return enabled && round - best_round >= patience; }
};

struct MainBagResult {
    std::vector<std::vector<double>> shapes;  // per active column, per bin
    int rounds = 0;
    bool early_stopped = false;
    std::vector<double> train_deviance;
};

inline MainBagResult boost_main_bag(const std::vector<BinnedColumn>& cols, std::span<const double> y, Task task,
                                    double base, const BagSplit& split, const BoostConfig& cfg) {
    const std::size_t nf = split.fit.size(), nv = split.val.size();
    std::vector<double> y_fit(nf), y_val(nv), f_fit(nf, base), f_val(nv, base);
    for (std::size_t k = 0; k < nf; ++k) y_fit[k] = y[split.fit[k]];
    for (std::size_t k = 0; k < nv; ++k) y_val[k] = y[split.val[k]];

    struct Local {
        std::vector<std::uint16_t> fit, val;
        std::vector<double> count;
    };
    std::vector<Local> local(cols.size());
    for (std::size_t c = 0; c < cols.size(); ++c) {
        auto& l = local[c];
        l.fit.resize(nf);
        l.val.resize(nv);
        l.count.assign(cols[c].n_bins, 0.0);
        for (std::size_t k = 0; k < nf; ++k) {
            l.fit[k] = cols[c].codes[split.fit[k]];
            l.count[l.fit[k]] += 1.0;
        }
        for (std::size_t k = 0; k < nv; ++k) l.val[k] = cols[c].codes[split.val[k]];
    }

    MainBagResult r;
    r.shapes.resize(cols.size());
    for (std::size_t c = 0; c < cols.size(); ++c) r.shapes[c].assign(cols[c].n_bins, 0.0);
    auto best_shapes = r.shapes;
    EarlyStopper stopper{cfg.early_stop_patience, nv > 0};
    // For log loss, exp(F) is carried along and updated multiplicatively by exp(delta); it is
    // recomputed exactly once per round to keep rounding drift bounded.
    const bool logistic = task == Task::classification;
    std::vector<double> ef(logistic ? nf : 0), grad(nf), grad_sum, next_sum, exp_delta;
    auto row_gradient = [&](std::size_t k) {
        return logistic ? y_fit[k] - (1.0 - 1.0 / (1.0 + ef[k])) : y_fit[k] - f_fit[k];
    };
    auto refresh = [&] {
        for (std::size_t k = 0; k < nf; ++k) {
            if (logistic) ef[k] = std::exp(f_fit[k]);
            grad[k] = row_gradient(k);
        }
    };

    int round = 0;
    while (round < cfg.max_rounds) {
        ++round;
        refresh();
        grad_sum.assign(cols[0].n_bins, 0.0);
        for (std::size_t k = 0; k < nf; ++k) grad_sum[local[0].fit[k]] += grad[k];
        for (std::size_t c = 0; c < cols.size(); ++c) {
            const auto& l = local[c];
            const auto delta = leaf_deltas(grad_sum, l.count, cfg.max_leaves, cfg.min_samples_leaf, cfg.learning_rate);
            auto& shape = r.shapes[c];
            for (std::size_t b = 0; b < shape.size(); ++b) shape[b] += delta[b];
            if (logistic) {
                exp_delta.resize(delta.size());
                for (std::size_t b = 0; b < delta.size(); ++b) exp_delta[b] = std::exp(delta[b]);
            }
            // Apply the update and accumulate the next feature's gradient histogram in one pass.
            const bool has_next = c + 1 < cols.size();
            const std::uint16_t* next_codes = has_next ? local[c + 1].fit.data() : nullptr;
            next_sum.assign(has_next ? cols[c + 1].n_bins : 0, 0.0);
            for (std::size_t k = 0; k < nf; ++k) {
                const auto b = l.fit[k];
                f_fit[k] += delta[b];
                if (logistic) ef[k] *= exp_delta[b];
                grad[k] = row_gradient(k);
                if (has_next) next_sum[next_codes[k]] += grad[k];
            }
            for (std::size_t k = 0; k < nv; ++k) f_val[k] += delta[l.val[k]];
            std::swap(grad_sum, next_sum);
        }
        r.train_deviance.push_back(mean_deviance(task, y_fit, f_fit));
        if (stopper.improved(mean_deviance(task, y_val, f_val), round)) best_shapes = r.shapes;
        if (stopper.should_stop(round)) {
            r.early_stopped = true;
            break;
        }
    }
    r.shapes = std::move(best_shapes);
    r.rounds = stopper.best_round;
    return r;
}

inline void check_binary_target(const Dataset& d) {
    if (d.task != Task::classification) return;
    for (double v : d.y)
        if (v != 0.0 && v != 1.0) throw DataError("classification target must be coded 0/1");
}

inline double base_score(const Dataset& d) {
    double m = 0.0;
    for (double v : d.y) m += v;
    m /= static_cast<double>(d.rows());
    if (d.task == Task::regression) return m;
    m = std::clamp(m, 1e-12, 1.0 - 1e-12);
    return std::log(m / (1.0 - m));
}

/// Best single cut per axis on a 2D histogram; returns (gain, row cut, col cut) where the gain is
/// sum over the four quadrants of S_q^2 / C_q.
struct QuadrantCut {
    double gain = 0.0;
    std::size_t row_cut = 0;
    std::size_t col_cut = 0;
    std::array<double, 4> sums{};
    std::array<double, 4> counts{};
};

inline QuadrantCut best_quadrant_cut(std::span<const double> sums, std::span<const double> counts, std::size_t nr,
                                     std::size_t nc) {
    // 2D prefix sums with a zero border: P[(r)*(nc+1)+c] = sum over rows < r, cols < c.
    const std::size_t w = nc + 1;
    std::vector<double> ps((nr + 1) * w, 0.0), pc((nr + 1) * w, 0.0);
    for (std::size_t r = 0; r < nr; ++r)
        for (std::size_t c = 0; c < nc; ++c) {
            ps[(r + 1) * w + c + 1] = sums[r * nc + c] + ps[r * w + c + 1] + ps[(r + 1) * w + c] - ps[r * w + c];
            pc[(r + 1) * w + c + 1] = counts[r * nc + c] + pc[r * w + c + 1] + pc[(r + 1) * w + c] - pc[r * w + c];
        }
    const double ts = ps[nr * w + nc], tc = pc[nr * w + nc];
    QuadrantCut best;
    bool found = false;
    for (std::size_t a = 1; a < nr; ++a) {
        for (std::size_t b = 1; b < nc; ++b) {
            const double s00 = ps[a * w + b], c00 = pc[a * w + b];
            const double s01 = ps[a * w + nc] - s00, c01 = pc[a * w + nc] - c00;
            const double s10 = ps[nr * w + b] - s00, c10 = pc[nr * w + b] - c00;
            const double s11 = ts - s00 - s01 - s10, c11 = tc - c00 - c01 - c10;
            const std::array<double, 4> s{s00, s01, s10, s11}, c{c00, c01, c10, c11};
            double gain = 0.0;
            for (int q = 0; q < 4; ++q)
                if (c[q] > 0.0) gain += s[q] * s[q] / c[q];
            if (!found || gain > best.gain) {
                found = true;
                best = {gain, a, b, s, c};
            }
        }
    }
    return best;
}

inline std::vector<int> one_hot_group_of(const Dataset& d) {
    std::vector<int> group(d.cols(), -1);
    for (std::size_t g = 0; g < d.one_hot_groups.size(); ++g)
        for (int c : d.one_hot_groups[g].columns)
            if (c >= 0 && static_cast<std::size_t>(c) < group.size()) group[static_cast<std::size_t>(c)] = static_cast<int>(g);
    return group;
}

}  // namespace detail

/// Ranks feature pairs by how much a 4-quadrant constant fit reduces the residual sum of squares.
/// Indicator columns from the same one-hot source are never paired.
inline std::vector<PairGain> fast_rank_pairs(std::span<const double> residuals, const Dataset& train,
                                             const BoostConfig& cfg) {
    cfg.check();
    if (train.cols() < 2) throw DataError("pair ranking needs at least 2 features");
    if (residuals.size() != train.rows()) throw DataError("residual count does not match dataset rows");

    std::vector<detail::BinnedColumn> cols;
    for (std::size_t j = 0; j < train.cols(); ++j) {
        auto b = detail::bin_column(train, j, cfg.interaction_bins);
        if (!b.degenerate()) cols.push_back(std::move(b));
    }
    const auto group = detail::one_hot_group_of(train);
    std::vector<std::pair<std::size_t, std::size_t>> candidates;
    for (std::size_t a = 0; a < cols.size(); ++a)
        for (std::size_t b = a + 1; b < cols.size(); ++b) {
            const int ga = group[static_cast<std::size_t>(cols[a].feature)];
            if (ga >= 0 && ga == group[static_cast<std::size_t>(cols[b].feature)]) continue;
            candidates.emplace_back(a, b);
        }

    std::vector<PairGain> out(candidates.size());
    parallel_for(candidates.size(), cfg.jobs, [&](std::size_t p) {
        const auto& ca = cols[candidates[p].first];
        const auto& cb = cols[candidates[p].second];
        std::vector<double> sums(ca.n_bins * cb.n_bins, 0.0), counts(sums.size(), 0.0);
        for (std::size_t i = 0; i < residuals.size(); ++i) {
            const std::size_t cell = ca.codes[i] * cb.n_bins + cb.codes[i];
            sums[cell] += residuals[i];
            counts[cell] += 1.0;
        }
        const auto cut = detail::best_quadrant_cut(sums, counts, ca.n_bins, cb.n_bins);
        out[p] = {ca.feature, cb.feature, cut.gain};
    });
    std::sort(out.begin(), out.end(), [](const PairGain& a, const PairGain& b) {
        if (a.gain != b.gain) return a.gain > b.gain;
        if (a.first != b.first) return a.first < b.first;
        return a.second < b.second;
    });
    return out;
}

/// Boosts Grid2D terms for the top `cfg.interactions` entries of `ranked`, on top of `model`.
/// Existing terms are left untouched; new terms are centered on `train`.
inline AdditiveModel fit_pair_terms(const Dataset& train, std::span<const PairGain> ranked, const BoostConfig& cfg,
                                    AdditiveModel model, BoostFitInfo* info = nullptr) {
    cfg.check();
    if (cfg.interactions == 0) return model;
    if (train.rows() == 0) throw DataError("empty training set");
    std::size_t k = static_cast<std::size_t>(cfg.interactions);
    if (k > ranked.size()) {
        const std::string w = "requested " + std::to_string(k) + " interactions, only " +
                              std::to_string(ranked.size()) + " pairs available";
        model.metadata["warning"] = w;
        if (info) info->warnings.push_back(w);
        k = ranked.size();
    }
    if (k == 0) return model;

    struct PairCols {
        detail::BinnedColumn a, b;
    };
    std::vector<PairCols> pairs;
    for (std::size_t p = 0; p < k; ++p)
        pairs.push_back({detail::bin_column(train, static_cast<std::size_t>(ranked[p].first), cfg.interaction_bins),
                         detail::bin_column(train, static_cast<std::size_t>(ranked[p].second), cfg.interaction_bins)});

    const std::size_t n = train.rows();
    std::vector<double> f0(n);
    for (std::size_t i = 0; i < n; ++i) f0[i] = score(model, train.row(i));
    const Task task = train.task;

    using Grids = std::vector<std::vector<double>>;
    std::vector<Grids> bag_grids(static_cast<std::size_t>(cfg.outer_bags));
    std::vector<int> bag_rounds(bag_grids.size(), 0);

    parallel_for(bag_grids.size(), cfg.jobs, [&](std::size_t bag) {
        const auto split = detail::bag_split(n, cfg.validation_fraction, detail::bag_seed(cfg.seed, 1, bag));
        const std::size_t nf = split.fit.size(), nv = split.val.size();
        std::vector<double> y_fit(nf), y_val(nv), f_fit(nf), f_val(nv);
        for (std::size_t j = 0; j < nf; ++j) {
            y_fit[j] = train.y[split.fit[j]];
            f_fit[j] = f0[split.fit[j]];
        }
        for (std::size_t j = 0; j < nv; ++j) {
            y_val[j] = train.y[split.val[j]];
            f_val[j] = f0[split.val[j]];
        }
        std::vector<std::vector<std::uint32_t>> cell_fit(k), cell_val(k);
        std::vector<std::vector<double>> counts(k);
        Grids grids(k), best;
        for (std::size_t p = 0; p < k; ++p) {
            const auto& pc = pairs[p];
            const std::size_t nc = pc.b.n_bins;
            grids[p].assign(pc.a.n_bins * nc, 0.0);
            counts[p].assign(grids[p].size(), 0.0);
            cell_fit[p].resize(nf);
            cell_val[p].resize(nv);
            for (std::size_t j = 0; j < nf; ++j) {
                const auto i = split.fit[j];
                cell_fit[p][j] = static_cast<std::uint32_t>(pc.a.codes[i] * nc + pc.b.codes[i]);
                counts[p][cell_fit[p][j]] += 1.0;
            }
            for (std::size_t j = 0; j < nv; ++j) {
                const auto i = split.val[j];
                cell_val[p][j] = static_cast<std::uint32_t>(pc.a.codes[i] * nc + pc.b.codes[i]);
            }
        }
        best = grids;
        detail::EarlyStopper stopper{cfg.early_stop_patience, nv > 0};
        std::vector<double> sums, delta;
        for (int round = 1; round <= cfg.max_rounds; ++round) {
            for (std::size_t p = 0; p < k; ++p) {
                const std::size_t nr = pairs[p].a.n_bins, nc = pairs[p].b.n_bins;
                sums.assign(nr * nc, 0.0);
                for (std::size_t j = 0; j < nf; ++j) sums[cell_fit[p][j]] += detail::gradient(task, y_fit[j], f_fit[j]);
                const auto cut = detail::best_quadrant_cut(sums, counts[p], nr, nc);
                delta.assign(nr * nc, 0.0);
                for (std::size_t r = 0; r < nr; ++r)
                    for (std::size_t c = 0; c < nc; ++c) {
                        const int q = (r < cut.row_cut ? 0 : 2) + (c < cut.col_cut ? 0 : 1);
                        const double cq = cut.counts[static_cast<std::size_t>(q)];
                        delta[r * nc + c] = cq > 0.0 ? cfg.learning_rate * cut.sums[static_cast<std::size_t>(q)] / cq : 0.0;
                    }
                for (std::size_t cell = 0; cell < delta.size(); ++cell) grids[p][cell] += delta[cell];
                for (std::size_t j = 0; j < nf; ++j) f_fit[j] += delta[cell_fit[p][j]];
                for (std::size_t j = 0; j < nv; ++j) f_val[j] += delta[cell_val[p][j]];
            }
            if (stopper.improved(detail::mean_deviance(task, y_val, f_val), round)) best = grids;
            if (stopper.should_stop(round)) break;
        }
        bag_grids[bag] = std::move(best);
        bag_rounds[bag] = stopper.best_round;
    });

    std::vector<std::string> names;
    for (std::size_t p = 0; p < k; ++p) {
        Grid2D g;
        g.row_thresholds = pairs[p].a.cut_points();
        g.col_thresholds = pairs[p].b.cut_points();
        g.values.assign(pairs[p].a.n_bins * pairs[p].b.n_bins, 0.0);
        for (const auto& grids : bag_grids)
            for (std::size_t c = 0; c < g.values.size(); ++c) g.values[c] += grids[p][c];
        for (double& v : g.values) v /= static_cast<double>(bag_grids.size());

        Term term{{ranked[p].first, ranked[p].second}, std::move(g)};
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += term_contribution(term, train.row(i));
        mean /= static_cast<double>(n);
        shift_shape(term.shape, -mean);
        model.intercept += mean;
        model.terms.push_back(std::move(term));
        names.push_back(term_name(model, model.terms.size() - 1));
    }
    std::string joined;
    for (const auto& s : names) joined += (joined.empty() ? "" : "; ") + s;
    model.metadata["pairs"] = joined;
    if (info) info->pair_rounds = bag_rounds;
    return model;
}

/// Cyclic histogram boosting of one piecewise-constant shape per feature, averaged over bags,
/// followed by the pairwise interaction stage when cfg.interactions > 0.
inline AdditiveModel fit_ebm(const Dataset& train, const BoostConfig& cfg, BoostFitInfo* info_out = nullptr) {
    cfg.check();
    if (train.rows() < 2) throw DataError("training set needs at least 2 rows");
    detail::check_binary_target(train);
    BoostFitInfo info;

    AdditiveModel model;
    model.schema = train.schema;
    model.task = train.task;
    model.link = Link::for_task(train.task);
    model.metadata["backend"] = "ebm";
    const double base = detail::base_score(train);
    model.intercept = base;

    std::vector<detail::BinnedColumn> cols;
    for (std::size_t j = 0; j < train.cols(); ++j) {
        auto b = detail::bin_column(train, j, cfg.max_bins);
        if (b.degenerate()) info.skipped_features.push_back(train.schema.features[j].name);
        else cols.push_back(std::move(b));
    }
    if (cols.empty()) {
        const std::string w = "all features are degenerate; intercept-only model";
        model.metadata["warning"] = w;
        info.warnings.push_back(w);
        if (info_out) *info_out = std::move(info);
        return model;
    }

    std::vector<detail::MainBagResult> bags(static_cast<std::size_t>(cfg.outer_bags));
    parallel_for(bags.size(), cfg.jobs, [&](std::size_t bag) {
        const auto split = detail::bag_split(train.rows(), cfg.validation_fraction, detail::bag_seed(cfg.seed, 0, bag));
        bags[bag] = detail::boost_main_bag(cols, train.y, train.task, base, split, cfg);
    });

    for (std::size_t c = 0; c < cols.size(); ++c) {
        std::vector<double> values(cols[c].n_bins, 0.0);
        for (const auto& b : bags)
            for (std::size_t k = 0; k < values.size(); ++k) values[k] += b.shapes[c][k];
        for (double& v : values) v /= static_cast<double>(bags.size());
        const auto& feat = train.schema.features[static_cast<std::size_t>(cols[c].feature)];
        if (cols[c].categorical) {
            CategoricalTable t;
            t.levels = feat.levels;
            t.values = std::move(values);
            model.terms.push_back({{cols[c].feature}, std::move(t)});
        } else {
            model.terms.push_back({{cols[c].feature}, BinnedStep1D{cols[c].thresholds, std::move(values)}});
        }
    }
    for (const auto& b : bags) {
        info.rounds.push_back(b.rounds);
        info.early_stopped.push_back(b.early_stopped);
    }
    info.train_deviance = bags.front().train_deviance;
    model = center_terms(std::move(model), train);

    std::string rounds;
    for (int r : info.rounds) rounds += (rounds.empty() ? "" : ",") + std::to_string(r);
    model.metadata["rounds"] = rounds;
    if (!info.skipped_features.empty()) {
        std::string s;
        for (const auto& f : info.skipped_features) s += (s.empty() ? "" : ", ") + f;
        model.metadata["skipped_features"] = s;
    }

    if (cfg.interactions > 0 && train.cols() >= 2) {
        std::vector<double> residuals(train.rows());
        for (std::size_t i = 0; i < train.rows(); ++i)
            residuals[i] = detail::gradient(train.task, train.y[i], score(model, train.row(i)));
        info.ranked_pairs = fast_rank_pairs(residuals, train, cfg);
        model = fit_pair_terms(train, info.ranked_pairs, cfg, std::move(model), &info);
    }
    if (info_out) *info_out = std::move(info);
    return model;
}

}  // namespace glassbox
