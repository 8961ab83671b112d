#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "glassbox/csv.hpp"
#include "glassbox/dataset.hpp"
#include "glassbox/error.hpp"

namespace glassbox {

// ---------------------------------------------------------------------------
// Raw data
// ---------------------------------------------------------------------------

/// A loaded column before preprocessing. Missing cells are empty strings.
struct RawColumn {
    std::string name;
    FeatureKind kind = FeatureKind::numeric;
    std::vector<std::string> cells;
    std::string source_column;  // set for indicator columns (see FeatureInfo)
    std::string source_level;
};

struct RawDataset {
    std::vector<RawColumn> columns;
    std::vector<double> y;
    Task task = Task::regression;
    std::string target_name;

    std::size_t rows() const { return y.size(); }
};

struct LoadOptions {
    std::string target;
    Task task = Task::regression;
    std::optional<std::string> positive_label;
    bool has_header = true;
    std::vector<std::string> column_names;  // overrides/provides the header
};

inline bool is_missing_token(std::string_view cell) {
    cell = csv::trim(cell);
    return cell.empty() || cell == "?" || cell == "NA" || cell == "N/A" || cell == "NaN" ||
           cell == "nan" || cell == "null" || cell == "NULL";
}

/// Builds a raw dataset from an in-memory table. Rows with a missing target are dropped.
inline RawDataset raw_from_table(const csv::Table& table, const LoadOptions& opt) {
    const int target = table.column_index(opt.target);
    if (target < 0) throw DataError("target column '" + opt.target + "' not found");
    const auto t = static_cast<std::size_t>(target);

    std::vector<std::size_t> keep;
    for (std::size_t r = 0; r < table.rows.size(); ++r)
        if (!is_missing_token(table.rows[r][t])) keep.push_back(r);

    RawDataset raw;
    raw.task = opt.task;
    raw.target_name = opt.target;

    if (opt.task == Task::classification) {
        std::set<std::string> distinct;
        for (std::size_t r : keep) distinct.insert(std::string(csv::trim(table.rows[r][t])));
        if (distinct.size() != 2)
            throw DataError("classification target '" + opt.target + "' has " +
                            std::to_string(distinct.size()) + " distinct values, expected 2");
        std::string positive;
        if (opt.positive_label) {
            positive = *opt.positive_label;
            if (!distinct.count(positive))
                throw DataError("positive label '" + positive + "' does not occur in target");
        } else {
            const auto a = csv::parse_number(*distinct.begin());
            const auto b = csv::parse_number(*distinct.rbegin());
            if (a && b) positive = *a > *b ? *distinct.begin() : *distinct.rbegin();
            else positive = *distinct.rbegin();
        }
        for (std::size_t r : keep) raw.y.push_back(csv::trim(table.rows[r][t]) == positive ? 1.0 : 0.0);
    } else {
        for (std::size_t r : keep) {
            const auto v = csv::parse_number(table.rows[r][t]);
            if (!v) throw DataError("regression target value '" + table.rows[r][t] + "' is not numeric");
            raw.y.push_back(*v);
        }
    }

    for (std::size_t c = 0; c < table.header.size(); ++c) {
        if (c == t) continue;
        RawColumn col;
        col.name = table.header[c];
        col.cells.reserve(keep.size());
        bool numeric = true;
        for (std::size_t r : keep) {
            const std::string& cell = table.rows[r][c];
            if (is_missing_token(cell)) {
                col.cells.emplace_back();
                continue;
            }
            col.cells.emplace_back(csv::trim(cell));
            if (numeric && !csv::parse_number(cell)) numeric = false;
        }
        col.kind = numeric ? FeatureKind::numeric : FeatureKind::categorical;
        raw.columns.push_back(std::move(col));
    }
    return raw;
}

/// Loads a CSV file; column kinds are inferred (numeric when every present cell parses).
inline RawDataset load_csv(const std::string& path, const LoadOptions& opt) {
    return raw_from_table(csv::read_table(path, opt.has_header, opt.column_names), opt);
}

// ---------------------------------------------------------------------------
// Preprocessing
// ---------------------------------------------------------------------------

enum class MissingPolicy { drop_row, impute };

struct PreprocessPolicy {
    std::vector<std::string> drop_columns;
    MissingPolicy missing = MissingPolicy::drop_row;
    int categorical_max_levels = 25;
    bool one_hot = true;
};

namespace detail {

inline double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
        m = 0.5 * (m + lo);
    }
    return m;
}

inline bool already_indicator(const RawColumn& c, const std::vector<std::string>& levels) {
    return c.kind == FeatureKind::categorical && !c.source_column.empty() && levels.size() <= 2 &&
           std::all_of(levels.begin(), levels.end(), [](const std::string& l) { return l == "0" || l == "1"; });
}

}  // namespace detail

/// Applies column dropping, missing-value handling, the categorical level cap and one-hot
/// encoding, and returns the model-ready dataset.
inline Dataset preprocess(const RawDataset& raw, const PreprocessPolicy& policy) {
    if (policy.categorical_max_levels < 1) throw ConfigError("categorical_max_levels must be >= 1");

    std::vector<const RawColumn*> cols;
    for (const auto& c : raw.columns)
        if (std::find(policy.drop_columns.begin(), policy.drop_columns.end(), c.name) == policy.drop_columns.end())
            cols.push_back(&c);

    const std::size_t n_raw = raw.rows();
    std::vector<std::size_t> rows;
    if (policy.missing == MissingPolicy::drop_row) {
        for (std::size_t r = 0; r < n_raw; ++r) {
            bool complete = true;
            for (const auto* c : cols)
                if (c->cells[r].empty()) { complete = false; break; }
            if (complete) rows.push_back(r);
        }
    } else {
        rows.resize(n_raw);
        std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    if (rows.empty()) throw DataError("preprocessing removed every row");

    struct Built {
        FeatureInfo info;
        std::vector<double> values;
    };
    std::vector<Built> built;
    std::vector<OneHotGroup> groups;

    for (const auto* c : cols) {
        if (c->kind == FeatureKind::numeric) {
            std::vector<double> present;
            for (std::size_t r : rows)
                if (!c->cells[r].empty()) present.push_back(*csv::parse_number(c->cells[r]));
            if (present.empty()) continue;
            Built b;
            b.info.name = c->name;
            b.info.kind = FeatureKind::numeric;
            b.info.fill = detail::median_of(present);
            b.values.reserve(rows.size());
            for (std::size_t r : rows)
                b.values.push_back(c->cells[r].empty() ? b.info.fill : *csv::parse_number(c->cells[r]));
            built.push_back(std::move(b));
            continue;
        }

        std::map<std::string, std::size_t> counts;
        for (std::size_t r : rows)
            if (!c->cells[r].empty()) ++counts[c->cells[r]];
        if (counts.empty() || counts.size() > static_cast<std::size_t>(policy.categorical_max_levels))
            continue;
        std::vector<std::string> levels;
        std::string mode;
        std::size_t mode_count = 0;
        for (const auto& [level, n] : counts) {
            levels.push_back(level);
            if (n > mode_count) { mode = level; mode_count = n; }
        }
        auto index_of = [&](const std::string& cell) {
            const std::string& v = cell.empty() ? mode : cell;
            return static_cast<double>(std::lower_bound(levels.begin(), levels.end(), v) - levels.begin());
        };

        if (!policy.one_hot || detail::already_indicator(*c, levels)) {
            Built b;
            b.info.name = c->name;
            b.info.kind = FeatureKind::categorical;
            b.info.levels = levels;
            b.info.source_column = c->source_column;
            b.info.source_level = c->source_level;
            if (b.info.is_indicator()) b.info.levels = {"0", "1"};
            b.info.fill = b.info.is_indicator() ? (mode == "1" ? 1.0 : 0.0) : index_of(mode);
            for (std::size_t r : rows) {
                if (b.info.is_indicator()) {
                    const std::string& v = c->cells[r].empty() ? mode : c->cells[r];
                    b.values.push_back(v == "1" ? 1.0 : 0.0);
                } else {
                    b.values.push_back(index_of(c->cells[r]));
                }
            }
            built.push_back(std::move(b));
            continue;
        }

        OneHotGroup g;
        g.source = c->name;
        g.levels = levels;
        for (const auto& level : levels) {
            Built b;
            b.info.name = c->name + "=" + level;
            b.info.kind = FeatureKind::categorical;
            b.info.levels = {"0", "1"};
            b.info.source_column = c->name;
            b.info.source_level = level;
            b.info.fill = level == mode ? 1.0 : 0.0;
            for (std::size_t r : rows) {
                const std::string& v = c->cells[r].empty() ? mode : c->cells[r];
                b.values.push_back(v == level ? 1.0 : 0.0);
            }
            g.columns.push_back(static_cast<int>(built.size()));
            built.push_back(std::move(b));
        }
        groups.push_back(std::move(g));
    }
    if (built.empty()) throw DataError("preprocessing left zero features");

    // Indicator columns that came in already expanded are regrouped by their source.
    for (std::size_t j = 0; j < built.size(); ++j) {
        const auto& info = built[j].info;
        if (!info.is_indicator()) continue;
        auto it = std::find_if(groups.begin(), groups.end(),
                               [&](const OneHotGroup& g) { return g.source == info.source_column; });
        if (it == groups.end()) {
            groups.push_back({info.source_column, {}, {}});
            it = std::prev(groups.end());
        }
        if (std::find(it->columns.begin(), it->columns.end(), static_cast<int>(j)) == it->columns.end()) {
            it->levels.push_back(info.source_level);
            it->columns.push_back(static_cast<int>(j));
        }
    }

    Dataset d;
    d.task = raw.task;
    d.target_name = raw.target_name;
    d.one_hot_groups = std::move(groups);
    for (const auto& b : built) d.schema.features.push_back(b.info);
    const std::size_t n = built.size();
    d.x.resize(rows.size() * n);
    d.y.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < n; ++j) d.x[i * n + j] = built[j].values[i];
        d.y.push_back(raw.y[rows[i]]);
    }
    return d;
}

/// Raw view of a preprocessed dataset (kinds and indicator provenance retained).
inline RawDataset to_raw(const Dataset& d) {
    RawDataset raw;
    raw.task = d.task;
    raw.target_name = d.target_name;
    raw.y = d.y;
    for (std::size_t j = 0; j < d.cols(); ++j) {
        const auto& f = d.schema.features[j];
        RawColumn c;
        c.name = f.name;
        c.kind = f.kind;
        c.source_column = f.source_column;
        c.source_level = f.source_level;
        for (std::size_t i = 0; i < d.rows(); ++i) {
            const double v = d.at(i, j);
            if (f.kind == FeatureKind::numeric) c.cells.push_back(csv::format_number(v));
            else c.cells.push_back(f.levels.at(static_cast<std::size_t>(v)));
        }
        raw.columns.push_back(std::move(c));
    }
    return raw;
}

/// Converts CSV rows into model rows following `schema`: indicator columns are recomputed from
/// their source column, unseen categorical levels become -1, missing cells take the stored fill.
inline std::vector<double> encode_rows(const Schema& schema, const csv::Table& table) {
    std::vector<int> source(schema.size());
    for (std::size_t j = 0; j < schema.size(); ++j) {
        const auto& f = schema.features[j];
        const std::string& col = f.is_indicator() ? f.source_column : f.name;
        source[j] = table.column_index(col);
        if (source[j] < 0) throw DataError("schema mismatch: input has no column '" + col + "'");
    }
    std::vector<double> out;
    out.reserve(table.rows.size() * schema.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        for (std::size_t j = 0; j < schema.size(); ++j) {
            const auto& f = schema.features[j];
            const std::string& cell = table.rows[r][static_cast<std::size_t>(source[j])];
            if (is_missing_token(cell)) {
                out.push_back(f.fill);
            } else if (f.is_indicator()) {
                out.push_back(csv::trim(cell) == f.source_level ? 1.0 : 0.0);
            } else if (f.kind == FeatureKind::categorical) {
                out.push_back(static_cast<double>(f.level_index(csv::trim(cell))));
            } else {
                const auto v = csv::parse_number(cell);
                if (!v)
                    throw DataError("schema mismatch: row " + std::to_string(r + 1) + " column '" +
                                    f.name + "' is not numeric ('" + cell + "')");
                out.push_back(*v);
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Binning and folds
// ---------------------------------------------------------------------------

/// Cut points at the linear-interpolation empirical quantiles i/max_bins (i = 1..max_bins-1),
/// deduplicated and strictly above the minimum, so every bin is non-empty on `values`.
inline std::vector<double> quantile_bins(std::span<const double> values, int max_bins) {
    if (values.empty()) throw DataError("quantile_bins: empty input");
    if (max_bins < 2) throw ConfigError("quantile_bins: max_bins must be >= 2");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double lo = sorted.front();
    const double n1 = static_cast<double>(sorted.size() - 1);
    std::vector<double> out;
    for (int i = 1; i < max_bins; ++i) {
        const double pos = n1 * static_cast<double>(i) / static_cast<double>(max_bins);
        const auto k = static_cast<std::size_t>(std::floor(pos));
        const double frac = pos - static_cast<double>(k);
        double q = sorted[k];
        if (k + 1 < sorted.size() && frac > 0.0) q += frac * (sorted[k + 1] - sorted[k]);
        if (q > lo && (out.empty() || q > out.back())) out.push_back(q);
    }
    return out;
}

struct FoldPlan {
    int k = 5;
    std::uint64_t seed = 0;
    std::vector<int> assignments;  // row -> fold

    std::vector<std::size_t> test_rows(int fold) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < assignments.size(); ++i)
            if (assignments[i] == fold) out.push_back(i);
        return out;
    }
    std::vector<std::size_t> train_rows(int fold) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < assignments.size(); ++i)
            if (assignments[i] != fold) out.push_back(i);
        return out;
    }
};

/// Deterministic permutation of 0..n-1 (Fisher-Yates on a 64-bit Mersenne Twister).
inline std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng() % i);
        std::swap(perm[i - 1], perm[j]);
    }
    return perm;
}

/// Shuffles rows by `seed`, then slices contiguously; the first N mod k folds get one extra row.
inline FoldPlan kfold_split(std::size_t n, int k, std::uint64_t seed) {
    if (k < 2) throw ConfigError("kfold_split: k must be >= 2");
    if (n < static_cast<std::size_t>(k))
        throw DataError("kfold_split: " + std::to_string(n) + " rows cannot fill " + std::to_string(k) + " folds");
    FoldPlan plan{k, seed, std::vector<int>(n, 0)};
    const auto perm = seeded_permutation(n, seed);
    const std::size_t base = n / static_cast<std::size_t>(k);
    const std::size_t extra = n % static_cast<std::size_t>(k);
    std::size_t pos = 0;
    for (int f = 0; f < k; ++f) {
        const std::size_t size = base + (static_cast<std::size_t>(f) < extra ? 1 : 0);
        for (std::size_t i = 0; i < size; ++i) plan.assignments[perm[pos++]] = f;
    }
    return plan;
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

struct DatasetEntry {
    std::string name;
    std::string path;  // resolved against the manifest directory
    LoadOptions load;
    PreprocessPolicy policy;
};

struct Manifest {
    std::vector<DatasetEntry> datasets;
};

inline Manifest parse_manifest(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    Manifest m;
    try {
        for (const auto& jd : j.at("datasets")) {
            DatasetEntry e;
            e.name = jd.at("name").get<std::string>();
            std::filesystem::path p = jd.at("path").get<std::string>();
            e.path = (p.is_absolute() ? p : base_dir / p).string();
            e.load.target = jd.at("target").get<std::string>();
            e.load.task = task_from_string(jd.at("task").get<std::string>());
            if (jd.contains("positive_label")) e.load.positive_label = jd["positive_label"].get<std::string>();
            e.load.has_header = jd.value("header", true);
            e.load.column_names = jd.value("columns", std::vector<std::string>{});
            e.policy.drop_columns = jd.value("drop_columns", std::vector<std::string>{});
            const auto missing = jd.value("missing", std::string("drop-row"));
            if (missing == "drop-row") e.policy.missing = MissingPolicy::drop_row;
            else if (missing == "impute") e.policy.missing = MissingPolicy::impute;
            else throw ConfigError("dataset '" + e.name + "': unknown missing policy '" + missing + "'");
            e.policy.categorical_max_levels = jd.value("categorical_max_levels", 25);
            e.policy.one_hot = jd.value("one_hot", true);
            m.datasets.push_back(std::move(e));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed manifest: ") + e.what());
    }
    return m;
}

inline Manifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read manifest '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("manifest '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_manifest(j, std::filesystem::path(path).parent_path());
}

inline Dataset load_dataset(const DatasetEntry& e) {
    return preprocess(load_csv(e.path, e.load), e.policy);
}

}  // namespace glassbox
