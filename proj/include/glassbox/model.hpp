#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "glassbox/dataset.hpp"
#include "glassbox/error.hpp"

namespace glassbox {

// ---------------------------------------------------------------------------
// Link
// ---------------------------------------------------------------------------

enum class LinkKind { identity, logistic };

inline double sigmoid(double s) {
    if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
    const double e = std::exp(s);
    return e / (1.0 + e);
}

struct Link {
    LinkKind kind = LinkKind::identity;

    /// Maps the additive score back to the response scale.
    double inverse(double s) const { return kind == LinkKind::identity ? s : sigmoid(s); }

    static Link for_task(Task t) {
        return {t == Task::classification ? LinkKind::logistic : LinkKind::identity};
    }
};

inline std::string_view to_string(LinkKind k) {
    return k == LinkKind::identity ? "identity" : "logistic";
}

// ---------------------------------------------------------------------------
// Shape functions
// ---------------------------------------------------------------------------

/// Piecewise-constant shape on right-open bins [t_{k-1}, t_k).
struct BinnedStep1D {
    std::vector<double> thresholds;
    std::vector<double> values;  // thresholds.size() + 1

    std::size_t bin(double x) const {
        return static_cast<std::size_t>(
            std::upper_bound(thresholds.begin(), thresholds.end(), x) - thresholds.begin());
    }
};

/// B-spline curve on a clamped knot vector. Inputs outside [knots[degree], knots[m-degree-1]]
/// are clamped to that range.
struct SplineCurve1D {
    std::vector<double> knots;
    int degree = 3;
    std::vector<double> coefficients;  // knots.size() - degree - 1
};

/// Linear interpolation through (grid, values), constant beyond the ends.
struct Sampled1D {
    std::vector<double> grid;
    std::vector<double> values;
};

/// Contribution per level; cells hold the level index, anything else maps to `default_value`.
struct CategoricalTable {
    std::vector<std::string> levels;
    std::vector<double> values;
    double default_value = 0.0;
};

/// Piecewise-constant surface over a (rows+1) x (cols+1) grid of right-open cells.
struct Grid2D {
    std::vector<double> row_thresholds;
    std::vector<double> col_thresholds;
    std::vector<double> values;  // row-major

    std::size_t n_rows() const { return row_thresholds.size() + 1; }
    std::size_t n_cols() const { return col_thresholds.size() + 1; }
    double at(std::size_t r, std::size_t c) const { return values[r * n_cols() + c]; }
    double& at(std::size_t r, std::size_t c) { return values[r * n_cols() + c]; }

    std::size_t row_of(double x) const {
        return static_cast<std::size_t>(
            std::upper_bound(row_thresholds.begin(), row_thresholds.end(), x) -
            row_thresholds.begin());
    }
    std::size_t col_of(double x) const {
        return static_cast<std::size_t>(
            std::upper_bound(col_thresholds.begin(), col_thresholds.end(), x) -
            col_thresholds.begin());
    }
};

using ShapeFunction = std::variant<BinnedStep1D, SplineCurve1D, Sampled1D, CategoricalTable, Grid2D>;

inline bool is_2d(const ShapeFunction& s) { return std::holds_alternative<Grid2D>(s); }

inline std::string_view variant_name(const ShapeFunction& s) {
    static constexpr std::string_view names[] = {"binned_step", "spline_curve", "sampled",
                                                 "categorical_table", "grid2d"};
    return names[s.index()];
}

namespace bspline {

inline constexpr int kMaxDegree = 7;

/// Index `span` such that knots[span] <= x < knots[span+1], restricted to the valid range
/// [degree, n_coef-1]; the right boundary belongs to the last non-empty span.
inline std::size_t find_span(std::span<const double> knots, int degree, double x) {
    const std::size_t p = static_cast<std::size_t>(degree);
    const std::size_t n = knots.size() - p - 1;  // number of basis functions
    if (x >= knots[n]) {
        std::size_t s = n - 1;
        while (s > p && knots[s] == knots[s + 1]) --s;
        return s;
    }
    if (x <= knots[p]) {
        std::size_t s = p;
        while (s + 1 < n && knots[s] == knots[s + 1]) ++s;
        return s;
    }
    auto it = std::upper_bound(knots.begin() + static_cast<std::ptrdiff_t>(p),
                               knots.begin() + static_cast<std::ptrdiff_t>(n) + 1, x);
    return static_cast<std::size_t>(it - knots.begin()) - 1;
}

/// The degree+1 non-zero basis values at x, for basis functions span-degree .. span
/// (triangular Cox-de Boor scheme). `out` must have size degree+1.
inline void basis_funs(std::span<const double> knots, int degree, std::size_t span, double x,
                       std::span<double> out) {
    const std::size_t p = static_cast<std::size_t>(degree);
    std::array<double, kMaxDegree + 1> left{}, right{};
    out[0] = 1.0;
    for (std::size_t j = 1; j <= p; ++j) {
        left[j] = x - knots[span + 1 - j];
        right[j] = knots[span + j] - x;
        double saved = 0.0;
        for (std::size_t r = 0; r < j; ++r) {
            const double denom = right[r + 1] + left[j - r];
            const double temp = denom != 0.0 ? out[r] / denom : 0.0;
            out[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        out[j] = saved;
    }
}

inline double clamp_to_domain(std::span<const double> knots, int degree, double x) {
    const std::size_t p = static_cast<std::size_t>(degree);
    const double lo = knots[p];
    const double hi = knots[knots.size() - p - 1];
    return std::clamp(x, lo, hi);
}

}  // namespace bspline

namespace detail {

inline double eval_spline(const SplineCurve1D& s, double x) {
    const std::span<const double> k(s.knots);
    x = bspline::clamp_to_domain(k, s.degree, x);
    const std::size_t span = bspline::find_span(k, s.degree, x);
    std::array<double, bspline::kMaxDegree + 1> b{};
    const std::size_t nb = static_cast<std::size_t>(s.degree) + 1;
    bspline::basis_funs(k, s.degree, span, x, std::span<double>(b.data(), nb));
    double acc = 0.0;
    const std::size_t first = span - static_cast<std::size_t>(s.degree);
    for (std::size_t i = 0; i < nb; ++i) acc += b[i] * s.coefficients[first + i];
    return acc;
}

inline double eval_sampled(const Sampled1D& s, double x) {
    const auto& g = s.grid;
    if (g.empty()) return 0.0;
    if (x <= g.front()) return s.values.front();
    if (x >= g.back()) return s.values.back();
    const std::size_t hi =
        static_cast<std::size_t>(std::upper_bound(g.begin(), g.end(), x) - g.begin());
    const std::size_t lo = hi - 1;
    const double t = (x - g[lo]) / (g[hi] - g[lo]);
    return s.values[lo] + t * (s.values[hi] - s.values[lo]);
}

inline double eval_table(const CategoricalTable& s, double x) {
    if (!(x >= 0.0) || x != std::floor(x)) return s.default_value;
    const auto idx = static_cast<std::size_t>(x);
    return idx < s.values.size() ? s.values[idx] : s.default_value;
}

}  // namespace detail

/// Contribution of a univariate shape at x.
inline double evaluate_shape(const ShapeFunction& shape, double x) {
    return std::visit(
        [x](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, BinnedStep1D>) {
                return s.values[s.bin(x)];
            } else if constexpr (std::is_same_v<T, SplineCurve1D>) {
                return detail::eval_spline(s, x);
            } else if constexpr (std::is_same_v<T, Sampled1D>) {
                return detail::eval_sampled(s, x);
            } else if constexpr (std::is_same_v<T, CategoricalTable>) {
                return detail::eval_table(s, x);
            } else {
                throw DataError("arity mismatch: 2D shape evaluated with one value");
            }
        },
        shape);
}

/// Contribution of a categorical shape for a level given by name; unseen levels map to default.
inline double evaluate_shape(const ShapeFunction& shape, std::string_view level) {
    const auto* t = std::get_if<CategoricalTable>(&shape);
    if (t == nullptr) throw DataError("string level passed to a non-categorical shape");
    for (std::size_t i = 0; i < t->levels.size(); ++i)
        if (t->levels[i] == level) return t->values[i];
    return t->default_value;
}

/// Contribution of a bivariate shape at (x1, x2).
inline double evaluate_shape(const ShapeFunction& shape, double x1, double x2) {
    const auto* g = std::get_if<Grid2D>(&shape);
    if (g == nullptr) throw DataError("arity mismatch: 1D shape evaluated with two values");
    return g->at(g->row_of(x1), g->col_of(x2));
}

/// Adds `delta` to every output of the shape.
inline void shift_shape(ShapeFunction& shape, double delta) {
    std::visit(
        [delta](auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, SplineCurve1D>) {
                for (double& c : s.coefficients) c += delta;
            } else {
                // Categorical default stays at the centered zero.
                for (double& v : s.values) v += delta;
            }
        },
        shape);
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

struct Term {
    std::vector<int> features;  // one or two feature indices
    ShapeFunction shape;

    bool is_pair() const { return features.size() == 2; }
};

struct TargetScaling {
    double mean = 0.0;
    double std = 1.0;
};

struct AdditiveModel {
    double intercept = 0.0;
    std::vector<Term> terms;
    Link link;
    Schema schema;
    Task task = Task::regression;
    std::optional<TargetScaling> target_scaling;
    std::map<std::string, std::string> metadata;
};

struct Decomposition {
    double intercept = 0.0;
    std::vector<std::pair<std::size_t, double>> contributions;  // (term id, value)
    double score = 0.0;
};

struct TermImportance {
    std::size_t term = 0;
    double importance = 0.0;
};

inline std::string term_name(const AdditiveModel& m, std::size_t t) {
    const auto& f = m.terms.at(t).features;
    std::string name = m.schema.features.at(static_cast<std::size_t>(f[0])).name;
    if (f.size() == 2) name += " x " + m.schema.features.at(static_cast<std::size_t>(f[1])).name;
    return name;
}

inline double term_contribution(const Term& term, std::span<const double> row) {
    if (term.features.size() == 1)
        return evaluate_shape(term.shape, row[static_cast<std::size_t>(term.features[0])]);
    return evaluate_shape(term.shape, row[static_cast<std::size_t>(term.features[0])],
                          row[static_cast<std::size_t>(term.features[1])]);
}

namespace detail {
inline void check_row(const AdditiveModel& m, std::span<const double> row) {
    if (row.size() != m.schema.size())
        throw DataError("schema mismatch: row has " + std::to_string(row.size()) +
                        " values, model expects " + std::to_string(m.schema.size()));
}

inline bool strictly_ascending(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i - 1] < v[i])) return false;
    return true;
}
}  // namespace detail

/// Additive (link-scale) score: intercept plus every term's contribution.
inline double score(const AdditiveModel& m, std::span<const double> row) {
    detail::check_row(m, row);
    double s = m.intercept;
    for (const auto& t : m.terms) s += term_contribution(t, row);
    return s;
}

/// Response-scale prediction: probability for logistic link, original units for regression.
inline double predict(const AdditiveModel& m, std::span<const double> row) {
    double v = m.link.inverse(score(m, row));
    if (m.target_scaling) v = v * m.target_scaling->std + m.target_scaling->mean;
    return v;
}

inline Decomposition decompose(const AdditiveModel& m, std::span<const double> row) {
    detail::check_row(m, row);
    Decomposition d;
    d.intercept = m.intercept;
    d.score = m.intercept;
    d.contributions.reserve(m.terms.size());
    for (std::size_t t = 0; t < m.terms.size(); ++t) {
        const double c = term_contribution(m.terms[t], row);
        d.contributions.emplace_back(t, c);
        d.score += c;
    }
    return d;
}

namespace detail {
inline void check_data(const AdditiveModel& m, const Dataset& data) {
    if (data.rows() == 0) throw DataError("empty dataset");
    if (data.cols() != m.schema.size())
        throw DataError("schema mismatch: dataset has " + std::to_string(data.cols()) +
                        " features, model expects " + std::to_string(m.schema.size()));
}
}  // namespace detail

/// Mean absolute contribution of each term over `data`, sorted descending (ties by term id).
inline std::vector<TermImportance> feature_importance(const AdditiveModel& m, const Dataset& data) {
    detail::check_data(m, data);
    std::vector<TermImportance> out(m.terms.size());
    for (std::size_t t = 0; t < m.terms.size(); ++t) {
        double acc = 0.0;
        for (std::size_t i = 0; i < data.rows(); ++i)
            acc += std::abs(term_contribution(m.terms[t], data.row(i)));
        out[t] = {t, acc / static_cast<double>(data.rows())};
    }
    std::stable_sort(out.begin(), out.end(), [](const TermImportance& a, const TermImportance& b) {
        return a.importance > b.importance;
    });
    return out;
}

/// Shifts every term to zero mean over `train`, folding the offsets into the intercept.
inline AdditiveModel center_terms(AdditiveModel m, const Dataset& train) {
    detail::check_data(m, train);
    for (auto& term : m.terms) {
        double acc = 0.0;
        for (std::size_t i = 0; i < train.rows(); ++i) acc += term_contribution(term, train.row(i));
        const double mean = acc / static_cast<double>(train.rows());
        shift_shape(term.shape, -mean);
        m.intercept += mean;
    }
    return m;
}

/// Checks the structural invariants of a model; throws DataError on the first violation.
inline void validate(const AdditiveModel& m) {
    std::set<int> main_effects;
    const int n = static_cast<int>(m.schema.size());
    for (std::size_t t = 0; t < m.terms.size(); ++t) {
        const auto& term = m.terms[t];
        const std::string where = "term " + std::to_string(t) + ": ";
        if (term.features.empty() || term.features.size() > 2)
            throw DataError(where + "a term has one or two features");
        for (int f : term.features)
            if (f < 0 || f >= n) throw DataError(where + "feature index out of range");
        if (term.features.size() == 2) {
            if (term.features[0] == term.features[1])
                throw DataError(where + "pairwise term indices must differ");
            if (!is_2d(term.shape)) throw DataError(where + "pairwise term needs a 2D shape");
        } else {
            if (is_2d(term.shape)) throw DataError(where + "main effect needs a 1D shape");
            if (!main_effects.insert(term.features[0]).second)
                throw DataError(where + "feature has more than one main-effect term");
        }
        std::visit(
            [&](const auto& s) {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, BinnedStep1D>) {
                    if (!detail::strictly_ascending(s.thresholds) ||
                        s.values.size() != s.thresholds.size() + 1)
                        throw DataError(where + "malformed binned step shape");
                } else if constexpr (std::is_same_v<T, SplineCurve1D>) {
                    if (s.degree < 0 || s.degree > bspline::kMaxDegree || s.knots.size() < static_cast<std::size_t>(2 * s.degree + 2) ||
                        !std::is_sorted(s.knots.begin(), s.knots.end()) ||
                        s.coefficients.size() + static_cast<std::size_t>(s.degree) + 1 != s.knots.size())
                        throw DataError(where + "malformed spline shape");
                } else if constexpr (std::is_same_v<T, Sampled1D>) {
                    if (s.grid.empty() || !detail::strictly_ascending(s.grid) ||
                        s.grid.size() != s.values.size())
                        throw DataError(where + "malformed sampled shape");
                } else if constexpr (std::is_same_v<T, CategoricalTable>) {
                    if (s.levels.size() != s.values.size())
                        throw DataError(where + "malformed categorical table");
                } else {
                    if (!detail::strictly_ascending(s.row_thresholds) ||
                        !detail::strictly_ascending(s.col_thresholds) ||
                        s.values.size() != s.n_rows() * s.n_cols())
                        throw DataError(where + "malformed 2D grid");
                }
            },
            term.shape);
    }
}

}  // namespace glassbox
