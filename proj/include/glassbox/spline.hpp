#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "glassbox/config.hpp"
#include "glassbox/ingest.hpp"
#include "glassbox/model.hpp"

namespace glassbox {

struct SplineConfig {
    int basis_count = 20;
    int degree = 3;
    int penalty_order = 2;
    double lambda = 0.6;
    int max_iters = 100;
    double tol = 1e-4;
    double weight_floor = 1e-6;

    void check() const {
        if (degree < 0 || degree > bspline::kMaxDegree) throw ConfigError("spline degree must be in [0, 7]");
        if (basis_count <= degree) throw ConfigError("spline basis_count must exceed degree");
        if (lambda < 0.0) throw ConfigError("spline lambda must be >= 0");
        if (penalty_order < 0) throw ConfigError("spline penalty_order must be >= 0");
        if (max_iters < 1) throw ConfigError("spline max_iters must be >= 1");
    }

    static SplineConfig from(const KeyValueConfig& kv) {
        SplineConfig c;
        c.basis_count = static_cast<int>(kv.get_int("spline.basis_count", c.basis_count));
        c.degree = static_cast<int>(kv.get_int("spline.degree", c.degree));
        c.penalty_order = static_cast<int>(kv.get_int("spline.penalty_order", c.penalty_order));
        c.lambda = kv.get_double("spline.lambda", c.lambda);
        c.max_iters = static_cast<int>(kv.get_int("spline.max_iters", c.max_iters));
        c.tol = kv.get_double("spline.tol", c.tol);
        c.check();
        return c;
    }
};

struct SplineBasis {
    std::vector<double> knots;
    int degree = 3;
    Eigen::MatrixXd matrix;  // rows x basis functions

    std::size_t size() const { return knots.size() - static_cast<std::size_t>(degree) - 1; }
};

/// Clamped knot vector: boundary knots at min/max repeated degree+1 times, interior knots at
/// linear-interpolation quantiles of the distinct feature values.
inline std::vector<double> make_knots(std::span<const double> values, const SplineConfig& cfg) {
    std::vector<double> distinct(values.begin(), values.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 2) throw DataError("constant feature: a spline basis needs at least 2 distinct values");
    const double lo = distinct.front();
    const double hi = distinct.back();
    const int n_interior = cfg.basis_count - cfg.degree - 1;

    std::vector<double> knots(static_cast<std::size_t>(cfg.degree) + 1, lo);
    const double n1 = static_cast<double>(distinct.size() - 1);
    for (int i = 1; i <= n_interior; ++i) {
        const double pos = n1 * static_cast<double>(i) / static_cast<double>(n_interior + 1);
        const auto k = static_cast<std::size_t>(std::floor(pos));
        double q = distinct[k];
        if (k + 1 < distinct.size()) q += (pos - static_cast<double>(k)) * (distinct[k + 1] - distinct[k]);
        if (q > lo && q < hi && q > knots.back()) knots.push_back(q);
    }
    knots.insert(knots.end(), static_cast<std::size_t>(cfg.degree) + 1, hi);
    return knots;
}

/// B-spline design matrix of `values` on quantile knots; every row sums to one.
inline SplineBasis build_basis(std::span<const double> values, const SplineConfig& cfg) {
    cfg.check();
    SplineBasis b;
    b.degree = cfg.degree;
    b.knots = make_knots(values, cfg);
    const std::size_t nb = b.size();
    b.matrix = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(nb));
    std::vector<double> local(static_cast<std::size_t>(cfg.degree) + 1);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double x = bspline::clamp_to_domain(b.knots, b.degree, values[i]);
        const std::size_t span = bspline::find_span(b.knots, b.degree, x);
        bspline::basis_funs(b.knots, b.degree, span, x, local);
        for (std::size_t r = 0; r < local.size(); ++r)
            b.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(span - static_cast<std::size_t>(b.degree) + r)) = local[r];
    }
    return b;
}

/// Greville abscissae: the coefficient positions at which a B-spline reproduces linear functions.
inline std::vector<double> greville(const std::vector<double>& knots, int degree) {
    const std::size_t k = knots.size() - static_cast<std::size_t>(degree) - 1;
    std::vector<double> g(k);
    for (std::size_t i = 0; i < k; ++i) {
        if (degree == 0) {
            g[i] = 0.5 * (knots[i] + knots[i + 1]);
            continue;
        }
        double acc = 0.0;
        for (int r = 1; r <= degree; ++r) acc += knots[i + static_cast<std::size_t>(r)];
        g[i] = acc / degree;
    }
    return g;
}

/// D^T D for order-`order` divided differences over the Greville abscissae, rescaled by the mean
/// spacing. On evenly spaced abscissae this equals difference_penalty; on quantile knots its null
/// space for order 2 is exactly the straight lines.
inline Eigen::MatrixXd greville_penalty(const std::vector<double>& knots, int degree, int order) {
    std::vector<double> pos = greville(knots, degree);
    const auto k = static_cast<Eigen::Index>(pos.size());
    if (order > 0 && k <= order) return Eigen::MatrixXd::Zero(k, k);
    const double mean_gap = k > 1 ? (pos.back() - pos.front()) / static_cast<double>(k - 1) : 1.0;
    Eigen::MatrixXd d = Eigen::MatrixXd::Identity(k, k);
    for (int o = 0; o < order; ++o) {
        Eigen::MatrixXd next(d.rows() - 1, k);
        std::vector<double> mid(pos.size() - 1);
        for (Eigen::Index r = 0; r + 1 < d.rows(); ++r) {
            const auto ru = static_cast<std::size_t>(r);
            double gap = pos[ru + 1] - pos[ru];
            if (!(gap > 0.0)) gap = mean_gap;
            next.row(r) = (d.row(r + 1) - d.row(r)) * (mean_gap / gap);
            mid[ru] = 0.5 * (pos[ru] + pos[ru + 1]);
        }
        d = std::move(next);
        pos = std::move(mid);
    }
    return d.transpose() * d;
}

/// D^T D for the order-`order` difference operator on `k` coefficients.
inline Eigen::MatrixXd difference_penalty(int k, int order) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Identity(k, k);
    for (int o = 0; o < order && d.rows() > 1; ++o) {
        Eigen::MatrixXd next(d.rows() - 1, k);
        for (Eigen::Index r = 0; r + 1 < d.rows(); ++r) next.row(r) = d.row(r + 1) - d.row(r);
        d = std::move(next);
    }
    if (order > 0 && k <= order) return Eigen::MatrixXd::Zero(k, k);
    return d.transpose() * d;
}

struct SplineFitInfo {
    int iterations = 0;
    bool converged = true;
    std::vector<double> deviance_trace;  // penalized deviance after each accepted iterate
    std::vector<std::string> skipped_features;
    double ridge = 0.0;
};

namespace detail {

/// Sparse row layout of the joint design: per row, (column, value) pairs.
struct SparseDesign {
    std::size_t n_cols = 1;  // column 0 is the intercept
    std::size_t nnz_per_row = 1;
    std::vector<std::uint32_t> cols;
    std::vector<double> vals;

    struct Block {
        int feature = -1;
        bool spline = false;
        std::size_t offset = 0;
        std::size_t width = 0;
        std::vector<double> knots;
    };
    std::vector<Block> blocks;

    double dot(std::size_t row, const Eigen::VectorXd& beta) const {
        double acc = 0.0;
        for (std::size_t k = 0; k < nnz_per_row; ++k)
            acc += vals[row * nnz_per_row + k] * beta[cols[row * nnz_per_row + k]];
        return acc;
    }
};

inline SparseDesign build_design(const Dataset& train, const SplineConfig& cfg, SplineFitInfo& info) {
    SparseDesign d;
    for (std::size_t j = 0; j < train.cols(); ++j) {
        const auto& f = train.schema.features[j];
        SparseDesign::Block blk;
        blk.feature = static_cast<int>(j);
        blk.offset = d.n_cols;
        if (f.kind == FeatureKind::categorical) {
            blk.width = f.levels.size();
            if (blk.width == 0) continue;
            d.nnz_per_row += 1;
        } else {
            const auto col = train.column(j);
            try {
                blk.knots = make_knots(col, cfg);
            } catch (const DataError&) {
                info.skipped_features.push_back(f.name);
                continue;
            }
            blk.spline = true;
            blk.width = blk.knots.size() - static_cast<std::size_t>(cfg.degree) - 1;
            d.nnz_per_row += static_cast<std::size_t>(cfg.degree) + 1;
        }
        d.n_cols += blk.width;
        d.blocks.push_back(std::move(blk));
    }

    const std::size_t n = train.rows();
    d.cols.assign(n * d.nnz_per_row, 0);
    d.vals.assign(n * d.nnz_per_row, 0.0);
    std::vector<double> local(static_cast<std::size_t>(cfg.degree) + 1);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t k = i * d.nnz_per_row;
        d.cols[k] = 0;
        d.vals[k++] = 1.0;
        for (const auto& blk : d.blocks) {
            const double x = train.at(i, static_cast<std::size_t>(blk.feature));
            if (!blk.spline) {
                const auto level = static_cast<std::size_t>(x);
                d.cols[k] = static_cast<std::uint32_t>(blk.offset + std::min(level, blk.width - 1));
                d.vals[k++] = (x >= 0.0 && level < blk.width) ? 1.0 : 0.0;
                continue;
            }
            const double xc = bspline::clamp_to_domain(blk.knots, cfg.degree, x);
            const std::size_t span = bspline::find_span(blk.knots, cfg.degree, xc);
            bspline::basis_funs(blk.knots, cfg.degree, span, xc, local);
            for (std::size_t r = 0; r < local.size(); ++r) {
                d.cols[k] = static_cast<std::uint32_t>(blk.offset + span - static_cast<std::size_t>(cfg.degree) + r);
                d.vals[k++] = local[r];
            }
        }
    }
    return d;
}

inline double binomial_deviance(std::span<const double> y, std::span<const double> mu) {
    double dev = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double p = std::clamp(mu[i], 1e-15, 1.0 - 1e-15);
        dev -= 2.0 * (y[i] * std::log(p) + (1.0 - y[i]) * std::log(1.0 - p));
    }
    return dev;
}

}  // namespace detail

/// Penalized B-spline GAM. Identity link: one joint penalized least-squares solve. Logistic link:
/// PIRLS with step halving. Numeric features become SplineCurve1D terms, categorical features
/// CategoricalTable terms; the returned model is centered on `train`.
inline AdditiveModel fit_spline_gam(const Dataset& train, const SplineConfig& cfg, SplineFitInfo* info_out = nullptr) {
    cfg.check();
    if (train.rows() == 0) throw DataError("fit_spline_gam: empty training set");
    SplineFitInfo info;
    const auto design = detail::build_design(train, cfg, info);
    const auto p = static_cast<Eigen::Index>(design.n_cols);
    const std::size_t n = train.rows();
    const bool logistic = train.task == Task::classification;

    Eigen::MatrixXd penalty = Eigen::MatrixXd::Zero(p, p);
    for (const auto& blk : design.blocks) {
        if (!blk.spline) continue;
        const auto w = static_cast<Eigen::Index>(blk.width);
        const auto o = static_cast<Eigen::Index>(blk.offset);
        penalty.block(o, o, w, w) = cfg.lambda * greville_penalty(blk.knots, cfg.degree, cfg.penalty_order);
    }

    // Normal equations assembled from the sparse rows (upper triangle, then mirrored).
    auto solve = [&](const std::vector<double>& w, const std::vector<double>& z, double& ridge) {
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(p, p);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p);
        const std::size_t m = design.nnz_per_row;
        for (std::size_t i = 0; i < n; ++i) {
            const auto* c = &design.cols[i * m];
            const auto* v = &design.vals[i * m];
            for (std::size_t a1 = 0; a1 < m; ++a1) {
                if (v[a1] == 0.0) continue;
                const double wv = w[i] * v[a1];
                rhs[c[a1]] += wv * z[i];
                for (std::size_t a2 = 0; a2 < m; ++a2) {
                    if (c[a2] >= c[a1]) a(c[a1], c[a2]) += wv * v[a2];
                }
            }
        }
        a.triangularView<Eigen::StrictlyLower>() = a.transpose();
        // Jitter is sized from the data part so a stiff penalty does not inflate it.
        double scale = 0.0;
        for (Eigen::Index k = 1; k < p; ++k) scale = std::max(scale, a(k, k));
        a += penalty;
        if (scale <= 0.0) scale = 1.0;
        for (int attempt = 0; attempt < 6; ++attempt) {
            ridge = scale * 1e-8 * std::pow(10.0, attempt);
            Eigen::MatrixXd reg = a;
            for (Eigen::Index k = 1; k < p; ++k) reg(k, k) += ridge;
            Eigen::LLT<Eigen::MatrixXd> llt(reg);
            if (llt.info() == Eigen::Success) {
                Eigen::VectorXd beta = llt.solve(rhs);
                if (beta.allFinite()) return beta;
            }
        }
        throw FitError("fit_spline_gam: penalized normal equations are singular");
    };

    auto penalized = [&](const Eigen::VectorXd& beta, double dev) { return dev + beta.dot(penalty * beta); };

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    std::vector<double> w(n, 1.0), z(train.y), eta(n), mu(n);
    double ridge = 0.0;

    if (!logistic) {
        beta = solve(w, z, ridge);
        double rss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = train.y[i] - design.dot(i, beta);
            rss += r * r;
        }
        info.iterations = 1;
        info.deviance_trace.push_back(penalized(beta, rss));
    } else {
        double ybar = 0.0;
        for (double v : train.y) ybar += v;
        ybar = std::clamp(ybar / static_cast<double>(n), 1e-6, 1.0 - 1e-6);
        beta[0] = std::log(ybar / (1.0 - ybar));

        auto deviance_at = [&](const Eigen::VectorXd& b) {
            for (std::size_t i = 0; i < n; ++i) {
                eta[i] = design.dot(i, b);
                mu[i] = sigmoid(eta[i]);
            }
            return penalized(b, detail::binomial_deviance(train.y, mu));
        };
        double current = deviance_at(beta);
        info.deviance_trace.push_back(current);
        info.converged = false;
        for (int it = 0; it < cfg.max_iters; ++it) {
            deviance_at(beta);
            for (std::size_t i = 0; i < n; ++i) {
                w[i] = std::max(mu[i] * (1.0 - mu[i]), cfg.weight_floor);
                z[i] = eta[i] + (train.y[i] - mu[i]) / w[i];
            }
            Eigen::VectorXd proposal = solve(w, z, ridge);
            double next = deviance_at(proposal);
            for (int half = 0; half < 30 && !(next <= current); ++half) {
                proposal = 0.5 * (proposal + beta);
                next = deviance_at(proposal);
            }
            info.iterations = it + 1;
            if (!(next <= current)) {  // no descent direction left
                info.converged = true;
                break;
            }
            const double change = std::abs(current - next) / (std::abs(next) + 0.1);
            beta = proposal;
            current = next;
            info.deviance_trace.push_back(current);
            if (change < cfg.tol) {
                info.converged = true;
                break;
            }
        }
    }
    info.ridge = ridge;

    AdditiveModel model;
    model.task = train.task;
    model.link = Link::for_task(train.task);
    model.schema = train.schema;
    model.intercept = beta[0];
    for (const auto& blk : design.blocks) {
        std::vector<double> coef(blk.width);
        for (std::size_t k = 0; k < blk.width; ++k) coef[k] = beta[static_cast<Eigen::Index>(blk.offset + k)];
        if (blk.spline) {
            model.terms.push_back({{blk.feature}, SplineCurve1D{blk.knots, cfg.degree, std::move(coef)}});
        } else {
            const auto& f = train.schema.features[static_cast<std::size_t>(blk.feature)];
            model.terms.push_back({{blk.feature}, CategoricalTable{f.levels, std::move(coef), 0.0}});
        }
    }
    model.metadata["backend"] = "spline";
    model.metadata["iterations"] = std::to_string(info.iterations);
    model.metadata["converged"] = info.converged ? "true" : "false";
    if (!info.skipped_features.empty()) {
        std::string s;
        for (const auto& name : info.skipped_features) s += (s.empty() ? "" : ",") + name;
        model.metadata["warning"] = "constant features skipped: " + s;
    }
    if (info_out) *info_out = info;
    return center_terms(std::move(model), train);
}

}  // namespace glassbox
