#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "test_util.hpp"

using namespace glassbox;

namespace {

/// Textbook Cox-de Boor recursion for basis function i of degree p (0/0 := 0).
double cox_de_boor(const std::vector<double>& t, int i, int p, double x) {
    const auto u = static_cast<std::size_t>(i);
    if (p == 0) return (t[u] <= x && x < t[u + 1]) ? 1.0 : 0.0;
    double left = 0.0, right = 0.0;
    const auto pp = static_cast<std::size_t>(p);
    if (t[u + pp] != t[u]) left = (x - t[u]) / (t[u + pp] - t[u]) * cox_de_boor(t, i, p - 1, x);
    if (t[u + pp + 1] != t[u + 1]) right = (t[u + pp + 1] - x) / (t[u + pp + 1] - t[u + 1]) * cox_de_boor(t, i + 1, p - 1, x);
    return left + right;
}

/// Cubic Greville points and the closed-form second divided difference on them, scaled by the
/// squared mean spacing.
Eigen::MatrixXd second_divided_penalty(const std::vector<double>& t) {
    const std::size_t k = t.size() - 4;
    std::vector<double> g(k);
    for (std::size_t i = 0; i < k; ++i) g[i] = (t[i + 1] + t[i + 2] + t[i + 3]) / 3.0;
    const double h = (g.back() - g.front()) / static_cast<double>(k - 1);
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k - 2), static_cast<Eigen::Index>(k));
    for (std::size_t r = 0; r + 2 < k; ++r) {
        const double h0 = g[r + 1] - g[r], h1 = g[r + 2] - g[r + 1], s = 2.0 * h * h / (g[r + 2] - g[r]);
        const auto ri = static_cast<Eigen::Index>(r), ci = static_cast<Eigen::Index>(r);
        d(ri, ci) = s / h0;
        d(ri, ci + 1) = -s / h0 - s / h1;
        d(ri, ci + 2) = s / h1;
    }
    return d.transpose() * d;
}

std::vector<double> uniform_values(std::size_t n, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

}  // namespace

TEST(SplineBasis, DegreeZeroIsIndicator) {
    SplineConfig cfg;
    cfg.degree = 0;
    cfg.basis_count = 2;
    const auto b = build_basis(std::vector<double>{0.0, 0.2, 0.7, 1.0}, cfg);
    ASSERT_EQ(b.size(), 2u);
    for (Eigen::Index i = 0; i < b.matrix.rows(); ++i) {
        EXPECT_EQ(b.matrix.row(i).sum(), 1.0);
        for (Eigen::Index k = 0; k < b.matrix.cols(); ++k) EXPECT_TRUE(b.matrix(i, k) == 0.0 || b.matrix(i, k) == 1.0);
    }
}

TEST(SplineBasis, PartitionOfUnity) {
    const auto v = uniform_values(500, 1, -3.0, 8.0);
    for (int degree : {0, 1, 2, 3, 5})
        for (int count : {degree + 1, degree + 4, 20}) {
            SplineConfig cfg;
            cfg.degree = degree;
            cfg.basis_count = count;
            const auto b = build_basis(v, cfg);
            for (Eigen::Index i = 0; i < b.matrix.rows(); ++i) EXPECT_NEAR(b.matrix.row(i).sum(), 1.0, 1e-10);
        }
}

TEST(SplineBasis, MatchesRecursiveDeBoor) {
    std::vector<double> grid;
    for (int i = 0; i < 400; ++i) grid.push_back(i / 400.0);
    SplineConfig cfg;
    cfg.degree = 3;
    cfg.basis_count = 20;
    std::vector<double> fit_values = grid;
    fit_values.push_back(1.0);
    const auto knots = make_knots(fit_values, cfg);
    ASSERT_EQ(knots.size(), 24u);
    cfg.basis_count = 20;
    const auto b = build_basis(fit_values, cfg);
    for (std::size_t i = 0; i < grid.size(); ++i)
        for (int k = 0; k < 20; ++k)
            EXPECT_NEAR(b.matrix(static_cast<Eigen::Index>(i), k), cox_de_boor(knots, k, 3, grid[i]), 1e-12);
}

TEST(SplineBasis, ConstantFeatureRejected) {
    EXPECT_THROW(build_basis(std::vector<double>(10, 1.0), SplineConfig{}), DataError);
    SplineConfig bad;
    bad.basis_count = 3;
    EXPECT_THROW(bad.check(), ConfigError);
}

TEST(FitSpline, ConstantTarget) {
    auto d = gbtest::uniform_data(300, 2, 2);
    for (auto& y : d.y) y = 4.25;
    const auto m = fit_spline_gam(d, SplineConfig{});
    EXPECT_NEAR(m.intercept, 4.25, 1e-6);
    for (std::size_t i = 0; i < d.rows(); ++i)
        for (const auto& t : m.terms) EXPECT_LT(std::abs(term_contribution(t, d.row(i))), 1e-6);
}

TEST(FitSpline, NoiselessLineMatchesOls) {
    const auto x = uniform_values(400, 3);
    std::vector<double> y;
    for (double v : x) y.push_back(2.0 * v);
    const auto d = gbtest::make_numeric({x}, y, Task::regression);
    const auto m = fit_spline_gam(d, SplineConfig{});
    double se = 0.0;
    for (std::size_t i = 0; i < d.rows(); ++i) se += std::pow(score(m, d.row(i)) - y[i], 2);
    EXPECT_LT(std::sqrt(se / static_cast<double>(d.rows())), 1e-2);
}

TEST(FitSpline, RecoversSine) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> noise(0.0, 0.1);
    const auto x = uniform_values(2000, 5);
    std::vector<double> y;
    for (double v : x) y.push_back(std::sin(4 * std::numbers::pi * v) + noise(rng));
    const auto m = fit_spline_gam(gbtest::make_numeric({x}, y, Task::regression), SplineConfig{});
    const double rmse = shape_fidelity(m.terms[0].shape, [](double v) { return std::sin(4 * std::numbers::pi * v); }, 0.0, 1.0);
    EXPECT_LT(rmse, 0.1);
}

TEST(FitSpline, PirlsDevianceNonIncreasing) {
    std::mt19937_64 rng(6);
    auto d = gbtest::uniform_data(1500, 3, 7, Task::classification);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t i = 0; i < d.rows(); ++i) {
        const double s = 2.0 * d.at(i, 0) - std::abs(3.0 * d.at(i, 1)) + 1.0;
        d.y[i] = u(rng) < sigmoid(s) ? 1.0 : 0.0;
    }
    SplineFitInfo info;
    const auto m = fit_spline_gam(d, SplineConfig{}, &info);
    ASSERT_GE(info.deviance_trace.size(), 2u);
    for (std::size_t k = 1; k < info.deviance_trace.size(); ++k)
        EXPECT_LE(info.deviance_trace[k], info.deviance_trace[k - 1] + 1e-9);
    EXPECT_TRUE(info.converged);
    EXPECT_EQ(m.link.kind, LinkKind::logistic);
}

TEST(FitSpline, HugeLambdaGivesStraightLines) {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> noise(0.0, 0.1);
    const auto x = uniform_values(800, 9);
    std::vector<double> y;
    for (double v : x) y.push_back(std::sin(6 * v) + noise(rng));
    const auto d = gbtest::make_numeric({x}, y, Task::regression);
    auto curvature = [&](double lambda) {
        SplineConfig cfg;
        cfg.lambda = lambda;
        const auto m = fit_spline_gam(d, cfg);
        const auto& knots = std::get<SplineCurve1D>(m.terms[0].shape).knots;
        const double lo = knots.front(), h = (knots.back() - lo) / 200;
        double worst = 0.0;
        for (int k = 1; k < 200; ++k) {
            const auto at = [&](int j) { return evaluate_shape(m.terms[0].shape, lo + j * h); };
            const double a = at(k - 1), b = at(k), c = at(k + 1);
            worst = std::max(worst, std::abs(a - 2 * b + c) / (h * h));
        }
        return worst;
    };
    const double soft = curvature(0.6), stiff = curvature(1e9);
    EXPECT_GT(soft, 1.0);
    EXPECT_LT(stiff, 1e-3);
}

TEST(SplinePenalty, MatchesPlainDifferencesOnEvenKnots) {
    std::vector<double> t = {0, 0, 0, 0, 0.5, 2, 2.5, 4, 7, 8, 8.5, 9, 9, 9, 9};
    std::vector<double> even;
    for (int i = 0; i < 16; ++i) even.push_back(i);
    const Eigen::MatrixXd a = greville_penalty(even, 3, 2), b = difference_penalty(12, 2);
    EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-12);
    const Eigen::MatrixXd c = greville_penalty(t, 3, 2), e = second_divided_penalty(t);
    EXPECT_LT((c - e).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SplinePenalty, NullSpaceIsStraightLines) {
    const auto b = build_basis(uniform_values(500, 31, 0.0, 5.0), SplineConfig{});
    const auto g = greville(b.knots, b.degree);
    const Eigen::MatrixXd p = greville_penalty(b.knots, b.degree, 2);
    Eigen::VectorXd line(static_cast<Eigen::Index>(g.size()));
    for (std::size_t i = 0; i < g.size(); ++i) line[static_cast<Eigen::Index>(i)] = 2.0 - 3.0 * g[i];
    EXPECT_LT((p * line).cwiseAbs().maxCoeff(), 1e-9);
    SplineCurve1D s{b.knots, b.degree, std::vector<double>(line.data(), line.data() + line.size())};
    const double lo = b.knots.front(), hi = b.knots.back();
    for (int k = 0; k <= 100; ++k) {
        const double x = lo + (hi - lo) * k / 100.0;
        EXPECT_NEAR(evaluate_shape(s, x), 2.0 - 3.0 * x, 1e-9);
    }
}

TEST(FitSpline, JointSolveEqualsBackfitting) {
    std::mt19937_64 rng(10);
    std::normal_distribution<double> noise(0.0, 0.2);
    const auto x1 = uniform_values(300, 11), x2 = uniform_values(300, 12, -2.0, 2.0);
    std::vector<double> y;
    for (std::size_t i = 0; i < x1.size(); ++i) y.push_back(std::cos(5 * x1[i]) + 0.5 * x2[i] * x2[i] + noise(rng));
    const auto d = gbtest::make_numeric({x1, x2}, y, Task::regression);
    SplineConfig cfg;
    cfg.basis_count = 12;
    const auto m = fit_spline_gam(d, cfg);

    // Gauss-Seidel backfitting with per-feature penalized smoothers on centered partial residuals.
    const auto b1 = build_basis(x1, cfg), b2 = build_basis(x2, cfg);
    const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
    const Eigen::Index n = yv.size();
    auto smoother = [&](const SplineBasis& b) {
        const Eigen::MatrixXd pen = second_divided_penalty(b.knots) * cfg.lambda;
        Eigen::MatrixXd a = b.matrix.transpose() * b.matrix + pen;
        return Eigen::MatrixXd(a.ldlt().solve(b.matrix.transpose()));
    };
    const Eigen::MatrixXd s1 = b1.matrix * smoother(b1), s2 = b2.matrix * smoother(b2);
    Eigen::VectorXd f1 = Eigen::VectorXd::Zero(n), f2 = Eigen::VectorXd::Zero(n);
    const double alpha = yv.mean();
    for (int it = 0; it < 5000; ++it) {
        Eigen::VectorXd g1 = s1 * (yv.array() - alpha - f2.array()).matrix();
        g1.array() -= g1.mean();
        Eigen::VectorXd g2 = s2 * (yv.array() - alpha - g1.array()).matrix();
        g2.array() -= g2.mean();
        const double change = std::max((g1 - f1).cwiseAbs().maxCoeff(), (g2 - f2).cwiseAbs().maxCoeff());
        f1 = g1;
        f2 = g2;
        if (change < 1e-13) break;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto row = d.row(static_cast<std::size_t>(i));
        EXPECT_NEAR(term_contribution(m.terms[0], row), f1[i], 1e-6);
        EXPECT_NEAR(term_contribution(m.terms[1], row), f2[i], 1e-6);
        EXPECT_NEAR(score(m, row), alpha + f1[i] + f2[i], 1e-6);
    }
}

TEST(FitSpline, AddingConstantToTargetMovesOnlyIntercept) {
    auto d = gbtest::uniform_data(400, 2, 13);
    for (std::size_t i = 0; i < d.rows(); ++i) d.y[i] = std::exp(d.at(i, 0)) + d.at(i, 1);
    const auto m = fit_spline_gam(d, SplineConfig{});
    auto shifted = d;
    for (auto& y : shifted.y) y += 7.5;
    const auto ms = fit_spline_gam(shifted, SplineConfig{});
    EXPECT_NEAR(ms.intercept - m.intercept, 7.5, 1e-6);
    for (std::size_t i = 0; i < d.rows(); ++i)
        for (std::size_t t = 0; t < m.terms.size(); ++t)
            EXPECT_NEAR(term_contribution(ms.terms[t], d.row(i)), term_contribution(m.terms[t], d.row(i)), 1e-6);
}

TEST(FitSpline, CategoricalAndDegenerateFeatures) {
    Dataset d = gbtest::uniform_data(200, 1, 14);
    FeatureInfo cat;
    cat.name = "c";
    cat.kind = FeatureKind::categorical;
    cat.levels = {"a", "b", "c"};
    FeatureInfo constant;
    constant.name = "k";
    Dataset e;
    e.task = Task::regression;
    e.schema.features = {d.schema.features[0], cat, constant};
    for (std::size_t i = 0; i < d.rows(); ++i) {
        const double level = static_cast<double>(i % 3);
        e.x.insert(e.x.end(), {d.at(i, 0), level, 1.0});
        e.y.push_back(d.at(i, 0) + (level == 2 ? 1.0 : 0.0));
    }
    SplineFitInfo info;
    const auto m = fit_spline_gam(e, SplineConfig{}, &info);
    ASSERT_EQ(m.terms.size(), 2u);
    EXPECT_EQ(info.skipped_features, (std::vector<std::string>{"k"}));
    const auto* tab = std::get_if<CategoricalTable>(&m.terms[1].shape);
    ASSERT_NE(tab, nullptr);
    EXPECT_NEAR(tab->values[2] - tab->values[0], 1.0, 0.05);
    EXPECT_NE(m.metadata.at("warning").find('k'), std::string::npos);
}
