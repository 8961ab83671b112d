#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "test_util.hpp"

using namespace glassbox;

namespace {

RawDataset raw_from_text(const std::string& name, const std::string& text, const LoadOptions& opt) {
    const auto dir = gbtest::scratch_dir("ingest");
    gbtest::write_file(dir / name, text);
    return load_csv((dir / name).string(), opt);
}

LoadOptions opts(const std::string& target, Task task, std::optional<std::string> positive = std::nullopt) {
    LoadOptions o;
    o.target = target;
    o.task = task;
    o.positive_label = std::move(positive);
    return o;
}

}  // namespace

TEST(Csv, QuotedFieldsAndRoundTripNumbers) {
    const auto recs = csv::parse_records("a,\"b,c\",\"d\"\"e\"\r\n1,2,3\n");
    ASSERT_EQ(recs.size(), 2u);
    EXPECT_EQ(recs[0][1], "b,c");
    EXPECT_EQ(recs[0][2], "d\"e");
    EXPECT_THROW(csv::parse_records("\"open"), DataError);
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 12345678.875})
        EXPECT_EQ(*csv::parse_number(csv::format_number(v)), v);
    EXPECT_FALSE(csv::parse_number("abc"));
    EXPECT_FALSE(csv::parse_number(""));
}

TEST(LoadCsv, NumericRegressionFile) {
    const auto raw = raw_from_text("t.csv", "a,b,y\n1,2,3\n4,5,6\n", opts("y", Task::regression));
    ASSERT_EQ(raw.columns.size(), 2u);
    EXPECT_EQ(raw.columns[0].kind, FeatureKind::numeric);
    EXPECT_EQ(raw.y, (std::vector<double>{3, 6}));
}

TEST(LoadCsv, PositiveLabelMapsToOne) {
    const auto raw = raw_from_text("t.csv", "a,y\n1,yes\n2,no\n3,yes\n", opts("y", Task::classification, "yes"));
    EXPECT_EQ(raw.y, (std::vector<double>{1, 0, 1}));
}

TEST(LoadCsv, Errors) {
    EXPECT_THROW(raw_from_text("t.csv", "a,y\n1,a\n2,b\n3,c\n", opts("y", Task::classification)), DataError);
    EXPECT_THROW(raw_from_text("t.csv", "a,b\n1,2\n", opts("y", Task::regression)), DataError);
    EXPECT_THROW(load_csv("/nonexistent/file.csv", opts("y", Task::regression)), DataError);
    EXPECT_THROW(raw_from_text("t.csv", "a,y\n1,2,3\n", opts("y", Task::regression)), DataError);
}

TEST(LoadCsv, InfersCategoricalColumns) {
    const auto raw = raw_from_text("t.csv", "c,n,y\nred,1.5,0\nblue,,1\n", opts("y", Task::regression));
    EXPECT_EQ(raw.columns[0].kind, FeatureKind::categorical);
    EXPECT_EQ(raw.columns[1].kind, FeatureKind::numeric);
    EXPECT_TRUE(raw.columns[1].cells[1].empty());
}

TEST(Preprocess, DropsHighCardinalityCategoricals) {
    std::string text = "wide,narrow,y\n";
    for (int i = 0; i < 26; ++i) text += "w" + std::to_string(i) + ",n" + std::to_string(i % 25) + "," + std::to_string(i) + "\n";
    const auto d = preprocess(raw_from_text("t.csv", text, opts("y", Task::regression)), PreprocessPolicy{});
    for (const auto& f : d.schema.features) {
        EXPECT_NE(f.source_column, "wide");
        EXPECT_EQ(f.source_column, "narrow");
    }
    EXPECT_EQ(d.cols(), 25u);
}

TEST(Preprocess, DropRowRemovesMissingCells) {
    const auto raw = raw_from_text("t.csv", "a,b,y\n1,2,3\n,5,6\n7,?,9\n10,11,12\n", opts("y", Task::regression));
    const auto d = preprocess(raw, PreprocessPolicy{});
    EXPECT_EQ(d.rows(), 2u);
    EXPECT_EQ(d.y, (std::vector<double>{3, 12}));

    PreprocessPolicy impute;
    impute.missing = MissingPolicy::impute;
    const auto di = preprocess(raw, impute);
    EXPECT_EQ(di.rows(), 4u);
    EXPECT_EQ(di.at(1, 0), 7.0);  // median of {1, 7, 10}
}

TEST(Preprocess, NumericInputIsUnchanged) {
    const auto raw = raw_from_text("t.csv", "a,b,y\n1,2,3\n4.5,-5,6\n", opts("y", Task::regression));
    const auto d = preprocess(raw, PreprocessPolicy{});
    EXPECT_EQ(d.x, (std::vector<double>{1, 2, 4.5, -5}));
    EXPECT_EQ(d.y, (std::vector<double>{3, 6}));
}

TEST(Preprocess, DropColumnsAndErrors) {
    const auto raw = raw_from_text("t.csv", "id,a,y\n1,2,3\n2,5,6\n", opts("y", Task::regression));
    PreprocessPolicy p;
    p.drop_columns = {"id"};
    EXPECT_EQ(preprocess(raw, p).schema.features[0].name, "a");
    p.drop_columns = {"id", "a"};
    EXPECT_THROW(preprocess(raw, p), DataError);
    p.drop_columns = {};
    p.categorical_max_levels = 0;
    EXPECT_THROW(preprocess(raw, p), ConfigError);
    const auto all_missing = raw_from_text("t.csv", "a,y\n,3\n?,6\n", opts("y", Task::regression));
    EXPECT_THROW(preprocess(all_missing, PreprocessPolicy{}), DataError);
}

TEST(Preprocess, OneHotColumnsSumToOneAndIsIdempotent) {
    std::mt19937_64 rng(3);
    std::string text = "color,size,v,y\n";
    const char* colors[] = {"red", "green", "blue"};
    const char* sizes[] = {"S", "M", "L", "XL"};
    for (int i = 0; i < 60; ++i)
        text += std::string(colors[rng() % 3]) + "," + sizes[rng() % 4] + "," + std::to_string(i * 0.5) + "," +
                std::to_string(rng() % 2) + "\n";
    const auto d = preprocess(raw_from_text("t.csv", text, opts("y", Task::classification)), PreprocessPolicy{});
    ASSERT_EQ(d.one_hot_groups.size(), 2u);
    for (const auto& g : d.one_hot_groups)
        for (std::size_t i = 0; i < d.rows(); ++i) {
            double s = 0.0;
            for (int c : g.columns) s += d.at(i, static_cast<std::size_t>(c));
            EXPECT_EQ(s, 1.0);
            EXPECT_GE(d.group_level(i, g), 0);
        }
    const auto again = preprocess(to_raw(d), PreprocessPolicy{});
    EXPECT_EQ(again.x, d.x);
    EXPECT_EQ(again.y, d.y);
    ASSERT_EQ(again.cols(), d.cols());
    for (std::size_t j = 0; j < d.cols(); ++j) EXPECT_EQ(again.schema.features[j].name, d.schema.features[j].name);
    EXPECT_EQ(again.one_hot_groups.size(), d.one_hot_groups.size());

    PreprocessPolicy no_hot;
    no_hot.one_hot = false;
    const auto lv = preprocess(raw_from_text("t.csv", text, opts("y", Task::classification)), no_hot);
    EXPECT_EQ(lv.cols(), 3u);
    EXPECT_EQ(lv.schema.features[0].levels, (std::vector<std::string>{"blue", "green", "red"}));
}

TEST(EncodeRows, FollowsSchema) {
    const auto d = preprocess(raw_from_text("t.csv", "c,n,y\nred,1,0\nblue,2,1\n", opts("y", Task::classification)),
                              PreprocessPolicy{});
    csv::Table t;
    t.header = {"n", "c"};
    t.rows = {{"5", "red"}, {"", "purple"}};
    const auto rows = encode_rows(d.schema, t);
    // schema order: c=blue, c=red, n
    EXPECT_EQ(rows, (std::vector<double>{0, 1, 5, 0, 0, 1.5}));
    t.header = {"c"};
    t.rows = {{"red"}};
    EXPECT_THROW(encode_rows(d.schema, t), DataError);
}

TEST(QuantileBins, ConstantColumnHasNoThresholds) {
    const std::vector<double> v(50, 3.0);
    EXPECT_TRUE(quantile_bins(v, 16).empty());
}

TEST(QuantileBins, TwoValuesGiveOneThresholdBetween) {
    std::vector<double> v;
    for (int i = 0; i < 30; ++i) v.push_back(i % 3 ? 2.0 : 7.0);
    const auto t = quantile_bins(v, 8);
    ASSERT_EQ(t.size(), 1u);
    EXPECT_GT(t[0], 2.0);
    EXPECT_LE(t[0], 7.0);
}

TEST(QuantileBins, OneToHundredQuartiles) {
    std::vector<double> v;
    for (int i = 100; i >= 1; --i) v.push_back(i);
    const auto t = quantile_bins(v, 4);
    // numpy.percentile(range(1, 101), [25, 50, 75]) with linear interpolation
    ASSERT_EQ(t.size(), 3u);
    EXPECT_DOUBLE_EQ(t[0], 25.75);
    EXPECT_DOUBLE_EQ(t[1], 50.5);
    EXPECT_DOUBLE_EQ(t[2], 75.25);
    EXPECT_THROW(quantile_bins(std::vector<double>{}, 4), DataError);
    EXPECT_THROW(quantile_bins(v, 1), ConfigError);
}

TEST(QuantileBins, AscendingWithBalancedPopulations) {
    std::mt19937_64 rng(5);
    std::lognormal_distribution<double> dist(0.0, 1.5);
    std::vector<double> v(10000);
    for (auto& x : v) x = dist(rng);
    for (int bins : {2, 16, 64, 256}) {
        const auto t = quantile_bins(v, bins);
        EXPECT_LE(t.size(), static_cast<std::size_t>(bins - 1));
        EXPECT_TRUE(std::is_sorted(t.begin(), t.end()));
        EXPECT_EQ(std::adjacent_find(t.begin(), t.end()), t.end());
        std::vector<std::size_t> pop(t.size() + 1, 0);
        for (double x : v) ++pop[static_cast<std::size_t>(std::upper_bound(t.begin(), t.end(), x) - t.begin())];
        const auto [lo, hi] = std::minmax_element(pop.begin(), pop.end());
        EXPECT_GT(*lo, 0u);
        EXPECT_LE(static_cast<double>(*hi), 2.0 * static_cast<double>(*lo) + 2.0);
    }
}

TEST(KFold, TenRowsFiveFolds) {
    const auto p = kfold_split(10, 5, 42);
    for (int f = 0; f < 5; ++f) EXPECT_EQ(p.test_rows(f).size(), 2u);
    EXPECT_EQ(kfold_split(10, 5, 42).assignments, p.assignments);
    EXPECT_NE(kfold_split(10, 5, 43).assignments, p.assignments);
}

TEST(KFold, RemainderGoesToFirstFolds) {
    const auto p = kfold_split(11, 5, 1);
    std::vector<std::size_t> sizes;
    for (int f = 0; f < 5; ++f) sizes.push_back(p.test_rows(f).size());
    EXPECT_EQ(sizes, (std::vector<std::size_t>{3, 2, 2, 2, 2}));
    EXPECT_THROW(kfold_split(3, 5, 0), DataError);
    EXPECT_THROW(kfold_split(10, 1, 0), ConfigError);
}

TEST(KFold, IsAPartitionForManyShapes) {
    for (std::size_t n = 2; n < 60; n += 7)
        for (int k = 2; k <= static_cast<int>(std::min<std::size_t>(n, 10)); ++k) {
            const auto p = kfold_split(n, k, n * 31 + static_cast<std::size_t>(k));
            std::set<std::size_t> seen;
            std::size_t min_size = n, max_size = 0;
            for (int f = 0; f < k; ++f) {
                const auto test = p.test_rows(f);
                const auto train = p.train_rows(f);
                EXPECT_EQ(test.size() + train.size(), n);
                min_size = std::min(min_size, test.size());
                max_size = std::max(max_size, test.size());
                for (auto i : test) EXPECT_TRUE(seen.insert(i).second);
            }
            EXPECT_EQ(seen.size(), n);
            EXPECT_LE(max_size - min_size, 1u);
        }
}

TEST(Manifest, ParsesAndResolvesPaths) {
    const auto dir = gbtest::scratch_dir("manifest");
    gbtest::write_file(dir / "d.csv", "a,y\n1,0\n2,1\n");
    gbtest::write_file(dir / "m.json", R"({"datasets":[{"name":"d","path":"d.csv","target":"y",
        "task":"classification","positive_label":"1","drop_columns":["z"],"missing":"impute"}]})");
    const auto m = load_manifest((dir / "m.json").string());
    ASSERT_EQ(m.datasets.size(), 1u);
    EXPECT_EQ(m.datasets[0].path, (dir / "d.csv").string());
    EXPECT_EQ(m.datasets[0].policy.missing, MissingPolicy::impute);
    const auto d = load_dataset(m.datasets[0]);
    EXPECT_EQ(d.y, (std::vector<double>{0, 1}));

    gbtest::write_file(dir / "bad.json", R"({"datasets":[{"name":"d"}]})");
    EXPECT_THROW(load_manifest((dir / "bad.json").string()), ConfigError);
    EXPECT_THROW(load_manifest((dir / "none.json").string()), ConfigError);
}
