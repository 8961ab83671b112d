// glassbox command-line entry point: train, benchmark, plot, predict, synth.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "glassbox/glassbox.hpp"

namespace fs = std::filesystem;
using namespace glassbox;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitFit = 4;

struct Common {
    std::string manifest;
    std::string dataset;
    std::string config;
    std::optional<std::uint64_t> seed;
    int jobs = default_jobs();
    std::string out;
};

/// --seed, else GLASSBOX_SEED, else 0.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
    if (flag) return *flag;
    if (const char* env = std::getenv("GLASSBOX_SEED"); env && *env) {
        const auto v = csv::parse_number(env);
        if (!v || *v < 0 || *v != static_cast<double>(static_cast<std::uint64_t>(*v)))
            throw ConfigError(std::string("GLASSBOX_SEED must be a non-negative integer, got '") + env + "'");
        return static_cast<std::uint64_t>(*v);
    }
    return 0;
}

KeyValueConfig load_config(const std::string& path) {
    return path.empty() ? KeyValueConfig{} : KeyValueConfig::load(path);
}

void warn_unused(const KeyValueConfig& kv) {
    for (const auto& k : kv.unused()) std::cerr << "warning: config key '" << k << "' was not used\n";
}

void require(const std::string& value, const char* flag) {
    if (value.empty()) throw ConfigError(std::string("missing required option ") + flag);
}

const DatasetEntry& pick_dataset(const Manifest& m, const std::string& name) {
    if (m.datasets.empty()) throw DataError("manifest lists no datasets");
    if (name.empty()) return m.datasets.front();
    for (const auto& d : m.datasets)
        if (d.name == name) return d;
    throw ConfigError("dataset '" + name + "' is not in the manifest");
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw DataError("write failed for '" + path.string() + "'");
}

void make_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("cannot create directory '" + dir.string() + "': " + ec.message());
}

std::vector<std::string> split_models(const std::vector<std::string>& raw) {
    std::vector<std::string> out;
    for (const auto& item : raw)
        for (auto& part : detail::split_list(item, ',')) out.push_back(part);
    return out;
}

// ---------------------------------------------------------------------------

int cmd_train(const Common& c, const std::string& backend) {
    require(c.manifest, "--manifest");
    require(c.out, "--out");
    const auto kind = model_kind_from_string(backend);
    const auto kv = load_config(c.config);
    const auto cfg = FitConfig::from(kind, kv, resolve_seed(c.seed), c.jobs);
    warn_unused(kv);
    const auto manifest = load_manifest(c.manifest);
    const auto data = load_dataset(pick_dataset(manifest, c.dataset));
    const auto model = fit_model(data, cfg);
    if (const auto parent = fs::path(c.out).parent_path(); !parent.empty()) make_dir(parent);
    save_fitted(model, c.out);
    std::cerr << "trained " << to_string(kind) << " on " << data.rows() << " rows x " << data.cols()
              << " features -> " << c.out << '\n';
    return 0;
}

int cmd_benchmark(const Common& c, const std::vector<std::string>& model_args, int folds,
                  const std::string& reference) {
    require(c.manifest, "--manifest");
    require(c.out, "--out");
    auto names = split_models(model_args);
    if (names.empty()) names = {"spline", "ebm", "nam", "linear", "tree"};
    const auto seed = resolve_seed(c.seed);
    const auto kv = load_config(c.config);
    std::vector<ModelSpec> specs;
    for (const auto& n : names) {
        // Benchmark cells are the parallel unit; backends run single-threaded inside a cell.
        specs.push_back(model_spec(FitConfig::from(model_kind_from_string(n), kv, seed, 1)));
    }
    warn_unused(kv);
    std::optional<ReferenceScores> ref;
    if (!reference.empty()) ref = load_reference_scores(reference);

    const auto manifest = load_manifest(c.manifest);
    const auto datasets = load_manifest_datasets(manifest);
    bool any = false;
    for (const auto& d : datasets) {
        if (d.data) any = true;
        else std::cerr << "warning: dataset '" << d.name << "' unavailable: " << d.error << '\n';
    }
    if (!any) throw DataError("no dataset in the manifest could be loaded");

    BenchmarkOptions opt;
    opt.folds = folds;
    opt.seed = seed;
    opt.jobs = c.jobs;
    auto report = run_benchmark(datasets, specs, opt);
    report.config = kv.entries();
    report.config["seed"] = std::to_string(seed);
    report.config["folds"] = std::to_string(folds);

    const fs::path out(c.out);
    make_dir(out);
    write_text(out / "report.csv", report_csv(report));
    write_text(out / "timings.csv", timings_csv(report));
    write_text(out / "report.md", report_markdown(report, ref ? &*ref : nullptr));
    json snap;
    snap["manifest"] = c.manifest;
    snap["models"] = names;
    snap["seed"] = seed;
    snap["folds"] = folds;
    snap["config"] = kv.entries();
    write_text(out / "config.json", snap.dump(1) + "\n");
    for (const auto& a : report.aggregates)
        if (!a.ok) std::cerr << "warning: " << a.dataset << " / " << a.model << " failed: " << a.error << '\n';
    std::cerr << "wrote " << (out / "report.csv").string() << '\n';
    return 0;
}

int cmd_plot(const Common& c, const std::string& model_path, int top_n, bool shared_y) {
    require(model_path, "--model");
    require(c.out, "--out");
    if (top_n < 1) throw ConfigError("--topn must be >= 1");
    const auto fitted = load_fitted(model_path);
    if (!fitted.gam) throw DataError("'" + model_path + "' is a decision tree; plots need an additive model");
    const auto& m = *fitted.gam;

    std::optional<Dataset> train;
    if (!c.manifest.empty()) {
        train = load_dataset(pick_dataset(load_manifest(c.manifest), c.dataset));
        if (train->schema.size() != m.schema.size())
            throw DataError("training data has " + std::to_string(train->cols()) + " features, model expects " +
                            std::to_string(m.schema.size()));
    }

    PlotStyle style;
    if (shared_y) style.y_range = shared_y_range(m, style);
    const fs::path out(c.out);
    make_dir(out);
    std::vector<std::string> files(m.terms.size());
    parallel_for(m.terms.size(), c.jobs, [&](std::size_t t) {
        std::optional<std::pair<double, double>> range;
        if (train && !m.terms[t].is_pair()) range = column_range(*train, m.terms[t].features[0]);
        files[t] = render_term_svg(m, t, style, range);
    });
    for (std::size_t t = 0; t < files.size(); ++t) write_text(out / ("term-" + std::to_string(t) + ".svg"), files[t]);
    if (train) {
        write_text(out / "importance.svg", render_importance_svg(m, *train, top_n));
        save_shapes(export_shapes(m, *train), (out / "shapes.json").string());
    } else {
        std::cerr << "warning: no training data given (--manifest); importance chart skipped\n";
    }
    std::cerr << "wrote " << files.size() + (train ? 1 : 0) << " SVG files to " << out.string() << '\n';
    return 0;
}

int cmd_predict(const Common& c, const std::string& model_path, const std::string& input, bool decompose_flag) {
    require(model_path, "--model");
    require(input, "--input");
    require(c.out, "--out");
    const auto fitted = load_fitted(model_path);
    if (decompose_flag && !fitted.gam) throw ConfigError("--decompose needs an additive model");
    const Schema& schema = fitted.gam ? fitted.gam->schema : fitted.tree->schema;
    const Task task = fitted.gam ? fitted.gam->task : fitted.tree->task;
    const auto table = csv::read_table(input, true);
    const auto rows = encode_rows(schema, table);
    const std::size_t n = schema.size();

    std::vector<std::string> header;
    if (task == Task::classification) header = {"prediction", "probability"};
    else header = {"prediction"};
    if (decompose_flag) {
        header.push_back("intercept");
        for (std::size_t t = 0; t < fitted.gam->terms.size(); ++t) header.push_back(term_name(*fitted.gam, t));
        header.push_back("score");
    }
    std::string text = csv::join_row(header) + "\n";
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const std::span<const double> row(rows.data() + r * n, n);
        const double p = fitted.predict(row);
        std::vector<std::string> fields;
        if (task == Task::classification) fields = {p >= 0.5 ? "1" : "0", csv::format_number(p)};
        else fields = {csv::format_number(p)};
        if (decompose_flag) {
            const auto d = decompose(*fitted.gam, row);
            fields.push_back(csv::format_number(d.intercept));
            for (const auto& [term, v] : d.contributions) fields.push_back(csv::format_number(v));
            fields.push_back(csv::format_number(d.score));
        }
        text += csv::join_row(fields) + "\n";
    }
    if (const auto parent = fs::path(c.out).parent_path(); !parent.empty()) make_dir(parent);
    write_text(c.out, text);
    return 0;
}

int cmd_synth(const Common& c) {
    require(c.config, "--config");
    require(c.out, "--out");
    auto kv = load_config(c.config);
    auto spec = synthetic_spec_from(kv);
    if (c.seed || std::getenv("GLASSBOX_SEED")) spec.seed = resolve_seed(c.seed);
    warn_unused(kv);
    const auto [data, truth] = generate(spec);
    std::vector<std::string> header;
    for (const auto& f : data.schema.features) header.push_back(f.name);
    header.push_back("y");
    std::string text = csv::join_row(header) + "\n";
    for (std::size_t i = 0; i < data.rows(); ++i) {
        std::vector<std::string> fields;
        for (double v : data.row(i)) fields.push_back(csv::format_number(v));
        fields.push_back(csv::format_number(data.y[i]));
        text += csv::join_row(fields) + "\n";
    }
    write_text(c.out, text);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"glassbox: interpretable additive models for tabular data"};
    app.require_subcommand(1, 1);

    Common c;
    auto add_common = [&](CLI::App* sub, bool manifest, bool config) {
        if (manifest) {
            sub->add_option("--manifest", c.manifest, "Dataset manifest (JSON)");
            sub->add_option("--dataset", c.dataset, "Dataset name in the manifest (default: first)");
        }
        if (config) {
            sub->add_option("--config", c.config, "Key-value file overriding backend defaults");
            sub->add_option("--seed", c.seed, "Random seed (fallback: GLASSBOX_SEED, then 0)");
        }
        sub->add_option("--jobs", c.jobs, "Worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--out", c.out, "Output path");
    };

    std::string backend = "ebm";
    auto* train = app.add_subcommand("train", "Fit one model on a dataset and write the model file");
    add_common(train, true, true);
    train->add_option("--backend", backend, std::string("Backend: ") + kValidBackends);

    std::vector<std::string> models;
    int folds = 5;
    std::string reference;
    auto* bench = app.add_subcommand("benchmark", "Cross-validate models on every manifest dataset");
    add_common(bench, true, true);
    bench->add_option("--model,--backend", models, "Backends to compare (repeatable or comma-separated)");
    bench->add_option("--folds", folds, "Number of CV folds")->check(CLI::Range(2, 1000));
    bench->add_option("--reference", reference, "Reference scores JSON to print alongside");

    std::string model_path;
    int top_n = 10;
    bool shared_y = false;
    auto* plot = app.add_subcommand("plot", "Render one SVG per term plus an importance chart");
    add_common(plot, true, false);
    plot->add_option("--model", model_path, "Model file");
    plot->add_option("--topn", top_n, "Bars in the importance chart");
    plot->add_flag("--shared-y", shared_y, "Use one y-scale for every 1D plot");

    std::string input;
    bool decompose_flag = false;
    auto* pred = app.add_subcommand("predict", "Score a CSV with a model file");
    add_common(pred, false, false);
    pred->add_option("--model", model_path, "Model file");
    pred->add_option("--input", input, "Input CSV with a header row");
    pred->add_flag("--decompose", decompose_flag, "Add intercept, per-term and score columns");

    auto* synth = app.add_subcommand("synth", "Write a synthetic dataset described by a config file");
    add_common(synth, false, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*train) return cmd_train(c, backend);
        if (*bench) return cmd_benchmark(c, models, folds, reference);
        if (*plot) return cmd_plot(c, model_path, top_n, shared_y);
        if (*pred) return cmd_predict(c, model_path, input, decompose_flag);
        if (*synth) return cmd_synth(c);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const FitError& e) {
        std::cerr << "fit error: " << e.what() << '\n';
        return kExitFit;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
