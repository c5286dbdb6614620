#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "dncm/benchkit.hpp"
#include "dncm/datakit.hpp"
#include "dncm/errors.hpp"
#include "dncm/seeding.hpp"
#include "dncm/text_io.hpp"
#include "dncm/trainer.hpp"

namespace dncm::cli {

namespace {

namespace fs = std::filesystem;
using seeding::Stream;

struct SyntheticFlags {
    std::size_t classes = 10;
    std::size_t per_class = 500;
    std::size_t new_classes = 0;
    data::SyntheticSpec spec;
};

struct TrainingFlags {
    train::TrainingConfig config;
    std::string metric = "euclidean";
    bool no_bias = false;
    double train_fraction = 0.7;
    double validation_fraction = 0.1;
    double test_fraction = 0.2;
};

void add_synthetic_flags(CLI::App* cmd, SyntheticFlags& f) {
    cmd->add_option("--feature-dim", f.spec.feature_dim, "Sensor vector dimension")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--center-scale", f.spec.center_scale, "Class centers are uniform in [-scale, scale]^dim")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--noise-sigma", f.spec.noise_sigma, "Per-coordinate Gaussian noise deviation")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--drift-slope", f.spec.drift_slope, "Additive drift per sample index along one shared direction")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--min-center-distance", f.spec.min_center_distance, "Minimum pairwise distance between centers")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
}

void add_training_flags(CLI::App* cmd, TrainingFlags& f) {
    auto& c = f.config;
    cmd->add_option("--batch-size", c.batch_size, "Minibatch size")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--momentum", c.momentum, "SGD momentum, in (0, 1)")->capture_default_str();
    cmd->add_option("--learning-rate", c.learning_rate, "Initial learning rate, in (0, 0.1)")->capture_default_str();
    cmd->add_option("--lr-decay-factor", c.lr_decay_factor, "Learning-rate multiplier, in (0, 1]")->capture_default_str();
    cmd->add_option("--lr-decay-every-epochs", c.lr_decay_every_epochs, "Epochs between learning-rate decays")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--max-epoch", c.max_epoch, "Training epochs")->capture_default_str();
    cmd->add_option("--metric", f.metric, "Distance metric")
        ->capture_default_str()
        ->check(CLI::IsMember({"euclidean", "squared-euclidean"}));
    cmd->add_option("--hidden", c.hidden_widths, "Hidden layer widths, comma separated")
        ->delimiter(',')
        ->capture_default_str();
    cmd->add_flag("--no-bias", f.no_bias, "Disable bias terms");
    cmd->add_option("--train-fraction", f.train_fraction, "Training share of each class")->capture_default_str();
    cmd->add_option("--validation-fraction", f.validation_fraction, "Validation share of each class")
        ->capture_default_str();
    cmd->add_option("--test-fraction", f.test_fraction, "Test share of each class")->capture_default_str();
}

train::TrainingConfig resolve(const TrainingFlags& f, std::uint64_t seed) {
    auto c = f.config;
    c.metric = ncm::parse_metric(f.metric);
    c.bias_enabled = !f.no_bias;
    c.shuffle_seed = seeding::derive(seed, Stream::Shuffle);
    return c;
}

data::SplitSpec split_spec(const TrainingFlags& f, std::uint64_t seed) {
    return {f.train_fraction, f.validation_fraction, f.test_fraction, seeding::derive(seed, Stream::Split)};
}

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    return out;
}

std::string percent(double x) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(2);
    s << 100.0 * x << '%';
    return s.str();
}

void write_train_report(const fs::path& path, const train::TrainReport& report) {
    auto out = open_out(path);
    out << "epoch,learning_rate,mean_loss,train_accuracy,validation_accuracy\n";
    for (const auto& e : report.epochs)
        out << e.epoch << ',' << io::format_double(e.learning_rate) << ',' << io::format_double(e.mean_loss) << ','
            << io::format_double(e.train_accuracy) << ','
            << (std::isnan(e.validation_accuracy) ? std::string("nan") : io::format_double(e.validation_accuracy)) << '\n';
}

data::Dataset generate_pools(const SyntheticFlags& f, std::uint64_t seed) {
    auto spec = f.spec;
    spec.num_classes = f.classes + f.new_classes;
    spec.samples_per_class = f.per_class;
    spec.seed = seeding::derive(seed, Stream::Synthetic);
    return data::generate_synthetic(spec);
}

std::pair<data::Dataset, data::Dataset> partition_pools(const data::Dataset& all, std::size_t initial_classes) {
    std::pair<data::Dataset, data::Dataset> pools;
    for (const auto& s : all) (s.label < static_cast<Label>(initial_classes) ? pools.first : pools.second).push_back(s);
    return pools;
}

// gen-data ------------------------------------------------------------------

struct GenDataArgs {
    SyntheticFlags synth;
    std::uint64_t seed = 0;
    std::string out;
    std::string incremental_out;
};

int cmd_gen_data(const GenDataArgs& a, std::ostream& out) {
    if (a.synth.new_classes > 0 && a.incremental_out.empty())
        throw InvalidInput("--incremental-out is required when --new-classes is positive");
    const auto all = generate_pools(a.synth, a.seed);
    const auto [initial, incremental] = partition_pools(all, a.synth.classes);
    {
        auto f = open_out(a.out);
        data::save_csv(initial, f);
        if (!f.flush()) throw IoError("write failed for '" + a.out + "'");
    }
    out << "wrote " << initial.size() << " records (" << a.synth.classes << " classes x " << a.synth.per_class
        << ") to " << a.out << '\n';
    if (a.synth.new_classes > 0) {
        auto f = open_out(a.incremental_out);
        data::save_csv(incremental, f);
        if (!f.flush()) throw IoError("write failed for '" + a.incremental_out + "'");
        out << "wrote " << incremental.size() << " records (" << a.synth.new_classes << " classes x "
            << a.synth.per_class << ") to " << a.incremental_out << '\n';
    }
    return kExitOk;
}

// train ---------------------------------------------------------------------

struct TrainArgs {
    TrainingFlags training;
    std::uint64_t seed = 0;
    std::size_t feature_dim = data::kDefaultFeatureDim;
    std::string data;
    std::string model;
    std::string report;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
    const auto config = resolve(a.training, a.seed);
    train::validate(config);
    const auto ds = data::load_csv(fs::path(a.data), a.feature_dim);
    if (ds.empty()) throw InvalidInput("training data '" + a.data + "' holds no records");
    const auto parts = data::split(ds, split_spec(a.training, a.seed));
    auto result = train::initial_train(parts.train, config, a.seed, parts.validation);
    train::save_model(a.model, result.model, {config, a.seed});
    const fs::path report = a.report.empty() ? fs::path(a.model) / "train_report.csv" : fs::path(a.report);
    write_train_report(report, result.report);

    out << "trained on " << parts.train.size() << " samples, " << result.model.registry.size() << " classes, "
        << config.max_epoch << " epochs (batch " << config.batch_size << ", momentum " << config.momentum << ", lr "
        << config.learning_rate << ")\n";
    if (!result.report.epochs.empty()) {
        const auto& last = result.report.epochs.back();
        out << "final epoch: loss " << last.mean_loss << ", train accuracy " << percent(last.train_accuracy) << '\n';
    }
    if (!parts.test.empty()) out << "test accuracy: " << percent(train::evaluate(result.model, parts.test).accuracy) << '\n';
    out << "model written to " << a.model << ", report to " << report.string() << '\n';
    return kExitOk;
}

// update --------------------------------------------------------------------

struct UpdateArgs {
    std::string model;
    std::string data;
    std::string out;
};

int cmd_update(const UpdateArgs& a, std::ostream& out) {
    train::ModelMetadata meta;
    auto model = train::load_model(a.model, &meta);
    const auto stream = data::load_csv(fs::path(a.data), model.extractor.input_dim());
    const auto before = model.registry;
    train::updating_train(model, stream);
    const std::string target = a.out.empty() ? a.model : a.out;
    train::save_model(target, model, meta);

    std::size_t added = 0;
    for (const auto& [label, entry] : model.registry.entries()) {
        const bool is_new = !before.contains(label);
        const std::uint64_t delta = entry.count - (is_new ? 0 : before.at(label).count);
        if (delta == 0) continue;
        added += is_new ? 1 : 0;
        out << "class " << label << (is_new ? " (new)" : "") << ": +" << delta << " samples, count " << entry.count << '\n';
    }
    out << "integrated " << stream.size() << " samples; " << added << " new classes; registry now holds "
        << model.registry.size() << " classes\n";
    return kExitOk;
}

// eval ----------------------------------------------------------------------

struct EvalArgs {
    std::string model;
    std::string data;
    bool per_class = false;
    std::string out;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
    const auto model = train::load_model(a.model);
    const auto ds = data::load_csv(fs::path(a.data), model.extractor.input_dim());
    const auto ev = train::evaluate(model, ds);
    out << "accuracy: " << io::format_double(ev.accuracy) << " (" << ev.correct << "/" << ev.total << ")\n";
    if (a.per_class) {
        bench::NamedPredictor dncm{"DNCM", [&model](std::span<const double> x) { return model.predict(x); }};
        const auto table = bench::build_class_accuracy_table(std::span(&dncm, 1), ds);
        if (a.out.empty()) {
            bench::write_class_accuracy_csv(out, table);
        } else {
            auto f = open_out(a.out);
            bench::write_class_accuracy_csv(f, table);
            out << "per-class table written to " << a.out << '\n';
        }
    }
    return kExitOk;
}

// bench ---------------------------------------------------------------------

struct BenchArgs {
    std::string sweep;
    std::vector<std::size_t> values;
    std::vector<std::size_t> new_class_values;
    std::vector<std::string> methods{"DNCM", "KNN", "RawNCM"};
    std::vector<std::size_t> knn_k_grid{1, 3, 5, 7, 9};
    bench::SweepSpec spec;
    std::string initial;
    std::string incremental;
    SyntheticFlags synth;
    TrainingFlags training;
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    bool new_only = false;
    bool no_latency = false;
    bool table = false;
};

int cmd_bench(BenchArgs a, std::ostream& out, std::ostream& err) {
    auto spec = a.spec;
    spec.variable = bench::parse_sweep(a.sweep);
    spec.values = a.values;
    spec.new_class_values = a.new_class_values;
    spec.methods.clear();
    for (const auto& m : a.methods) spec.methods.push_back(bench::parse_method(m));
    spec.knn_k_grid = a.knn_k_grid;
    spec.seed = seeding::derive(a.seed, Stream::Trial);
    spec.include_initial_in_test = !a.new_only;
    spec.measure_latency = !a.no_latency;
    spec.build_class_table = a.table;

    bench::BenchData bd;
    if (!a.initial.empty() || !a.incremental.empty()) {
        if (a.initial.empty() || a.incremental.empty())
            throw InvalidInput("--initial and --incremental must be given together");
        bd.initial = data::load_csv(fs::path(a.initial), 0);
        bd.incremental = data::load_csv(fs::path(a.incremental), 0);
    } else {
        if (a.synth.new_classes == 0) a.synth.new_classes = 25;
        std::tie(bd.initial, bd.incremental) = partition_pools(generate_pools(a.synth, a.seed), a.synth.classes);
    }
    bd.split = split_spec(a.training, a.seed);
    bd.training = resolve(a.training, a.seed);

    const auto report = bench::run_sweep(spec, bd);
    for (const auto& w : report.warnings) err << "warning: " << w << '\n';

    const fs::path dir(a.out_dir);
    const auto base = bench::report_basename(spec.variable);
    {
        auto f = open_out(dir / (base + ".csv"));
        bench::write_sweep_csv(f, report);
    }
    {
        auto f = open_out(dir / (base + ".meta.json"));
        bench::write_sweep_metadata(f, report, spec, bd);
    }
    if (report.class_table) {
        auto f = open_out(dir / (base + ".classes.csv"));
        bench::write_class_accuracy_csv(f, *report.class_table);
    }

    out << "method,initial_classes,new_classes,samples_per_new_class,accuracy_mean,accuracy_std,latency_us\n";
    for (const auto& r : report.rows)
        out << bench::method_name(r.method) << ',' << r.initial_classes << ',' << r.new_classes << ','
            << r.samples_per_new_class << ',' << r.mean_accuracy << ',' << r.accuracy_std << ','
            << r.latency_seconds * 1e6 << '\n';
    out << "report written to " << (dir / (base + ".csv")).string() << '\n';
    return kExitOk;
}

// project -------------------------------------------------------------------

struct ProjectArgs {
    std::string data;
    std::string space = "raw";
    std::string model;
    std::string out;
    std::size_t dims = 2;
};

int cmd_project(const ProjectArgs& a, std::ostream& out) {
    std::optional<train::DncmModel> model;
    if (a.space == "feature") {
        if (a.model.empty()) throw InvalidInput("--model is required for --space feature");
        model = train::load_model(a.model);
    }
    const auto ds = data::load_csv(fs::path(a.data), model ? model->extractor.input_dim() : 0);
    std::vector<Vector> points;
    points.reserve(ds.size());
    for (const auto& s : ds) points.push_back(model ? model->featurize(s.features) : s.features);
    const auto result = data::pca_project(points, a.dims);
    auto f = open_out(a.out);
    data::write_pca_csv(f, result, data::labels_of(ds));
    out << "projected " << ds.size() << " points from " << a.space << " space; explained variance";
    for (double r : result.explained_variance_ratio) out << ' ' << r;
    out << "\nwritten to " << a.out << '\n';
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Deep nearest-class-mean incremental classifier", "dncm"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Help for every subcommand");

    GenDataArgs gen;
    auto* gen_cmd = app.add_subcommand("gen-data", "Generate synthetic sensor datasets as CSV");
    gen_cmd->add_option("--classes", gen.synth.classes, "Initial classes")->capture_default_str()->check(CLI::PositiveNumber);
    gen_cmd->add_option("--per-class", gen.synth.per_class, "Samples per class")->capture_default_str()->check(CLI::PositiveNumber);
    gen_cmd->add_option("--new-classes", gen.synth.new_classes, "Classes written to the incremental file")->capture_default_str();
    add_synthetic_flags(gen_cmd, gen.synth);
    gen_cmd->add_option("--seed", gen.seed, "Global seed")->capture_default_str();
    gen_cmd->add_option("--out", gen.out, "Initial dataset CSV")->required();
    gen_cmd->add_option("--incremental-out", gen.incremental_out, "Incremental dataset CSV");

    TrainArgs tr;
    auto* train_cmd = app.add_subcommand("train", "Initial training on a CSV's training split");
    train_cmd->add_option("--data", tr.data, "Initial dataset CSV")->required()->check(CLI::ExistingFile);
    train_cmd->add_option("--model", tr.model, "Output model directory")->required();
    train_cmd->add_option("--report", tr.report, "Per-epoch report CSV (default: <model>/train_report.csv)");
    train_cmd->add_option("--feature-dim", tr.feature_dim, "CSV feature columns (0 infers)")->capture_default_str();
    add_training_flags(train_cmd, tr.training);
    train_cmd->add_option("--seed", tr.seed, "Global seed")->capture_default_str();

    UpdateArgs up;
    auto* update_cmd = app.add_subcommand("update", "Fold new samples into the class means of a trained model");
    update_cmd->add_option("--model", up.model, "Model directory")->required()->check(CLI::ExistingDirectory);
    update_cmd->add_option("--data", up.data, "Update stream CSV")->required()->check(CLI::ExistingFile);
    update_cmd->add_option("--out", up.out, "Output model directory (default: update in place)");

    EvalArgs ev;
    auto* eval_cmd = app.add_subcommand("eval", "Accuracy of a model on a labelled CSV");
    eval_cmd->add_option("--model", ev.model, "Model directory")->required()->check(CLI::ExistingDirectory);
    eval_cmd->add_option("--data", ev.data, "Labelled CSV")->required()->check(CLI::ExistingFile);
    eval_cmd->add_flag("--per-class", ev.per_class, "Emit a per-class accuracy table as CSV");
    eval_cmd->add_option("--out", ev.out, "Write the per-class table here instead of stdout");

    BenchArgs bn;
    auto* bench_cmd = app.add_subcommand("bench", "Accuracy and latency sweeps against KNN and raw-space NCM");
    bench_cmd->add_option("--sweep", bn.sweep, "Sweep variable")
        ->required()
        ->check(CLI::IsMember({"new-classes", "samples", "initial-classes"}));
    bench_cmd->add_option("--values", bn.values, "Sweep values, comma separated, strictly increasing")
        ->required()
        ->delimiter(',');
    bench_cmd->add_option("--trials", bn.spec.trials, "Trials per sweep value")->capture_default_str()->check(CLI::PositiveNumber);
    bench_cmd->add_option("--train-samples-per-new-class", bn.spec.train_samples_per_new_class,
                          "Training draws per new class")
        ->capture_default_str();
    bench_cmd->add_option("--new-class-count", bn.spec.new_class_count,
                          "samples sweep: new classes integrated (0 = whole pool)")
        ->capture_default_str();
    bench_cmd->add_option("--new-class-values", bn.new_class_values,
                          "initial-classes sweep: new-class counts per initial model (default: whole pool)")
        ->delimiter(',');
    bench_cmd->add_option("--methods", bn.methods, "Methods to run")->delimiter(',')->capture_default_str();
    bench_cmd->add_option("--knn-k-grid", bn.knn_k_grid, "Candidate k for KNN, chosen on the validation split")
        ->delimiter(',')
        ->capture_default_str();
    bench_cmd->add_option("--initial", bn.initial, "Initial pool CSV (default: synthetic)")->check(CLI::ExistingFile);
    bench_cmd->add_option("--incremental", bn.incremental, "New-class pool CSV (default: synthetic)")->check(CLI::ExistingFile);
    bench_cmd->add_option("--classes", bn.synth.classes, "Synthetic initial classes")->capture_default_str()->check(CLI::PositiveNumber);
    bench_cmd->add_option("--new-classes", bn.synth.new_classes, "Synthetic new-class pool size (0 = 25)")->capture_default_str();
    bench_cmd->add_option("--per-class", bn.synth.per_class, "Synthetic samples per class")->capture_default_str()->check(CLI::PositiveNumber);
    add_synthetic_flags(bench_cmd, bn.synth);
    add_training_flags(bench_cmd, bn.training);
    bench_cmd->add_flag("--new-only", bn.new_only, "Test on integrated classes only, not initial + integrated");
    bench_cmd->add_flag("--no-latency", bn.no_latency, "Skip latency measurement");
    bench_cmd->add_option("--latency-repetitions", bn.spec.latency_repetitions, "Timed passes per latency median")
        ->capture_default_str();
    bench_cmd->add_option("--latency-queries", bn.spec.latency_queries, "Queries per timed pass")->capture_default_str();
    bench_cmd->add_option("--min-test-per-class", bn.spec.min_test_per_class, "Warn when a class has fewer test samples")
        ->capture_default_str();
    bench_cmd->add_option("--threads", bn.spec.threads, "Worker threads for trials (0 = all cores)")->capture_default_str();
    bench_cmd->add_flag("--table", bn.table, "Also write a per-class accuracy table for the last sweep point");
    bench_cmd->add_option("--seed", bn.seed, "Global seed")->capture_default_str();
    bench_cmd->add_option("--out-dir", bn.out_dir, "Report directory")->capture_default_str();

    ProjectArgs pj;
    auto* project_cmd = app.add_subcommand("project", "PCA projection of raw or feature space to CSV");
    project_cmd->add_option("--data", pj.data, "Labelled CSV")->required()->check(CLI::ExistingFile);
    project_cmd->add_option("--space", pj.space, "Projection space")
        ->capture_default_str()
        ->check(CLI::IsMember({"raw", "feature"}));
    project_cmd->add_option("--model", pj.model, "Model directory (feature space)")->check(CLI::ExistingDirectory);
    project_cmd->add_option("--dims", pj.dims, "Output components")->capture_default_str()->check(CLI::PositiveNumber);
    project_cmd->add_option("--out", pj.out, "Output CSV")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (gen_cmd->parsed()) return cmd_gen_data(gen, out);
        if (train_cmd->parsed()) return cmd_train(tr, out);
        if (update_cmd->parsed()) return cmd_update(up, out);
        if (eval_cmd->parsed()) return cmd_eval(ev, out);
        if (bench_cmd->parsed()) return cmd_bench(bn, out, err);
        if (project_cmd->parsed()) return cmd_project(pj, out);
    } catch (const InvalidInput& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}

}  // namespace dncm::cli
