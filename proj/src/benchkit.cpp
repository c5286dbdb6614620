#include "dncm/benchkit.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <random>
#include <thread>

#include <json.hpp>

#include "dncm/seeding.hpp"
#include "dncm/text_io.hpp"

namespace dncm::bench {

namespace {

constexpr std::size_t kKnnFallbackK = 5;

struct Prepared {
    std::size_t initial_classes = 0;
    data::Split split;
    data::StandardizationStats stats;
    std::optional<train::DncmModel> dncm;
    baselines::KnnModel knn;
    baselines::RawNcmModel raw;
};

bool wants(const SweepSpec& spec, Method m) {
    return std::find(spec.methods.begin(), spec.methods.end(), m) != spec.methods.end();
}

std::map<Label, std::size_t> class_sizes(const data::Dataset& ds) {
    std::map<Label, std::size_t> sizes;
    for (const auto& s : ds) ++sizes[s.label];
    return sizes;
}

std::vector<Label> first_labels(const std::vector<Label>& labels, std::size_t n) {
    return {labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n)};
}

std::size_t select_k(const baselines::KnnModel& knn, const data::Dataset& validation, std::span<const std::size_t> grid) {
    std::vector<std::size_t> usable;
    for (std::size_t k : grid)
        if (k >= 1 && k <= knn.size()) usable.push_back(k);
    if (usable.empty()) return std::min(kKnnFallbackK, knn.size());
    if (validation.empty()) {
        const auto it = std::find(usable.begin(), usable.end(), kKnnFallbackK);
        return it != usable.end() ? *it : usable.front();
    }
    const std::size_t max_k = *std::max_element(usable.begin(), usable.end());
    std::vector<std::size_t> hits(usable.size(), 0);
    for (const auto& s : validation) {
        const auto nn = knn.nearest(s.features, max_k);
        for (std::size_t i = 0; i < usable.size(); ++i)
            if (baselines::vote(knn, nn, usable[i]) == s.label) ++hits[i];
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < usable.size(); ++i)
        if (hits[i] > hits[best] || (hits[i] == hits[best] && usable[i] < usable[best])) best = i;
    return usable[best];
}

Prepared prepare(const data::Dataset& initial, const BenchData& bd, const SweepSpec& spec) {
    Prepared p;
    p.initial_classes = data::distinct_labels(initial).size();
    p.split = data::split(initial, bd.split);
    if (p.split.train.empty()) throw InvalidInput("bench: initial training split is empty");
    p.stats = data::fit_standardization(p.split.train);
    if (wants(spec, Method::DNCM))
        p.dncm = train::initial_train(p.split.train, bd.training, spec.seed, p.split.validation).model;
    const auto train_std = data::apply_standardization(p.stats, p.split.train);
    if (wants(spec, Method::KNN)) {
        p.knn = baselines::KnnModel(train_std, 1);
        p.knn.set_k(select_k(p.knn, data::apply_standardization(p.stats, p.split.validation), spec.knn_k_grid));
    }
    if (wants(spec, Method::RawNCM)) p.raw = baselines::raw_ncm_fit(train_std);
    return p;
}

// Models after integrating one trial's draws; each method only touches its own copy.
struct TrialModels {
    std::optional<train::DncmModel> dncm;
    baselines::KnnModel knn;
    baselines::RawNcmModel raw;
};

TrialModels integrate(const Prepared& p, const SweepSpec& spec, const data::Dataset& train_draw) {
    TrialModels m;
    if (wants(spec, Method::DNCM)) {
        m.dncm = *p.dncm;
        train::updating_train(*m.dncm, train_draw);
    }
    const bool baselines_wanted = wants(spec, Method::KNN) || wants(spec, Method::RawNCM);
    const auto train_std = baselines_wanted ? data::apply_standardization(p.stats, train_draw) : data::Dataset{};
    if (wants(spec, Method::KNN)) {
        m.knn = p.knn;
        baselines::knn_add(m.knn, train_std);
    }
    if (wants(spec, Method::RawNCM)) {
        m.raw = p.raw;
        baselines::raw_ncm_add(m.raw, train_std);
    }
    return m;
}

double accuracy_for(Method method, const TrialModels& m, const data::Dataset& test, const data::Dataset& test_std) {
    switch (method) {
        case Method::DNCM:
            return train::evaluate(*m.dncm, test).accuracy;
        case Method::KNN:
            return train::evaluate_with(test_std, [&](const Vector& x) { return baselines::knn_predict(m.knn, x); })
                .accuracy;
        case Method::RawNCM:
            return train::evaluate_with(test_std, [&](const Vector& x) { return baselines::raw_ncm_predict(m.raw, x); })
                .accuracy;
    }
    return 0.0;
}

NamedPredictor predictor_for(Method method, const TrialModels& m, const data::StandardizationStats& stats) {
    switch (method) {
        case Method::DNCM:
            return {"DNCM", [&m](std::span<const double> x) { return m.dncm->predict(x); }};
        case Method::KNN:
            return {"KNN", [&m, &stats](std::span<const double> x) {
                        return baselines::knn_predict(m.knn, data::apply_standardization(stats, x));
                    }};
        case Method::RawNCM:
            return {"RawNCM", [&m, &stats](std::span<const double> x) {
                        return baselines::raw_ncm_predict(m.raw, data::apply_standardization(stats, x));
                    }};
    }
    throw InvalidInput("unknown method");
}

template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> workers;
    for (std::size_t t = 0; t < threads; ++t)
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    for (auto& w : workers) w.join();
    if (failure) std::rethrow_exception(failure);
}

struct Combo {
    std::size_t new_classes;
    std::size_t samples;
};

void run_grid(const Prepared& p, const data::Dataset& pool, const std::vector<Label>& pool_labels,
              const std::vector<Combo>& combos, const SweepSpec& spec, SweepReport& report) {
    const auto initial_test_std = data::apply_standardization(p.stats, p.split.test);
    for (const auto& combo : combos) {
        const auto new_labels = first_labels(pool_labels, combo.new_classes);
        std::vector<std::vector<double>> acc(spec.trials, std::vector<double>(spec.methods.size(), 0.0));

        parallel_for(spec.trials, spec.threads, [&](std::size_t trial) {
            const auto draw = draw_trial(pool, new_labels, combo.samples, p.split.test, spec.include_initial_in_test,
                                         trial_seed(spec.seed, trial));
            const auto models = integrate(p, spec, draw.train);
            const auto test_std = data::apply_standardization(p.stats, draw.test);
            for (std::size_t mi = 0; mi < spec.methods.size(); ++mi)
                acc[trial][mi] = accuracy_for(spec.methods[mi], models, draw.test, test_std);
        });

        std::vector<double> latency(spec.methods.size(), std::numeric_limits<double>::quiet_NaN());
        if (spec.measure_latency) {
            const auto draw = draw_trial(pool, new_labels, combo.samples, p.split.test, spec.include_initial_in_test,
                                         trial_seed(spec.seed, 0));
            const auto models = integrate(p, spec, draw.train);
            const std::size_t nq = std::min(spec.latency_queries, draw.test.size());
            std::vector<Vector> raw_q;
            std::vector<Vector> std_q;
            for (std::size_t i = 0; i < nq; ++i) {
                raw_q.push_back(draw.test[i].features);
                std_q.push_back(data::apply_standardization(p.stats, draw.test[i].features));
            }
            for (std::size_t mi = 0; mi < spec.methods.size(); ++mi) {
                LatencyStats ls;
                switch (spec.methods[mi]) {
                    case Method::DNCM:
                        ls = measure_predict_latency([&](const Vector& x) { return models.dncm->predict(x); }, raw_q,
                                                     spec.latency_repetitions);
                        break;
                    case Method::KNN:
                        ls = measure_predict_latency([&](const Vector& x) { return baselines::knn_predict(models.knn, x); },
                                                     std_q, spec.latency_repetitions);
                        break;
                    case Method::RawNCM:
                        ls = measure_predict_latency(
                            [&](const Vector& x) { return baselines::raw_ncm_predict(models.raw, x); }, std_q,
                            spec.latency_repetitions);
                        break;
                }
                latency[mi] = ls.median_seconds;
            }
        }

        for (std::size_t mi = 0; mi < spec.methods.size(); ++mi) {
            SweepRow row;
            row.method = spec.methods[mi];
            row.initial_classes = p.initial_classes;
            row.new_classes = combo.new_classes;
            row.samples_per_new_class = combo.samples;
            for (std::size_t t = 0; t < spec.trials; ++t) row.trial_accuracies.push_back(acc[t][mi]);
            const double n = static_cast<double>(spec.trials);
            row.mean_accuracy = std::accumulate(row.trial_accuracies.begin(), row.trial_accuracies.end(), 0.0) / n;
            if (spec.trials > 1) {
                double ss = 0.0;
                for (double a : row.trial_accuracies) ss += (a - row.mean_accuracy) * (a - row.mean_accuracy);
                row.accuracy_std = std::sqrt(ss / (n - 1.0));
            }
            row.latency_seconds = latency[mi];
            report.rows.push_back(std::move(row));
        }
    }

    if (spec.build_class_table && !combos.empty()) {
        const auto& combo = combos.back();
        const auto draw = draw_trial(pool, first_labels(pool_labels, combo.new_classes), combo.samples, p.split.test,
                                     spec.include_initial_in_test, trial_seed(spec.seed, 0));
        const auto models = integrate(p, spec, draw.train);
        std::vector<NamedPredictor> predictors;
        for (Method m : spec.methods) predictors.push_back(predictor_for(m, models, p.stats));
        report.class_table = build_class_accuracy_table(predictors, draw.test);
    }
}

void add_test_size_warnings(const SweepSpec& spec, const data::Dataset& pool, std::size_t max_samples,
                            std::size_t new_classes, SweepReport& report) {
    const auto sizes = class_sizes(pool);
    std::size_t i = 0;
    for (const auto& [label, n] : sizes) {
        if (i++ >= new_classes) break;
        if (n - max_samples < spec.min_test_per_class) {
            report.warnings.push_back("test pool of class " + std::to_string(label) + " has " +
                                      std::to_string(n - max_samples) + " samples, below the floor of " +
                                      std::to_string(spec.min_test_per_class));
        }
    }
}

}  // namespace

std::string_view method_name(Method m) {
    switch (m) {
        case Method::DNCM: return "DNCM";
        case Method::KNN: return "KNN";
        case Method::RawNCM: return "RawNCM";
    }
    return "?";
}

Method parse_method(std::string_view name) {
    if (name == "DNCM" || name == "dncm") return Method::DNCM;
    if (name == "KNN" || name == "knn") return Method::KNN;
    if (name == "RawNCM" || name == "rawncm" || name == "raw-ncm" || name == "ncm") return Method::RawNCM;
    throw InvalidInput("unknown method '" + std::string(name) + "' (valid: DNCM, KNN, RawNCM)");
}

std::string_view sweep_name(SweepVariable v) {
    switch (v) {
        case SweepVariable::NewClassCount: return "new-classes";
        case SweepVariable::SamplesPerNewClass: return "samples";
        case SweepVariable::InitialClassCount: return "initial-classes";
    }
    return "?";
}

SweepVariable parse_sweep(std::string_view name) {
    if (name == "new-classes") return SweepVariable::NewClassCount;
    if (name == "samples") return SweepVariable::SamplesPerNewClass;
    if (name == "initial-classes") return SweepVariable::InitialClassCount;
    throw InvalidInput("unknown sweep '" + std::string(name) + "' (valid: " + kValidSweeps + ")");
}

std::string report_basename(SweepVariable v) { return "sweep_" + std::string(sweep_name(v)); }

const SweepRow& SweepReport::find(Method m, std::size_t initial_classes, std::size_t new_classes,
                                  std::size_t samples_per_new_class) const {
    for (const auto& r : rows)
        if (r.method == m && r.initial_classes == initial_classes && r.new_classes == new_classes &&
            r.samples_per_new_class == samples_per_new_class)
            return r;
    throw InvalidInput("sweep report has no row for " + std::string(method_name(m)) + " at (" +
                       std::to_string(initial_classes) + ", " + std::to_string(new_classes) + ", " +
                       std::to_string(samples_per_new_class) + ")");
}

std::uint64_t trial_seed(std::uint64_t seed, std::size_t trial) {
    return seeding::derive(seeding::derive(seed, seeding::Stream::Trial), trial);
}

TrialDraw draw_trial(const data::Dataset& pool, std::span<const Label> new_labels, std::size_t samples_per_class,
                     const data::Dataset& initial_test, bool include_initial, std::uint64_t seed) {
    std::map<Label, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < pool.size(); ++i) by_class[pool[i].label].push_back(i);

    TrialDraw draw;
    if (include_initial) draw.test = initial_test;
    for (Label label : new_labels) {
        auto it = by_class.find(label);
        if (it == by_class.end()) throw InvalidInput("bench: class " + std::to_string(label) + " is not in the pool");
        auto idx = it->second;
        if (samples_per_class >= idx.size())
            throw InvalidInput("bench: class " + std::to_string(label) + " has " + std::to_string(idx.size()) +
                               " samples, cannot draw " + std::to_string(samples_per_class) + " and keep a test set");
        // Per-class stream: a smaller draw is a prefix of a larger one within the same trial.
        std::mt19937_64 rng(seeding::derive(seed, static_cast<std::uint64_t>(label)));
        std::shuffle(idx.begin(), idx.end(), rng);
        std::sort(idx.begin() + static_cast<std::ptrdiff_t>(samples_per_class), idx.end());
        for (std::size_t k = 0; k < samples_per_class; ++k) draw.train.push_back(pool[idx[k]]);
        for (std::size_t k = samples_per_class; k < idx.size(); ++k) draw.test.push_back(pool[idx[k]]);
    }
    return draw;
}

void validate(const SweepSpec& spec, const BenchData& bd) {
    if (spec.trials == 0) throw InvalidInput("sweep: trials must be at least 1");
    if (spec.values.empty()) throw InvalidInput("sweep: no sweep values");
    for (std::size_t i = 1; i < spec.values.size(); ++i)
        if (spec.values[i] <= spec.values[i - 1]) throw InvalidInput("sweep: values must be strictly increasing");
    if (spec.methods.empty()) throw InvalidInput("sweep: no methods selected");
    for (std::size_t i = 0; i < spec.methods.size(); ++i)
        for (std::size_t j = i + 1; j < spec.methods.size(); ++j)
            if (spec.methods[i] == spec.methods[j]) throw InvalidInput("sweep: duplicate method");
    if (spec.measure_latency && spec.latency_repetitions < 3)
        throw InvalidInput("sweep: latency needs at least 3 repetitions");
    if (bd.initial.empty()) throw InvalidInput("sweep: initial pool is empty");
    train::validate(bd.training);

    const auto pool_sizes = class_sizes(bd.incremental);
    const std::size_t pool_classes = pool_sizes.size();
    const std::size_t initial_classes = class_sizes(bd.initial).size();
    std::size_t min_pool = std::numeric_limits<std::size_t>::max();
    for (const auto& [_, n] : pool_sizes) min_pool = std::min(min_pool, n);

    auto check_new_classes = [&](std::size_t k) {
        if (k > pool_classes)
            throw InvalidInput("sweep: " + std::to_string(k) + " new classes requested, pool holds " +
                               std::to_string(pool_classes));
        if (k == 0 && !spec.include_initial_in_test)
            throw InvalidInput("sweep: zero new classes leaves an empty test set when initial classes are excluded");
    };
    auto check_samples = [&](std::size_t n, std::size_t k) {
        if (n == 0) throw InvalidInput("sweep: samples per new class must be positive");
        if (k > 0 && n >= min_pool)
            throw InvalidInput("sweep: " + std::to_string(n) + " samples per new class leaves no test samples (pool has " +
                               std::to_string(min_pool) + " per class)");
    };

    switch (spec.variable) {
        case SweepVariable::NewClassCount:
            check_new_classes(spec.values.back());
            if (spec.values.back() > 0) check_samples(spec.train_samples_per_new_class, spec.values.back());
            break;
        case SweepVariable::SamplesPerNewClass: {
            const std::size_t k = spec.new_class_count ? spec.new_class_count : pool_classes;
            check_new_classes(k);
            if (k == 0) throw InvalidInput("sweep: the new-class pool is empty");
            for (std::size_t n : spec.values) check_samples(n, k);
            break;
        }
        case SweepVariable::InitialClassCount: {
            if (spec.values.front() == 0) throw InvalidInput("sweep: initial class counts must be positive");
            if (spec.values.back() > initial_classes)
                throw InvalidInput("sweep: " + std::to_string(spec.values.back()) + " initial classes requested, pool holds " +
                                   std::to_string(initial_classes));
            for (std::size_t i = 1; i < spec.new_class_values.size(); ++i)
                if (spec.new_class_values[i] <= spec.new_class_values[i - 1])
                    throw InvalidInput("sweep: new-class values must be strictly increasing");
            const std::size_t k = spec.new_class_values.empty() ? pool_classes : spec.new_class_values.back();
            check_new_classes(k);
            if (k > 0) check_samples(spec.train_samples_per_new_class, k);
            break;
        }
    }
}

SweepReport run_new_class_sweep(const SweepSpec& spec, const BenchData& bd) {
    if (spec.variable != SweepVariable::NewClassCount) throw InvalidInput("run_new_class_sweep: wrong sweep variable");
    validate(spec, bd);
    SweepReport report;
    report.variable = spec.variable;
    report.environment = environment_info();
    const auto prepared = prepare(bd.initial, bd, spec);
    report.selected_knn_k[prepared.initial_classes] = prepared.knn.k();
    std::vector<Combo> combos;
    for (std::size_t v : spec.values) combos.push_back({v, spec.train_samples_per_new_class});
    add_test_size_warnings(spec, bd.incremental, spec.train_samples_per_new_class, spec.values.back(), report);
    run_grid(prepared, bd.incremental, data::distinct_labels(bd.incremental), combos, spec, report);
    return report;
}

SweepReport run_sample_size_sweep(const SweepSpec& spec, const BenchData& bd) {
    if (spec.variable != SweepVariable::SamplesPerNewClass)
        throw InvalidInput("run_sample_size_sweep: wrong sweep variable");
    validate(spec, bd);
    SweepReport report;
    report.variable = spec.variable;
    report.environment = environment_info();
    const auto pool_labels = data::distinct_labels(bd.incremental);
    const std::size_t k = spec.new_class_count ? spec.new_class_count : pool_labels.size();
    const auto prepared = prepare(bd.initial, bd, spec);
    report.selected_knn_k[prepared.initial_classes] = prepared.knn.k();
    std::vector<Combo> combos;
    for (std::size_t v : spec.values) combos.push_back({k, v});
    add_test_size_warnings(spec, bd.incremental, spec.values.back(), k, report);
    run_grid(prepared, bd.incremental, pool_labels, combos, spec, report);
    return report;
}

SweepReport run_initial_class_sweep(const SweepSpec& spec, const BenchData& bd) {
    if (spec.variable != SweepVariable::InitialClassCount)
        throw InvalidInput("run_initial_class_sweep: wrong sweep variable");
    validate(spec, bd);
    SweepReport report;
    report.variable = spec.variable;
    report.environment = environment_info();
    const auto pool_labels = data::distinct_labels(bd.incremental);
    const auto initial_labels = data::distinct_labels(bd.initial);
    std::vector<std::size_t> new_values = spec.new_class_values;
    if (new_values.empty()) new_values.push_back(pool_labels.size());
    std::vector<Combo> combos;
    for (std::size_t v : new_values) combos.push_back({v, spec.train_samples_per_new_class});
    add_test_size_warnings(spec, bd.incremental, spec.train_samples_per_new_class, new_values.back(), report);

    for (std::size_t k_init : spec.values) {
        const auto subset = data::filter_labels(bd.initial, first_labels(initial_labels, k_init));
        SweepSpec inner = spec;
        inner.build_class_table = spec.build_class_table && k_init == spec.values.back();
        const auto prepared = prepare(subset, bd, inner);
        report.selected_knn_k[prepared.initial_classes] = prepared.knn.k();
        run_grid(prepared, bd.incremental, pool_labels, combos, inner, report);
    }
    return report;
}

SweepReport run_sweep(const SweepSpec& spec, const BenchData& bd) {
    switch (spec.variable) {
        case SweepVariable::NewClassCount: return run_new_class_sweep(spec, bd);
        case SweepVariable::SamplesPerNewClass: return run_sample_size_sweep(spec, bd);
        case SweepVariable::InitialClassCount: return run_initial_class_sweep(spec, bd);
    }
    throw InvalidInput("unknown sweep variable");
}

ClassAccuracyTable build_class_accuracy_table(std::span<const NamedPredictor> models, const data::Dataset& test) {
    if (models.empty()) throw InvalidInput("class table: no models");
    if (test.empty()) throw InvalidInput("class table: empty test set");
    ClassAccuracyTable table;
    table.labels = data::distinct_labels(test);
    for (const auto& m : models) table.methods.push_back(m.name);
    table.accuracy.assign(table.labels.size(), std::vector<double>(models.size(), 0.0));
    for (std::size_t mi = 0; mi < models.size(); ++mi) {
        const auto ev = train::evaluate_with(test, [&](const Vector& x) { return models[mi].predict(x); });
        for (std::size_t r = 0; r < table.labels.size(); ++r) table.accuracy[r][mi] = ev.per_class.at(table.labels[r]);
    }
    table.averages.assign(models.size(), 0.0);
    for (std::size_t mi = 0; mi < models.size(); ++mi) {
        double sum = 0.0;
        for (const auto& row : table.accuracy) sum += row[mi];
        table.averages[mi] = sum / static_cast<double>(table.labels.size());
    }
    return table;
}

void write_class_accuracy_csv(std::ostream& out, const ClassAccuracyTable& table) {
    out << "label";
    for (const auto& m : table.methods) out << ',' << m;
    out << '\n';
    for (std::size_t r = 0; r < table.labels.size(); ++r) {
        out << table.labels[r];
        for (double a : table.accuracy[r]) out << ',' << io::format_double(a);
        out << '\n';
    }
    out << "average";
    for (double a : table.averages) out << ',' << io::format_double(a);
    out << '\n';
}

void write_sweep_csv(std::ostream& out, const SweepReport& report) {
    out << "sweep,initial_classes,new_classes,samples_per_new_class,method,statistic,value\n";
    const std::string sweep(sweep_name(report.variable));
    for (const auto& r : report.rows) {
        const std::string prefix = sweep + ',' + std::to_string(r.initial_classes) + ',' + std::to_string(r.new_classes) +
                                   ',' + std::to_string(r.samples_per_new_class) + ',' +
                                   std::string(method_name(r.method)) + ',';
        out << prefix << "accuracy_mean," << io::format_double(r.mean_accuracy) << '\n';
        out << prefix << "accuracy_std," << io::format_double(r.accuracy_std) << '\n';
        out << prefix << "latency_seconds,"
            << (std::isnan(r.latency_seconds) ? std::string("nan") : io::format_double(r.latency_seconds)) << '\n';
    }
}

void write_sweep_metadata(std::ostream& out, const SweepReport& report, const SweepSpec& spec, const BenchData& bd) {
    nlohmann::json methods = nlohmann::json::array();
    for (Method m : spec.methods) methods.push_back(std::string(method_name(m)));
    nlohmann::json selected_k = nlohmann::json::object();
    for (const auto& [k_init, k] : report.selected_knn_k) selected_k[std::to_string(k_init)] = k;
    const auto& t = bd.training;
    nlohmann::json j = {
        {"format_version", 1},
        {"sweep", std::string(sweep_name(spec.variable))},
        {"spec",
         {{"values", spec.values},
          {"trials", spec.trials},
          {"train_samples_per_new_class", spec.train_samples_per_new_class},
          {"new_class_count", spec.new_class_count},
          {"new_class_values", spec.new_class_values},
          {"methods", methods},
          {"seed", spec.seed},
          {"include_initial_in_test", spec.include_initial_in_test},
          {"knn_k_grid", spec.knn_k_grid},
          {"min_test_per_class", spec.min_test_per_class},
          {"measure_latency", spec.measure_latency},
          {"latency_repetitions", spec.latency_repetitions},
          {"latency_queries", spec.latency_queries}}},
        {"split", {{"train", bd.split.train}, {"validation", bd.split.validation}, {"test", bd.split.test}, {"seed", bd.split.seed}}},
        {"training",
         {{"batch_size", t.batch_size},
          {"momentum", t.momentum},
          {"learning_rate", t.learning_rate},
          {"lr_decay_factor", t.lr_decay_factor},
          {"lr_decay_every_epochs", t.lr_decay_every_epochs},
          {"max_epoch", t.max_epoch},
          {"shuffle_seed", t.shuffle_seed},
          {"metric", std::string(ncm::metric_name(t.metric))},
          {"hidden_widths", t.hidden_widths}}},
        {"data", {{"initial_samples", bd.initial.size()}, {"incremental_samples", bd.incremental.size()}}},
        {"selected_knn_k", selected_k},
        {"warnings", report.warnings},
        {"environment", report.environment},
    };
    out << j.dump(2) << '\n';
}

std::map<std::string, std::string> environment_info() {
    std::map<std::string, std::string> env;
#ifdef __VERSION__
    env["compiler"] = __VERSION__;
#endif
    env["cplusplus"] = std::to_string(__cplusplus);
    env["hardware_concurrency"] = std::to_string(std::thread::hardware_concurrency());
#ifdef NDEBUG
    env["assertions"] = "off";
#else
    env["assertions"] = "on";
#endif
    env["library_version"] = "1.0.0";
    return env;
}

}  // namespace dncm::bench
