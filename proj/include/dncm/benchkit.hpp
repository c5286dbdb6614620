#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dncm/baselines.hpp"
#include "dncm/datakit.hpp"
#include "dncm/errors.hpp"
#include "dncm/trainer.hpp"

namespace dncm::bench {

enum class Method { DNCM, KNN, RawNCM };
enum class SweepVariable { NewClassCount, SamplesPerNewClass, InitialClassCount };

std::string_view method_name(Method m);
Method parse_method(std::string_view name);
std::string_view sweep_name(SweepVariable v);
// Accepts "new-classes", "samples", "initial-classes".
SweepVariable parse_sweep(std::string_view name);
inline constexpr const char* kValidSweeps = "new-classes, samples, initial-classes";

struct SweepSpec {
    SweepVariable variable = SweepVariable::NewClassCount;
    // Strictly increasing sweep positions along `variable`.
    std::vector<std::size_t> values;
    std::size_t trials = 30;
    std::size_t train_samples_per_new_class = 20;
    // SamplesPerNewClass: new classes integrated; 0 means the whole pool.
    std::size_t new_class_count = 0;
    // InitialClassCount: new-class counts swept for each initial model; empty means the whole pool.
    std::vector<std::size_t> new_class_values;
    std::vector<Method> methods{Method::DNCM, Method::KNN, Method::RawNCM};
    std::uint64_t seed = 0;
    // Test on initial + integrated classes (true) or integrated classes only.
    bool include_initial_in_test = true;
    std::vector<std::size_t> knn_k_grid{1, 3, 5, 7, 9};
    std::size_t min_test_per_class = 480;
    bool measure_latency = true;
    std::size_t latency_repetitions = 5;
    std::size_t latency_queries = 200;
    bool build_class_table = false;
    // Worker threads for independent trials; 0 picks the hardware concurrency.
    std::size_t threads = 0;
};

// Inputs shared by every sweep.
struct BenchData {
    data::Dataset initial;      // pool of initial classes
    data::Dataset incremental;  // pool of new classes
    data::SplitSpec split;
    train::TrainingConfig training;
};

struct SweepRow {
    Method method = Method::DNCM;
    std::size_t initial_classes = 0;
    std::size_t new_classes = 0;
    std::size_t samples_per_new_class = 0;
    double mean_accuracy = 0.0;
    double accuracy_std = 0.0;  // sample deviation across trials, 0 for one trial
    double latency_seconds = 0.0;  // median per-query predict latency, NaN when not measured
    std::vector<double> trial_accuracies;
};

struct ClassAccuracyTable {
    std::vector<std::string> methods;
    std::vector<Label> labels;
    std::vector<std::vector<double>> accuracy;  // [label row][method column]
    std::vector<double> averages;               // column means over rows
};

struct SweepReport {
    SweepVariable variable = SweepVariable::NewClassCount;
    std::vector<SweepRow> rows;
    std::map<std::string, std::string> environment;
    std::vector<std::string> warnings;
    std::map<std::size_t, std::size_t> selected_knn_k;  // per initial-class count
    std::optional<ClassAccuracyTable> class_table;

    // First row matching; throws InvalidInput when absent.
    const SweepRow& find(Method m, std::size_t initial_classes, std::size_t new_classes,
                         std::size_t samples_per_new_class) const;
};

void validate(const SweepSpec& spec, const BenchData& data);

SweepReport run_new_class_sweep(const SweepSpec& spec, const BenchData& data);
SweepReport run_sample_size_sweep(const SweepSpec& spec, const BenchData& data);
SweepReport run_initial_class_sweep(const SweepSpec& spec, const BenchData& data);
SweepReport run_sweep(const SweepSpec& spec, const BenchData& data);

// Training draws and test set for one trial; exposed for tests.
struct TrialDraw {
    data::Dataset train;  // new-class training samples, grouped by class
    data::Dataset test;
};
TrialDraw draw_trial(const data::Dataset& incremental_pool, std::span<const Label> new_labels,
                     std::size_t samples_per_class, const data::Dataset& initial_test, bool include_initial,
                     std::uint64_t trial_seed);

// Seed of trial `trial` under the sweep seed.
std::uint64_t trial_seed(std::uint64_t seed, std::size_t trial);

struct LatencyStats {
    double median_seconds = 0.0;  // per query
    double min_seconds = 0.0;
    double max_seconds = 0.0;
    std::size_t repetitions = 0;
};

// Median over `repetitions` timed passes, after one untimed warm-up pass.
template <typename Predictor>
LatencyStats measure_predict_latency(Predictor&& predict_one, std::span<const Vector> queries,
                                     std::size_t repetitions);

struct NamedPredictor {
    std::string name;
    std::function<Label(std::span<const double>)> predict;
};

ClassAccuracyTable build_class_accuracy_table(std::span<const NamedPredictor> models, const data::Dataset& test);

void write_class_accuracy_csv(std::ostream& out, const ClassAccuracyTable& table);

// Long format: sweep,initial_classes,new_classes,samples_per_new_class,method,statistic,value
void write_sweep_csv(std::ostream& out, const SweepReport& report);
void write_sweep_metadata(std::ostream& out, const SweepReport& report, const SweepSpec& spec,
                          const BenchData& data);
std::string report_basename(SweepVariable v);

std::map<std::string, std::string> environment_info();

template <typename Predictor>
LatencyStats measure_predict_latency(Predictor&& predict_one, std::span<const Vector> queries,
                                     std::size_t repetitions) {
    if (repetitions < 3) throw InvalidInput("latency: at least 3 repetitions are required");
    if (queries.empty()) throw InvalidInput("latency: no queries");
    using clock = std::chrono::steady_clock;
    volatile Label sink = 0;
    for (const auto& q : queries) sink = sink + predict_one(q);

    std::vector<double> per_query;
    per_query.reserve(repetitions);
    for (std::size_t r = 0; r < repetitions; ++r) {
        const auto start = clock::now();
        for (const auto& q : queries) sink = sink + predict_one(q);
        const std::chrono::duration<double> elapsed = clock::now() - start;
        per_query.push_back(elapsed.count() / static_cast<double>(queries.size()));
    }
    std::sort(per_query.begin(), per_query.end());
    LatencyStats stats;
    stats.repetitions = repetitions;
    stats.min_seconds = per_query.front();
    stats.max_seconds = per_query.back();
    const std::size_t mid = per_query.size() / 2;
    stats.median_seconds =
        per_query.size() % 2 ? per_query[mid] : 0.5 * (per_query[mid - 1] + per_query[mid]);
    return stats;
}

}  // namespace dncm::bench
