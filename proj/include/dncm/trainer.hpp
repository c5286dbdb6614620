#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <vector>

#include "dncm/datakit.hpp"
#include "dncm/feature_net.hpp"
#include "dncm/ncm_head.hpp"

namespace dncm::train {

struct TrainingConfig {
    std::size_t batch_size = 16;
    double momentum = 0.9;
    double learning_rate = 0.001;
    double lr_decay_factor = 0.5;
    std::size_t lr_decay_every_epochs = 15;
    std::size_t max_epoch = 50;
    std::uint64_t shuffle_seed = 0;
    ncm::DistanceMetric metric = ncm::DistanceMetric::Euclidean;
    std::vector<std::size_t> hidden_widths{64, 32, 20};
    bool bias_enabled = true;
};

// Throws InvalidInput when a field leaves its documented range.
void validate(const TrainingConfig& config);

// Learning rate in effect during 0-based `epoch`.
double learning_rate_at(const TrainingConfig& config, std::size_t epoch);

struct DncmModel {
    net::WeightStack extractor;
    ncm::ClassMeanRegistry registry;
    data::StandardizationStats standardization;
    ncm::DistanceMetric metric = ncm::DistanceMetric::Euclidean;

    // Standardize then run the extractor.
    Vector featurize(std::span<const double> raw) const;
    Label predict(std::span<const double> raw) const;
};

struct EpochStats {
    std::size_t epoch = 0;  // 1-based
    double learning_rate = 0.0;
    double mean_loss = 0.0;
    double train_accuracy = 0.0;
    // NaN when no validation set was supplied.
    double validation_accuracy = 0.0;
};

struct TrainReport {
    std::vector<EpochStats> epochs;
};

struct TrainResult {
    DncmModel model;
    TrainReport report;
};

// Initial training phase. Standardization is fitted on `train`; the weight
// initialization seed is `seed`, minibatch shuffling uses config.shuffle_seed.
// Class means are recomputed from the current weights at the start of every
// epoch and held fixed across that epoch's minibatches. The stored registry is
// recomputed once more from the final weights.
TrainResult initial_train(const data::Dataset& train, const TrainingConfig& config, std::uint64_t seed,
                          const data::Dataset& validation = {});

// Updating phase: fold each sample into its class mean; the extractor is untouched.
void updating_train(DncmModel& model, const data::Dataset& stream);

struct Evaluation {
    double accuracy = 0.0;
    std::map<Label, double> per_class;
    std::size_t correct = 0;
    std::size_t total = 0;
};

Evaluation evaluate(const DncmModel& model, const data::Dataset& ds);

// Accuracy of any raw-vector classifier over `ds`.
template <typename Predictor>
Evaluation evaluate_with(const data::Dataset& ds, Predictor&& predict_one);

struct ModelMetadata {
    TrainingConfig config;
    std::uint64_t seed = 0;
};

// Model artifact directory: extractor.txt, registry.txt, standardization.txt, metadata.json.
void save_model(const std::filesystem::path& dir, const DncmModel& model, const ModelMetadata& meta);
DncmModel load_model(const std::filesystem::path& dir, ModelMetadata* meta = nullptr);

inline constexpr const char* kExtractorFile = "extractor.txt";
inline constexpr const char* kRegistryFile = "registry.txt";
inline constexpr const char* kStandardizationFile = "standardization.txt";
inline constexpr const char* kMetadataFile = "metadata.json";
inline constexpr int kModelFormatVersion = 1;

template <typename Predictor>
Evaluation evaluate_with(const data::Dataset& ds, Predictor&& predict_one) {
    Evaluation ev;
    std::map<Label, std::pair<std::size_t, std::size_t>> counts;
    for (const auto& s : ds) {
        const bool hit = predict_one(s.features) == s.label;
        auto& [right, seen] = counts[s.label];
        right += hit ? 1 : 0;
        ++seen;
        ev.correct += hit ? 1 : 0;
        ++ev.total;
    }
    ev.accuracy = ev.total ? static_cast<double>(ev.correct) / static_cast<double>(ev.total) : 0.0;
    for (const auto& [label, c] : counts)
        ev.per_class[label] = static_cast<double>(c.first) / static_cast<double>(c.second);
    return ev;
}

}  // namespace dncm::train
