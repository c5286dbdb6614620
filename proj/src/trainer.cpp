#include "dncm/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "dncm/errors.hpp"
#include "dncm/seeding.hpp"

namespace dncm::train {

namespace {

std::string where(std::size_t epoch, std::size_t batch) {
    return "epoch " + std::to_string(epoch + 1) + ", batch " + std::to_string(batch + 1);
}

std::vector<Vector> extract_all(const net::WeightStack& params, std::span<const Vector> inputs) {
    std::vector<Vector> out;
    out.reserve(inputs.size());
    for (const auto& x : inputs) out.push_back(net::extract(params, x));
    return out;
}

double accuracy_of(std::span<const Vector> features, std::span<const Label> labels,
                   const ncm::ClassMeanRegistry& registry, ncm::DistanceMetric metric) {
    if (features.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::size_t hit = 0;
    for (std::size_t i = 0; i < features.size(); ++i)
        if (ncm::predict(features[i], registry, metric) == labels[i]) ++hit;
    return static_cast<double>(hit) / static_cast<double>(features.size());
}

}  // namespace

void validate(const TrainingConfig& c) {
    if (c.batch_size == 0) throw InvalidInput("training config: batch_size must be positive");
    if (!(c.momentum > 0.0 && c.momentum < 1.0)) throw InvalidInput("training config: momentum must lie in (0, 1)");
    if (!(c.learning_rate > 0.0 && c.learning_rate < 0.1))
        throw InvalidInput("training config: learning_rate must lie in (0, 0.1)");
    if (!(c.lr_decay_factor > 0.0 && c.lr_decay_factor <= 1.0))
        throw InvalidInput("training config: lr_decay_factor must lie in (0, 1]");
    if (c.lr_decay_every_epochs == 0) throw InvalidInput("training config: lr_decay_every_epochs must be positive");
    if (c.hidden_widths.empty()) throw InvalidInput("training config: at least one hidden layer is required");
    if (std::find(c.hidden_widths.begin(), c.hidden_widths.end(), 0) != c.hidden_widths.end())
        throw InvalidInput("training config: hidden widths must be positive");
}

double learning_rate_at(const TrainingConfig& config, std::size_t epoch) {
    const auto steps = static_cast<double>(epoch / config.lr_decay_every_epochs);
    return config.learning_rate * std::pow(config.lr_decay_factor, steps);
}

Vector DncmModel::featurize(std::span<const double> raw) const {
    return net::extract(extractor, data::apply_standardization(standardization, raw));
}

Label DncmModel::predict(std::span<const double> raw) const {
    return ncm::predict(featurize(raw), registry, metric);
}

TrainResult initial_train(const data::Dataset& train, const TrainingConfig& config, std::uint64_t seed,
                          const data::Dataset& validation) {
    validate(config);
    if (train.empty()) throw InvalidInput("initial_train: empty training set");

    TrainResult result;
    DncmModel& model = result.model;
    model.metric = config.metric;
    model.standardization = data::fit_standardization(train);

    std::vector<Vector> inputs;
    inputs.reserve(train.size());
    for (const auto& s : train) inputs.push_back(data::apply_standardization(model.standardization, s.features));
    const auto labels = data::labels_of(train);

    std::vector<Vector> val_inputs;
    for (const auto& s : validation) val_inputs.push_back(data::apply_standardization(model.standardization, s.features));
    const auto val_labels = data::labels_of(validation);

    const auto spec = net::relu_stack(inputs.front().size(), config.hidden_widths);
    model.extractor = net::init_weights(spec, seeding::derive(seed, seeding::Stream::WeightInit), config.bias_enabled);
    auto state = net::OptimizerState::fresh(model.extractor, config.momentum, config.learning_rate);
    std::mt19937_64 shuffle_rng(seeding::derive(config.shuffle_seed, seeding::Stream::Shuffle));

    auto features = extract_all(model.extractor, inputs);
    model.registry = ncm::class_means_from(features, labels);

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<Vector> batch_features;
    std::vector<Label> batch_labels;
    std::vector<net::ActivationCache> batch_caches;

    for (std::size_t epoch = 0; epoch < config.max_epoch; ++epoch) {
        state.learning_rate = learning_rate_at(config, epoch);
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        double epoch_loss = 0.0;
        for (std::size_t start = 0, batch = 0; start < order.size(); start += config.batch_size, ++batch) {
            const std::size_t stop = std::min(start + config.batch_size, order.size());
            batch_features.clear();
            batch_labels.clear();
            batch_caches.clear();
            for (std::size_t k = start; k < stop; ++k) {
                auto fr = net::forward(model.extractor, inputs[order[k]]);
                batch_features.push_back(std::move(fr.feature));
                batch_caches.push_back(std::move(fr.cache));
                batch_labels.push_back(labels[order[k]]);
            }

            // Means are held fixed for the whole epoch.
            const auto lg = ncm::loss_and_grad(batch_features, batch_labels, model.registry, config.metric);
            if (!std::isfinite(lg.loss)) throw TrainingDiverged("initial_train: non-finite loss at " + where(epoch, batch));

            auto grads = net::GradientStack::zeros_like(model.extractor);
            for (std::size_t k = 0; k < batch_caches.size(); ++k)
                grads.accumulate(net::backward(model.extractor, batch_caches[k], lg.grads[k]));
            try {
                net::sgd_momentum_step(model.extractor, grads, state);
            } catch (const TrainingDiverged& e) {
                throw TrainingDiverged(std::string("initial_train: ") + e.what() + " at " + where(epoch, batch));
            }
            epoch_loss += lg.loss;
        }

        features = extract_all(model.extractor, inputs);
        model.registry = ncm::class_means_from(features, labels);

        EpochStats stats;
        stats.epoch = epoch + 1;
        stats.learning_rate = state.learning_rate;
        stats.mean_loss = epoch_loss / static_cast<double>(train.size());
        stats.train_accuracy = accuracy_of(features, labels, model.registry, config.metric);
        if (!val_inputs.empty()) {
            const auto val_features = extract_all(model.extractor, val_inputs);
            std::vector<Vector> known;
            std::vector<Label> known_labels;
            for (std::size_t i = 0; i < val_features.size(); ++i)
                if (model.registry.contains(val_labels[i])) {
                    known.push_back(val_features[i]);
                    known_labels.push_back(val_labels[i]);
                }
            stats.validation_accuracy = accuracy_of(known, known_labels, model.registry, config.metric);
        } else {
            stats.validation_accuracy = std::numeric_limits<double>::quiet_NaN();
        }
        result.report.epochs.push_back(stats);
    }
    return result;
}

void updating_train(DncmModel& model, const data::Dataset& stream) {
    const std::size_t dim = model.extractor.input_dim();
    for (const auto& s : stream)
        if (s.features.size() != dim)
            throw InvalidInput("updating_train: sample has " + std::to_string(s.features.size()) +
                               " values, model expects " + std::to_string(dim));
    for (const auto& s : stream) model.registry.incremental_update(model.featurize(s.features), s.label);
}

Evaluation evaluate(const DncmModel& model, const data::Dataset& ds) {
    if (ds.empty()) throw InvalidInput("evaluate: empty dataset");
    for (const auto& s : ds)
        if (!model.registry.contains(s.label)) throw UnknownClassError(s.label);
    return evaluate_with(ds, [&](const Vector& x) { return model.predict(x); });
}

}  // namespace dncm::train
