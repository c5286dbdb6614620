#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "dncm/datakit.hpp"
#include "dncm/errors.hpp"
#include "dncm/seeding.hpp"
#include "dncm/trainer.hpp"
#include "support.hpp"

using namespace dncm;
using namespace dncm::train;

namespace {

data::Dataset blobs(std::size_t classes, std::size_t per_class, std::uint64_t seed, Label first = 0) {
    data::SyntheticSpec s;
    s.num_classes = classes;
    s.samples_per_class = per_class;
    s.drift_slope = 0.0;
    s.first_label = first;
    s.seed = seed;
    return data::generate_synthetic(s);
}

TrainingConfig small_config(std::size_t epochs) {
    TrainingConfig c;
    c.max_epoch = epochs;
    c.hidden_widths = {16, 8};
    c.shuffle_seed = 5;
    return c;
}

std::string serialized(const net::WeightStack& w) {
    std::ostringstream ss;
    net::write_weights(ss, w);
    return ss.str();
}

// Identity extractor on 2-d inputs with unit standardization.
DncmModel identity_model() {
    DncmModel m;
    Matrix eye(2, 2);
    eye(0, 0) = eye(1, 1) = 1.0;
    m.extractor.layers.push_back({{2, 2, net::Activation::Identity}, eye, Vector{0, 0}});
    m.standardization = {{0, 0}, {1, 1}};
    return m;
}

}  // namespace

TEST_CASE("config validation") {
    TrainingConfig c;
    CHECK_NOTHROW(validate(c));
    auto bad = c;
    bad.momentum = 1.0;
    CHECK_THROWS_AS(validate(bad), InvalidInput);
    bad = c;
    bad.learning_rate = 0.1;
    CHECK_THROWS_AS(validate(bad), InvalidInput);
    bad = c;
    bad.lr_decay_factor = 0.0;
    CHECK_THROWS_AS(validate(bad), InvalidInput);
    bad = c;
    bad.batch_size = 0;
    CHECK_THROWS_AS(validate(bad), InvalidInput);
    bad = c;
    bad.lr_decay_every_epochs = 0;
    CHECK_THROWS_AS(validate(bad), InvalidInput);
}

TEST_CASE("learning rate halves every fifteen epochs") {
    const TrainingConfig c;
    for (std::size_t e = 0; e < 50; ++e)
        CHECK(learning_rate_at(c, e) == 0.001 * std::pow(0.5, static_cast<double>(e / 15)));
    CHECK(learning_rate_at(c, 14) == 0.001);
    CHECK(learning_rate_at(c, 15) == 0.0005);
    CHECK(learning_rate_at(c, 45) == 0.000125);
}

TEST_CASE("report records the schedule") {
    auto c = small_config(20);
    c.lr_decay_every_epochs = 4;
    const auto ds = blobs(3, 40, 1);
    const auto r = initial_train(ds, c, 2);
    REQUIRE(r.report.epochs.size() == 20);
    for (std::size_t e = 0; e < 20; ++e) {
        CHECK(r.report.epochs[e].epoch == e + 1);
        CHECK(r.report.epochs[e].learning_rate == learning_rate_at(c, e));
        CHECK(std::isfinite(r.report.epochs[e].mean_loss));
        CHECK(std::isnan(r.report.epochs[e].validation_accuracy));
    }
}

TEST_CASE("zero epochs yields the initialised model") {
    const auto ds = blobs(3, 30, 3);
    const auto c = small_config(0);
    const auto r = initial_train(ds, c, 9);
    CHECK(r.report.epochs.empty());
    const auto spec = net::relu_stack(10, c.hidden_widths);
    CHECK(r.model.extractor == net::init_weights(spec, seeding::derive(9, seeding::Stream::WeightInit)));
    std::vector<Vector> f;
    for (const auto& s : ds) f.push_back(r.model.featurize(s.features));
    CHECK(r.model.registry == ncm::class_means_from(f, data::labels_of(ds)));
}

TEST_CASE("two separable classes are learned perfectly") {
    data::Dataset ds;
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0.0, 0.3);
    for (Label y : {0, 1})
        for (int i = 0; i < 50; ++i) {
            Vector x(10);
            for (auto& v : x) v = (y ? 2.0 : -2.0) + n(rng);
            ds.push_back({x, y});
        }
    TrainingConfig c;
    c.shuffle_seed = 4;
    const auto r = initial_train(ds, c, 4);
    CHECK(evaluate(r.model, ds).accuracy == 1.0);
    CHECK(r.report.epochs.back().train_accuracy == 1.0);
}

TEST_CASE("training lowers the loss") {
    const auto ds = blobs(5, 60, 6);
    auto c = small_config(15);
    const auto r = initial_train(ds, c, 6, blobs(5, 10, 6));
    CHECK(r.report.epochs.back().mean_loss < r.report.epochs.front().mean_loss);
    CHECK(std::isfinite(r.report.epochs.back().validation_accuracy));
}

TEST_CASE("squared euclidean metric trains") {
    const auto ds = blobs(4, 60, 8);
    auto c = small_config(15);
    c.metric = ncm::DistanceMetric::SquaredEuclidean;
    c.learning_rate = 0.0005;
    const auto r = initial_train(ds, c, 8);
    CHECK(r.model.metric == ncm::DistanceMetric::SquaredEuclidean);
    CHECK(r.report.epochs.back().mean_loss < r.report.epochs.front().mean_loss);
    CHECK(evaluate(r.model, ds).accuracy >= 0.9);
}

TEST_CASE("training without biases keeps them zero") {
    const auto ds = blobs(3, 30, 10);
    auto c = small_config(5);
    c.bias_enabled = false;
    const auto r = initial_train(ds, c, 10);
    for (const auto& l : r.model.extractor.layers)
        for (double b : l.bias) CHECK(b == 0.0);
}

TEST_CASE("training is deterministic") {
    const auto ds = blobs(4, 40, 11);
    const auto c = small_config(6);
    const auto a = initial_train(ds, c, 3);
    const auto b = initial_train(ds, c, 3);
    CHECK(serialized(a.model.extractor) == serialized(b.model.extractor));
    CHECK(a.model.registry == b.model.registry);
    REQUIRE(a.report.epochs.size() == b.report.epochs.size());
    for (std::size_t e = 0; e < a.report.epochs.size(); ++e) {
        CHECK(a.report.epochs[e].mean_loss == b.report.epochs[e].mean_loss);
        CHECK(a.report.epochs[e].train_accuracy == b.report.epochs[e].train_accuracy);
    }
    auto other = c;
    other.shuffle_seed = 6;
    CHECK_FALSE(initial_train(ds, other, 3).model.extractor == a.model.extractor);
}

TEST_CASE("initial training rejects bad input") {
    CHECK_THROWS_AS(initial_train({}, small_config(1), 1), InvalidInput);
    auto c = small_config(1);
    c.momentum = 0.0;
    CHECK_THROWS_AS(initial_train(blobs(2, 5, 1), c, 1), InvalidInput);
}

TEST_CASE("updating leaves the extractor alone") {
    auto model = initial_train(blobs(3, 30, 12), small_config(3), 12).model;
    const auto before = serialized(model.extractor);
    const auto registry = model.registry;

    updating_train(model, {});
    CHECK(model.registry == registry);

    const auto fresh = blobs(1, 20, 13, 40);
    updating_train(model, fresh);
    CHECK(serialized(model.extractor) == before);
    CHECK(model.registry.size() == registry.size() + 1);
    CHECK(model.registry.at(40).count == 20);
    for (Label y : registry.labels()) CHECK(model.registry.at(y) == registry.at(y));
}

TEST_CASE("update order does not matter") {
    const auto base = initial_train(blobs(3, 30, 14), small_config(3), 14).model;
    const auto grouped = blobs(3, 20, 15, 100);
    data::Dataset interleaved;
    for (std::size_t i = 0; i < 20; ++i)
        for (std::size_t k = 0; k < 3; ++k) interleaved.push_back(grouped[k * 20 + i]);

    auto a = base;
    auto b = base;
    updating_train(a, grouped);
    updating_train(b, interleaved);
    std::vector<Vector> f;
    for (const auto& s : grouped) f.push_back(base.featurize(s.features));
    const auto batch = ncm::class_means_from(f, data::labels_of(grouped));
    for (Label y : batch.labels())
        for (std::size_t d = 0; d < batch.dim(); ++d) {
            CHECK(std::abs(a.registry.at(y).mean[d] - batch.at(y).mean[d]) <= 1e-9);
            CHECK(std::abs(b.registry.at(y).mean[d] - batch.at(y).mean[d]) <= 1e-9);
        }
}

TEST_CASE("updating rejects a wrong dimension") {
    auto model = initial_train(blobs(2, 10, 16), small_config(1), 16).model;
    CHECK_THROWS_AS(updating_train(model, {{Vector{1, 2}, 5}}), InvalidInput);
    CHECK_FALSE(model.registry.contains(5));
}

TEST_CASE("evaluate on a hand-built fixture") {
    auto m = identity_model();
    m.registry.set_entry(0, {0, 0}, 1);
    m.registry.set_entry(1, {10, 0}, 1);
    // Seven samples sit by their own mean; three sit by the other one.
    data::Dataset ds{
        {{0.1, 0}, 0}, {{0, 0.2}, 0}, {{-0.3, 0}, 0}, {{1, 1}, 0}, {{9, 0}, 0},
        {{10, 1}, 1},  {{9.5, 0}, 1}, {{11, 0}, 1},   {{0, 0}, 1}, {{2, 0}, 1},
    };
    const auto ev = evaluate(m, ds);
    CHECK(ev.correct == 7);
    CHECK(ev.total == 10);
    CHECK(ev.accuracy == doctest::Approx(0.7));
    CHECK(ev.per_class.at(0) == doctest::Approx(0.8));
    CHECK(ev.per_class.at(1) == doctest::Approx(0.6));

    std::reverse(ds.begin(), ds.end());
    CHECK(evaluate(m, ds).accuracy == ev.accuracy);

    ds.push_back({{0, 0}, 7});
    CHECK_THROWS_AS(evaluate(m, ds), UnknownClassError);
    CHECK_THROWS_AS(evaluate(m, {}), InvalidInput);
}

TEST_CASE("evaluate on samples at their means") {
    auto m = identity_model();
    data::Dataset ds;
    for (Label y = 0; y < 5; ++y) {
        m.registry.set_entry(y, {static_cast<double>(y), static_cast<double>(-y)}, 1);
        ds.push_back({m.registry.at(y).mean, y});
    }
    CHECK(evaluate(m, ds).accuracy == 1.0);
}

TEST_CASE("permuted labels score near chance") {
    const std::size_t K = 5;
    const auto ds = blobs(K, 200, 17);
    auto model = initial_train(ds, small_config(5), 17).model;
    auto shuffled = ds;
    std::mt19937_64 rng(18);
    auto labels = data::labels_of(ds);
    std::shuffle(labels.begin(), labels.end(), rng);
    for (std::size_t i = 0; i < shuffled.size(); ++i) shuffled[i].label = labels[i];
    const double acc = evaluate(model, shuffled).accuracy;
    const double n = static_cast<double>(ds.size());
    const double sigma = std::sqrt((1.0 / K) * (1 - 1.0 / K) / n);
    CHECK(std::abs(acc - 1.0 / K) <= 3 * sigma);
}

TEST_CASE("model artifacts round-trip") {
    testsupport::TempDir dir("model");
    const auto ds = blobs(3, 30, 19);
    auto c = small_config(4);
    const auto model = initial_train(ds, c, 19).model;
    save_model(dir.path(), model, {c, 19});

    ModelMetadata meta;
    const auto back = load_model(dir.path(), &meta);
    CHECK(back.extractor == model.extractor);
    CHECK(back.registry == model.registry);
    CHECK(back.standardization == model.standardization);
    CHECK(meta.seed == 19);
    CHECK(meta.config.hidden_widths == c.hidden_widths);
    CHECK(meta.config.max_epoch == 4);
    for (const auto& s : ds) CHECK(back.predict(s.features) == model.predict(s.features));
    CHECK(evaluate(back, ds).accuracy == evaluate(model, ds).accuracy);

    testsupport::TempDir again("model2");
    save_model(again.path(), back, meta);
    for (const char* f : {kExtractorFile, kRegistryFile, kStandardizationFile, kMetadataFile})
        CHECK(testsupport::read_file(again / f) == testsupport::read_file(dir / f));
}

TEST_CASE("loading a missing model fails") {
    testsupport::TempDir dir("empty");
    CHECK_THROWS_AS(load_model(dir / "nope"), IoError);
}
