#include <doctest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <random>

#include "dncm/baselines.hpp"
#include "dncm/errors.hpp"
#include "support.hpp"

using namespace dncm;
using namespace dncm::baselines;
using testsupport::random_vector;

namespace {

// Full stable sort by distance, then a counted vote.
Label sort_oracle(const data::Dataset& train, const Vector& x, std::size_t k) {
    std::vector<std::size_t> idx(train.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<double> d(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) s += (train[i].features[j] - x[j]) * (train[i].features[j] - x[j]);
        d[i] = std::sqrt(s);
    }
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });
    std::map<Label, int> votes;
    for (std::size_t i = 0; i < k; ++i) ++votes[train[idx[i]].label];
    Label best = votes.begin()->first;
    for (const auto& [label, n] : votes)
        if (n > votes[best]) best = label;
    return best;
}

data::Dataset random_set(std::mt19937_64& rng, std::size_t n, std::size_t dim, int labels) {
    data::Dataset ds;
    for (std::size_t i = 0; i < n; ++i) ds.push_back({random_vector(rng, dim, -1, 1), static_cast<Label>(rng() % labels)});
    return ds;
}

}  // namespace

TEST_CASE("knn degenerate and majority cases") {
    KnnModel one({{{1, 1}, 4}}, 1);
    CHECK(knn_predict(one, Vector{9, 9}) == 4);

    KnnModel three({{{0.0}, 2}, {{0.1}, 9}, {{0.2}, 2}, {{5.0}, 9}}, 3);
    CHECK(knn_predict(three, Vector{0.1}) == 2);
}

TEST_CASE("knn tie rules") {
    // Two samples at equal distance: insertion order decides which is nearest.
    KnnModel m({{{1.0}, 8}, {{-1.0}, 3}}, 1);
    CHECK(m.nearest(Vector{0.0}, 2) == std::vector<std::size_t>{0, 1});
    CHECK(knn_predict(m, Vector{0.0}) == 8);
    // A 1-1 vote goes to the smaller label.
    m.set_k(2);
    CHECK(knn_predict(m, Vector{0.0}) == 3);
}

TEST_CASE("knn agrees with a full-sort oracle") {
    std::mt19937_64 rng(41);
    const auto train = random_set(rng, 300, 4, 6);
    for (std::size_t k : {1, 3, 5, 7}) {
        KnnModel m(train, k);
        for (int q = 0; q < 125; ++q) {
            const auto x = random_vector(rng, 4, -1, 1);
            CHECK(knn_predict(m, x) == sort_oracle(train, x, k));
        }
    }
}

TEST_CASE("knn errors") {
    KnnModel empty(3);
    CHECK_THROWS_AS(knn_predict(empty, Vector{1.0}), NoDataError);
    KnnModel small({{{1.0}, 0}, {{2.0}, 1}}, 3);
    CHECK_THROWS_AS(knn_predict(small, Vector{1.0}), InvalidInput);
    KnnModel m({{{1.0, 2.0}, 0}}, 1);
    CHECK_THROWS_AS(knn_predict(m, Vector{1.0}), InvalidInput);
    CHECK_THROWS_AS(m.add({{{1.0}, 0}}), InvalidInput);
    CHECK_THROWS_AS(m.set_k(0), InvalidInput);
}

TEST_CASE("knn growth") {
    std::mt19937_64 rng(42);
    KnnModel m(random_set(rng, 50, 3, 4), 1);
    const auto extra = random_set(rng, 7, 3, 1);
    knn_add(m, {{Vector{40, 40, 40}, 99}});
    CHECK(m.size() == 51);
    knn_add(m, extra);
    CHECK(m.size() == 58);
    CHECK(knn_predict(m, Vector{40, 40, 40}) == 99);
}

TEST_CASE("raw ncm basics") {
    auto m = raw_ncm_fit({{{0, 0}, 1}, {{2, 0}, 1}, {{10, 0}, 6}, {{-4, 0}, 0}});
    CHECK(m.registry.at(1).mean == Vector{1, 0});
    CHECK(raw_ncm_predict(m, Vector{10, 0}) == 6);
    CHECK(raw_ncm_predict(m, Vector{-1.5, 0}) == 0);  // equidistant from labels 0 and 1
    raw_ncm_add(m, {{{50, 50}, 12}});
    CHECK(raw_ncm_predict(m, Vector{50, 50}) == 12);
    CHECK_THROWS_AS(raw_ncm_predict(RawNcmModel{}, Vector{1, 2}), NoClassesError);
}

TEST_CASE("raw ncm matches an argmin oracle and batch means") {
    std::mt19937_64 rng(43);
    const auto first = random_set(rng, 100, 5, 4);
    const auto second = random_set(rng, 150, 5, 7);
    auto m = raw_ncm_fit(first);
    raw_ncm_add(m, second);

    auto all = first;
    all.insert(all.end(), second.begin(), second.end());
    std::map<Label, Vector> sums;
    std::map<Label, double> counts;
    for (const auto& s : all) {
        auto& acc = sums.try_emplace(s.label, Vector(5, 0.0)).first->second;
        for (std::size_t d = 0; d < 5; ++d) acc[d] += s.features[d];
        counts[s.label] += 1;
    }
    for (auto& [label, acc] : sums)
        for (std::size_t d = 0; d < 5; ++d) CHECK(std::abs(m.registry.at(label).mean[d] - acc[d] / counts[label]) <= 1e-9);

    for (int q = 0; q < 300; ++q) {
        const auto x = random_vector(rng, 5, -1, 1);
        Label best = -1;
        double best_d = 0.0;
        for (const auto& [label, e] : m.registry.entries()) {
            const double d = squared_distance(x, e.mean);
            if (best < 0 || d < best_d) {
                best = label;
                best_d = d;
            }
        }
        CHECK(raw_ncm_predict(m, x) == best);
    }
}
