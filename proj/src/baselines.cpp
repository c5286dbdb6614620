#include "dncm/baselines.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <string>

#include "dncm/errors.hpp"

namespace dncm::baselines {

KnnModel::KnnModel(const data::Dataset& samples, std::size_t k) : k_(k) {
    if (k == 0) throw InvalidInput("knn: k must be positive");
    add(samples);
}

void KnnModel::set_k(std::size_t k) {
    if (k == 0) throw InvalidInput("knn: k must be positive");
    k_ = k;
}

void KnnModel::add(const data::Dataset& samples) {
    if (samples.empty()) return;
    const std::size_t dim = dim_ ? dim_ : samples.front().features.size();
    if (dim == 0) throw InvalidInput("knn: empty feature vectors");
    for (const auto& s : samples)
        if (s.features.size() != dim)
            throw InvalidInput("knn: sample has " + std::to_string(s.features.size()) + " values, store holds " +
                               std::to_string(dim));
    dim_ = dim;
    points_.reserve(points_.size() + samples.size() * dim);
    for (const auto& s : samples) {
        points_.insert(points_.end(), s.features.begin(), s.features.end());
        labels_.push_back(s.label);
    }
}

std::vector<std::size_t> KnnModel::nearest(std::span<const double> x, std::size_t count) const {
    if (empty()) throw NoDataError("knn: model holds no samples");
    if (x.size() != dim_)
        throw InvalidInput("knn: query has " + std::to_string(x.size()) + " values, store holds " + std::to_string(dim_));
    if (count > size()) throw InvalidInput("knn: k exceeds the number of stored samples");

    // Full scan. Squared distance orders identically to Euclidean distance.
    std::vector<std::pair<double, std::size_t>> dist(size());
    for (std::size_t i = 0; i < size(); ++i)
        dist[i] = {squared_distance(x, std::span<const double>(points_.data() + i * dim_, dim_)), i};
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(count), dist.end());
    std::vector<std::size_t> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = dist[i].second;
    return out;
}

Label vote(const KnnModel& model, std::span<const std::size_t> neighbours, std::size_t k) {
    if (k == 0 || k > neighbours.size()) throw InvalidInput("knn vote: k out of range");
    std::map<Label, std::size_t> votes;
    for (std::size_t i = 0; i < k; ++i) ++votes[model.label_at(neighbours[i])];
    Label best = votes.begin()->first;
    std::size_t best_votes = 0;
    for (const auto& [label, n] : votes)
        if (n > best_votes) {
            best = label;
            best_votes = n;
        }
    return best;
}

Label knn_predict(const KnnModel& model, std::span<const double> x) {
    const auto nn = model.nearest(x, model.k());
    return vote(model, nn, model.k());
}

void knn_add(KnnModel& model, const data::Dataset& samples) { model.add(samples); }

RawNcmModel raw_ncm_fit(const data::Dataset& samples) {
    return {ncm::class_means_from(data::features_of(samples), data::labels_of(samples))};
}

Label raw_ncm_predict(const RawNcmModel& model, std::span<const double> x) {
    return ncm::predict(x, model.registry, ncm::DistanceMetric::Euclidean);
}

void raw_ncm_add(RawNcmModel& model, const data::Dataset& samples) {
    const std::size_t dim = model.registry.dim();
    for (const auto& s : samples)
        if (dim && s.features.size() != dim) throw InvalidInput("raw ncm: sample dimension mismatch");
    for (const auto& s : samples) model.registry.incremental_update(s.features, s.label);
}

}  // namespace dncm::baselines
