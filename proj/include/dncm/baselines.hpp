#pragma once

#include <span>
#include <vector>

#include "dncm/datakit.hpp"
#include "dncm/ncm_head.hpp"

namespace dncm::baselines {

// Brute-force K-nearest-neighbours over a flat sample store. Growing the
// store is the whole of its "training".
class KnnModel {
public:
    explicit KnnModel(std::size_t k = 5) : k_(k) {}
    KnnModel(const data::Dataset& samples, std::size_t k);

    std::size_t k() const { return k_; }
    void set_k(std::size_t k);
    std::size_t size() const { return labels_.size(); }
    std::size_t dim() const { return dim_; }
    bool empty() const { return labels_.empty(); }

    // Appends in order; insertion order breaks distance ties.
    void add(const data::Dataset& samples);

    // Indices of the `count` nearest stored samples, nearest first.
    std::vector<std::size_t> nearest(std::span<const double> x, std::size_t count) const;
    Label label_at(std::size_t index) const { return labels_[index]; }

private:
    std::size_t k_;
    std::size_t dim_ = 0;
    std::vector<double> points_;
    std::vector<Label> labels_;
};

// Majority vote among the k nearest samples by Euclidean distance; vote ties
// go to the smallest label.
Label knn_predict(const KnnModel& model, std::span<const double> x);

// Majority vote among the first `k` entries of a precomputed neighbour list.
Label vote(const KnnModel& model, std::span<const std::size_t> neighbours, std::size_t k);

void knn_add(KnnModel& model, const data::Dataset& samples);

// Nearest class mean directly in input space.
struct RawNcmModel {
    ncm::ClassMeanRegistry registry;
};

RawNcmModel raw_ncm_fit(const data::Dataset& samples);
Label raw_ncm_predict(const RawNcmModel& model, std::span<const double> x);
void raw_ncm_add(RawNcmModel& model, const data::Dataset& samples);

}  // namespace dncm::baselines
