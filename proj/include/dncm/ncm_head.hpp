#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string_view>
#include <vector>

#include "dncm/linalg.hpp"

namespace dncm {

// Class labels are arbitrary nonnegative integers, not necessarily contiguous.
using Label = std::int64_t;

}  // namespace dncm

namespace dncm::ncm {

enum class DistanceMetric { Euclidean, SquaredEuclidean };

std::string_view metric_name(DistanceMetric m);
DistanceMetric parse_metric(std::string_view name);

// Guard for the Euclidean gradient at d = 0.
inline constexpr double kEuclideanGradEpsilon = 1e-12;

double distance(std::span<const double> a, std::span<const double> b, DistanceMetric metric);

struct ClassEntry {
    Vector mean;
    std::uint64_t count = 0;

    friend bool operator==(const ClassEntry&, const ClassEntry&) = default;
};

// Per-class running means in feature space. Iteration order is ascending label.
class ClassMeanRegistry {
public:
    ClassMeanRegistry() = default;

    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }
    // 0 while empty.
    std::size_t dim() const { return dim_; }
    bool contains(Label label) const { return entries_.count(label) != 0; }
    const ClassEntry& at(Label label) const;
    const std::map<Label, ClassEntry>& entries() const { return entries_; }
    std::vector<Label> labels() const;

    // Running-mean update: c <- N/(N+1) c + 1/(N+1) v; N <- N + 1.
    void incremental_update(std::span<const double> v, Label label);

    // Replaces (or creates) one entry verbatim; used when loading.
    void set_entry(Label label, Vector mean, std::uint64_t count);

    friend bool operator==(const ClassMeanRegistry&, const ClassMeanRegistry&) = default;

private:
    std::map<Label, ClassEntry> entries_;
    std::size_t dim_ = 0;
};

// Distances or probabilities keyed by label, in ascending label order.
struct LabeledValues {
    std::vector<Label> labels;
    Vector values;
};

ClassMeanRegistry class_means_from(std::span<const Vector> features, std::span<const Label> labels);

LabeledValues distances(std::span<const double> v, const ClassMeanRegistry& registry,
                        DistanceMetric metric = DistanceMetric::Euclidean);

// Softmax over negative distances, shifted by the minimum distance.
LabeledValues class_probabilities(const LabeledValues& d);

Label predict(std::span<const double> v, const ClassMeanRegistry& registry,
              DistanceMetric metric = DistanceMetric::Euclidean);

// Cross-entropy of the distance softmax, summed over samples. Means are constants.
double loss(std::span<const Vector> features, std::span<const Label> labels, const ClassMeanRegistry& registry,
            DistanceMetric metric = DistanceMetric::Euclidean);

struct LossAndGrad {
    double loss = 0.0;
    std::vector<Vector> grads;  // d loss / d feature, one per sample
};

LossAndGrad loss_and_grad(std::span<const Vector> features, std::span<const Label> labels,
                          const ClassMeanRegistry& registry, DistanceMetric metric = DistanceMetric::Euclidean);

std::vector<Vector> loss_grad_wrt_features(std::span<const Vector> features, std::span<const Label> labels,
                                           const ClassMeanRegistry& registry,
                                           DistanceMetric metric = DistanceMetric::Euclidean);

void write_registry(std::ostream& out, const ClassMeanRegistry& registry);
ClassMeanRegistry read_registry(std::istream& in);

}  // namespace dncm::ncm
