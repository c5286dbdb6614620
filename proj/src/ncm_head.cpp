#include "dncm/ncm_head.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "dncm/errors.hpp"
#include "dncm/text_io.hpp"

namespace dncm::ncm {

namespace {

constexpr const char* kRegistryMagic = "dncm-registry";
constexpr int kRegistryVersion = 1;

void check_dim(std::size_t got, std::size_t want, const char* where) {
    if (got != want)
        throw InvalidInput(std::string(where) + ": feature has " + std::to_string(got) + " values, registry holds " +
                           std::to_string(want));
}

std::string next_token(std::istream& in, const char* what) {
    std::string tok;
    if (!(in >> tok)) throw InvalidInput(std::string("registry: unexpected end of input reading ") + what);
    return tok;
}

template <typename Int>
Int next_int(std::istream& in, const char* what) {
    const auto tok = next_token(in, what);
    const auto v = io::parse_int<Int>(tok);
    if (!v) throw InvalidInput("registry: bad integer '" + tok + "' in " + what);
    return *v;
}

void expect(std::istream& in, const std::string& keyword) {
    const auto tok = next_token(in, keyword.c_str());
    if (tok != keyword) throw InvalidInput("registry: expected '" + keyword + "', got '" + tok + "'");
}

std::size_t position_of(const LabeledValues& d, Label label) {
    const auto it = std::lower_bound(d.labels.begin(), d.labels.end(), label);
    if (it == d.labels.end() || *it != label) throw UnknownClassError(label);
    return static_cast<std::size_t>(it - d.labels.begin());
}

}  // namespace

std::string_view metric_name(DistanceMetric m) {
    return m == DistanceMetric::Euclidean ? "euclidean" : "squared-euclidean";
}

DistanceMetric parse_metric(std::string_view name) {
    if (name == "euclidean") return DistanceMetric::Euclidean;
    if (name == "squared-euclidean" || name == "sqeuclidean") return DistanceMetric::SquaredEuclidean;
    throw InvalidInput("unknown distance metric '" + std::string(name) + "'");
}

double distance(std::span<const double> a, std::span<const double> b, DistanceMetric metric) {
    const double sq = squared_distance(a, b);
    return metric == DistanceMetric::Euclidean ? std::sqrt(sq) : sq;
}

const ClassEntry& ClassMeanRegistry::at(Label label) const {
    const auto it = entries_.find(label);
    if (it == entries_.end()) throw UnknownClassError(label);
    return it->second;
}

std::vector<Label> ClassMeanRegistry::labels() const {
    std::vector<Label> out;
    out.reserve(entries_.size());
    for (const auto& [label, _] : entries_) out.push_back(label);
    return out;
}

void ClassMeanRegistry::incremental_update(std::span<const double> v, Label label) {
    if (v.empty()) throw InvalidInput("incremental_update: empty feature vector");
    if (!entries_.empty()) check_dim(v.size(), dim_, "incremental_update");
    auto [it, inserted] = entries_.try_emplace(label);
    auto& entry = it->second;
    if (inserted) {
        entry.mean.assign(v.begin(), v.end());
        entry.count = 1;
        dim_ = v.size();
        return;
    }
    const double n = static_cast<double>(entry.count);
    const double keep = n / (n + 1.0);
    const double add = 1.0 / (n + 1.0);
    for (std::size_t j = 0; j < v.size(); ++j) entry.mean[j] = keep * entry.mean[j] + add * v[j];
    ++entry.count;
}

void ClassMeanRegistry::set_entry(Label label, Vector mean, std::uint64_t count) {
    if (count == 0) throw InvalidInput("registry entry count must be at least 1");
    if (mean.empty()) throw InvalidInput("registry entry has an empty mean");
    const bool replacing_only = entries_.size() == 1 && entries_.count(label) == 1;
    if (!entries_.empty() && !replacing_only) check_dim(mean.size(), dim_, "set_entry");
    dim_ = mean.size();
    entries_[label] = ClassEntry{std::move(mean), count};
}

ClassMeanRegistry class_means_from(std::span<const Vector> features, std::span<const Label> labels) {
    if (features.empty()) throw InvalidInput("class_means_from: no samples");
    if (features.size() != labels.size()) throw InvalidInput("class_means_from: features and labels differ in length");
    const std::size_t dim = features.front().size();
    if (dim == 0) throw InvalidInput("class_means_from: empty feature vectors");

    std::map<Label, std::pair<Vector, std::uint64_t>> sums;
    for (std::size_t i = 0; i < features.size(); ++i) {
        check_dim(features[i].size(), dim, "class_means_from");
        auto& [sum, count] = sums[labels[i]];
        if (sum.empty()) sum.assign(dim, 0.0);
        for (std::size_t j = 0; j < dim; ++j) sum[j] += features[i][j];
        ++count;
    }
    ClassMeanRegistry registry;
    for (auto& [label, acc] : sums) {
        auto& [sum, count] = acc;
        for (double& s : sum) s /= static_cast<double>(count);
        registry.set_entry(label, std::move(sum), count);
    }
    return registry;
}

LabeledValues distances(std::span<const double> v, const ClassMeanRegistry& registry, DistanceMetric metric) {
    if (registry.empty()) throw NoClassesError();
    check_dim(v.size(), registry.dim(), "distances");
    LabeledValues d;
    d.labels.reserve(registry.size());
    d.values.reserve(registry.size());
    for (const auto& [label, entry] : registry.entries()) {
        d.labels.push_back(label);
        d.values.push_back(distance(v, entry.mean, metric));
    }
    return d;
}

LabeledValues class_probabilities(const LabeledValues& d) {
    if (d.values.empty()) throw InvalidInput("class_probabilities: empty distance vector");
    const double shift = *std::min_element(d.values.begin(), d.values.end());
    LabeledValues p{d.labels, Vector(d.values.size())};
    double total = 0.0;
    for (std::size_t k = 0; k < d.values.size(); ++k) {
        p.values[k] = std::exp(-(d.values[k] - shift));
        total += p.values[k];
    }
    for (double& x : p.values) x /= total;
    return p;
}

Label predict(std::span<const double> v, const ClassMeanRegistry& registry, DistanceMetric metric) {
    if (registry.empty()) throw NoClassesError();
    check_dim(v.size(), registry.dim(), "predict");
    // argmax of the softmax is the argmin distance; strict < keeps the smallest label on ties.
    Label best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    bool first = true;
    for (const auto& [label, entry] : registry.entries()) {
        const double dist = distance(v, entry.mean, metric);
        if (first || dist < best_d) {
            best = label;
            best_d = dist;
            first = false;
        }
    }
    return best;
}

LossAndGrad loss_and_grad(std::span<const Vector> features, std::span<const Label> labels,
                          const ClassMeanRegistry& registry, DistanceMetric metric) {
    if (features.size() != labels.size()) throw InvalidInput("loss: features and labels differ in length");
    if (registry.empty()) throw NoClassesError();
    LossAndGrad out;
    out.grads.reserve(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) {
        const auto& v = features[i];
        const auto d = distances(v, registry, metric);
        const std::size_t y = position_of(d, labels[i]);

        const double shift = *std::min_element(d.values.begin(), d.values.end());
        Vector p(d.values.size());
        double total = 0.0;
        for (std::size_t k = 0; k < p.size(); ++k) {
            p[k] = std::exp(-(d.values[k] - shift));
            total += p[k];
        }
        for (double& x : p) x /= total;
        // -log p_y = (d_y - shift) + log sum_l exp(-(d_l - shift))
        out.loss += (d.values[y] - shift) + std::log(total);

        // dL/dd_k = t_k - p_k, chained through dd_k/dv.
        Vector g(v.size(), 0.0);
        std::size_t k = 0;
        for (const auto& [label, entry] : registry.entries()) {
            const double coeff = (k == y ? 1.0 : 0.0) - p[k];
            if (coeff != 0.0) {
                double scale = 0.0;
                if (metric == DistanceMetric::SquaredEuclidean)
                    scale = 2.0 * coeff;
                else
                    scale = coeff / std::max(d.values[k], kEuclideanGradEpsilon);
                for (std::size_t j = 0; j < v.size(); ++j) g[j] += scale * (v[j] - entry.mean[j]);
            }
            ++k;
        }
        out.grads.push_back(std::move(g));
    }
    return out;
}

double loss(std::span<const Vector> features, std::span<const Label> labels, const ClassMeanRegistry& registry,
            DistanceMetric metric) {
    return loss_and_grad(features, labels, registry, metric).loss;
}

std::vector<Vector> loss_grad_wrt_features(std::span<const Vector> features, std::span<const Label> labels,
                                           const ClassMeanRegistry& registry, DistanceMetric metric) {
    return loss_and_grad(features, labels, registry, metric).grads;
}

void write_registry(std::ostream& out, const ClassMeanRegistry& registry) {
    out << kRegistryMagic << ' ' << kRegistryVersion << '\n';
    out << "classes " << registry.size() << " dim " << registry.dim() << '\n';
    for (const auto& [label, entry] : registry.entries()) {
        out << label << ' ' << entry.count;
        for (double m : entry.mean) out << ' ' << io::format_double(m);
        out << '\n';
    }
}

ClassMeanRegistry read_registry(std::istream& in) {
    expect(in, kRegistryMagic);
    const auto version = next_int<int>(in, "version");
    if (version != kRegistryVersion) throw InvalidInput("registry: unsupported format version " + std::to_string(version));
    expect(in, "classes");
    const auto count = next_int<std::size_t>(in, "class count");
    expect(in, "dim");
    const auto dim = next_int<std::size_t>(in, "dimension");
    if (count > 0 && dim == 0) throw InvalidInput("registry: zero dimension with stored classes");

    ClassMeanRegistry registry;
    for (std::size_t i = 0; i < count; ++i) {
        const auto label = next_int<Label>(in, "label");
        if (label < 0) throw InvalidInput("registry: negative label");
        if (registry.contains(label)) throw InvalidInput("registry: duplicate label " + std::to_string(label));
        const auto n = next_int<std::uint64_t>(in, "count");
        Vector mean(dim);
        for (double& m : mean) {
            const auto tok = next_token(in, "mean");
            const auto v = io::parse_double(tok);
            if (!v || !std::isfinite(*v)) throw InvalidInput("registry: bad mean value '" + tok + "'");
            m = *v;
        }
        registry.set_entry(label, std::move(mean), n);
    }
    return registry;
}

}  // namespace dncm::ncm
