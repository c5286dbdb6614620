#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dncm/linalg.hpp"
#include "dncm/ncm_head.hpp"

namespace dncm::data {

inline constexpr std::size_t kDefaultFeatureDim = 10;

struct SampleRecord {
    Vector features;
    Label label = 0;

    friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
    friend auto operator<=>(const SampleRecord&, const SampleRecord&) = default;
};

using Dataset = std::vector<SampleRecord>;

std::vector<Vector> features_of(const Dataset& ds);
std::vector<Label> labels_of(const Dataset& ds);
// Distinct labels, ascending.
std::vector<Label> distinct_labels(const Dataset& ds);
// Samples whose label appears in `keep`, in input order.
Dataset filter_labels(const Dataset& ds, std::span<const Label> keep);

// Class-centred Gaussian clouds with an optional sensor-drift term shared by
// every class: sample j of a class is shifted by drift_slope * j * u, where u
// is one seeded unit direction.
struct SyntheticSpec {
    std::size_t num_classes = 10;
    std::size_t samples_per_class = 500;
    std::size_t feature_dim = kDefaultFeatureDim;
    double center_scale = 2.0;
    double noise_sigma = 0.2;
    // Sample j of every class is shifted by drift_slope * j along one shared unit direction.
    double drift_slope = 0.03;
    // Rejection threshold on pairwise center distance; centers are always distinct.
    double min_center_distance = 0.8;
    Label first_label = 0;
    std::uint64_t seed = 0;
};

void validate(const SyntheticSpec& spec);
Dataset generate_synthetic(const SyntheticSpec& spec);

// Header line written by save_csv and skipped by load_csv: "label,f0,...,f{dim-1}".
std::string csv_header(std::size_t feature_dim);
void save_csv(const Dataset& ds, std::ostream& out);
void save_csv(const Dataset& ds, const std::filesystem::path& path);
// feature_dim == 0 infers the width from the first record.
Dataset load_csv(std::istream& in, std::size_t feature_dim = kDefaultFeatureDim, const std::string& source = "<stream>");
Dataset load_csv(const std::filesystem::path& path, std::size_t feature_dim = kDefaultFeatureDim);

struct SplitSpec {
    double train = 0.7;
    double validation = 0.1;
    double test = 0.2;
    std::uint64_t seed = 0;
};

struct Split {
    Dataset train;
    Dataset validation;
    Dataset test;
};

// Stratified per class. Validation and test take floor(n * fraction); the
// remainder goes to train. Each subset keeps the input order.
Split split(const Dataset& ds, const SplitSpec& spec);

struct StandardizationStats {
    Vector mean;
    Vector stddev;  // population deviation, zero clamped to 1

    friend bool operator==(const StandardizationStats&, const StandardizationStats&) = default;
};

StandardizationStats fit_standardization(const Dataset& train);
Vector apply_standardization(const StandardizationStats& stats, std::span<const double> x);
Vector invert_standardization(const StandardizationStats& stats, std::span<const double> z);
Dataset apply_standardization(const StandardizationStats& stats, const Dataset& ds);

void write_standardization(std::ostream& out, const StandardizationStats& stats);
StandardizationStats read_standardization(std::istream& in);

struct PcaResult {
    std::vector<Vector> points;      // one row per input sample
    Vector explained_variance_ratio;  // nonincreasing, one per component
    std::vector<Vector> components;  // orthonormal principal axes
    Vector mean;
};

PcaResult pca_project(std::span<const Vector> points, std::size_t out_dims = 2);
PcaResult pca_project(const Dataset& ds, std::size_t out_dims = 2);

// "# explained_variance: a,b" then "label,pc1,pc2" and one row per point.
void write_pca_csv(std::ostream& out, const PcaResult& result, std::span<const Label> labels);

// Cyclic Jacobi eigen-solver for small symmetric matrices. Eigenvalues come
// back in descending order; eigenvectors are the matching columns.
struct SymmetricEigen {
    Vector values;
    Matrix vectors;
};
SymmetricEigen symmetric_eigen(const Matrix& a);

}  // namespace dncm::data
