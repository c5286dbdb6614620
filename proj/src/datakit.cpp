#include "dncm/datakit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "dncm/errors.hpp"
#include "dncm/seeding.hpp"
#include "dncm/text_io.hpp"

namespace dncm::data {

std::vector<Vector> features_of(const Dataset& ds) {
    std::vector<Vector> out;
    out.reserve(ds.size());
    for (const auto& s : ds) out.push_back(s.features);
    return out;
}

std::vector<Label> labels_of(const Dataset& ds) {
    std::vector<Label> out;
    out.reserve(ds.size());
    for (const auto& s : ds) out.push_back(s.label);
    return out;
}

std::vector<Label> distinct_labels(const Dataset& ds) {
    std::set<Label> seen;
    for (const auto& s : ds) seen.insert(s.label);
    return {seen.begin(), seen.end()};
}

Dataset filter_labels(const Dataset& ds, std::span<const Label> keep) {
    const std::set<Label> wanted(keep.begin(), keep.end());
    Dataset out;
    for (const auto& s : ds)
        if (wanted.count(s.label)) out.push_back(s);
    return out;
}

void validate(const SyntheticSpec& spec) {
    if (spec.num_classes == 0) throw InvalidInput("synthetic spec: num_classes must be positive");
    if (spec.samples_per_class == 0) throw InvalidInput("synthetic spec: samples_per_class must be positive");
    if (spec.feature_dim == 0) throw InvalidInput("synthetic spec: feature_dim must be positive");
    if (!(spec.center_scale > 0.0)) throw InvalidInput("synthetic spec: center_scale must be positive");
    if (!(spec.noise_sigma >= 0.0)) throw InvalidInput("synthetic spec: noise_sigma must be nonnegative");
    if (!(spec.drift_slope >= 0.0)) throw InvalidInput("synthetic spec: drift_slope must be nonnegative");
    if (!(spec.min_center_distance >= 0.0)) throw InvalidInput("synthetic spec: min_center_distance must be nonnegative");
    if (spec.first_label < 0) throw InvalidInput("synthetic spec: labels must be nonnegative");
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
    validate(spec);
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> unit_normal(0.0, 1.0);
    std::uniform_real_distribution<double> center_coord(-spec.center_scale, spec.center_scale);
    const std::size_t dim = spec.feature_dim;

    Vector drift_dir(dim);
    double norm = 0.0;
    while (norm == 0.0) {
        for (double& u : drift_dir) u = unit_normal(rng);
        norm = std::sqrt(std::inner_product(drift_dir.begin(), drift_dir.end(), drift_dir.begin(), 0.0));
    }
    for (double& u : drift_dir) u /= norm;

    std::vector<Vector> centers;
    constexpr int kMaxAttempts = 100000;
    const double min_sq = spec.min_center_distance * spec.min_center_distance;
    for (std::size_t c = 0; c < spec.num_classes; ++c) {
        Vector center(dim);
        int attempts = 0;
        for (;;) {
            for (double& x : center) x = center_coord(rng);
            const bool ok = std::all_of(centers.begin(), centers.end(), [&](const Vector& other) {
                const double sq = squared_distance(center, other);
                return sq > 0.0 && sq >= min_sq;
            });
            if (ok) break;
            if (++attempts >= kMaxAttempts)
                throw InvalidInput("synthetic spec: cannot place " + std::to_string(spec.num_classes) +
                                   " centers at the requested minimum distance");
        }
        centers.push_back(std::move(center));
    }

    Dataset ds;
    ds.reserve(spec.num_classes * spec.samples_per_class);
    for (std::size_t c = 0; c < spec.num_classes; ++c) {
        for (std::size_t j = 0; j < spec.samples_per_class; ++j) {
            SampleRecord rec{centers[c], spec.first_label + static_cast<Label>(c)};
            const double drift = spec.drift_slope * static_cast<double>(j);
            for (std::size_t d = 0; d < dim; ++d) {
                if (spec.noise_sigma > 0.0) rec.features[d] += spec.noise_sigma * unit_normal(rng);
                rec.features[d] += drift * drift_dir[d];
            }
            ds.push_back(std::move(rec));
        }
    }
    return ds;
}

std::string csv_header(std::size_t feature_dim) {
    std::string h = "label";
    for (std::size_t i = 0; i < feature_dim; ++i) h += ",f" + std::to_string(i);
    return h;
}

void save_csv(const Dataset& ds, std::ostream& out) {
    const std::size_t dim = ds.empty() ? kDefaultFeatureDim : ds.front().features.size();
    out << csv_header(dim) << '\n';
    for (const auto& s : ds) {
        if (s.features.size() != dim) throw InvalidInput("save_csv: records differ in feature dimension");
        out << s.label;
        for (double f : s.features) out << ',' << io::format_double(f);
        out << '\n';
    }
}

void save_csv(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    save_csv(ds, out);
    if (!out.flush()) throw IoError("write failed for '" + path.string() + "'");
}

Dataset load_csv(std::istream& in, std::size_t feature_dim, const std::string& source) {
    Dataset ds;
    std::string line;
    std::size_t line_no = 0;
    std::size_t dim = feature_dim;
    while (std::getline(in, line)) {
        ++line_no;
        const auto text = io::trim(line);
        if (text.empty()) continue;
        if (line_no == 1 && text.rfind("label", 0) == 0) {
            const std::size_t header_dim =
                static_cast<std::size_t>(std::count(text.begin(), text.end(), ','));
            if (text == csv_header(header_dim) && (dim == 0 || dim == header_dim)) {
                dim = header_dim;
                continue;
            }
        }

        std::vector<std::string_view> fields;
        std::size_t start = 0;
        for (;;) {
            const auto pos = text.find(',', start);
            fields.push_back(io::trim(text.substr(start, pos == std::string_view::npos ? pos : pos - start)));
            if (pos == std::string_view::npos) break;
            start = pos + 1;
        }
        if (dim == 0) dim = fields.size() - 1;
        if (dim == 0 || fields.size() != dim + 1)
            throw ParseError(source, line_no,
                             "expected " + std::to_string(dim + 1) + " columns, found " + std::to_string(fields.size()));

        const auto label = io::parse_int<Label>(fields[0]);
        if (!label || *label < 0) throw ParseError(source, line_no, "label '" + std::string(fields[0]) + "' is not a nonnegative integer");
        SampleRecord rec{Vector(dim), *label};
        for (std::size_t i = 0; i < dim; ++i) {
            const auto v = io::parse_double(fields[i + 1]);
            if (!v || !std::isfinite(*v))
                throw ParseError(source, line_no, "feature " + std::to_string(i) + " ('" + std::string(fields[i + 1]) +
                                                      "') is not a finite number");
            rec.features[i] = *v;
        }
        ds.push_back(std::move(rec));
    }
    return ds;
}

Dataset load_csv(const std::filesystem::path& path, std::size_t feature_dim) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    return load_csv(in, feature_dim, path.string());
}

Split split(const Dataset& ds, const SplitSpec& spec) {
    const double fractions[] = {spec.train, spec.validation, spec.test};
    for (double f : fractions)
        if (!(f >= 0.0) || f > 1.0) throw InvalidInput("split: fractions must lie in [0, 1]");
    if (std::abs(spec.train + spec.validation + spec.test - 1.0) > 1e-9)
        throw InvalidInput("split: fractions must sum to 1");
    const bool all_positive = spec.train > 0.0 && spec.validation > 0.0 && spec.test > 0.0;

    std::map<Label, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < ds.size(); ++i) by_class[ds[i].label].push_back(i);

    // 0 = train, 1 = validation, 2 = test
    std::vector<int> assignment(ds.size(), 0);
    for (auto& [label, idx] : by_class) {
        if (all_positive && idx.size() < 3)
            throw InvalidInput("split: class " + std::to_string(label) + " has fewer than 3 samples");
        std::mt19937_64 rng(seeding::derive(spec.seed, static_cast<std::uint64_t>(label)));
        std::shuffle(idx.begin(), idx.end(), rng);
        const auto n = static_cast<double>(idx.size());
        const auto n_val = static_cast<std::size_t>(std::floor(n * spec.validation + 1e-9));
        const auto n_test = static_cast<std::size_t>(std::floor(n * spec.test + 1e-9));
        for (std::size_t k = 0; k < n_val; ++k) assignment[idx[k]] = 1;
        for (std::size_t k = n_val; k < n_val + n_test; ++k) assignment[idx[k]] = 2;
    }

    Split out;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        switch (assignment[i]) {
            case 0: out.train.push_back(ds[i]); break;
            case 1: out.validation.push_back(ds[i]); break;
            default: out.test.push_back(ds[i]); break;
        }
    }
    return out;
}

StandardizationStats fit_standardization(const Dataset& train) {
    if (train.empty()) throw InvalidInput("fit_standardization: empty dataset");
    const std::size_t dim = train.front().features.size();
    StandardizationStats stats{Vector(dim, 0.0), Vector(dim, 0.0)};
    for (const auto& s : train) {
        if (s.features.size() != dim) throw InvalidInput("fit_standardization: records differ in dimension");
        for (std::size_t j = 0; j < dim; ++j) stats.mean[j] += s.features[j];
    }
    const auto n = static_cast<double>(train.size());
    for (double& m : stats.mean) m /= n;
    for (const auto& s : train)
        for (std::size_t j = 0; j < dim; ++j) {
            const double d = s.features[j] - stats.mean[j];
            stats.stddev[j] += d * d;
        }
    for (double& sd : stats.stddev) {
        sd = std::sqrt(sd / n);
        if (!(sd > 1e-12)) sd = 1.0;
    }
    return stats;
}

Vector apply_standardization(const StandardizationStats& stats, std::span<const double> x) {
    if (x.size() != stats.mean.size())
        throw InvalidInput("standardization: input has " + std::to_string(x.size()) + " values, stats expect " +
                           std::to_string(stats.mean.size()));
    Vector z(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) z[j] = (x[j] - stats.mean[j]) / stats.stddev[j];
    return z;
}

Vector invert_standardization(const StandardizationStats& stats, std::span<const double> z) {
    if (z.size() != stats.mean.size()) throw InvalidInput("standardization: dimension mismatch");
    Vector x(z.size());
    for (std::size_t j = 0; j < z.size(); ++j) x[j] = z[j] * stats.stddev[j] + stats.mean[j];
    return x;
}

Dataset apply_standardization(const StandardizationStats& stats, const Dataset& ds) {
    Dataset out;
    out.reserve(ds.size());
    for (const auto& s : ds) out.push_back({apply_standardization(stats, s.features), s.label});
    return out;
}

void write_standardization(std::ostream& out, const StandardizationStats& stats) {
    out << "dncm-standardization 1\n";
    out << "dim " << stats.mean.size() << '\n';
    out << "mean";
    for (double m : stats.mean) out << ' ' << io::format_double(m);
    out << "\nstddev";
    for (double s : stats.stddev) out << ' ' << io::format_double(s);
    out << '\n';
}

StandardizationStats read_standardization(std::istream& in) {
    std::string magic, version, dim_kw;
    std::size_t dim = 0;
    if (!(in >> magic >> version >> dim_kw >> dim) || magic != "dncm-standardization" || version != "1" ||
        dim_kw != "dim")
        throw InvalidInput("standardization: bad header");
    StandardizationStats stats{Vector(dim), Vector(dim)};
    auto read_row = [&](const char* keyword, Vector& row) {
        std::string kw;
        if (!(in >> kw) || kw != keyword) throw InvalidInput(std::string("standardization: expected '") + keyword + "'");
        for (double& v : row) {
            std::string tok;
            if (!(in >> tok)) throw InvalidInput("standardization: truncated row");
            const auto parsed = io::parse_double(tok);
            if (!parsed || !std::isfinite(*parsed)) throw InvalidInput("standardization: bad value '" + tok + "'");
            v = *parsed;
        }
    };
    read_row("mean", stats.mean);
    read_row("stddev", stats.stddev);
    for (double s : stats.stddev)
        if (!(s > 0.0)) throw InvalidInput("standardization: nonpositive standard deviation");
    return stats;
}

}  // namespace dncm::data
