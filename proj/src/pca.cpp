#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "dncm/datakit.hpp"
#include "dncm/errors.hpp"
#include "dncm/text_io.hpp"

namespace dncm::data {

SymmetricEigen symmetric_eigen(const Matrix& input) {
    if (input.rows != input.cols) throw InvalidInput("symmetric_eigen: matrix is not square");
    const std::size_t n = input.rows;
    Matrix a = input;
    Matrix v(n, n);
    for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

    constexpr int kMaxSweeps = 100;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        double off = 0.0;
        double diag = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            diag += a(p, p) * a(p, p);
            for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        }
        if (off <= 1e-30 * std::max(diag, 1e-300)) break;

        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                // Rotation angle zeroing a(p,q).
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });
    SymmetricEigen out{Vector(n), Matrix(n, n)};
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = a(order[k], order[k]);
        for (std::size_t r = 0; r < n; ++r) out.vectors(r, k) = v(r, order[k]);
    }
    return out;
}

PcaResult pca_project(std::span<const Vector> points, std::size_t out_dims) {
    if (points.empty()) throw InvalidInput("pca: no points");
    const std::size_t dim = points.front().size();
    if (out_dims == 0 || out_dims > dim) throw InvalidInput("pca: out_dims must lie in [1, feature dimension]");
    if (points.size() < out_dims) throw InvalidInput("pca: fewer points than requested components");

    PcaResult result;
    result.mean.assign(dim, 0.0);
    for (const auto& p : points) {
        if (p.size() != dim) throw InvalidInput("pca: points differ in dimension");
        for (std::size_t j = 0; j < dim; ++j) result.mean[j] += p[j];
    }
    const auto n = static_cast<double>(points.size());
    for (double& m : result.mean) m /= n;

    Matrix cov(dim, dim);
    for (const auto& p : points)
        for (std::size_t i = 0; i < dim; ++i) {
            const double di = p[i] - result.mean[i];
            for (std::size_t j = i; j < dim; ++j) cov(i, j) += di * (p[j] - result.mean[j]);
        }
    const double denom = points.size() > 1 ? n - 1.0 : 1.0;
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = i; j < dim; ++j) {
            cov(i, j) /= denom;
            cov(j, i) = cov(i, j);
        }

    double total = 0.0;
    for (std::size_t i = 0; i < dim; ++i) total += cov(i, i);
    if (!(total > 0.0)) throw ZeroVarianceError("pca: data has zero variance");

    const auto eig = symmetric_eigen(cov);
    for (std::size_t k = 0; k < out_dims; ++k) {
        Vector axis(dim);
        for (std::size_t r = 0; r < dim; ++r) axis[r] = eig.vectors(r, k);
        // Sign convention: the largest-magnitude coordinate is positive.
        const auto big = std::max_element(axis.begin(), axis.end(),
                                          [](double x, double y) { return std::abs(x) < std::abs(y); });
        if (*big < 0.0)
            for (double& x : axis) x = -x;
        result.components.push_back(std::move(axis));
        result.explained_variance_ratio.push_back(std::max(eig.values[k], 0.0) / total);
    }

    result.points.reserve(points.size());
    for (const auto& p : points) {
        Vector proj(out_dims, 0.0);
        for (std::size_t k = 0; k < out_dims; ++k)
            for (std::size_t j = 0; j < dim; ++j) proj[k] += (p[j] - result.mean[j]) * result.components[k][j];
        result.points.push_back(std::move(proj));
    }
    return result;
}

PcaResult pca_project(const Dataset& ds, std::size_t out_dims) {
    const auto pts = features_of(ds);
    return pca_project(pts, out_dims);
}

void write_pca_csv(std::ostream& out, const PcaResult& result, std::span<const Label> labels) {
    if (labels.size() != result.points.size()) throw InvalidInput("pca csv: label count differs from point count");
    out << "# explained_variance: ";
    for (std::size_t k = 0; k < result.explained_variance_ratio.size(); ++k)
        out << (k ? "," : "") << io::format_double(result.explained_variance_ratio[k]);
    out << "\nlabel";
    for (std::size_t k = 0; k < result.explained_variance_ratio.size(); ++k) out << ",pc" << k + 1;
    out << '\n';
    for (std::size_t i = 0; i < result.points.size(); ++i) {
        out << labels[i];
        for (double x : result.points[i]) out << ',' << io::format_double(x);
        out << '\n';
    }
}

}  // namespace dncm::data
