#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dncm/feature_net.hpp"
#include "dncm/linalg.hpp"

namespace testsupport {

inline dncm::Vector random_vector(std::mt19937_64& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    dncm::Vector v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

// Random weights and biases, so no layer starts saturated at zero.
inline dncm::net::WeightStack random_stack(std::mt19937_64& rng, const std::vector<std::size_t>& dims,
                                           dncm::net::Activation act = dncm::net::Activation::ReLU,
                                           bool bias = true) {
    dncm::net::WeightStack w;
    w.bias_enabled = bias;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        dncm::net::Layer layer;
        layer.spec = {dims[i], dims[i + 1], act};
        layer.weight = dncm::Matrix(dims[i + 1], dims[i]);
        layer.weight.data = random_vector(rng, layer.weight.data.size());
        layer.bias = bias ? random_vector(rng, dims[i + 1], -0.5, 0.5) : dncm::Vector(dims[i + 1], 0.0);
        w.layers.push_back(std::move(layer));
    }
    return w;
}

// Straight-line evaluation written independently of the library.
inline dncm::Vector naive_forward(const dncm::net::WeightStack& w, dncm::Vector x) {
    for (const auto& layer : w.layers) {
        dncm::Vector y(layer.spec.output_dim, 0.0);
        for (std::size_t r = 0; r < layer.spec.output_dim; ++r) {
            double s = 0.0;
            for (std::size_t c = 0; c < layer.spec.input_dim; ++c) s += layer.weight.data[r * layer.spec.input_dim + c] * x[c];
            if (w.bias_enabled) s += layer.bias[r];
            y[r] = layer.spec.activation == dncm::net::Activation::ReLU ? (s > 0.0 ? s : 0.0) : s;
        }
        x = std::move(y);
    }
    return x;
}

// |a - b| / max(|a|, |b|, floor); the floor keeps near-zero derivatives from
// dominating the ratio.
inline double relative_error(double a, double b, double floor = 1e-6) {
    const double scale = std::max({std::abs(a), std::abs(b), floor});
    return std::abs(a - b) / scale;
}

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("dncm_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace testsupport
