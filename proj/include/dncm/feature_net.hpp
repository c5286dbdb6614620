#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "dncm/linalg.hpp"

namespace dncm::net {

enum class Activation { ReLU, Identity };

struct LayerSpec {
    std::size_t input_dim = 0;
    std::size_t output_dim = 0;
    Activation activation = Activation::ReLU;

    friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

// Builds a chained ReLU spec: {input, hidden[0], ..., hidden[n-1]}.
std::vector<LayerSpec> relu_stack(std::size_t input_dim, std::span<const std::size_t> widths);

struct Layer {
    LayerSpec spec;
    Matrix weight;  // output_dim x input_dim
    Vector bias;    // output_dim; all zero and never updated when biases are disabled
};

// Ordered parameters of the feature extractor.
struct WeightStack {
    std::vector<Layer> layers;
    bool bias_enabled = true;

    std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().spec.input_dim; }
    std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().spec.output_dim; }
    std::size_t parameter_count() const;

    // Throws InvalidInput on broken chaining, shape mismatch or non-finite entries.
    void validate() const;

    friend bool operator==(const WeightStack& a, const WeightStack& b);
};

struct ActivationCache {
    Vector input;
    std::vector<Vector> pre;   // per layer, before the activation
    std::vector<Vector> post;  // per layer, after the activation
};

struct LayerGradient {
    Matrix weight;
    Vector bias;
};

struct GradientStack {
    std::vector<LayerGradient> layers;

    // Zero gradient congruent with `params`.
    static GradientStack zeros_like(const WeightStack& params);
    void accumulate(const GradientStack& other);
    bool all_finite() const;
};

struct OptimizerState {
    GradientStack velocity;
    double momentum = 0.9;
    double learning_rate = 0.001;

    static OptimizerState fresh(const WeightStack& params, double momentum, double learning_rate);
};

Vector relu(std::span<const double> x);

struct ForwardResult {
    Vector feature;
    ActivationCache cache;
};

ForwardResult forward(const WeightStack& params, std::span<const double> x);

// Inference-only forward pass; no cache is built.
Vector extract(const WeightStack& params, std::span<const double> x);

// Chain rule from dL/d(feature) back to every weight and bias.
// ReLU subgradient at exactly zero is 0.
GradientStack backward(const WeightStack& params, const ActivationCache& cache,
                       std::span<const double> grad_wrt_feature);

// t <- momentum * t + learning_rate * g; W <- W - t.
// Throws TrainingDiverged if a gradient or resulting parameter is not finite.
void sgd_momentum_step(WeightStack& params, const GradientStack& grads, OptimizerState& state);

// Uniform(-sqrt(6/fan_in), sqrt(6/fan_in)) weights, zero biases.
WeightStack init_weights(std::span<const LayerSpec> spec, std::uint64_t seed, bool bias_enabled = true);

// Versioned text format, %.17g values.
void write_weights(std::ostream& out, const WeightStack& params);
WeightStack read_weights(std::istream& in);

}  // namespace dncm::net
