#include "dncm/feature_net.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <string>

#include "dncm/errors.hpp"
#include "dncm/text_io.hpp"

namespace dncm::net {

namespace {

constexpr const char* kWeightsMagic = "dncm-weights";
constexpr int kWeightsVersion = 1;

bool finite_all(std::span<const double> values) {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

const char* activation_name(Activation a) {
    return a == Activation::ReLU ? "relu" : "identity";
}

double activate(Activation a, double x) {
    return (a == Activation::ReLU && x < 0.0) ? 0.0 : x;
}

// Affine map followed by the layer's activation.
void apply_layer(const Layer& layer, std::span<const double> in, Vector& pre, Vector& post) {
    const std::size_t out_dim = layer.spec.output_dim;
    pre.resize(out_dim);
    post.resize(out_dim);
    for (std::size_t r = 0; r < out_dim; ++r) {
        const auto w = layer.weight.row(r);
        double acc = layer.bias[r];
        for (std::size_t c = 0; c < in.size(); ++c) acc += w[c] * in[c];
        pre[r] = acc;
        post[r] = activate(layer.spec.activation, acc);
    }
}

std::string next_token(std::istream& in, const char* what) {
    std::string tok;
    if (!(in >> tok)) throw InvalidInput(std::string("weights: unexpected end of input reading ") + what);
    return tok;
}

double next_double(std::istream& in, const char* what) {
    const auto tok = next_token(in, what);
    const auto v = io::parse_double(tok);
    if (!v) throw InvalidInput("weights: bad number '" + tok + "' in " + what);
    return *v;
}

std::size_t next_size(std::istream& in, const char* what) {
    const auto tok = next_token(in, what);
    const auto v = io::parse_int<std::size_t>(tok);
    if (!v) throw InvalidInput("weights: bad integer '" + tok + "' in " + what);
    return *v;
}

void expect(std::istream& in, const std::string& keyword) {
    const auto tok = next_token(in, keyword.c_str());
    if (tok != keyword) throw InvalidInput("weights: expected '" + keyword + "', got '" + tok + "'");
}

}  // namespace

std::vector<LayerSpec> relu_stack(std::size_t input_dim, std::span<const std::size_t> widths) {
    std::vector<LayerSpec> spec;
    std::size_t in = input_dim;
    for (std::size_t w : widths) {
        spec.push_back({in, w, Activation::ReLU});
        in = w;
    }
    return spec;
}

std::size_t WeightStack::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weight.data.size() + (bias_enabled ? l.bias.size() : 0);
    return n;
}

void WeightStack::validate() const {
    if (layers.empty()) throw InvalidInput("weight stack has no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        if (l.spec.input_dim == 0 || l.spec.output_dim == 0)
            throw InvalidInput("layer " + std::to_string(i) + " has a zero dimension");
        if (i > 0 && l.spec.input_dim != layers[i - 1].spec.output_dim)
            throw InvalidInput("layer " + std::to_string(i) + " input does not chain with previous output");
        if (l.weight.rows != l.spec.output_dim || l.weight.cols != l.spec.input_dim ||
            l.bias.size() != l.spec.output_dim)
            throw InvalidInput("layer " + std::to_string(i) + " parameter shape disagrees with its spec");
        if (!finite_all(l.weight.data) || !finite_all(l.bias))
            throw InvalidInput("layer " + std::to_string(i) + " holds non-finite parameters");
    }
}

bool operator==(const WeightStack& a, const WeightStack& b) {
    if (a.bias_enabled != b.bias_enabled || a.layers.size() != b.layers.size()) return false;
    for (std::size_t i = 0; i < a.layers.size(); ++i) {
        const auto& x = a.layers[i];
        const auto& y = b.layers[i];
        if (!(x.spec == y.spec) || !(x.weight == y.weight) || x.bias != y.bias) return false;
    }
    return true;
}

GradientStack GradientStack::zeros_like(const WeightStack& params) {
    GradientStack g;
    g.layers.reserve(params.layers.size());
    for (const auto& l : params.layers)
        g.layers.push_back({Matrix(l.weight.rows, l.weight.cols), Vector(l.bias.size(), 0.0)});
    return g;
}

void GradientStack::accumulate(const GradientStack& other) {
    if (other.layers.size() != layers.size()) throw InvalidInput("gradient stacks differ in depth");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        auto& dst = layers[i];
        const auto& src = other.layers[i];
        if (!dst.weight.same_shape(src.weight) || dst.bias.size() != src.bias.size())
            throw InvalidInput("gradient stacks differ in shape");
        for (std::size_t j = 0; j < dst.weight.data.size(); ++j) dst.weight.data[j] += src.weight.data[j];
        for (std::size_t j = 0; j < dst.bias.size(); ++j) dst.bias[j] += src.bias[j];
    }
}

bool GradientStack::all_finite() const {
    return std::all_of(layers.begin(), layers.end(),
                       [](const LayerGradient& l) { return finite_all(l.weight.data) && finite_all(l.bias); });
}

OptimizerState OptimizerState::fresh(const WeightStack& params, double momentum, double learning_rate) {
    return {GradientStack::zeros_like(params), momentum, learning_rate};
}

Vector relu(std::span<const double> x) {
    Vector out(x.size());
    std::transform(x.begin(), x.end(), out.begin(), [](double v) { return v < 0.0 ? 0.0 : v; });
    return out;
}

ForwardResult forward(const WeightStack& params, std::span<const double> x) {
    if (params.layers.empty()) throw InvalidInput("forward: weight stack has no layers");
    if (x.size() != params.input_dim())
        throw InvalidInput("forward: input has " + std::to_string(x.size()) + " values, network expects " +
                           std::to_string(params.input_dim()));
    ForwardResult result;
    auto& cache = result.cache;
    cache.input.assign(x.begin(), x.end());
    cache.pre.resize(params.layers.size());
    cache.post.resize(params.layers.size());
    std::span<const double> in = cache.input;
    for (std::size_t i = 0; i < params.layers.size(); ++i) {
        apply_layer(params.layers[i], in, cache.pre[i], cache.post[i]);
        in = cache.post[i];
    }
    result.feature = cache.post.back();
    return result;
}

Vector extract(const WeightStack& params, std::span<const double> x) {
    if (params.layers.empty()) throw InvalidInput("extract: weight stack has no layers");
    if (x.size() != params.input_dim())
        throw InvalidInput("extract: input has " + std::to_string(x.size()) + " values, network expects " +
                           std::to_string(params.input_dim()));
    Vector in(x.begin(), x.end());
    Vector pre;
    Vector post;
    for (const auto& layer : params.layers) {
        apply_layer(layer, in, pre, post);
        std::swap(in, post);
    }
    return in;
}

GradientStack backward(const WeightStack& params, const ActivationCache& cache,
                       std::span<const double> grad_wrt_feature) {
    const std::size_t depth = params.layers.size();
    if (depth == 0 || cache.pre.size() != depth || cache.post.size() != depth ||
        cache.input.size() != params.input_dim())
        throw InvalidInput("backward: activation cache does not match the weight stack");
    if (grad_wrt_feature.size() != params.output_dim())
        throw InvalidInput("backward: upstream gradient has wrong length");

    GradientStack grads = GradientStack::zeros_like(params);
    Vector delta(grad_wrt_feature.begin(), grad_wrt_feature.end());
    for (std::size_t li = depth; li-- > 0;) {
        const Layer& layer = params.layers[li];
        const Vector& pre = cache.pre[li];
        if (pre.size() != layer.spec.output_dim) throw InvalidInput("backward: cache layer width mismatch");

        // dL/d(pre) = dL/d(post) * activation'(pre)
        if (layer.spec.activation == Activation::ReLU)
            for (std::size_t r = 0; r < delta.size(); ++r)
                if (!(pre[r] > 0.0)) delta[r] = 0.0;

        const Vector& in = li == 0 ? cache.input : cache.post[li - 1];
        auto& g = grads.layers[li];
        for (std::size_t r = 0; r < layer.spec.output_dim; ++r) {
            auto grow = g.weight.row(r);
            for (std::size_t c = 0; c < in.size(); ++c) grow[c] = delta[r] * in[c];
            if (params.bias_enabled) g.bias[r] = delta[r];
        }
        if (li == 0) break;

        Vector upstream(layer.spec.input_dim, 0.0);
        for (std::size_t r = 0; r < layer.spec.output_dim; ++r) {
            const auto w = layer.weight.row(r);
            for (std::size_t c = 0; c < upstream.size(); ++c) upstream[c] += w[c] * delta[r];
        }
        delta = std::move(upstream);
    }
    return grads;
}

void sgd_momentum_step(WeightStack& params, const GradientStack& grads, OptimizerState& state) {
    const std::size_t depth = params.layers.size();
    if (grads.layers.size() != depth || state.velocity.layers.size() != depth)
        throw InvalidInput("sgd step: gradient or velocity depth does not match parameters");
    for (std::size_t i = 0; i < depth; ++i) {
        const auto& p = params.layers[i];
        const auto& g = grads.layers[i];
        const auto& v = state.velocity.layers[i];
        if (!p.weight.same_shape(g.weight) || !p.weight.same_shape(v.weight) || p.bias.size() != g.bias.size() ||
            p.bias.size() != v.bias.size())
            throw InvalidInput("sgd step: layer " + std::to_string(i) + " shapes are not congruent");
    }
    if (!grads.all_finite()) throw TrainingDiverged("sgd step: gradient contains non-finite entries");

    const double gamma = state.momentum;
    const double delta = state.learning_rate;
    auto update = [gamma, delta](std::span<double> w, std::span<const double> g, std::span<double> t) {
        for (std::size_t j = 0; j < w.size(); ++j) {
            t[j] = gamma * t[j] + delta * g[j];
            w[j] -= t[j];
        }
    };
    for (std::size_t i = 0; i < depth; ++i) {
        auto& p = params.layers[i];
        const auto& g = grads.layers[i];
        auto& v = state.velocity.layers[i];
        update(p.weight.data, g.weight.data, v.weight.data);
        if (params.bias_enabled) update(p.bias, g.bias, v.bias);
        if (!finite_all(p.weight.data) || !finite_all(p.bias))
            throw TrainingDiverged("sgd step: layer " + std::to_string(i) + " parameters became non-finite");
    }
}

WeightStack init_weights(std::span<const LayerSpec> spec, std::uint64_t seed, bool bias_enabled) {
    if (spec.empty()) throw InvalidInput("init_weights: empty layer spec");
    WeightStack params;
    params.bias_enabled = bias_enabled;
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < spec.size(); ++i) {
        const auto& s = spec[i];
        if (s.input_dim == 0 || s.output_dim == 0)
            throw InvalidInput("init_weights: layer " + std::to_string(i) + " has a zero dimension");
        if (i > 0 && s.input_dim != spec[i - 1].output_dim)
            throw InvalidInput("init_weights: layer " + std::to_string(i) + " does not chain");
        const double bound = std::sqrt(6.0 / static_cast<double>(s.input_dim));
        std::uniform_real_distribution<double> dist(-bound, bound);
        Layer layer{s, Matrix(s.output_dim, s.input_dim), Vector(s.output_dim, 0.0)};
        for (double& w : layer.weight.data) w = dist(rng);
        params.layers.push_back(std::move(layer));
    }
    return params;
}

void write_weights(std::ostream& out, const WeightStack& params) {
    out << kWeightsMagic << ' ' << kWeightsVersion << '\n';
    out << "layers " << params.layers.size() << " bias " << (params.bias_enabled ? 1 : 0) << '\n';
    for (const auto& l : params.layers) {
        out << "layer " << l.spec.input_dim << ' ' << l.spec.output_dim << ' ' << activation_name(l.spec.activation)
            << '\n';
        for (std::size_t r = 0; r < l.weight.rows; ++r) {
            const auto row = l.weight.row(r);
            for (std::size_t c = 0; c < row.size(); ++c) out << (c ? " " : "") << io::format_double(row[c]);
            out << '\n';
        }
        out << "bias";
        for (double b : l.bias) out << ' ' << io::format_double(b);
        out << '\n';
    }
}

WeightStack read_weights(std::istream& in) {
    expect(in, kWeightsMagic);
    const auto version = next_size(in, "version");
    if (version != kWeightsVersion) throw InvalidInput("weights: unsupported format version " + std::to_string(version));
    expect(in, "layers");
    const auto count = next_size(in, "layer count");
    expect(in, "bias");
    const auto bias_flag = next_size(in, "bias flag");
    if (bias_flag > 1) throw InvalidInput("weights: bias flag must be 0 or 1");

    WeightStack params;
    params.bias_enabled = bias_flag == 1;
    for (std::size_t i = 0; i < count; ++i) {
        expect(in, "layer");
        LayerSpec s;
        s.input_dim = next_size(in, "input dim");
        s.output_dim = next_size(in, "output dim");
        const auto act = next_token(in, "activation");
        if (act == "relu")
            s.activation = Activation::ReLU;
        else if (act == "identity")
            s.activation = Activation::Identity;
        else
            throw InvalidInput("weights: unknown activation '" + act + "'");
        Layer layer{s, Matrix(s.output_dim, s.input_dim), Vector(s.output_dim)};
        for (double& w : layer.weight.data) w = next_double(in, "weight");
        expect(in, "bias");
        for (double& b : layer.bias) b = next_double(in, "bias");
        params.layers.push_back(std::move(layer));
    }
    params.validate();
    return params;
}

}  // namespace dncm::net
