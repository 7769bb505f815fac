#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "popsynth/codec.hpp"
#include "popsynth/errors.hpp"
#include "popsynth/matrix.hpp"
#include "popsynth/rng.hpp"

namespace popsynth {

// Probability clipping applied inside every log term.
inline constexpr double kProbClip = 1e-7;

enum class Activation { linear, relu, leaky_relu, sigmoid, tanh, softmax_blocks };

inline const char* activation_name(Activation a) {
    switch (a) {
        case Activation::linear: return "linear";
        case Activation::relu: return "relu";
        case Activation::leaky_relu: return "leaky_relu";
        case Activation::sigmoid: return "sigmoid";
        case Activation::tanh: return "tanh";
        case Activation::softmax_blocks: return "softmax_blocks";
    }
    return "unknown";
}

inline Activation activation_from_name(const std::string& s) {
    if (s == "linear") return Activation::linear;
    if (s == "relu") return Activation::relu;
    if (s == "leaky_relu") return Activation::leaky_relu;
    if (s == "sigmoid") return Activation::sigmoid;
    if (s == "tanh") return Activation::tanh;
    if (s == "softmax_blocks") return Activation::softmax_blocks;
    fail(ErrorCode::BadValue, "unknown activation '" + s + "'");
}

/// Numerically safe softmax (max subtraction) over a contiguous range.
inline void softmax_inplace(double* v, std::size_t n) {
    double mx = v[0];
    for (std::size_t i = 1; i < n; ++i)
        if (v[i] > mx) mx = v[i];
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = std::exp(v[i] - mx);
        total += v[i];
    }
    for (std::size_t i = 0; i < n; ++i) v[i] /= total;
}

inline std::vector<double> softmax(std::vector<double> v) {
    require(!v.empty(), ErrorCode::EmptyInput, "softmax of empty vector");
    softmax_inplace(v.data(), v.size());
    return v;
}

/// Fully connected layer. `blocks` is only populated for softmax_blocks
/// output layers: softmax within each one-hot block, tanh on scaled-numeric
/// positions.
struct DenseLayer {
    Matrix weights;              // out x in
    std::vector<double> biases;  // out
    Activation activation = Activation::linear;
    double leaky_slope = 0.2;
    std::vector<Block> blocks;

    std::size_t in_dim() const { return weights.cols(); }
    std::size_t out_dim() const { return weights.rows(); }
};

/// Glorot-uniform weights, zero biases.
inline DenseLayer make_dense(std::size_t in, std::size_t out, Activation act, CounterRng& rng) {
    DenseLayer layer;
    layer.weights = Matrix(out, in);
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    for (double& w : layer.weights.data()) w = rng.next_uniform(-limit, limit);
    layer.biases.assign(out, 0.0);
    layer.activation = act;
    return layer;
}

struct MlpNetwork {
    std::size_t input_dim = 0;
    std::vector<DenseLayer> layers;

    std::size_t output_dim() const { return layers.empty() ? input_dim : layers.back().out_dim(); }

    void validate() const {
        std::size_t dim = input_dim;
        for (const auto& layer : layers) {
            require(layer.in_dim() == dim, ErrorCode::ShapeMismatch,
                    "layer input dim does not chain");
            require(layer.biases.size() == layer.out_dim(), ErrorCode::ShapeMismatch,
                    "bias size does not match layer output dim");
            dim = layer.out_dim();
        }
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& layer : layers) n += layer.weights.size() + layer.biases.size();
        return n;
    }

    /// Flat view (layer by layer: weights row-major, then biases) used by the
    /// optimizer and the gradient checker.
    std::vector<double> flat_parameters() const {
        std::vector<double> flat;
        flat.reserve(parameter_count());
        for (const auto& layer : layers) {
            flat.insert(flat.end(), layer.weights.data().begin(), layer.weights.data().end());
            flat.insert(flat.end(), layer.biases.begin(), layer.biases.end());
        }
        return flat;
    }

    void set_flat_parameters(const std::vector<double>& flat) {
        require(flat.size() == parameter_count(), ErrorCode::ShapeMismatch,
                "flat parameter size mismatch");
        std::size_t pos = 0;
        for (auto& layer : layers) {
            for (double& w : layer.weights.data()) w = flat[pos++];
            for (double& b : layer.biases) b = flat[pos++];
        }
    }
};

struct ForwardCache {
    Matrix input;
    std::vector<Matrix> pre;   // z = x W^T + b, per layer
    std::vector<Matrix> post;  // activation(z), per layer

    const Matrix& output() const { return post.back(); }
};

namespace detail {

inline void apply_activation(const DenseLayer& layer, Matrix& z, Matrix& out) {
    out = z;
    switch (layer.activation) {
        case Activation::linear:
            break;
        case Activation::relu:
            for (double& v : out.data())
                if (v < 0.0) v = 0.0;
            break;
        case Activation::leaky_relu:
            for (double& v : out.data())
                if (v < 0.0) v *= layer.leaky_slope;
            break;
        case Activation::sigmoid:
            for (double& v : out.data()) v = 1.0 / (1.0 + std::exp(-v));
            break;
        case Activation::tanh:
            for (double& v : out.data()) v = std::tanh(v);
            break;
        case Activation::softmax_blocks:
            require(!layer.blocks.empty(), ErrorCode::ShapeMismatch,
                    "softmax_blocks layer without a block layout");
            for (std::size_t r = 0; r < out.rows(); ++r) {
                double* row = out.row_ptr(r);
                for (const Block& block : layer.blocks) {
                    if (block.kind == BlockKind::one_hot)
                        softmax_inplace(row + block.offset, block.width);
                    else
                        row[block.offset] = std::tanh(row[block.offset]);
                }
            }
            break;
    }
}

/// dL/dZ from dL/dA; `z` is the pre-activation, `a` the post-activation.
inline Matrix activation_backward(const DenseLayer& layer, const Matrix& z, const Matrix& a,
                                  const Matrix& grad) {
    Matrix dz = grad;
    switch (layer.activation) {
        case Activation::linear:
            break;
        case Activation::relu:
            for (std::size_t i = 0; i < dz.data().size(); ++i)
                if (z.data()[i] <= 0.0) dz.data()[i] = 0.0;
            break;
        case Activation::leaky_relu:
            for (std::size_t i = 0; i < dz.data().size(); ++i)
                if (z.data()[i] <= 0.0) dz.data()[i] *= layer.leaky_slope;
            break;
        case Activation::sigmoid:
            for (std::size_t i = 0; i < dz.data().size(); ++i) {
                const double s = a.data()[i];
                dz.data()[i] *= s * (1.0 - s);
            }
            break;
        case Activation::tanh:
            for (std::size_t i = 0; i < dz.data().size(); ++i) {
                const double t = a.data()[i];
                dz.data()[i] *= 1.0 - t * t;
            }
            break;
        case Activation::softmax_blocks:
            for (std::size_t r = 0; r < dz.rows(); ++r) {
                const double* arow = a.row_ptr(r);
                const double* grow = grad.row_ptr(r);
                double* drow = dz.row_ptr(r);
                for (const Block& block : layer.blocks) {
                    if (block.kind == BlockKind::one_hot) {
                        double dot = 0.0;
                        for (std::size_t j = 0; j < block.width; ++j)
                            dot += grow[block.offset + j] * arow[block.offset + j];
                        for (std::size_t j = 0; j < block.width; ++j) {
                            const std::size_t idx = block.offset + j;
                            drow[idx] = arow[idx] * (grow[idx] - dot);
                        }
                    } else {
                        const double t = arow[block.offset];
                        drow[block.offset] = grow[block.offset] * (1.0 - t * t);
                    }
                }
            }
            break;
    }
    return dz;
}

}  // namespace detail

/// Runs the batch through the network, keeping pre/post activations per
/// layer for backward.
inline ForwardCache forward_cached(const MlpNetwork& net, const Matrix& batch) {
    require(batch.cols() == net.input_dim, ErrorCode::ShapeMismatch,
            "batch width " + std::to_string(batch.cols()) + " != input dim " +
                std::to_string(net.input_dim));
    ForwardCache cache;
    cache.input = batch;
    cache.pre.reserve(net.layers.size());
    cache.post.reserve(net.layers.size());
    const Matrix* x = &cache.input;
    for (const auto& layer : net.layers) {
        Matrix z = matmul_bt(*x, layer.weights);
        for (std::size_t r = 0; r < z.rows(); ++r) {
            double* row = z.row_ptr(r);
            for (std::size_t c = 0; c < z.cols(); ++c) row[c] += layer.biases[c];
        }
        Matrix a;
        detail::apply_activation(layer, z, a);
        cache.pre.push_back(std::move(z));
        cache.post.push_back(std::move(a));
        x = &cache.post.back();
    }
    return cache;
}

inline Matrix forward(const MlpNetwork& net, const Matrix& batch) {
    return forward_cached(net, batch).output();
}

/// Per-layer parameter gradients plus the gradient w.r.t. the batch input.
struct NetworkGradients {
    std::vector<Matrix> weight_grads;
    std::vector<std::vector<double>> bias_grads;
    Matrix input_grad;

    std::vector<double> flatten() const {
        std::vector<double> flat;
        for (std::size_t l = 0; l < weight_grads.size(); ++l) {
            flat.insert(flat.end(), weight_grads[l].data().begin(), weight_grads[l].data().end());
            flat.insert(flat.end(), bias_grads[l].begin(), bias_grads[l].end());
        }
        return flat;
    }
};

/// Standard backpropagation. `output_grad` is dL/d(output) including any
/// batch averaging, so parameter gradients come out already scaled.
inline NetworkGradients backward(const MlpNetwork& net, const ForwardCache& cache,
                                 const Matrix& output_grad) {
    require(!net.layers.empty(), ErrorCode::ShapeMismatch, "backward through empty network");
    require(cache.post.size() == net.layers.size(), ErrorCode::ShapeMismatch,
            "cache does not match network");
    require(output_grad.same_shape(cache.output()), ErrorCode::ShapeMismatch,
            "output gradient shape mismatch");

    NetworkGradients grads;
    grads.weight_grads.resize(net.layers.size());
    grads.bias_grads.resize(net.layers.size());

    Matrix g = output_grad;
    for (std::size_t l = net.layers.size(); l-- > 0;) {
        const DenseLayer& layer = net.layers[l];
        const Matrix& x = l == 0 ? cache.input : cache.post[l - 1];
        Matrix dz = detail::activation_backward(layer, cache.pre[l], cache.post[l], g);

        grads.weight_grads[l] = matmul_at(dz, x);
        auto& db = grads.bias_grads[l];
        db.assign(layer.out_dim(), 0.0);
        for (std::size_t r = 0; r < dz.rows(); ++r) {
            const double* row = dz.row_ptr(r);
            for (std::size_t c = 0; c < dz.cols(); ++c) db[c] += row[c];
        }
        g = matmul(dz, layer.weights);
    }
    grads.input_grad = std::move(g);
    return grads;
}

// ---------------------------------------------------------------------------
// Loss primitives. Each returns (scalar loss, gradient w.r.t. its inputs)
// with the batch averaging folded into the gradient.
// ---------------------------------------------------------------------------

struct ScalarLoss {
    double value = 0.0;
    Matrix grad;
};

inline double clip_prob(double p) {
    if (p < kProbClip) return kProbClip;
    if (p > 1.0 - kProbClip) return 1.0 - kProbClip;
    return p;
}

/// Mean binary cross-entropy; targets are 0/1, predictions are clipped to
/// [1e-7, 1 - 1e-7] inside the logs.
inline ScalarLoss bce_loss(const Matrix& predictions, const Matrix& targets) {
    require(predictions.same_shape(targets), ErrorCode::ShapeMismatch,
            "bce_loss shape mismatch");
    const double n = static_cast<double>(predictions.size());
    ScalarLoss out;
    out.grad = Matrix(predictions.rows(), predictions.cols());
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double raw = predictions.data()[i];
        const double p = clip_prob(raw);
        const double t = targets.data()[i];
        out.value -= (t * std::log(p) + (1.0 - t) * std::log(1.0 - p)) / n;
        if (raw > kProbClip && raw < 1.0 - kProbClip)
            out.grad.data()[i] = (p - t) / (p * (1.0 - p)) / n;
    }
    return out;
}

/// VAE data term: categorical cross-entropy per one-hot block plus squared
/// error on numeric positions, summed over blocks and averaged over rows.
inline ScalarLoss reconstruction_loss(const Matrix& output, const Matrix& target,
                                      const BlockLayout& layout) {
    require(output.same_shape(target), ErrorCode::ShapeMismatch,
            "reconstruction_loss shape mismatch");
    require(output.cols() == layout.total_width, ErrorCode::ShapeMismatch,
            "reconstruction_loss layout mismatch");
    const double n = static_cast<double>(output.rows());
    ScalarLoss out;
    out.grad = Matrix(output.rows(), output.cols());
    for (std::size_t r = 0; r < output.rows(); ++r) {
        const double* orow = output.row_ptr(r);
        const double* trow = target.row_ptr(r);
        double* grow = out.grad.row_ptr(r);
        for (const Block& block : layout.blocks) {
            if (block.kind == BlockKind::one_hot) {
                for (std::size_t j = 0; j < block.width; ++j) {
                    const std::size_t idx = block.offset + j;
                    const double t = trow[idx];
                    if (t == 0.0) continue;
                    const double raw = orow[idx];
                    const double p = clip_prob(raw);
                    out.value -= t * std::log(p) / n;
                    if (raw > kProbClip && raw < 1.0 - kProbClip) grow[idx] = -t / p / n;
                }
            } else {
                const std::size_t idx = block.offset;
                const double d = orow[idx] - trow[idx];
                out.value += d * d / n;
                grow[idx] = 2.0 * d / n;
            }
        }
    }
    return out;
}

struct KlLoss {
    double value = 0.0;
    Matrix mu_grad;
    Matrix log_var_grad;
};

/// KL(q || N(0, I)) with q = N(mu, diag(exp(log_var))): -1/2 sum(1 + log_var
/// - mu^2 - exp(log_var)), summed over latent dims, averaged over the batch.
inline KlLoss kl_standard_normal(const Matrix& mu, const Matrix& log_var) {
    require(mu.same_shape(log_var), ErrorCode::ShapeMismatch, "kl shape mismatch");
    const double n = static_cast<double>(mu.rows() == 0 ? 1 : mu.rows());
    KlLoss out;
    out.mu_grad = Matrix(mu.rows(), mu.cols());
    out.log_var_grad = Matrix(mu.rows(), mu.cols());
    for (std::size_t i = 0; i < mu.size(); ++i) {
        const double m = mu.data()[i];
        const double lv = log_var.data()[i];
        const double ev = std::exp(lv);
        out.value += -0.5 * (1.0 + lv - m * m - ev) / n;
        out.mu_grad.data()[i] = m / n;
        out.log_var_grad.data()[i] = 0.5 * (ev - 1.0) / n;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// First/second moment accumulators mirroring a flat parameter vector.
struct AdamState {
    AdamConfig config;
    std::uint64_t step = 0;
    std::vector<double> m;
    std::vector<double> v;

    explicit AdamState(std::size_t parameter_count = 0, AdamConfig cfg = {})
        : config(cfg), m(parameter_count, 0.0), v(parameter_count, 0.0) {}
};

/// Bias-corrected Adam update, in place.
inline void adam_step(std::vector<double>& params, const std::vector<double>& grads,
                      AdamState& state) {
    require(params.size() == grads.size() && params.size() == state.m.size(),
            ErrorCode::ShapeMismatch, "adam_step size mismatch");
    state.step += 1;
    const double b1 = state.config.beta1;
    const double b2 = state.config.beta2;
    const double correct1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double correct2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
        const double mhat = state.m[i] / correct1;
        const double vhat = state.v[i] / correct2;
        params[i] -= state.config.learning_rate * mhat / (std::sqrt(vhat) + state.config.epsilon);
    }
}

}  // namespace popsynth
