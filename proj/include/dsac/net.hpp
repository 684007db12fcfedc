#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace dsac {

enum class Activation { ReLU };

struct NetworkSpec {
    int input_dim = 1;
    std::vector<int> hidden_layers{512, 512};
    int output_dim = 1;
    Activation activation = Activation::ReLU;
    std::uint64_t seed = 0;
};

bool same_architecture(const NetworkSpec& a, const NetworkSpec& b);

/// Feedforward ReLU network. Parameters are flat, layer-major: row-major
/// weights (fan_out x fan_in) followed by biases for each layer in order.
struct Network {
    NetworkSpec spec;
    std::vector<double> parameters;
};

/// Layer widths including input and output: {in, hidden..., out}.
std::vector<int> layer_dims(const NetworkSpec& spec);

std::size_t parameter_count(const NetworkSpec& spec);

/// Flat offset of layer `l`'s weight block; biases follow the weights.
std::size_t layer_offset(const NetworkSpec& spec, int layer);

/// Seeded fan-in uniform weight init, zero biases.
Network make_network(const NetworkSpec& spec);

std::vector<double> forward(const Network& net, std::span<const double> obs);

/// Exact reverse-mode gradient of dot(output, output_grad) w.r.t. parameters.
std::vector<double> backward(const Network& net, std::span<const double> obs,
                             std::span<const double> output_grad);

/// Cached activations for a batched pass; reusable to avoid reallocation.
struct ForwardTape {
    int batch = 0;
    std::vector<std::vector<double>> activations;  // [layer][batch * dim], [0] = inputs
};

/// inputs is batch x input_dim, row-major. Outputs land in the last tape layer.
void forward_batch(const Network& net, std::span<const double> inputs, int batch, ForwardTape& tape);

/// Accumulates (+=) gradients into param_grads; output_grads is batch x output_dim.
void backward_batch(const Network& net, const ForwardTape& tape,
                    std::span<const double> output_grads, std::span<double> param_grads);

struct OptimizerState {
    std::int64_t step_count = 0;
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    double learning_rate = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

OptimizerState make_optimizer(const Network& net, double learning_rate = 3e-4);

/// Bias-corrected Adam update. A non-finite gradient refuses the update.
void adam_step(Network& net, OptimizerState& opt, std::span<const double> grad);

/// target <- tau * online + (1 - tau) * target. tau = 1 is a hard copy.
void target_update(const Network& online, Network& target, double tau);

}  // namespace dsac
