#include "dsac/net.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

#include "dsac/errors.hpp"
#include "dsac/rng.hpp"

namespace dsac {
namespace {

void validate_spec(const NetworkSpec& spec) {
    if (spec.input_dim < 1) throw UsageError("NetworkSpec: input_dim must be >= 1");
    if (spec.output_dim < 1) throw UsageError("NetworkSpec: output_dim must be >= 1");
    for (int h : spec.hidden_layers) {
        if (h < 1) throw UsageError("NetworkSpec: hidden layer width must be >= 1");
    }
}

}  // namespace

bool same_architecture(const NetworkSpec& a, const NetworkSpec& b) {
    return a.input_dim == b.input_dim && a.output_dim == b.output_dim &&
           a.hidden_layers == b.hidden_layers && a.activation == b.activation;
}

std::vector<int> layer_dims(const NetworkSpec& spec) {
    std::vector<int> dims;
    dims.reserve(spec.hidden_layers.size() + 2);
    dims.push_back(spec.input_dim);
    for (int h : spec.hidden_layers) dims.push_back(h);
    dims.push_back(spec.output_dim);
    return dims;
}

std::size_t parameter_count(const NetworkSpec& spec) {
    auto dims = layer_dims(spec);
    std::size_t count = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        count += static_cast<std::size_t>(dims[l] + 1) * static_cast<std::size_t>(dims[l + 1]);
    }
    return count;
}

std::size_t layer_offset(const NetworkSpec& spec, int layer) {
    auto dims = layer_dims(spec);
    std::size_t offset = 0;
    for (int l = 0; l < layer; ++l) {
        offset += static_cast<std::size_t>(dims[l] + 1) * static_cast<std::size_t>(dims[l + 1]);
    }
    return offset;
}

Network make_network(const NetworkSpec& spec) {
    validate_spec(spec);
    Network net{spec, std::vector<double>(parameter_count(spec), 0.0)};
    Rng rng(mix_seed(spec.seed, 0x6e65745f696e6974ull));
    auto dims = layer_dims(spec);
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const int fan_in = dims[l];
        const int fan_out = dims[l + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
        for (int i = 0; i < fan_in * fan_out; ++i) {
            net.parameters[offset + static_cast<std::size_t>(i)] = rng.uniform(-limit, limit);
        }
        offset += static_cast<std::size_t>(fan_in + 1) * static_cast<std::size_t>(fan_out);
    }
    return net;
}

void forward_batch(const Network& net, std::span<const double> inputs, int batch, ForwardTape& tape) {
    auto dims = layer_dims(net.spec);
    const std::size_t n_layers = dims.size();
    if (batch < 1) throw UsageError("forward_batch: batch must be >= 1");
    if (inputs.size() != static_cast<std::size_t>(batch) * static_cast<std::size_t>(dims[0])) {
        std::ostringstream msg;
        msg << "forward_batch: expected " << batch * dims[0] << " input values, got " << inputs.size();
        throw UsageError(msg.str());
    }
    tape.batch = batch;
    tape.activations.resize(n_layers);
    tape.activations[0].assign(inputs.begin(), inputs.end());

    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < n_layers; ++l) {
        const int in = dims[l];
        const int out = dims[l + 1];
        const double* w = net.parameters.data() + offset;
        const double* b = w + static_cast<std::size_t>(in) * static_cast<std::size_t>(out);
        const std::vector<double>& x = tape.activations[l];
        std::vector<double>& y = tape.activations[l + 1];
        y.resize(static_cast<std::size_t>(batch) * static_cast<std::size_t>(out));
        const bool last = (l + 2 == n_layers);
        for (int s = 0; s < batch; ++s) {
            const double* xs = x.data() + static_cast<std::size_t>(s) * in;
            double* ys = y.data() + static_cast<std::size_t>(s) * out;
            for (int o = 0; o < out; ++o) {
                const double* wo = w + static_cast<std::size_t>(o) * in;
                double acc = b[o];
                for (int i = 0; i < in; ++i) acc += wo[i] * xs[i];
                ys[o] = (!last && acc < 0.0) ? 0.0 : acc;  // ReLU on hidden layers
            }
        }
        offset += static_cast<std::size_t>(in + 1) * static_cast<std::size_t>(out);
    }
}

void backward_batch(const Network& net, const ForwardTape& tape,
                    std::span<const double> output_grads, std::span<double> param_grads) {
    auto dims = layer_dims(net.spec);
    const int batch = tape.batch;
    const std::size_t n_layers = dims.size();
    if (output_grads.size() != static_cast<std::size_t>(batch) * static_cast<std::size_t>(dims.back())) {
        throw UsageError("backward_batch: output gradient shape mismatch");
    }
    if (param_grads.size() != parameter_count(net.spec)) {
        throw UsageError("backward_batch: parameter gradient shape mismatch");
    }

    std::vector<double> grad(output_grads.begin(), output_grads.end());
    std::vector<double> grad_prev;
    for (std::size_t l = n_layers - 1; l-- > 0;) {
        const int in = dims[l];
        const int out = dims[l + 1];
        const std::size_t offset = layer_offset(net.spec, static_cast<int>(l));
        const double* w = net.parameters.data() + offset;
        double* dw = param_grads.data() + offset;
        double* db = dw + static_cast<std::size_t>(in) * static_cast<std::size_t>(out);
        const std::vector<double>& x = tape.activations[l];

        for (int s = 0; s < batch; ++s) {
            const double* xs = x.data() + static_cast<std::size_t>(s) * in;
            const double* gs = grad.data() + static_cast<std::size_t>(s) * out;
            for (int o = 0; o < out; ++o) {
                const double g = gs[o];
                if (g == 0.0) continue;
                double* dwo = dw + static_cast<std::size_t>(o) * in;
                for (int i = 0; i < in; ++i) dwo[i] += g * xs[i];
                db[o] += g;
            }
        }
        if (l == 0) break;

        grad_prev.assign(static_cast<std::size_t>(batch) * static_cast<std::size_t>(in), 0.0);
        for (int s = 0; s < batch; ++s) {
            const double* gs = grad.data() + static_cast<std::size_t>(s) * out;
            const double* xs = x.data() + static_cast<std::size_t>(s) * in;
            double* gp = grad_prev.data() + static_cast<std::size_t>(s) * in;
            for (int o = 0; o < out; ++o) {
                const double g = gs[o];
                if (g == 0.0) continue;
                const double* wo = w + static_cast<std::size_t>(o) * in;
                for (int i = 0; i < in; ++i) gp[i] += g * wo[i];
            }
            // ReLU mask: dead units (activation 0) pass no gradient
            for (int i = 0; i < in; ++i) {
                if (xs[i] <= 0.0) gp[i] = 0.0;
            }
        }
        grad.swap(grad_prev);
    }
}

std::vector<double> forward(const Network& net, std::span<const double> obs) {
    if (static_cast<int>(obs.size()) != net.spec.input_dim) {
        std::ostringstream msg;
        msg << "forward: observation has " << obs.size() << " entries, network expects "
            << net.spec.input_dim;
        throw UsageError(msg.str());
    }
    for (double v : obs) {
        if (!std::isfinite(v)) throw UsageError("forward: non-finite observation");
    }
    ForwardTape tape;
    forward_batch(net, obs, 1, tape);
    return tape.activations.back();
}

std::vector<double> backward(const Network& net, std::span<const double> obs,
                             std::span<const double> output_grad) {
    if (static_cast<int>(obs.size()) != net.spec.input_dim) {
        throw UsageError("backward: observation shape mismatch");
    }
    if (static_cast<int>(output_grad.size()) != net.spec.output_dim) {
        throw UsageError("backward: output gradient shape mismatch");
    }
    ForwardTape tape;
    forward_batch(net, obs, 1, tape);
    std::vector<double> grads(parameter_count(net.spec), 0.0);
    backward_batch(net, tape, output_grad, grads);
    return grads;
}

OptimizerState make_optimizer(const Network& net, double learning_rate) {
    if (!(learning_rate > 0.0)) throw UsageError("make_optimizer: learning rate must be > 0");
    OptimizerState opt;
    opt.learning_rate = learning_rate;
    opt.first_moment.assign(net.parameters.size(), 0.0);
    opt.second_moment.assign(net.parameters.size(), 0.0);
    return opt;
}

void adam_step(Network& net, OptimizerState& opt, std::span<const double> grad) {
    if (grad.size() != net.parameters.size()) throw UsageError("adam_step: gradient length mismatch");
    if (opt.first_moment.size() != net.parameters.size()) {
        throw UsageError("adam_step: optimizer state does not match the network");
    }
    for (double g : grad) {
        if (!std::isfinite(g)) throw NumericalError("adam_step: non-finite gradient, update refused");
    }
    opt.step_count += 1;
    const double t = static_cast<double>(opt.step_count);
    const double correction1 = 1.0 - std::pow(opt.beta1, t);
    const double correction2 = 1.0 - std::pow(opt.beta2, t);
    for (std::size_t i = 0; i < net.parameters.size(); ++i) {
        double m = opt.first_moment[i] = opt.beta1 * opt.first_moment[i] + (1.0 - opt.beta1) * grad[i];
        double v = opt.second_moment[i] = opt.beta2 * opt.second_moment[i] + (1.0 - opt.beta2) * grad[i] * grad[i];
        const double m_hat = m / correction1;
        const double v_hat = v / correction2;
        net.parameters[i] -= opt.learning_rate * m_hat / (std::sqrt(v_hat) + opt.epsilon);
    }
}

void target_update(const Network& online, Network& target, double tau) {
    if (!same_architecture(online.spec, target.spec)) {
        throw UsageError("target_update: network architectures differ");
    }
    if (!(tau >= 0.0 && tau <= 1.0)) throw UsageError("target_update: tau must lie in [0, 1]");
    if (tau == 1.0) {
        target.parameters = online.parameters;  // hard copy
        return;
    }
    for (std::size_t i = 0; i < target.parameters.size(); ++i) {
        target.parameters[i] = tau * online.parameters[i] + (1.0 - tau) * target.parameters[i];
    }
}

}  // namespace dsac
