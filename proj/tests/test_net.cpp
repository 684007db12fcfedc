#include <doctest.h>

#include <cmath>
#include <cstring>
#include <sstream>

#include "dsac/checkpoint.hpp"
#include "dsac/errors.hpp"
#include "dsac/net.hpp"
#include "dsac/rng.hpp"
#include "oracles.hpp"

using namespace dsac;

namespace {

// Independent forward pass written the dumb way: explicit matrices.
std::vector<double> hand_forward(const Network& net, const std::vector<double>& obs) {
    auto dims = layer_dims(net.spec);
    std::vector<double> x = obs;
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const int in = dims[l];
        const int out = dims[l + 1];
        std::vector<double> y(static_cast<std::size_t>(out), 0.0);
        for (int o = 0; o < out; ++o) {
            double acc = net.parameters[offset + static_cast<std::size_t>(in) * out + o];  // bias
            for (int i = 0; i < in; ++i) {
                acc += net.parameters[offset + static_cast<std::size_t>(o) * in + i] * x[static_cast<std::size_t>(i)];
            }
            y[static_cast<std::size_t>(o)] = acc;
        }
        if (l + 2 < dims.size()) {
            for (double& v : y) v = std::max(v, 0.0);
        }
        x = std::move(y);
        offset += static_cast<std::size_t>(in + 1) * out;
    }
    return x;
}

double loss_for_grad_check(const Network& net, const std::vector<double>& obs,
                           const std::vector<double>& output_grad) {
    std::vector<double> out = hand_forward(net, obs);
    double acc = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) acc += out[i] * output_grad[i];
    return acc;
}

}  // namespace

TEST_CASE("parameter bookkeeping") {
    NetworkSpec spec{3, {5, 4}, 2, Activation::ReLU, 9};
    CHECK(parameter_count(spec) == (3 + 1) * 5 + (5 + 1) * 4 + (4 + 1) * 2);
    CHECK(layer_dims(spec) == std::vector<int>{3, 5, 4, 2});
    CHECK(layer_offset(spec, 1) == (3 + 1) * 5);
}

TEST_CASE("forward: identity weights pass the observation through") {
    NetworkSpec spec{3, {}, 3, Activation::ReLU, 0};
    Network net = make_network(spec);
    std::fill(net.parameters.begin(), net.parameters.end(), 0.0);
    for (int i = 0; i < 3; ++i) net.parameters[static_cast<std::size_t>(i) * 3 + i] = 1.0;
    std::vector<double> obs{0.5, -1.25, 3.0};
    CHECK(forward(net, obs) == obs);
}

TEST_CASE("forward: all-zero parameters give a zero output") {
    NetworkSpec spec{4, {8, 8}, 3, Activation::ReLU, 0};
    Network net = make_network(spec);
    std::fill(net.parameters.begin(), net.parameters.end(), 0.0);
    for (double v : forward(net, std::vector<double>{1.0, -2.0, 0.25, 9.0})) CHECK(v == 0.0);
}

TEST_CASE("forward: seeded 2-4-2 net matches hand-unrolled arithmetic") {
    NetworkSpec spec{2, {4}, 2, Activation::ReLU, 77};
    Network net = make_network(spec);
    std::vector<double> obs{1.0, -1.0};
    std::vector<double> got = forward(net, obs);
    std::vector<double> expect = hand_forward(net, obs);
    REQUIRE(got.size() == expect.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(expect[i]).epsilon(1e-14));
}

TEST_CASE("forward rejects bad shapes") {
    Network net = make_network({2, {4}, 2, Activation::ReLU, 1});
    CHECK_THROWS_AS(forward(net, std::vector<double>{1.0}), UsageError);
    CHECK_THROWS_AS(forward(net, std::vector<double>{1.0, std::nan("")}), UsageError);
    CHECK_THROWS_AS((void)backward(net, std::vector<double>{1.0, 2.0}, std::vector<double>{1.0}), UsageError);
}

TEST_CASE("backward: linear net analytic case") {
    // y = w * x + b with w, b scalar
    NetworkSpec spec{1, {}, 1, Activation::ReLU, 0};
    Network net = make_network(spec);
    net.parameters = {2.0, 0.5};  // w, b
    std::vector<double> grads = backward(net, std::vector<double>{3.0}, std::vector<double>{1.0});
    CHECK(grads[0] == 3.0);  // dL/dw = x
    CHECK(grads[1] == 1.0);  // dL/db = 1
}

TEST_CASE("backward: dead ReLU unit passes no gradient") {
    // 1-1-1 net, pre-activation forced negative
    NetworkSpec spec{1, {1}, 1, Activation::ReLU, 0};
    Network net = make_network(spec);
    net.parameters = {1.0, -5.0, 2.0, 0.0};  // w1, b1, w2, b2
    std::vector<double> grads = backward(net, std::vector<double>{3.0}, std::vector<double>{1.0});
    CHECK(grads[0] == 0.0);  // dL/dw1
    CHECK(grads[1] == 0.0);  // dL/db1
    CHECK(grads[2] == 0.0);  // dL/dw2: hidden activation is 0
    CHECK(grads[3] == 1.0);  // output bias still learns
}

TEST_CASE("backward matches central finite differences on random nets") {
    Rng rng(42);
    const std::vector<NetworkSpec> specs = {
        {3, {}, 2, Activation::ReLU, 0},
        {4, {16}, 3, Activation::ReLU, 0},
        {6, {32, 16}, 4, Activation::ReLU, 0},
        {5, {64, 64}, 2, Activation::ReLU, 0},
    };
    int nets_checked = 0;
    for (int trial = 0; trial < 50; ++trial) {
        NetworkSpec spec = specs[static_cast<std::size_t>(trial) % specs.size()];
        spec.seed = 1000 + static_cast<std::uint64_t>(trial);
        Network net = make_network(spec);
        std::vector<double> obs(static_cast<std::size_t>(spec.input_dim));
        for (double& v : obs) v = rng.uniform(-2.0, 2.0);
        std::vector<double> output_grad(static_cast<std::size_t>(spec.output_dim));
        for (double& v : output_grad) v = rng.uniform(-1.0, 1.0);

        std::vector<double> analytic = backward(net, obs, output_grad);
        const double h = 1e-5;
        for (std::size_t p = 0; p < net.parameters.size(); p += 1 + p / 16) {  // strided subset
            Network bumped = net;
            bumped.parameters[p] += h;
            const double up = loss_for_grad_check(bumped, obs, output_grad);
            bumped.parameters[p] = net.parameters[p] - h;
            const double down = loss_for_grad_check(bumped, obs, output_grad);
            const double fd = (up - down) / (2.0 * h);
            if (std::abs(analytic[p]) > 1e-8) {
                CHECK(std::abs(analytic[p] - fd) / std::abs(analytic[p]) < 1e-4);
            } else {
                CHECK(std::abs(fd) < 1e-6);
            }
        }
        ++nets_checked;
    }
    CHECK(nets_checked == 50);
}

TEST_CASE("adam: zero gradient leaves parameters untouched") {
    Network net = make_network({2, {4}, 2, Activation::ReLU, 3});
    OptimizerState opt = make_optimizer(net, 0.1);
    std::vector<double> before = net.parameters;
    adam_step(net, opt, std::vector<double>(net.parameters.size(), 0.0));
    CHECK(net.parameters == before);
    CHECK(opt.step_count == 1);
}

TEST_CASE("adam: first step magnitude is the bias-corrected learning rate") {
    NetworkSpec spec{1, {}, 1, Activation::ReLU, 0};
    Network net = make_network(spec);
    net.parameters = {1.0, 0.0};
    OptimizerState opt = make_optimizer(net, 0.1);
    adam_step(net, opt, std::vector<double>{1.0, 0.0});
    // m_hat = 1, v_hat = 1 after correction: step = lr / (1 + eps)
    const double expect = 1.0 - 0.1 / (1.0 + 1e-8);
    CHECK(net.parameters[0] == doctest::Approx(expect).epsilon(1e-12));
    CHECK(net.parameters[1] == 0.0);
}

TEST_CASE("adam: identical call sequences are bit-identical") {
    auto run = [] {
        Network net = make_network({3, {8}, 2, Activation::ReLU, 11});
        OptimizerState opt = make_optimizer(net, 3e-4);
        Rng rng(5);
        for (int step = 0; step < 20; ++step) {
            std::vector<double> grad(net.parameters.size());
            for (double& g : grad) g = rng.uniform(-1.0, 1.0);
            adam_step(net, opt, grad);
        }
        return net.parameters;
    };
    std::vector<double> a = run();
    std::vector<double> b = run();
    CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

TEST_CASE("adam refuses non-finite gradients") {
    Network net = make_network({2, {}, 2, Activation::ReLU, 0});
    OptimizerState opt = make_optimizer(net, 0.1);
    std::vector<double> before = net.parameters;
    std::vector<double> grad(net.parameters.size(), 0.0);
    grad[2] = std::nan("");
    CHECK_THROWS_AS(adam_step(net, opt, grad), NumericalError);
    CHECK(net.parameters == before);
    CHECK(opt.step_count == 0);
}

TEST_CASE("parameters stay finite across many updates") {
    Network net = make_network({4, {16}, 3, Activation::ReLU, 21});
    OptimizerState opt = make_optimizer(net, 3e-2);
    Rng rng(9);
    for (int step = 0; step < 500; ++step) {
        std::vector<double> grad(net.parameters.size());
        for (double& g : grad) g = rng.uniform(-10.0, 10.0);
        adam_step(net, opt, grad);
    }
    for (double p : net.parameters) CHECK(std::isfinite(p));
}

TEST_CASE("target_update blends and hard-copies") {
    Network online = make_network({2, {4}, 2, Activation::ReLU, 1});
    Network target = make_network({2, {4}, 2, Activation::ReLU, 2});

    Network t1 = target;
    target_update(online, t1, 1.0);
    CHECK(t1.parameters == online.parameters);

    Network t0 = target;
    target_update(online, t0, 0.0);
    CHECK(t0.parameters == target.parameters);

    Network mid = target;
    std::fill(mid.parameters.begin(), mid.parameters.end(), 0.0);
    Network twos = online;
    std::fill(twos.parameters.begin(), twos.parameters.end(), 2.0);
    target_update(twos, mid, 0.5);
    for (double p : mid.parameters) CHECK(p == 1.0);

    Network other = make_network({2, {5}, 2, Activation::ReLU, 3});
    CHECK_THROWS_AS(target_update(online, other, 1.0), UsageError);
}

TEST_CASE("network checkpoint round-trips bit-exactly") {
    Network net = make_network({3, {8, 4}, 2, Activation::ReLU, 1234});
    OptimizerState opt = make_optimizer(net, 3e-4);
    Rng rng(6);
    for (int step = 0; step < 5; ++step) {
        std::vector<double> grad(net.parameters.size());
        for (double& g : grad) g = rng.uniform(-1.0, 1.0);
        adam_step(net, opt, grad);
    }

    std::stringstream buffer;
    save_network(buffer, net, &opt);
    std::optional<OptimizerState> opt_back;
    Network back = load_network(buffer, opt_back);

    CHECK(back.spec.input_dim == net.spec.input_dim);
    CHECK(back.spec.hidden_layers == net.spec.hidden_layers);
    CHECK(back.spec.seed == net.spec.seed);
    CHECK(back.parameters == net.parameters);
    REQUIRE(opt_back.has_value());
    CHECK(opt_back->step_count == opt.step_count);
    CHECK(opt_back->first_moment == opt.first_moment);
    CHECK(opt_back->second_moment == opt.second_moment);
    CHECK(opt_back->learning_rate == opt.learning_rate);
}
