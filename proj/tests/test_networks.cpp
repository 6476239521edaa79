#include <doctest.h>

#include <cmath>

#include "compo/networks.hpp"
#include "compo/rng.hpp"

using namespace compo;

TEST_CASE("smooth_relu: analytic values and clamps") {
    CHECK(smooth_relu(0.0, 0.01) == doctest::Approx(0.01 * std::log(2.0)).epsilon(1e-12));
    CHECK(smooth_relu(10.0, 0.01) == 10.0);
    CHECK(smooth_relu(-10.0, 0.01) == 0.0);
    CHECK_THROWS_AS(smooth_relu(1.0, 0.0), NumericError);
    CHECK_THROWS_AS(smooth_relu(1.0, -0.5), NumericError);
}

TEST_CASE("smooth_relu: monotone, convex, within delta*ln2 of the ramp") {
    const double delta = 0.05;
    const int n = 100000;
    double prev = smooth_relu(-5.0, delta);
    double prev_slope = -1;
    for (int i = 1; i < n; ++i) {
        double x = -5.0 + 10.0 * i / (n - 1);
        double v = smooth_relu(x, delta);
        CHECK(v >= prev);
        double slope = v - prev;
        CHECK(slope >= prev_slope - 1e-12);
        prev = v;
        prev_slope = slope;
        CHECK(std::abs(v - std::max(0.0, x)) <= delta * std::log(2.0) + 1e-15);
    }
}

TEST_CASE("shallow net: single ridge unit and empty sum") {
    ShallowNet net(2, 1, SmoothActivation(1e-6));
    net.unit(0) = {{1.0, 0.0}, 0.0, 1.0};
    double x[2] = {5, 9};
    CHECK(net.eval(std::span<const double>(x, 2)) == doctest::Approx(5.0).epsilon(1e-9));
    ShallowNet empty(2, 0);
    CHECK(empty.eval(std::span<const double>(x, 2)) == 0.0);
}

TEST_CASE("shallow net: mirrored units approximate |x|") {
    const double delta = 0.01;
    ShallowNet net(1, 2, SmoothActivation(delta));
    net.unit(0) = {{1.0}, 0.0, 1.0};
    net.unit(1) = {{-1.0}, 0.0, 1.0};
    for (double x : {-3.0, -1.0, 0.5, 2.0}) {
        double hand = smooth_relu(x, delta) + smooth_relu(-x, delta);
        CHECK(net.eval(std::span<const double>(&x, 1)) == hand);
        CHECK(std::abs(hand - std::abs(x)) <= delta * 2 * std::log(2.0) + 1e-15);
    }
}

TEST_CASE("deep tree net: degenerate d=2 equals its single node") {
    auto net = init_network(NetworkArch::tree(2, 4), 17);
    auto& tree = dynamic_cast<DeepTreeNet&>(*net);
    Rng rng(3);
    for (int it = 0; it < 20; ++it) {
        double x[2] = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
        CHECK(tree.eval(std::span<const double>(x, 2)) ==
              tree.node(1).eval(std::span<const double>(x, 2)));
    }
}

TEST_CASE("deep tree net: symmetric nodes give equal level-1 outputs") {
    auto base = init_network(NetworkArch::tree(4, 3), 21);
    auto& tree = dynamic_cast<DeepTreeNet&>(*base);
    tree.node(3).set_params(tree.node(2).params());
    double x[4] = {0.3, -0.7, 0.3, -0.7};
    auto nodes = tree.eval_nodes(std::span<const double>(x, 4));
    CHECK(nodes[1] == nodes[2]);
}

TEST_CASE("deep tree net: matches nested shallow evaluation bit-exactly") {
    auto base = init_network(NetworkArch::tree(4, 5), 77);
    auto& tree = dynamic_cast<DeepTreeNet&>(*base);
    Rng rng(8);
    for (int it = 0; it < 50; ++it) {
        std::vector<double> x(4);
        for (double& xi : x) xi = rng.uniform(-1.0, 1.0);
        double lo[2] = {x[0], x[1]}, hi[2] = {x[2], x[3]};
        double u = tree.node(2).eval(std::span<const double>(lo, 2));
        double v = tree.node(3).eval(std::span<const double>(hi, 2));
        double uv[2] = {u, v};
        CHECK(tree.eval(x) == tree.node(1).eval(std::span<const double>(uv, 2)));
    }
}

TEST_CASE("parameter counts match the architecture bookkeeping") {
    CHECK(ShallowNet(8, 10).param_count() == 100); // (d+2)n
    CHECK(DeepTreeNet(TreeTopology(8), 5).param_count() == 140);
    CHECK(GenericMLP({1, 24, 1}, false).param_count() == 73);
    CHECK(GenericMLP({1, 12, 12, 1}, true).param_count() == 217);
    CHECK(GenericMLP({1, 12, 12, 1}, false).param_count() == 193);
    for (std::size_t d : {1u, 3u, 9u})
        for (std::size_t n : {1u, 4u, 13u}) CHECK(ShallowNet(d, n).param_count() == (d + 2) * n);
}

TEST_CASE("init_network: deterministic, shape-stable, seed-sensitive") {
    auto arch = NetworkArch::mlp({1, 24, 1}, false);
    auto a = init_network(arch, 7);
    auto b = init_network(arch, 7);
    auto c = init_network(arch, 8);
    CHECK(a->param_count() == 73);
    CHECK(c->param_count() == 73);
    CHECK(a->params() == b->params());
    CHECK(a->params() != c->params());
}

TEST_CASE("init_network: biases start at zero, weights within the fan bound") {
    auto net = init_network(NetworkArch::shallow(3, 6), 5);
    auto& sh = dynamic_cast<ShallowNet&>(*net);
    const double bound = std::sqrt(6.0 / (3 + 6));
    for (std::size_t k = 0; k < sh.units(); ++k) {
        CHECK(sh.unit(k).b == 0.0);
        for (double w : sh.unit(k).w) CHECK(std::abs(w) <= bound);
    }
}

TEST_CASE("shallow net: output layer is exactly linear in the coefficients") {
    auto base = init_network(NetworkArch::shallow(2, 7), 13);
    auto& net = dynamic_cast<ShallowNet&>(*base);
    auto scaled_holder = net.clone();
    auto& scaled = dynamic_cast<ShallowNet&>(*scaled_holder);
    const double c = 2.0; // power of two: scaling commutes with the sum exactly
    for (std::size_t k = 0; k < scaled.units(); ++k) scaled.unit(k).a *= c;
    Rng rng(4);
    for (int it = 0; it < 30; ++it) {
        double x[2] = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
        auto xs = std::span<const double>(x, 2);
        CHECK(scaled.eval(xs) == c * net.eval(xs));
    }
}

TEST_CASE("mlp: dimension and width validation") {
    CHECK_THROWS_AS(GenericMLP({5}, false), ConfigError);
    CHECK_THROWS_AS(GenericMLP({1, 0, 1}, false), ConfigError);
    CHECK_THROWS_AS(GenericMLP({1, 4, 2}, false), ConfigError);
    GenericMLP ok({2, 4, 1}, false);
    double x[1] = {0.5};
    CHECK_THROWS_AS(ok.eval(std::span<const double>(x, 1)), ConfigError);
}

TEST_CASE("mlp: forward pass matches a hand computation") {
    GenericMLP net({2, 2, 1}, false, SmoothActivation(0.1));
    // params: W0 (2x2 row-major), b0, W1 (1x2), b1
    std::vector<double> p = {0.5, -0.3, 0.2, 0.8, 0.1, -0.2, 1.5, -2.0, 0.25};
    net.set_params(p);
    double x[2] = {0.4, -0.6};
    double u0 = 0.5 * 0.4 + (-0.3) * (-0.6) + 0.1;
    double u1 = 0.2 * 0.4 + 0.8 * (-0.6) + (-0.2);
    double h0 = smooth_relu(u0, 0.1), h1 = smooth_relu(u1, 0.1);
    double expect = 1.5 * h0 - 2.0 * h1 + 0.25;
    CHECK(net.eval(std::span<const double>(x, 2)) == doctest::Approx(expect).epsilon(1e-15));
}

TEST_CASE("mlp with batchnorm: inference uses running statistics") {
    GenericMLP net({1, 2, 2, 1}, true, SmoothActivation(0.05));
    CHECK(net.bn_count() == 1);
    auto p = net.params();
    Rng rng(10);
    for (double& v : p) v = rng.uniform(-0.5, 0.5);
    net.set_params(p);
    net.bn(0).run_mean = {0.3, -0.1};
    net.bn(0).run_var = {1.7, 0.6};
    // hand forward
    double x = 0.7;
    const auto& W0 = net.weights(0);
    double a0 = smooth_relu(W0[0] * x + net.biases(0)[0], 0.05);
    double a1 = smooth_relu(W0[1] * x + net.biases(0)[1], 0.05);
    const auto& bn = net.bn(0);
    double z0 = bn.gamma[0] * (a0 - 0.3) / std::sqrt(1.7 + bn.eps) + bn.beta[0];
    double z1 = bn.gamma[1] * (a1 - (-0.1)) / std::sqrt(0.6 + bn.eps) + bn.beta[1];
    const auto& W1 = net.weights(1);
    double b0 = smooth_relu(W1[0] * z0 + W1[1] * z1 + net.biases(1)[0], 0.05);
    double b1 = smooth_relu(W1[2] * z0 + W1[3] * z1 + net.biases(1)[1], 0.05);
    double expect = net.weights(2)[0] * b0 + net.weights(2)[1] * b1 + net.biases(2)[0];
    CHECK(net.eval(std::span<const double>(&x, 1)) == doctest::Approx(expect).epsilon(1e-14));
}
