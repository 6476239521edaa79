#include <doctest.h>

#include <cmath>

#include "compo/rng.hpp"
#include "compo/scalable_ops.hpp"

using namespace compo;

namespace {
const BlockFn kSum = [](double a, double b) { return a + b; };
const BlockFn kMax = [](double a, double b) { return std::max(a, b); };
const BlockFn kDiff = [](double a, double b) { return a - b; };

BlockFn smooth_block(std::uint64_t seed) {
    Rng rng(seed);
    double c1 = rng.uniform(-1, 1), c2 = rng.uniform(-1, 1), c3 = rng.uniform(-1, 1);
    return [c1, c2, c3](double a, double b) {
        return c1 * std::sin(a + 2 * b) + c2 * a * b + c3 * std::cos(a - b);
    };
}
} // namespace

TEST_CASE("apply_layer: pairwise application and mirror swap") {
    std::vector<double> x = {1, 2, 3, 4};
    CHECK(apply_layer(kSum, x, false) == std::vector<double>{3, 7});
    std::vector<double> two = {5, 1};
    CHECK(apply_layer(kMax, two, false) == std::vector<double>{5});
    CHECK(apply_layer(kDiff, x, true) == std::vector<double>{-1, 1});
    std::vector<double> odd = {1, 2, 3};
    CHECK_THROWS_AS(apply_layer(kSum, odd, false), ConfigError);
}

TEST_CASE("build_scalable_operator: depth-M pairwise reduction") {
    auto op1 = build_scalable_operator(kSum, 1);
    double two[2] = {3, 4};
    CHECK(op1.eval(std::span<const double>(two, 2)) == 7.0);

    auto op3 = build_scalable_operator(kSum, 3);
    std::vector<double> ones(8, 1.0);
    CHECK(op3.eval(ones) == 8.0);

    auto mx = build_scalable_operator(kMax, 3);
    Rng rng(12);
    for (int it = 0; it < 20; ++it) {
        std::vector<double> x(8);
        double expect = -1e18;
        for (double& xi : x) {
            xi = rng.uniform(-1, 1);
            expect = std::max(expect, xi);
        }
        CHECK(mx.eval(x) == expect);
    }

    CHECK_THROWS_AS(build_scalable_operator(kSum, 0), ConfigError);
    std::vector<double> four(4, 1.0);
    CHECK_THROWS_AS(op3.eval(four), ConfigError);
}

TEST_CASE("shift invariance: block layers pass by construction") {
    for (auto seed : {1ull, 2ull, 3ull}) {
        auto res = check_shift_invariance(smooth_block(seed), 8, 50);
        CHECK(res.passed);
        CHECK(res.counterexample.empty());
    }
}

TEST_CASE("shift invariance: position-dependent layer fails with a counterexample") {
    LayerFn crooked = [](std::span<const double> x) {
        std::vector<double> out(x.size() / 2);
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = x[2 * i] + x[2 * i + 1] + static_cast<double>(i); // depends on position
        return out;
    };
    auto res = check_shift_invariance(crooked, 8, 20);
    CHECK(!res.passed);
    CHECK(res.counterexample.size() == 8);
    CHECK(!res.detail.empty());
}

TEST_CASE("mirror identity holds for mirrored layers") {
    auto res = check_mirror_identity(smooth_block(9), 8, 50);
    CHECK(res.passed);
}

TEST_CASE("operator_as_tree_target: cross-evaluation is bit-exact") {
    SUBCASE("single block") {
        auto op = build_scalable_operator(smooth_block(4), 1);
        auto t = operator_as_tree_target(op);
        CHECK(t.arity() == 2);
        double x[2] = {0.3, -0.8};
        CHECK(t.eval(std::span<const double>(x, 2)) == op.eval(std::span<const double>(x, 2)));
    }
    SUBCASE("sum operator is the total") {
        auto op = build_scalable_operator(kSum, 2);
        auto t = operator_as_tree_target(op);
        Rng rng(5);
        for (int it = 0; it < 10; ++it) {
            std::vector<double> x(4);
            for (double& xi : x) xi = rng.uniform(-1, 1);
            CHECK(t.eval(x) == x[0] + x[1] + x[2] + x[3]);
        }
    }
    SUBCASE("random smooth blocks, depths 1..4, plain and mirrored") {
        for (std::size_t M = 1; M <= 4; ++M)
            for (bool mirror : {false, true}) {
                auto op = build_scalable_operator(smooth_block(40 + M), M, mirror);
                auto t = operator_as_tree_target(op);
                Rng rng(100 + M);
                for (int it = 0; it < 100; ++it) {
                    std::vector<double> x(op.input_dim());
                    for (double& xi : x) xi = rng.uniform(-1, 1);
                    CHECK(t.eval(x) == op.eval(x));
                }
            }
    }
}

TEST_CASE("a trained 2-input network serves as a block") {
    auto holder = init_network(NetworkArch::shallow(2, 4), 77);
    auto block = block_from_net(*holder);
    auto op = build_scalable_operator(block, 2);
    Rng rng(78);
    std::vector<double> x(4);
    for (double& xi : x) xi = rng.uniform(-1, 1);
    double lo[2] = {x[0], x[1]}, hi[2] = {x[2], x[3]};
    double u = holder->eval(std::span<const double>(lo, 2));
    double v = holder->eval(std::span<const double>(hi, 2));
    double uv[2] = {u, v};
    CHECK(op.eval(x) == holder->eval(std::span<const double>(uv, 2)));

    auto holder1 = init_network(NetworkArch::shallow(1, 3), 1);
    CHECK_THROWS_AS(block_from_net(*holder1), ConfigError);
}

TEST_CASE("bookkeeping: 2^M inputs, exactly 2^M - 1 block applications") {
    for (std::size_t M = 1; M <= 4; ++M) {
        std::size_t calls = 0;
        BlockFn counting = [&calls](double a, double b) {
            ++calls;
            return a + b;
        };
        auto op = build_scalable_operator(counting, M);
        std::vector<double> x(op.input_dim(), 1.0);
        op.eval(x);
        CHECK(op.input_dim() == (std::size_t{1} << M));
        CHECK(calls == op.input_dim() - 1);
    }
}
