#include <doctest.h>

#include <cmath>
#include <numbers>

#include "compo/rng.hpp"
#include "compo/targets.hpp"

using namespace compo;

namespace {
const BivariateFn kSum = [](double a, double b) { return a + b; };
const BivariateFn kProduct = [](double a, double b) { return a * b; };
const BivariateFn kMax = [](double a, double b) { return std::max(a, b); };
} // namespace

TEST_CASE("tree target: single sum node") {
    auto t = build_tree_target(2, {{1, kSum}});
    double x[2] = {1, 2};
    CHECK(t.eval(std::span<const double>(x, 2)) == 3.0);
}

TEST_CASE("tree target: two-level product/sum composition") {
    // root sums the two leaf products: 1*2 + 3*4 = 14
    auto t = build_tree_target(4, {{1, kSum}, {2, kProduct}, {3, kProduct}});
    double x[4] = {1, 2, 3, 4};
    CHECK(t.eval(std::span<const double>(x, 4)) == 14.0);
}

TEST_CASE("tree target: max tree computes max of all leaves") {
    std::map<std::size_t, BivariateFn> fns;
    for (std::size_t v = 1; v < 8; ++v) fns[v] = kMax;
    auto t = build_tree_target(8, fns);
    Rng rng(5);
    for (int it = 0; it < 20; ++it) {
        std::vector<double> x(8);
        double expect = -2;
        for (double& xi : x) {
            xi = rng.uniform(-1.0, 1.0);
            expect = std::max(expect, xi);
        }
        CHECK(t.eval(x) == expect);
    }
}

TEST_CASE("tree target: construction errors carry the vertex id") {
    CHECK_THROWS_AS(build_tree_target(3, {}), ConfigError);
    CHECK_THROWS_AS(build_tree_target(0, {}), ConfigError);
    CHECK_THROWS_WITH_AS(build_tree_target(4, {{1, kSum}, {2, kSum}}),
                         doctest::Contains("vertex 3"), ConfigError);
    CHECK_THROWS_WITH_AS(build_tree_target(4, {{1, kSum}, {2, kSum}, {3, kSum}, {7, kSum}}),
                         doctest::Contains("vertex 7"), ConfigError);
}

TEST_CASE("tree target: evaluation matches a hand-composed closure bit-exactly") {
    Rng rng(99);
    auto h1 = make_random_node_fn(rng);
    auto h2 = make_random_node_fn(rng);
    auto h3 = make_random_node_fn(rng);
    auto t = build_tree_target(4, {{1, h1}, {2, h2}, {3, h3}});
    for (int it = 0; it < 50; ++it) {
        std::vector<double> x(4);
        for (double& xi : x) xi = rng.uniform(-1.0, 1.0);
        double direct = h1(h2(x[0], x[1]), h3(x[2], x[3]));
        CHECK(t.eval(x) == direct);
    }
}

TEST_CASE("tree target: permuting leaf order and inputs together is a no-op") {
    auto t = make_random_tree(8, 31);
    std::vector<std::size_t> sigma = {3, 7, 1, 0, 6, 2, 5, 4};
    std::vector<std::size_t> new_order(8);
    for (std::size_t i = 0; i < 8; ++i) new_order[i] = sigma[t.leaf_order()[i]];
    auto t2 = t.with_leaf_order(new_order);
    Rng rng(7);
    for (int it = 0; it < 30; ++it) {
        std::vector<double> x(8), xp(8);
        for (double& xi : x) xi = rng.uniform(-1.0, 1.0);
        for (std::size_t i = 0; i < 8; ++i) xp[sigma[i]] = x[i];
        CHECK(t.eval(x) == t2.eval(xp));
    }
}

TEST_CASE("cos4 target equals cos(4x) to 1e-12 on a dense grid") {
    auto f = make_cos4();
    const double pi = std::numbers::pi;
    CHECK(f.eval1(0.0) == 1.0);
    CHECK(f.eval1(pi / 4) == doctest::Approx(-1.0).epsilon(1e-12));
    double worst = 0;
    for (int i = 0; i < 10000; ++i) {
        double x = -2 * pi + 4 * pi * i / 9999.0;
        worst = std::max(worst, std::abs(f.eval1(x) - std::cos(4 * x)));
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("scalar target checks arity and domain") {
    auto f = make_cos4();
    double xy[2] = {0, 0};
    CHECK_THROWS_AS(f.eval(std::span<const double>(xy, 2)), ConfigError);
    CHECK_THROWS_WITH_AS(f.eval1(7.0), doctest::Contains("outside"), ConfigError);
}

TEST_CASE("q polynomial: constant inner expression") {
    QPolyCoeffs c;
    c.a = c.b = c.c = c.d = c.e = c.f = c.g = c.h = 0;
    c.i = 1;
    auto q = make_q_poly(c);
    double x[2] = {0, 0};
    CHECK(q.eval(std::span<const double>(x, 2)) == 1.0);
    CHECK(QPolyCoeffs::count == 9);
}

TEST_CASE("q polynomial: normalized inner stays in [-1,1]") {
    QPolyCoeffs c{0.3, -0.5, 0.2, 0.7, -0.4, 0.6, 0.1, -0.2, 0.05};
    auto inner = make_q_inner(c);
    Rng rng(11);
    for (int it = 0; it < 2000; ++it) {
        double x[2] = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
        double v = inner.eval(std::span<const double>(x, 2));
        CHECK(std::abs(v) <= 1.0 + 1e-9);
    }
}

TEST_CASE("gauss bump builtins") {
    auto f = make_gauss_bump(1);
    CHECK(f.eval1(0.0) == 1.0);
    auto f3 = make_gauss_bump(3);
    double x[3] = {0, 0, 0};
    CHECK(f3.eval(std::span<const double>(x, 3)) == 1.0);
    auto g = make_gauss_bump_shifted(1, 0.5);
    CHECK(g.eval1(0.5) == 1.0);
}

TEST_CASE("random trees are seeded, deterministic and map into [-1,1]") {
    auto t1 = make_random_tree(4, 123);
    auto t2 = make_random_tree(4, 123);
    auto t3 = make_random_tree(4, 124);
    Rng rng(55);
    bool differs = false;
    for (int it = 0; it < 100; ++it) {
        std::vector<double> x(4);
        for (double& xi : x) xi = rng.uniform(-1.0, 1.0);
        double v = t1.eval(x);
        CHECK(v == t2.eval(x));
        differs |= v != t3.eval(x);
        CHECK(std::abs(v) <= 1.0);
        for (double nodeval : t1.eval_nodes(x)) CHECK(std::abs(nodeval) <= 1.0);
    }
    CHECK(differs);
}

TEST_CASE("target catalog lookup") {
    auto cos4 = lookup_target("cos4");
    CHECK(cos4.arity == 1);
    CHECK(cos4.domain.lo[0] == doctest::Approx(-2 * std::numbers::pi));
    CHECK(cos4.domain.hi[0] == doctest::Approx(2 * std::numbers::pi));
    auto bump = lookup_target("gauss_bump", {{"d", 1}});
    CHECK(bump.eval1(0.0) == 1.0);
    CHECK(lookup_target("tree_random", {{"d", 4}, {"seed", 9}}).arity == 4);
    CHECK_THROWS_WITH_AS(lookup_target("nope"), doctest::Contains("unknown label"), ConfigError);
    CHECK(builtin_target_labels().size() >= 4);
}
