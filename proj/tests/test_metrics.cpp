#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "compo/metrics.hpp"
#include "compo/rng.hpp"

using namespace compo;

TEST_CASE("sup_norm_error: identical functions and constant offsets") {
    VectorFn f = [](std::span<const double> x) { return std::sin(x[0]); };
    Box dom = Box::cube(1, -1, 1);
    CHECK(sup_norm_error(f, f, dom, SampleMethod::grid, 1000).value == 0.0);
    VectorFn zero = [](std::span<const double>) { return 0.0; };
    VectorFn c = [](std::span<const double>) { return -2.5; };
    auto got = sup_norm_error(zero, c, dom, SampleMethod::grid, 1000);
    CHECK(got.value == 2.5);
    CHECK(got.samples >= 1000);
}

TEST_CASE("sup_norm_error: resolution guard and dimension checks") {
    VectorFn f = [](std::span<const double>) { return 0.0; };
    CHECK_THROWS_AS(sup_norm_error(f, f, Box::cube(1, 0, 1), SampleMethod::grid, 10), ConfigError);
}

TEST_CASE("sup_norm_error: Chebyshev residual matches a dense-grid oracle") {
    const double pi = std::numbers::pi;
    // 8-term Chebyshev expansion of cos(4x) on [-2pi, 2pi], built here as an
    // independent reference approximant
    const int terms = 8, quad = 256;
    std::vector<double> coef(terms, 0.0);
    for (int k = 0; k < terms; ++k) {
        double s = 0;
        for (int j = 0; j < quad; ++j) {
            double theta = pi * (j + 0.5) / quad;
            double t = std::cos(theta);
            s += std::cos(4 * (2 * pi * t)) * std::cos(k * theta);
        }
        coef[k] = (k == 0 ? 1.0 : 2.0) * s / quad;
    }
    auto cheb = [coef, pi](double x) {
        double t = x / (2 * pi), prev = 1.0, cur = t, acc = coef[0] + coef[1] * t;
        for (std::size_t k = 2; k < coef.size(); ++k) {
            double next = 2 * t * cur - prev;
            acc += coef[k] * next;
            prev = cur;
            cur = next;
        }
        return acc;
    };
    VectorFn f = [](std::span<const double> x) { return std::cos(4 * x[0]); };
    VectorFn g = [cheb](std::span<const double> x) { return cheb(x[0]); };
    Box dom = Box::cube(1, -2 * pi, 2 * pi);
    double brute = 0;
    for (int i = 0; i < 1000000; ++i) {
        double x = -2 * pi + 4 * pi * i / 999999.0;
        double xv[1] = {x};
        brute = std::max(brute, std::abs(f(xv) - g(xv)));
    }
    auto est = sup_norm_error(f, g, dom, SampleMethod::grid, 100000);
    CHECK(std::abs(est.value - brute) < 1e-6);
}

TEST_CASE("sup_norm_error: symmetry and triangle inequality on the sample set") {
    VectorFn f = [](std::span<const double> x) { return std::sin(3 * x[0] + x[1]); };
    VectorFn g = [](std::span<const double> x) { return x[0] * x[1]; };
    VectorFn h = [](std::span<const double> x) { return 0.5 * x[0]; };
    Box dom = Box::cube(2, -1, 1);
    auto e_fg = sup_norm_error(f, g, dom, SampleMethod::grid, 2500).value;
    auto e_gf = sup_norm_error(g, f, dom, SampleMethod::grid, 2500).value;
    auto e_fh = sup_norm_error(f, h, dom, SampleMethod::grid, 2500).value;
    auto e_hg = sup_norm_error(h, g, dom, SampleMethod::grid, 2500).value;
    CHECK(e_fg == e_gf);
    CHECK(e_fg <= e_fh + e_hg + 1e-15);
}

TEST_CASE("tree_error: exact nodes, constant offset, and decomposition") {
    auto target = make_random_tree(4, 3003);
    auto holder = init_network(NetworkArch::tree(4, 5), 1);
    auto& net = dynamic_cast<DeepTreeNet&>(*holder);
    std::vector<Box> domains(3, Box::cube(2, -1, 1));

    // a fitted-free oracle: build a second target whose nodes are the net's
    SUBCASE("perfect per-node match gives zero") {
        std::map<std::size_t, BivariateFn> fns;
        for (std::size_t v = 1; v <= 3; ++v) {
            const ShallowNet& node = net.node(v);
            fns[v] = [&node](double a, double b) {
                double x[2] = {a, b};
                return node.eval(std::span<const double>(x, 2));
            };
        }
        auto mirror = build_tree_target(4, fns);
        auto te = tree_error(mirror, net, domains);
        CHECK(te.total == 0.0);
    }

    SUBCASE("one node off by a constant contributes exactly that constant") {
        std::map<std::size_t, BivariateFn> fns;
        for (std::size_t v = 1; v <= 3; ++v) {
            const ShallowNet& node = net.node(v);
            bool offset = v == 2;
            fns[v] = [&node, offset](double a, double b) {
                double x[2] = {a, b};
                return node.eval(std::span<const double>(x, 2)) + (offset ? 0.25 : 0.0);
            };
        }
        auto mirror = build_tree_target(4, fns);
        auto te = tree_error(mirror, net, domains);
        CHECK(te.total == doctest::Approx(0.25).epsilon(1e-12));
        CHECK(te.per_node[1] == doctest::Approx(0.25).epsilon(1e-12));
    }

    SUBCASE("total equals the sum of independent per-node sup errors") {
        auto te = tree_error(target, net, domains);
        double sum = 0;
        for (std::size_t v = 1; v <= 3; ++v) {
            const auto& fv = target.node_fn(v);
            const ShallowNet& node = net.node(v);
            auto f = [&fv](std::span<const double> x) { return fv(x[0], x[1]); };
            auto gfn = [&node](std::span<const double> x) { return node.eval(x); };
            sum += sup_norm_error(f, gfn, domains[v - 1], SampleMethod::grid, 10000).value;
        }
        CHECK(te.total == sum);
    }
}

TEST_CASE("tree_error: topology mismatch is rejected") {
    auto target = make_random_tree(8, 1);
    auto holder = init_network(NetworkArch::tree(4, 2), 1);
    auto& net = dynamic_cast<DeepTreeNet&>(*holder);
    CHECK_THROWS_AS(tree_error(target, net, std::vector<Box>(3, Box::cube(2, -1, 1))),
                    ConfigError);
}

TEST_CASE("fit_scaling_exponent: exact and perturbed power laws") {
    auto fit = fit_scaling_exponent({{10, 1e-2}, {100, 1e-4}, {1000, 1e-6}});
    CHECK(fit.slope == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK(fit.residual < 1e-12);

    auto flat = fit_scaling_exponent({{1, 3.5}, {10, 3.5}, {100, 3.5}});
    CHECK(flat.slope == doctest::Approx(0.0));

    Rng rng(17);
    std::vector<std::pair<double, double>> pairs;
    for (int i = 0; i < 8; ++i) {
        double n = std::pow(2.0, i + 2);
        double delta = 0.01 * rng.uniform(-1.0, 1.0);
        pairs.emplace_back(n, 3.0 * std::pow(n, -1.5) * (1 + delta));
    }
    CHECK(std::abs(fit_scaling_exponent(pairs).slope + 1.5) < 0.05);
}

TEST_CASE("fit_scaling_exponent: input validation") {
    CHECK_THROWS_AS(fit_scaling_exponent({{1, 1}, {2, 2}}), ConfigError);
    CHECK_THROWS_AS(fit_scaling_exponent({{1, 1}, {2, 2}, {3, -1}}), ConfigError);
    CHECK_THROWS_AS(fit_scaling_exponent({{1, 1}, {2, 2}, {0, 3}}), ConfigError);
}

TEST_CASE("predicted_exponents: the two theoretical rates") {
    auto [s1, d1] = predicted_exponents(2, 8);
    CHECK(s1 == -0.25);
    CHECK(d1 == -1.0);
    auto [s2, d2] = predicted_exponents(1, 2);
    CHECK(s2 == -0.5);
    CHECK(d2 == -0.5); // no separation at d = 2
    auto [s3, d3] = predicted_exponents(4, 16);
    CHECK(s3 == -0.25);
    CHECK(d3 == -2.0);
    CHECK_THROWS_AS(predicted_exponents(0, 4), ConfigError);
    CHECK_THROWS_AS(predicted_exponents(2, 1), ConfigError);
}

TEST_CASE("vc_bounds: closed forms, including a broad sweep") {
    CHECK(vc_bounds(VcKind::shallow, 8, 10) == 1000);
    CHECK(vc_bounds(VcKind::tree, 8, 10) == 19600);
    CHECK(vc_bounds(VcKind::shallow, 1, 1) == 3);
    for (std::uint64_t d : {2ull, 4ull, 8ull, 16ull, 32ull})
        for (std::uint64_t n : {1ull, 2ull, 5ull, 10ull, 20ull, 50ull, 100ull, 200ull, 500ull,
                                1000ull}) {
            CHECK(vc_bounds(VcKind::shallow, d, n) == (d + 2) * n * n);
            CHECK(vc_bounds(VcKind::tree, d, n) == 4 * n * n * (d - 1) * (d - 1));
        }
}

TEST_CASE("scaling run: assembly, validation, csv schema") {
    std::vector<ScalingPoint> pts = {{1, 1e-1, "gaussian", 7},
                                     {2, 2.5e-2, "gaussian", 7},
                                     {4, 6e-3, "gaussian", 7}};
    auto run = ScalingRun::assemble(pts, ScalingPrediction{2, 2});
    CHECK(run.prediction.predicted_exponent() == -1.0);
    CHECK(run.fit.slope < -1.9);
    std::ostringstream os;
    run.write_csv(os);
    auto text = os.str();
    CHECK(text.find("# compo-approx-lab") == 0);
    CHECK(text.find("n,error,surrogate,seed,predicted_exponent,fitted_slope") != std::string::npos);
    CHECK(text.find("gaussian") != std::string::npos);

    pts[1].complexity = 0.5;
    CHECK_THROWS_AS(ScalingRun::assemble(pts, ScalingPrediction{}), ConfigError);
}

TEST_CASE("composition test: zero epsilon and exact additive propagation") {
    BivariateFn sum = [](double a, double b) { return a + b; };
    BivariateFn h1 = [](double a, double b) { return 0.5 * a - 0.25 * b; };
    BivariateFn h2 = [](double a, double b) { return 0.3 * a * b; };
    BivariateFn one = [](double, double) { return 1.0; };
    auto res = composition_lipschitz_test(sum, h1, h2, {0.0, 1e-1, 1e-2}, one, one, 2000);
    CHECK(res.table[0].second == 0.0);
    CHECK(res.table[1].second == doctest::Approx(2e-1).epsilon(1e-12));
    CHECK(res.table[2].second == doctest::Approx(2e-2).epsilon(1e-12));
}

TEST_CASE("composition test: Lipschitz product propagates linearly in eps") {
    BivariateFn prod = [](double a, double b) { return a * b; };
    BivariateFn h1 = [](double a, double b) { return std::sin(a) * std::cos(b); };
    BivariateFn h2 = [](double a, double b) { return 0.5 * (a + b * b); };
    auto res = composition_lipschitz_test(prod, h1, h2, {1e-1, 1e-2, 1e-3});
    CHECK(std::abs(res.slope - 1.0) <= 0.1);
}

TEST_CASE("composition test: empty epsilon list is rejected") {
    BivariateFn sum = [](double a, double b) { return a + b; };
    CHECK_THROWS_AS(composition_lipschitz_test(sum, sum, sum, {}), ConfigError);
}
