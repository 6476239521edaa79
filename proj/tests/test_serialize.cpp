#include <doctest.h>

#include <cmath>
#include <sstream>

#include "compo/rng.hpp"
#include "compo/serialize.hpp"
#include "compo/training.hpp"

using namespace compo;

TEST_CASE("hexfloat round trip is bit exact") {
    for (double v : {0.0, -0.0, 1.0, -1.5, 3.141592653589793, 1e-300, 5e-324, 1.7976931348623157e308,
                     0.1, -0.30000000000000004}) {
        CHECK(from_hexfloat(to_hexfloat(v)) == v);
        CHECK(std::signbit(from_hexfloat(to_hexfloat(v))) == std::signbit(v));
    }
    CHECK_THROWS_AS(from_hexfloat("zzz"), ConfigError);
}

namespace {

void check_roundtrip(const Net& net) {
    std::ostringstream os;
    save_net(net, os);
    std::istringstream is(os.str());
    auto back = load_net(is);
    CHECK(back->kind() == net.kind());
    CHECK(back->params() == net.params());
    Rng rng(2);
    for (int it = 0; it < 10; ++it) {
        std::vector<double> x(net.input_dim());
        for (double& xi : x) xi = rng.uniform(-1, 1);
        CHECK(back->eval(x) == net.eval(x));
    }
}

} // namespace

TEST_CASE("network serialization round trips bit-exactly") {
    check_roundtrip(*init_network(NetworkArch::shallow(3, 5, 0.02), 1));
    check_roundtrip(*init_network(NetworkArch::tree(8, 3), 2));
    check_roundtrip(*init_network(NetworkArch::mlp({2, 6, 1}, false), 3));

    // batchnorm running statistics must survive the trip too
    auto holder = init_network(NetworkArch::mlp({1, 5, 5, 1}, true), 4);
    Dataset data;
    data.dim = 1;
    Rng rng(5);
    for (int i = 0; i < 32; ++i) {
        double x = rng.uniform(-1, 1);
        data.add(std::span<const double>(&x, 1), rng.uniform(-1, 1));
    }
    TrainConfig cfg;
    cfg.learning_rate = 1e-3;
    cfg.batch_size = 8;
    cfg.epochs = 3;
    cfg.seed = 6;
    sgd_train(*holder, data, cfg, Dataset{1, {}, {}});
    check_roundtrip(*holder);
    auto& mlp = dynamic_cast<GenericMLP&>(*holder);
    std::ostringstream os;
    save_net(mlp, os);
    std::istringstream is(os.str());
    auto back = load_net(is);
    auto& mlp2 = dynamic_cast<GenericMLP&>(*back);
    CHECK(mlp2.bn(0).run_mean == mlp.bn(0).run_mean);
    CHECK(mlp2.bn(0).run_var == mlp.bn(0).run_var);
}

TEST_CASE("gaussian serialization round trips bit-exactly") {
    auto centers = grid_centers(2, 1);
    Rng rng(9);
    std::vector<double> coeffs(centers.size());
    for (double& c : coeffs) c = rng.uniform(-2, 2);
    GaussianNet net(centers, coeffs);
    std::ostringstream os;
    save_gaussian(net, os);
    std::istringstream is(os.str());
    auto back = load_gaussian(is);
    CHECK(back.coeffs() == net.coeffs());
    CHECK(back.centers().points() == net.centers().points());
    CHECK(back.centers().separation() == net.centers().separation());
    REQUIRE(back.centers().grid_spec().has_value());
    CHECK(back.centers().grid_spec()->m == 2);
    for (int it = 0; it < 10; ++it) {
        double x = rng.uniform(-2, 2);
        CHECK(back.eval(std::span<const double>(&x, 1)) ==
              net.eval(std::span<const double>(&x, 1)));
    }
}

TEST_CASE("malformed streams are rejected") {
    std::istringstream empty("");
    CHECK_THROWS_AS(load_net(empty), ConfigError);
    std::istringstream junk("not-a-header\n1\n2\n");
    CHECK_THROWS_AS(load_net(junk), ConfigError);
    std::istringstream truncated("compo-net shallow d=2 n=3 delta=0x1p-5\n0x1p+0\n");
    CHECK_THROWS_AS(load_net(truncated), ConfigError);
}
