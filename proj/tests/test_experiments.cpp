#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "compo/experiments.hpp"

using namespace compo;
namespace fs = std::filesystem;

namespace {

std::string scratch(const std::string& leaf) {
    auto p = fs::temp_directory_path() / "compo-approx-lab-tests" / leaf;
    fs::create_directories(p);
    return p.string();
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    REQUIRE(is.good());
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

} // namespace

TEST_CASE("config: file parsing, precedence, canonical hash") {
    auto dir = scratch("config");
    {
        std::ofstream os(fs::path(dir) / "a.cfg");
        os << "# comment\n\nepochs = 50\n  lr = 0.001  \nname = hello world\n";
    }
    auto cfg = ExperimentConfig::from_file((fs::path(dir) / "a.cfg").string());
    CHECK(cfg.get_u64("epochs", 0) == 50);
    CHECK(cfg.get_num("lr", 0) == 0.001);
    CHECK(cfg.get("name", "") == "hello world");
    CHECK(cfg.get_u64("missing", 7) == 7);

    auto h1 = cfg.hash();
    cfg.set("epochs", "60"); // flag override wins
    CHECK(cfg.get_u64("epochs", 0) == 60);
    CHECK(cfg.hash() != h1);

    ExperimentConfig same_a, same_b;
    same_a.set("x", "1");
    same_a.set("y", "2");
    same_b.set("y", "2");
    same_b.set("x", "1");
    CHECK(same_a.hash() == same_b.hash());

    CHECK_THROWS_AS(ExperimentConfig::from_file("/nonexistent/path.cfg"), ConfigError);
    {
        std::ofstream os(fs::path(dir) / "bad.cfg");
        os << "not a pair\n";
    }
    CHECK_THROWS_AS(ExperimentConfig::from_file((fs::path(dir) / "bad.cfg").string()),
                    ConfigError);
    cfg.set("epochs", "abc");
    CHECK_THROWS_AS(cfg.get_u64("epochs", 0), ConfigError);
}

TEST_CASE("output directory resolution: explicit key beats the environment") {
    ExperimentConfig cfg;
    setenv("COMPO_LAB_OUT", scratch("env_dir").c_str(), 1);
    CHECK(resolve_out_dir(cfg) == scratch("env_dir"));
    cfg.set("out", scratch("explicit_dir"));
    CHECK(resolve_out_dir(cfg) == scratch("explicit_dir"));
    unsetenv("COMPO_LAB_OUT");
}

TEST_CASE("scaling study: synthetic law recovers the exact exponent") {
    ExperimentConfig cfg;
    cfg.set("synthetic_law", "-1");
    cfg.set("m_list", "1,2,4,8");
    cfg.set("out", scratch("scale_synth"));
    auto res = run_scaling_study(cfg);
    auto text = slurp(res.output_paths[0]);
    CHECK(text.find("synthetic") != std::string::npos);
    // fitted_slope column must be exactly -1
    CHECK(text.find(",-1\n") != std::string::npos);
}

TEST_CASE("scaling study: d=2 gaussian arms share the predicted exponent") {
    ExperimentConfig cfg;
    cfg.set("d", "2");
    cfg.set("m_list", "1,2,3");
    cfg.set("shallow_surrogate", "gaussian");
    cfg.set("out", scratch("scale_d2"));
    auto res = run_scaling_study(cfg);
    REQUIRE(res.output_paths.size() == 2);
    auto deep = slurp(res.output_paths[0]);
    auto shallow = slurp(res.output_paths[1]);
    // r=2: both predictions are -r/2 = -1
    CHECK(deep.find(",-1,") != std::string::npos);
    CHECK(shallow.find(",-1,") != std::string::npos);
    CHECK(res.manifest.outputs.size() == 2);
}

TEST_CASE("scaling study: config validation") {
    ExperimentConfig cfg;
    cfg.set("m_list", "1,2");
    cfg.set("out", scratch("scale_bad"));
    CHECK_THROWS_AS(run_scaling_study(cfg), ConfigError);

    ExperimentConfig cfg2;
    cfg2.set("d", "4");
    cfg2.set("shallow_surrogate", "gaussian"); // grids in d=4 exceed the cap
    cfg2.set("out", scratch("scale_bad2"));
    CHECK_THROWS_AS(run_scaling_study(cfg2), ConfigError);
}

TEST_CASE("cos4: reduced mini run emits deterministic rows and manifests") {
    auto run_once = [](const std::string& out) {
        ExperimentConfig cfg;
        cfg.set("train_samples", "400");
        cfg.set("test_samples", "400");
        cfg.set("epochs", "10");
        cfg.set("batch", "100");
        cfg.set("restarts", "2");
        cfg.set("depths", "1,2");
        cfg.set("widths_d1", "8");
        cfg.set("widths_d2", "6");
        cfg.set("out", out);
        return run_cos4(cfg);
    };
    auto a = run_once(scratch("cos4_a"));
    auto b = run_once(scratch("cos4_b"));
    auto csv_a = slurp(a.output_paths[0]);
    CHECK(csv_a == slurp(b.output_paths[0]));
    CHECK(csv_a.find("# compo-approx-lab") == 0);
    CHECK(csv_a.find("depth,units_per_layer,total_units,param_count") != std::string::npos);
    // depth-1 row: 8 hidden units -> param count 25; depth-2 row with bn
    CHECK(csv_a.find("1,8,8,25,0,") != std::string::npos);
    CHECK(csv_a.find("2,6,12,") != std::string::npos);
    // traces exist and manifests carry the timing data instead of the CSV
    CHECK(slurp(a.output_paths[1]).find("train_mse") != std::string::npos);
    auto manifest = slurp(fs::path(a.output_paths[0]).parent_path() / "cos4_manifest.txt");
    CHECK(manifest.find("timings:") != std::string::npos);
    CHECK(manifest.find("config-hash:") != std::string::npos);
}

TEST_CASE("cos4: empty width list is a config error") {
    ExperimentConfig cfg;
    cfg.set("widths_d1", "");
    cfg.set("out", scratch("cos4_bad"));
    CHECK_THROWS_AS(run_cos4(cfg), ConfigError);
}

TEST_CASE("cos4: diverged architectures are flagged and the run continues") {
    ExperimentConfig cfg;
    cfg.set("train_samples", "200");
    cfg.set("test_samples", "200");
    cfg.set("epochs", "30");
    cfg.set("batch", "50");
    cfg.set("restarts", "2");
    cfg.set("lr", "1e6"); // guaranteed blow-up
    cfg.set("depths", "1");
    cfg.set("widths_d1", "8,12");
    cfg.set("out", scratch("cos4_diverge"));
    auto res = run_cos4(cfg);
    auto text = slurp(res.output_paths[0]);
    CHECK(text.find(",diverged") != std::string::npos);
    CHECK(text.find("nan") != std::string::npos);
    // both rows present despite the failures
    CHECK(text.find("1,8,") != std::string::npos);
    CHECK(text.find("1,12,") != std::string::npos);
}

TEST_CASE("qpoly: mini run reports the staged architecture") {
    ExperimentConfig cfg;
    cfg.set("search_iters", "40");
    cfg.set("out", scratch("qpoly_mini"));
    auto res = run_q_study(cfg);
    auto stages = slurp(res.output_paths[0]);
    CHECK(stages.find("inner_quadratic,1,9,") != std::string::npos);
    CHECK(stages.find("squaring_10,11,3,") != std::string::npos);
    auto summary = slurp(res.output_paths[1]);
    CHECK(summary.find("39,11,2049,") != std::string::npos);
    // the fitted stage-1 net round-trips through the shared network format
    CHECK(slurp(res.output_paths[2]).rfind("compo-net shallow d=2 n=9", 0) == 0);
}

TEST_CASE("boolean demo: parity curves") {
    ExperimentConfig cfg;
    cfg.set("fn", "parity");
    cfg.set("n", "8");
    cfg.set("out", scratch("bool_parity"));
    auto res = run_boolean_demo(cfg);
    auto errors = slurp(res.output_paths[1]);
    // low-order error is 1 for every k < 8, sparse error 0 from t=1 on
    CHECK(errors.find("low_order,7,1,parity,") != std::string::npos);
    CHECK(errors.find("sparse,1,0,parity,") != std::string::npos);
    auto coeffs = slurp(res.output_paths[0]);
    CHECK(coeffs.find("0xff,1") != std::string::npos);
    ExperimentConfig bad;
    bad.set("n", "25");
    bad.set("out", scratch("bool_bad"));
    CHECK_THROWS_AS(run_boolean_demo(bad), ConfigError);
}

TEST_CASE("vc table covers both kinds") {
    ExperimentConfig cfg;
    cfg.set("d_list", "2,8");
    cfg.set("n_list", "1,10");
    cfg.set("out", scratch("vc"));
    auto res = run_vc_table(cfg);
    auto text = slurp(res.output_paths[0]);
    CHECK(text.find("shallow,8,10,1000\n") != std::string::npos);
    CHECK(text.find("tree,8,10,19600\n") != std::string::npos);
}

TEST_CASE("gauss-fit: shifted bump refines with a steep negative slope") {
    ExperimentConfig cfg;
    cfg.set("target", "gauss_bump_off");
    cfg.set("m_list", "1,2,4");
    cfg.set("out", scratch("gaussfit"));
    auto res = run_gauss_fit(cfg);
    auto text = slurp(res.output_paths[0]);
    std::istringstream is(text);
    std::string line;
    std::vector<double> errs;
    double slope = 0;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("n,", 0) == 0) continue;
        std::istringstream ls(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        errs.push_back(std::stod(cells[1]));
        slope = std::stod(cells[5]);
    }
    REQUIRE(errs.size() == 3);
    CHECK(errs[1] < errs[0]);
    CHECK(errs[2] < errs[1]);
    CHECK(slope < -1.0);
}
