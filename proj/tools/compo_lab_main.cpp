#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "compo/acceptance.hpp"
#include "compo/experiments.hpp"

namespace {

struct CommonOpts {
    std::string config_file;
    std::vector<std::string> overrides;
    std::string out;
    std::string seed;
    std::string jobs;
};

void add_common(CLI::App* sub, CommonOpts& opts) {
    sub->add_option("--config", opts.config_file, "key = value config file");
    sub->add_option("--set", opts.overrides,
                    "override a config key, e.g. --set epochs=100 (repeatable)");
    sub->add_option("--out", opts.out, "output directory (default $COMPO_LAB_OUT or ./out)");
    sub->add_option("--seed", opts.seed, "master seed");
    sub->add_option("--jobs", opts.jobs, "concurrent cells for multi-cell experiments");
}

compo::ExperimentConfig build_config(const CommonOpts& opts,
                                     const std::vector<std::pair<std::string, std::string>>& extra) {
    compo::ExperimentConfig cfg;
    if (!opts.config_file.empty()) cfg = compo::ExperimentConfig::from_file(opts.config_file);
    // flags win over file values
    for (const auto& [k, v] : extra) cfg.set(k, v);
    for (const auto& kv : opts.overrides) {
        auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw compo::ConfigError("--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!opts.out.empty()) cfg.set("out", opts.out);
    if (!opts.seed.empty()) cfg.set("seed", opts.seed);
    if (!opts.jobs.empty()) cfg.set("jobs", opts.jobs);
    return cfg;
}

void report(const compo::ExperimentResult& result) {
    for (const auto& p : result.output_paths) std::cout << "wrote " << p << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"compo-approx-lab: shallow vs hierarchical function-approximation experiments"};
    app.require_subcommand(1);

    CommonOpts cos4_opts, scale_opts, q_opts, bool_opts, vc_opts, gauss_opts;
    bool cos4_full = false;

    auto* cos4 = app.add_subcommand("cos4", "depth comparison on f(x) = cos 4x");
    add_common(cos4, cos4_opts);
    cos4->add_flag("--full", cos4_full,
                   "full figure protocol (60k/60k samples, 2000 epochs) instead of the reduced "
                   "preset");

    auto* scale = app.add_subcommand("scale", "shallow vs deep scaling study on a tree target");
    add_common(scale, scale_opts);

    auto* qpoly = app.add_subcommand("qpoly", "staged approximation of the Q polynomial");
    add_common(qpoly, q_opts);

    auto* boolean = app.add_subcommand("boolean", "Boolean Fourier expansion and learners");
    add_common(boolean, bool_opts);

    auto* vc = app.add_subcommand("vc", "VC-dimension bound table");
    add_common(vc, vc_opts);

    auto* gauss = app.add_subcommand("gauss-fit", "Gaussian grid-center refinement study");
    add_common(gauss, gauss_opts);

    std::string verify_scratch;
    auto* verify = app.add_subcommand("verify", "run the acceptance criteria");
    verify->add_option("--scratch", verify_scratch, "scratch directory for verification artifacts");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (cos4->parsed()) {
            std::vector<std::pair<std::string, std::string>> extra;
            if (cos4_full) extra.emplace_back("reduced", "0");
            report(compo::run_cos4(build_config(cos4_opts, extra)));
        } else if (scale->parsed()) {
            report(compo::run_scaling_study(build_config(scale_opts, {})));
        } else if (qpoly->parsed()) {
            report(compo::run_q_study(build_config(q_opts, {})));
        } else if (boolean->parsed()) {
            report(compo::run_boolean_demo(build_config(bool_opts, {})));
        } else if (vc->parsed()) {
            report(compo::run_vc_table(build_config(vc_opts, {})));
        } else if (gauss->parsed()) {
            report(compo::run_gauss_fit(build_config(gauss_opts, {})));
        } else if (verify->parsed()) {
            if (verify_scratch.empty())
                verify_scratch =
                    (std::filesystem::temp_directory_path() / "compo-approx-lab-verify").string();
            auto results = compo::run_acceptance(verify_scratch, std::cout);
            if (!compo::all_passed(results)) return 3;
        }
    } catch (const compo::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const compo::NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
