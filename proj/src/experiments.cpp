#include "compo/experiments.hpp"

#include <Eigen/Dense>

#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "compo/boolean_fourier.hpp"
#include "compo/csv.hpp"
#include "compo/gaussian.hpp"
#include "compo/metrics.hpp"
#include "compo/networks.hpp"
#include "compo/rng.hpp"
#include "compo/serialize.hpp"
#include "compo/targets.hpp"
#include "compo/training.hpp"

namespace compo {

// ---------------------------------------------------------------------------
// Config and manifest plumbing
// ---------------------------------------------------------------------------

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("config: cannot open '" + path + "'");
    ExperimentConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: line " + std::to_string(lineno) + " of '" + path +
                              "' is not key = value");
        auto trim = [](std::string s) {
            auto b = s.find_first_not_of(" \t\r");
            auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("config: empty key on line " + std::to_string(lineno));
        cfg.entries_[key] = value;
    }
    return cfg;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
    if (key.empty()) throw ConfigError("config: empty key");
    entries_[key] = value;
}

std::string ExperimentConfig::get(const std::string& key, const std::string& fallback) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second;
}

double ExperimentConfig::get_num(const std::string& key, double fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    try {
        std::size_t pos = 0;
        double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' is not a number: '" + it->second + "'");
    }
}

std::uint64_t ExperimentConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    try {
        return std::stoull(it->second);
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' is not an integer: '" + it->second + "'");
    }
}

bool ExperimentConfig::get_bool(const std::string& key, bool fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw ConfigError("config: key '" + key + "' is not a boolean: '" + v + "'");
}

std::vector<double> ExperimentConfig::get_list(const std::string& key,
                                               const std::vector<double>& fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    std::vector<double> out;
    std::istringstream is(it->second);
    std::string tok;
    while (std::getline(is, tok, ','))
        if (!tok.empty()) out.push_back(std::stod(tok));
    if (out.empty()) throw ConfigError("config: key '" + key + "' holds an empty list");
    return out;
}

std::string ExperimentConfig::canonical() const {
    std::ostringstream os;
    for (const auto& [k, v] : entries_) os << k << "=" << v << "\n";
    return os.str();
}

std::uint64_t ExperimentConfig::hash() const {
    std::uint64_t h = 1469598103934665603ull;
    for (char c : canonical()) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

void RunManifest::write(std::ostream& os) const {
    os << "compo-approx-lab manifest " << kCsvVersion << "\n";
    os << "experiment: " << experiment << "\n";
    char hex[32];
    std::snprintf(hex, sizeof hex, "0x%016llx", static_cast<unsigned long long>(config_hash));
    os << "config-hash: " << hex << "\n";
    os << "started: " << started_at << "\n";
    os << "finished: " << finished_at << "\n";
    os << "seeds:";
    for (auto s : seeds) os << " " << s;
    os << "\n";
    os << "outputs:\n";
    for (const auto& o : outputs) os << "  " << o << "\n";
    os << "timings:\n";
    char buf[64];
    for (const auto& [label, sec] : timings_s) {
        std::snprintf(buf, sizeof buf, "%.3f", sec);
        os << "  " << label << " " << buf << "s\n";
    }
    if (!notes.empty()) {
        os << "notes:\n";
        for (const auto& n : notes) os << "  " << n << "\n";
    }
    os << "config:\n";
    std::istringstream is(config_dump);
    std::string line;
    while (std::getline(is, line)) os << "  " << line << "\n";
}

std::string resolve_out_dir(const ExperimentConfig& cfg) {
    std::string dir = cfg.get("out", "");
    if (dir.empty()) {
        if (const char* env = std::getenv("COMPO_LAB_OUT")) dir = env;
        if (dir.empty()) dir = "out";
    }
    std::filesystem::create_directories(dir);
    return dir;
}

namespace {

std::string iso_now() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
    jobs = std::max<std::size_t>(1, std::min(jobs, count));
    if (jobs == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mu;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < jobs; ++t)
        pool.emplace_back([&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mu);
                    if (!error) error = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

Dataset sample_cos4(std::uint64_t seed, std::size_t count) {
    const double pi = std::numbers::pi;
    Rng rng(seed);
    Dataset d;
    d.dim = 1;
    for (std::size_t i = 0; i < count; ++i) {
        double x = rng.uniform(-2 * pi, 2 * pi);
        d.add(std::span<const double>(&x, 1), std::cos(4 * x));
    }
    return d;
}

std::ofstream open_output(const std::string& dir, const std::string& name) {
    std::ofstream os(std::filesystem::path(dir) / name, std::ios::binary);
    if (!os) throw NumericError("cannot open output file '" + name + "' in '" + dir + "'");
    return os;
}

} // namespace

// ---------------------------------------------------------------------------
// cos4 depth comparison
// ---------------------------------------------------------------------------

ExperimentResult run_cos4(const ExperimentConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const bool reduced = cfg.get_bool("reduced", true);
    const std::size_t train_n = cfg.get_u64("train_samples", reduced ? 6000 : 60000);
    const std::size_t test_n = cfg.get_u64("test_samples", reduced ? 6000 : 60000);
    const std::size_t epochs = cfg.get_u64("epochs", reduced ? 200 : 2000);
    const std::size_t batch = cfg.get_u64("batch", reduced ? 600 : 3000);
    const std::uint64_t seed = cfg.get_u64("seed", 1001);
    const double delta = cfg.get_num("delta", 0.01);
    const std::size_t jobs = cfg.get_u64("jobs", 4);

    TrainConfig tc;
    tc.learning_rate = cfg.get_num("lr", 1e-4);
    tc.momentum = cfg.get_num("momentum", 0.9);
    tc.batch_size = batch;
    tc.epochs = epochs;
    tc.restarts = cfg.get_u64("restarts", 5);

    auto depths = cfg.get_list("depths", {1, 2, 3});
    if (depths.empty()) throw ConfigError("cos4: empty depth list");
    std::map<int, std::vector<double>> width_lists = {
        {1, cfg.get_list("widths_d1", {24, 48, 72, 128, 256})},
        {2, cfg.get_list("widths_d2", {12, 24, 36})},
        {3, cfg.get_list("widths_d3", {8, 16, 24})},
    };

    struct Cell {
        int depth;
        std::size_t width;
        NetworkArch arch;
        std::uint64_t seed;
    };
    std::vector<Cell> cells;
    for (double dd : depths) {
        int depth = static_cast<int>(dd);
        if (!width_lists.count(depth)) throw ConfigError("cos4: unsupported depth in list");
        for (double w : width_lists[depth]) {
            if (w < 1) throw ConfigError("cos4: width list holds a non-positive width");
            auto width = static_cast<std::size_t>(w);
            std::vector<std::size_t> dims(static_cast<std::size_t>(depth) + 2, width);
            dims.front() = 1;
            dims.back() = 1;
            // batch normalization between hidden layers for depth >= 2
            cells.push_back({depth, width, NetworkArch::mlp(dims, depth >= 2, delta),
                             seed + 1000 * (cells.size() + 1)});
        }
    }

    Dataset train = sample_cos4(seed, train_n);
    Dataset test = sample_cos4(seed + 1000000, test_n);

    struct CellResult {
        TrainReport best;
        bool failed = false;
        std::string why;
        double seconds = 0;
    };
    std::vector<CellResult> results(cells.size());
    parallel_for(cells.size(), jobs, [&](std::size_t i) {
        const auto c0 = std::chrono::steady_clock::now();
        TrainConfig cell_cfg = tc;
        cell_cfg.seed = cells[i].seed;
        try {
            results[i].best = best_of_restarts(cells[i].arch, train, cell_cfg, test);
        } catch (const NumericError& e) {
            results[i].failed = true;
            results[i].why = e.what();
        }
        results[i].seconds = seconds_since(c0);
    });

    RunManifest manifest;
    manifest.experiment = "cos4";
    manifest.config_hash = cfg.hash();
    manifest.started_at = iso_now();
    manifest.config_dump = cfg.canonical();
    manifest.seeds.push_back(seed);

    const std::string out_dir = resolve_out_dir(cfg);
    {
        auto os = open_output(out_dir, "cos4_results.csv");
        CsvWriter csv(os, "cos4");
        csv.row({"depth", "units_per_layer", "total_units", "param_count", "batchnorm",
                 "best_seed", "test_rmse", "train_rmse", "status"});
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const auto& cell = cells[i];
            const auto& r = results[i];
            auto probe = init_network(cell.arch, 0);
            std::string status = r.failed ? "diverged" : "ok";
            csv.row({CsvWriter::num(static_cast<std::uint64_t>(cell.depth)),
                     CsvWriter::num(cell.width),
                     CsvWriter::num(cell.width * static_cast<std::size_t>(cell.depth)),
                     CsvWriter::num(probe->param_count()), cell.arch.batchnorm ? "1" : "0",
                     CsvWriter::num(r.failed ? cell.seed : r.best.seed),
                     r.failed ? "nan" : CsvWriter::num(std::sqrt(r.best.test_mse)),
                     r.failed ? "nan" : CsvWriter::num(std::sqrt(r.best.train_mse)), status});
            manifest.seeds.push_back(cell.seed);
            std::ostringstream label;
            label << "depth" << cell.depth << "_w" << cell.width;
            manifest.timings_s.emplace_back(label.str(), r.seconds);
        }
    }
    manifest.outputs.push_back("cos4_results.csv");

    // per-epoch traces of the best restart per cell, json-lines
    {
        auto os = open_output(out_dir, "cos4_traces.jsonl");
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (results[i].failed) continue;
            const auto& rep = results[i].best;
            for (std::size_t e = 0; e < rep.epoch_loss.size(); ++e) {
                os << "{\"depth\":" << cells[i].depth << ",\"width\":" << cells[i].width
                   << ",\"seed\":" << rep.seed << ",\"epoch\":" << e + 1 << ",\"train_mse\":"
                   << CsvWriter::num(rep.epoch_loss[e]) << "}\n";
            }
        }
        manifest.outputs.push_back("cos4_traces.jsonl");
    }

    manifest.timings_s.emplace_back("total", seconds_since(t0));
    manifest.finished_at = iso_now();
    {
        auto os = open_output(out_dir, "cos4_manifest.txt");
        manifest.write(os);
    }

    ExperimentResult res;
    res.manifest = manifest;
    for (const auto& o : manifest.outputs)
        res.output_paths.push_back((std::filesystem::path(out_dir) / o).string());
    return res;
}

// ---------------------------------------------------------------------------
// scaling study
// ---------------------------------------------------------------------------

namespace {

CenterSet box_grid_centers(std::size_t m, double lo, double hi, std::size_t dim) {
    std::vector<double> axis;
    for (long j = static_cast<long>(std::floor(lo * static_cast<double>(m)));
         j <= static_cast<long>(std::ceil(hi * static_cast<double>(m))); ++j)
        axis.push_back(static_cast<double>(j) / static_cast<double>(m));
    std::vector<std::vector<double>> pts;
    std::vector<std::size_t> idx(dim, 0);
    std::size_t total = 1;
    for (std::size_t i = 0; i < dim; ++i) total *= axis.size();
    std::vector<double> x(dim);
    for (std::size_t k = 0; k < total; ++k) {
        for (std::size_t i = 0; i < dim; ++i) x[i] = axis[idx[i]];
        pts.push_back(x);
        for (std::size_t i = dim; i-- > 0;) {
            if (++idx[i] < axis.size()) break;
            idx[i] = 0;
        }
    }
    return CenterSet(std::move(pts), 1.0 / static_cast<double>(m), std::nullopt);
}

Dataset sample_box(const Box& box, std::size_t count, std::uint64_t seed, const VectorFn& f) {
    Rng rng(seed);
    Dataset d;
    d.dim = box.dim();
    for (std::size_t i = 0; i < count; ++i) {
        std::vector<double> x(box.dim());
        for (std::size_t k = 0; k < x.size(); ++k) x[k] = rng.uniform(box.lo[k], box.hi[k]);
        d.add(x, f(x));
    }
    return d;
}

} // namespace

ExperimentResult run_scaling_study(const ExperimentConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t seed = cfg.get_u64("seed", 1001);
    const std::size_t d = cfg.get_u64("d", 4);
    const int r_smooth = static_cast<int>(cfg.get_num("r", 2));
    const double lambda = cfg.get_num("lambda", 1e-10);
    const double node_box = cfg.get_num("node_box", 1.5);
    auto m_list = cfg.get_list("m_list", {1, 2, 4});
    if (m_list.size() < 3) throw ConfigError("scale: need at least 3 complexity values");

    RunManifest manifest;
    manifest.experiment = "scale";
    manifest.config_hash = cfg.hash();
    manifest.started_at = iso_now();
    manifest.config_dump = cfg.canonical();
    manifest.seeds = {seed};
    const std::string out_dir = resolve_out_dir(cfg);

    // synthetic injection fixture: exact power law, bypasses all fitting
    if (cfg.has("synthetic_law")) {
        double law = cfg.get_num("synthetic_law", -1.0);
        double amp = cfg.get_num("synthetic_amp", 1.0);
        std::vector<ScalingPoint> pts;
        for (double m : m_list)
            pts.push_back({m, amp * std::pow(m, law), "synthetic", seed});
        auto run = ScalingRun::assemble(pts, ScalingPrediction{r_smooth, 2},
                                        "synthetic power-law fixture");
        auto os = open_output(out_dir, "scale_synthetic.csv");
        run.write_csv(os);
        manifest.outputs.push_back("scale_synthetic.csv");
        manifest.finished_at = iso_now();
        manifest.timings_s.emplace_back("total", seconds_since(t0));
        auto mos = open_output(out_dir, "scale_manifest.txt");
        manifest.write(mos);
        ExperimentResult res;
        res.manifest = manifest;
        for (const auto& o : manifest.outputs)
            res.output_paths.push_back((std::filesystem::path(out_dir) / o).string());
        return res;
    }

    const std::uint64_t target_seed = cfg.get_u64("target_seed", 2024);
    auto target = make_random_tree(d, target_seed);
    auto scalar = target.as_scalar("tree_random");

    // realized per-node output ranges over the study domain
    {
        Rng rng(seed + 999);
        const std::size_t nodes = target.topology().internal_count();
        std::vector<double> lo(nodes, std::numeric_limits<double>::infinity());
        std::vector<double> hi(nodes, -std::numeric_limits<double>::infinity());
        for (int it = 0; it < 2000; ++it) {
            std::vector<double> x(d);
            for (double& xi : x) xi = rng.uniform(-1.0, 1.0);
            auto vals = target.eval_nodes(x);
            for (std::size_t v = 0; v < nodes; ++v) {
                lo[v] = std::min(lo[v], vals[v]);
                hi[v] = std::max(hi[v], vals[v]);
            }
        }
        for (std::size_t v = 0; v < nodes; ++v) {
            char buf[128];
            std::snprintf(buf, sizeof buf, "node %zu realized output range [%.4f, %.4f]", v + 1,
                          lo[v], hi[v]);
            manifest.notes.push_back(buf);
        }
    }

    // deep arm: per-node Gaussian fits on the constituents' natural domain
    std::string deep_surrogate = cfg.get("deep_surrogate", "gaussian");
    std::vector<ScalingPoint> deep_pts;
    for (double md : m_list) {
        auto m = static_cast<std::size_t>(md);
        const auto c0 = std::chrono::steady_clock::now();
        double err = 0;
        if (deep_surrogate == "gaussian") {
            std::vector<CenterSet> centers(target.topology().internal_count(),
                                           box_grid_centers(m, -node_box, node_box, 2));
            auto tree = fit_tree_gaussian(target, centers, lambda);
            auto te = tree_error(target, tree,
                                 std::vector<Box>(centers.size(), Box::cube(2, -1, 1)));
            err = te.total;
        } else if (deep_surrogate == "sgd") {
            auto holder = init_network(NetworkArch::tree(d, m), seed + m);
            auto& net = dynamic_cast<DeepTreeNet&>(*holder);
            {
                char buf[160];
                std::snprintf(buf, sizeof buf,
                              "tree n=%zu: literal trainable params %zu, (d-1)(d+2)n formula %zu",
                              m, net.param_count(), (d - 1) * (d + 2) * m);
                manifest.notes.push_back(buf);
            }
            TrainConfig tc;
            tc.learning_rate = cfg.get_num("sgd_lr", 1e-2);
            tc.momentum = 0.9;
            tc.batch_size = 256;
            tc.epochs = cfg.get_u64("sgd_epochs", 200);
            tc.seed = seed + m;
            staged_train_tree(net, target, tc, cfg.get_u64("sgd_samples", 4096));
            auto te = tree_error(target, net,
                                 std::vector<Box>(d - 1, Box::cube(2, -1, 1)));
            err = te.total;
        } else {
            throw ConfigError("scale: unknown deep_surrogate '" + deep_surrogate + "'");
        }
        deep_pts.push_back({md, err, "deep-" + deep_surrogate, seed});
        manifest.timings_s.emplace_back("deep_m" + std::to_string(m), seconds_since(c0));
    }
    auto deep_run = ScalingRun::assemble(deep_pts, ScalingPrediction{r_smooth, 2},
                                         "per-node rate: constituents assumed r-smooth on R^2");

    // shallow arm: whole-function fits; Gaussian grids below d=3, SGD above
    std::string shallow_surrogate = cfg.get("shallow_surrogate", d <= 2 ? "gaussian" : "sgd");
    std::vector<ScalingPoint> shallow_pts;
    if (shallow_surrogate == "gaussian") {
        if (d > 2)
            throw ConfigError("scale: whole-function Gaussian grids in d > 2 exceed the grid cap; "
                              "use shallow_surrogate=sgd");
        for (double md : m_list) {
            auto m = static_cast<std::size_t>(md);
            const auto c0 = std::chrono::steady_clock::now();
            auto centers = grid_centers(m, d, cfg.get_num("c", 1.0));
            auto net = fit_gaussian_to_target(scalar, centers, lambda);
            double err = sup_norm_error(scalar.fn,
                                        [&net](std::span<const double> x) { return net.eval(x); },
                                        Box::cube(d, -1, 1), default_sup_method(d),
                                        default_sup_resolution(d))
                             .value;
            shallow_pts.push_back({md, err, "shallow-gaussian", seed});
            manifest.timings_s.emplace_back("shallow_m" + std::to_string(m), seconds_since(c0));
        }
    } else if (shallow_surrogate == "sgd") {
        auto units_list = cfg.get_list("units_list", {8, 16, 32});
        if (units_list.size() < 3) throw ConfigError("scale: need at least 3 unit counts");
        Dataset train = sample_box(Box::cube(d, -1, 1), cfg.get_u64("sgd_samples", 8192),
                                   seed + 17, scalar.fn);
        Dataset test = sample_box(Box::cube(d, -1, 1), 4096, seed + 17 + 1000000, scalar.fn);
        for (double nd : units_list) {
            auto n = static_cast<std::size_t>(nd);
            const auto c0 = std::chrono::steady_clock::now();
            TrainConfig tc;
            tc.learning_rate = cfg.get_num("sgd_lr", 1e-2);
            tc.momentum = 0.9;
            tc.batch_size = 256;
            tc.epochs = cfg.get_u64("sgd_epochs", 200);
            tc.restarts = cfg.get_u64("sgd_restarts", 3);
            tc.seed = seed + n;
            auto best = best_of_restarts(NetworkArch::shallow(d, n), train, tc, test);
            auto probe = init_network(NetworkArch::shallow(d, n), 0);
            probe->set_params(best.final_params);
            double err = sup_norm_error(scalar.fn,
                                        [&probe](std::span<const double> x) {
                                            return probe->eval(x);
                                        },
                                        Box::cube(d, -1, 1), default_sup_method(d),
                                        default_sup_resolution(d))
                             .value;
            shallow_pts.push_back({nd, err, "shallow-sgd-best-of-restarts", best.seed});
            manifest.timings_s.emplace_back("shallow_n" + std::to_string(n), seconds_since(c0));
        }
    } else {
        throw ConfigError("scale: unknown shallow_surrogate '" + shallow_surrogate + "'");
    }
    auto shallow_run =
        ScalingRun::assemble(shallow_pts, ScalingPrediction{r_smooth, d},
                             "whole-function rate: target viewed as an r-smooth function of d "
                             "variables");

    {
        auto os = open_output(out_dir, "scale_deep.csv");
        deep_run.write_csv(os);
        manifest.outputs.push_back("scale_deep.csv");
    }
    {
        auto os = open_output(out_dir, "scale_shallow.csv");
        shallow_run.write_csv(os);
        manifest.outputs.push_back("scale_shallow.csv");
    }

    manifest.finished_at = iso_now();
    manifest.timings_s.emplace_back("total", seconds_since(t0));
    {
        auto os = open_output(out_dir, "scale_manifest.txt");
        manifest.write(os);
    }
    ExperimentResult res;
    res.manifest = manifest;
    for (const auto& o : manifest.outputs)
        res.output_paths.push_back((std::filesystem::path(out_dir) / o).string());
    return res;
}

// ---------------------------------------------------------------------------
// Q-polynomial staged construction
// ---------------------------------------------------------------------------

namespace {

struct StageFitResult {
    ShallowNet net;
    double sup_error;
};

// Ridge least squares over the outer coefficients for randomly drawn unit
// shapes; keeps the best of `iters` draws.
StageFitResult fit_stage_1d(const std::function<double(double)>& target, double lo, double hi,
                            std::size_t units, std::size_t iters, std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t fit_n = 400;
    const std::size_t eval_n = 2001;
    std::vector<double> xs(fit_n), ys(fit_n), zs(eval_n), ts(eval_n);
    for (std::size_t i = 0; i < fit_n; ++i) {
        xs[i] = lo + (hi - lo) * i / (fit_n - 1);
        ys[i] = target(xs[i]);
    }
    for (std::size_t i = 0; i < eval_n; ++i) {
        zs[i] = lo + (hi - lo) * i / (eval_n - 1);
        ts[i] = target(zs[i]);
    }
    const std::vector<double> deltas = {0.02, 0.05, 0.1, 0.15, 0.2};
    StageFitResult best{ShallowNet(1, units), std::numeric_limits<double>::infinity()};
    Eigen::MatrixXd Phi(fit_n, units);
    for (std::size_t it = 0; it < iters; ++it) {
        double delta = deltas[static_cast<std::size_t>(rng.below(deltas.size()))];
        SmoothActivation act(delta);
        std::vector<double> w(units), b(units);
        for (std::size_t k = 0; k < units; ++k) {
            w[k] = rng.uniform(0.3, 3.0);
            double kink = rng.uniform(lo - 0.3 * (hi - lo), hi + 0.1 * (hi - lo));
            b[k] = -w[k] * kink;
        }
        for (std::size_t i = 0; i < fit_n; ++i)
            for (std::size_t k = 0; k < units; ++k) Phi(i, k) = act(w[k] * xs[i] + b[k]);
        Eigen::MatrixXd A = Phi.transpose() * Phi;
        for (std::size_t k = 0; k < units; ++k) A(k, k) += 1e-12;
        Eigen::VectorXd rhs = Phi.transpose() * Eigen::Map<const Eigen::VectorXd>(ys.data(), fit_n);
        Eigen::VectorXd a = A.ldlt().solve(rhs);
        if (!a.allFinite()) continue;
        double sup = 0;
        for (std::size_t i = 0; i < eval_n; ++i) {
            double v = 0;
            for (std::size_t k = 0; k < units; ++k) v += a[k] * act(w[k] * zs[i] + b[k]);
            sup = std::max(sup, std::abs(v - ts[i]));
            if (sup >= best.sup_error) break;
        }
        if (sup < best.sup_error) {
            ShallowNet net(1, units, act);
            for (std::size_t k = 0; k < units; ++k) net.unit(k) = {{w[k]}, b[k], a[k]};
            best = {net, sup};
        }
    }
    return best;
}

StageFitResult fit_stage_2d(const VectorFn& target, std::size_t units, std::size_t iters,
                            std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t side = 40, eval_side = 101;
    std::vector<std::array<double, 2>> xs, zs;
    std::vector<double> ys, ts;
    for (std::size_t i = 0; i < side; ++i)
        for (std::size_t j = 0; j < side; ++j) {
            double a = -1.0 + 2.0 * i / (side - 1), b = -1.0 + 2.0 * j / (side - 1);
            xs.push_back({a, b});
            double xv[2] = {a, b};
            ys.push_back(target(std::span<const double>(xv, 2)));
        }
    for (std::size_t i = 0; i < eval_side; ++i)
        for (std::size_t j = 0; j < eval_side; ++j) {
            double a = -1.0 + 2.0 * i / (eval_side - 1), b = -1.0 + 2.0 * j / (eval_side - 1);
            zs.push_back({a, b});
            double xv[2] = {a, b};
            ts.push_back(target(std::span<const double>(xv, 2)));
        }
    const std::vector<double> deltas = {0.05, 0.1, 0.2, 0.3};
    StageFitResult best{ShallowNet(2, units), std::numeric_limits<double>::infinity()};
    Eigen::MatrixXd Phi(xs.size(), units);
    for (std::size_t it = 0; it < iters; ++it) {
        double delta = deltas[static_cast<std::size_t>(rng.below(deltas.size()))];
        SmoothActivation act(delta);
        std::vector<std::array<double, 2>> w(units);
        std::vector<double> b(units);
        for (std::size_t k = 0; k < units; ++k) {
            double angle = rng.uniform(0, 2 * std::numbers::pi);
            double scale = rng.uniform(0.5, 2.5);
            w[k] = {scale * std::cos(angle), scale * std::sin(angle)};
            b[k] = rng.uniform(-2.0, 2.0);
        }
        for (std::size_t i = 0; i < xs.size(); ++i)
            for (std::size_t k = 0; k < units; ++k)
                Phi(i, k) = act(w[k][0] * xs[i][0] + w[k][1] * xs[i][1] + b[k]);
        Eigen::MatrixXd A = Phi.transpose() * Phi;
        for (std::size_t k = 0; k < units; ++k) A(k, k) += 1e-10;
        Eigen::VectorXd rhs =
            Phi.transpose() * Eigen::Map<const Eigen::VectorXd>(ys.data(), ys.size());
        Eigen::VectorXd a = A.ldlt().solve(rhs);
        if (!a.allFinite()) continue;
        double sup = 0;
        for (std::size_t i = 0; i < zs.size(); ++i) {
            double v = 0;
            for (std::size_t k = 0; k < units; ++k)
                v += a[k] * act(w[k][0] * zs[i][0] + w[k][1] * zs[i][1] + b[k]);
            sup = std::max(sup, std::abs(v - ts[i]));
            if (sup >= best.sup_error) break;
        }
        if (sup < best.sup_error) {
            ShallowNet net(2, units, act);
            for (std::size_t k = 0; k < units; ++k) net.unit(k) = {{w[k][0], w[k][1]}, b[k], a[k]};
            best = {net, sup};
        }
    }
    return best;
}

} // namespace

namespace {

struct QStudyNets {
    StageFitResult stage1;
    std::vector<StageFitResult> squarers;
};

QStudyNets q_study_fit(const QPolyCoeffs& qc, std::size_t iters, std::uint64_t seed) {
    constexpr std::size_t kSquaringStages = 10;
    auto inner = make_q_inner(qc);
    QStudyNets nets{fit_stage_2d(inner.fn, 9, iters, seed), {}};
    for (std::size_t s = 0; s < kSquaringStages; ++s)
        nets.squarers.push_back(
            fit_stage_1d([](double t) { return t * t; }, 0.0, 0.9, 3, iters, seed + 100 + s));
    return nets;
}

} // namespace

QStudyCore q_study_core(const QPolyCoeffs& qc, std::size_t search_iters, std::uint64_t seed) {
    auto nets = q_study_fit(qc, search_iters, seed);
    QStudyCore core;
    core.stage1_error = nets.stage1.sup_error;
    for (const auto& sq : nets.squarers) core.squaring_errors.push_back(sq.sup_error);
    core.total_units = 9 + 3 * nets.squarers.size();
    core.layers = 1 + nets.squarers.size();
    core.shallow_reference_units = (std::size_t{1} << 11) + 1;

    auto qpoly = make_q_poly(qc);
    const std::size_t side = 201;
    for (std::size_t i = 0; i < side; ++i)
        for (std::size_t j = 0; j < side; ++j) {
            double xv[2] = {-1.0 + 2.0 * i / (side - 1), -1.0 + 2.0 * j / (side - 1)};
            double t = nets.stage1.net.eval(std::span<const double>(xv, 2));
            for (const auto& sq : nets.squarers) t = sq.net.eval(std::span<const double>(&t, 1));
            core.end_to_end_sup =
                std::max(core.end_to_end_sup, std::abs(t - qpoly.fn(std::span<const double>(xv, 2))));
        }
    return core;
}

ExperimentResult run_q_study(const ExperimentConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t seed = cfg.get_u64("seed", 1001);
    // default inner quadratic (0.6x + 0.5y + 0.2)^2 + 0.05: strictly positive
    // on the square, so every staged power stays inside the fitted range
    QPolyCoeffs qc{cfg.get_num("A", 0.0),  cfg.get_num("B", 0.0),  cfg.get_num("C", 0.0),
                   cfg.get_num("D", 0.36), cfg.get_num("E", 0.30), cfg.get_num("F", 0.25),
                   cfg.get_num("G", 0.12), cfg.get_num("H", 0.10), cfg.get_num("I", 0.09)};
    const std::size_t iters = cfg.get_u64("search_iters", 2000);

    RunManifest manifest;
    manifest.experiment = "qpoly";
    manifest.config_hash = cfg.hash();
    manifest.started_at = iso_now();
    manifest.config_dump = cfg.canonical();
    manifest.seeds = {seed};
    const std::string out_dir = resolve_out_dir(cfg);

    auto nets = q_study_fit(qc, iters, seed);
    manifest.timings_s.emplace_back("stage_fits", seconds_since(t0));

    auto qpoly = make_q_poly(qc);
    double end_to_end = 0;
    {
        const std::size_t side = 201;
        for (std::size_t i = 0; i < side; ++i)
            for (std::size_t j = 0; j < side; ++j) {
                double xv[2] = {-1.0 + 2.0 * i / (side - 1), -1.0 + 2.0 * j / (side - 1)};
                double t = nets.stage1.net.eval(std::span<const double>(xv, 2));
                for (const auto& sq : nets.squarers) t = sq.net.eval(std::span<const double>(&t, 1));
                end_to_end = std::max(end_to_end,
                                      std::abs(t - qpoly.fn(std::span<const double>(xv, 2))));
            }
    }

    const std::size_t total_units = 9 + 3 * nets.squarers.size(); // 39
    const std::size_t layers = 1 + nets.squarers.size();          // 11
    const std::size_t shallow_ref_units = (std::size_t{1} << 11) + 1;

    {
        auto os = open_output(out_dir, "qpoly_stages.csv");
        CsvWriter csv(os, "qpoly-stages");
        csv.row({"stage", "layer", "units", "domain", "sup_error", "seed", "status"});
        csv.row({"inner_quadratic", "1", "9", "[-1,1]^2", CsvWriter::num(nets.stage1.sup_error),
                 CsvWriter::num(seed),
                 std::isfinite(nets.stage1.sup_error) ? "ok" : "diverged"});
        for (std::size_t s = 0; s < nets.squarers.size(); ++s)
            csv.row({"squaring_" + std::to_string(s + 1), CsvWriter::num(s + 2), "3",
                     "[0,0.9]", CsvWriter::num(nets.squarers[s].sup_error),
                     CsvWriter::num(seed + 100 + s),
                     std::isfinite(nets.squarers[s].sup_error) ? "ok" : "diverged"});
        manifest.outputs.push_back("qpoly_stages.csv");
    }
    {
        auto os = open_output(out_dir, "qpoly_summary.csv");
        CsvWriter csv(os, "qpoly-summary");
        csv.row({"total_units", "layers", "shallow_reference_units", "end_to_end_sup", "seed"});
        csv.row({CsvWriter::num(total_units), CsvWriter::num(layers),
                 CsvWriter::num(shallow_ref_units), CsvWriter::num(end_to_end),
                 CsvWriter::num(seed)});
        manifest.outputs.push_back("qpoly_summary.csv");
    }
    {
        auto os = open_output(out_dir, "qpoly_stage1_net.txt");
        save_net(nets.stage1.net, os);
        manifest.outputs.push_back("qpoly_stage1_net.txt");
    }

    manifest.finished_at = iso_now();
    manifest.timings_s.emplace_back("total", seconds_since(t0));
    {
        auto os = open_output(out_dir, "qpoly_manifest.txt");
        manifest.write(os);
    }
    ExperimentResult res;
    res.manifest = manifest;
    for (const auto& o : manifest.outputs)
        res.output_paths.push_back((std::filesystem::path(out_dir) / o).string());
    return res;
}

// ---------------------------------------------------------------------------
// Boolean demo
// ---------------------------------------------------------------------------

ExperimentResult run_boolean_demo(const ExperimentConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t n = cfg.get_u64("n", 8);
    if (n < 1 || n > kMaxBooleanVars)
        throw ConfigError("boolean: n must be in [1, " + std::to_string(kMaxBooleanVars) + "]");
    const std::string fname = cfg.get("fn", "parity");
    const std::uint64_t seed = cfg.get_u64("seed", 1001);

    BooleanFn f;
    if (fname == "parity") {
        f = [](std::span<const int> x) {
            int p = 1;
            for (int xi : x) p *= xi;
            return static_cast<double>(p);
        };
    } else if (fname == "majority") {
        if (n % 2 == 0) throw ConfigError("boolean: majority needs odd n");
        f = [](std::span<const int> x) {
            int s = 0;
            for (int xi : x) s += xi;
            return s > 0 ? 1.0 : -1.0;
        };
    } else if (fname == "and") {
        f = [](std::span<const int> x) {
            for (int xi : x)
                if (xi != 1) return -1.0;
            return 1.0;
        };
    } else if (fname == "random") {
        auto table = std::make_shared<std::vector<double>>(std::size_t{1} << n);
        Rng rng(seed);
        for (double& v : *table) v = rng.uniform(-1.0, 1.0);
        f = [table](std::span<const int> x) {
            std::size_t t = 0;
            for (std::size_t i = 0; i < x.size(); ++i)
                if (x[i] == -1) t |= std::size_t{1} << i;
            return (*table)[t];
        };
    } else {
        throw ConfigError("boolean: unknown fn '" + fname + "'");
    }

    auto table = fourier_expand(f, n);

    RunManifest manifest;
    manifest.experiment = "boolean";
    manifest.config_hash = cfg.hash();
    manifest.started_at = iso_now();
    manifest.config_dump = cfg.canonical();
    manifest.seeds = {seed};
    const std::string out_dir = resolve_out_dir(cfg);

    {
        auto os = open_output(out_dir, "boolean_coeffs.csv");
        write_coeff_csv(table, os);
        manifest.outputs.push_back("boolean_coeffs.csv");
    }
    {
        auto os = open_output(out_dir, "boolean_errors.csv");
        CsvWriter csv(os, "boolean-errors");
        csv.row({"algorithm", "budget", "squared_error", "fn", "seed"});
        for (std::size_t k = 0; k <= n; ++k)
            csv.row({"low_order", CsvWriter::num(k),
                     CsvWriter::num(low_order_approx(table, k).squared_error), fname,
                     CsvWriter::num(seed)});
        for (std::size_t t = 1; t <= table.size(); t *= 2)
            csv.row({"sparse", CsvWriter::num(t),
                     CsvWriter::num(sparse_approx(table, t).squared_error), fname,
                     CsvWriter::num(seed)});
        manifest.outputs.push_back("boolean_errors.csv");
    }

    manifest.finished_at = iso_now();
    manifest.timings_s.emplace_back("total", seconds_since(t0));
    {
        auto os = open_output(out_dir, "boolean_manifest.txt");
        manifest.write(os);
    }
    ExperimentResult res;
    res.manifest = manifest;
    for (const auto& o : manifest.outputs)
        res.output_paths.push_back((std::filesystem::path(out_dir) / o).string());
    return res;
}

// ---------------------------------------------------------------------------
// VC table
// ---------------------------------------------------------------------------

ExperimentResult run_vc_table(const ExperimentConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    auto d_list = cfg.get_list("d_list", {2, 4, 8, 16, 32});
    auto n_list = cfg.get_list("n_list", {1, 2, 5, 10, 20, 50, 100, 200, 500, 1000});

    RunManifest manifest;
    manifest.experiment = "vc";
    manifest.config_hash = cfg.hash();
    manifest.started_at = iso_now();
    manifest.config_dump = cfg.canonical();
    const std::string out_dir = resolve_out_dir(cfg);
    {
        auto os = open_output(out_dir, "vc_table.csv");
        CsvWriter csv(os, "vc-bounds");
        csv.row({"kind", "d", "units", "vc_bound"});
        for (double dd : d_list)
            for (double nn : n_list) {
                auto d = static_cast<std::uint64_t>(dd);
                auto n = static_cast<std::uint64_t>(nn);
                csv.row({"shallow", CsvWriter::num(d), CsvWriter::num(n),
                         CsvWriter::num(vc_bounds(VcKind::shallow, d, n))});
                csv.row({"tree", CsvWriter::num(d), CsvWriter::num(n),
                         CsvWriter::num(vc_bounds(VcKind::tree, d, n))});
            }
        manifest.outputs.push_back("vc_table.csv");
    }
    manifest.finished_at = iso_now();
    manifest.timings_s.emplace_back("total", seconds_since(t0));
    {
        auto os = open_output(out_dir, "vc_manifest.txt");
        manifest.write(os);
    }
    ExperimentResult res;
    res.manifest = manifest;
    for (const auto& o : manifest.outputs)
        res.output_paths.push_back((std::filesystem::path(out_dir) / o).string());
    return res;
}

// ---------------------------------------------------------------------------
// Gaussian grid-center refinement
// ---------------------------------------------------------------------------

ExperimentResult run_gauss_fit(const ExperimentConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t seed = cfg.get_u64("seed", 1001);
    const std::string label = cfg.get("target", "gauss_bump");
    std::map<std::string, double> params;
    params["d"] = cfg.get_num("d", 1);
    if (cfg.has("offset")) params["offset"] = cfg.get_num("offset", 1.0 / 3.0);
    auto target = lookup_target(label, params);
    if (target.arity != 1)
        throw ConfigError("gauss-fit: refinement study supports 1-d targets, got arity " +
                          std::to_string(target.arity));
    auto m_list = cfg.get_list("m_list", {1, 2, 4, 8});
    if (m_list.size() < 3) throw ConfigError("gauss-fit: need at least 3 grid parameters");
    const double c = cfg.get_num("c", 1.0);
    const double lambda = cfg.get_num("lambda", 1e-10);
    const int gamma = static_cast<int>(cfg.get_num("gamma", 2));

    RunManifest manifest;
    manifest.experiment = "gauss-fit";
    manifest.config_hash = cfg.hash();
    manifest.started_at = iso_now();
    manifest.config_dump = cfg.canonical();
    manifest.seeds = {seed};
    const std::string out_dir = resolve_out_dir(cfg);

    std::vector<ScalingPoint> pts;
    const bool save_nets = cfg.get_bool("save_nets", false);
    for (double md : m_list) {
        auto m = static_cast<std::size_t>(md);
        const auto c0 = std::chrono::steady_clock::now();
        auto centers = grid_centers(m, 1, c);
        auto net = fit_gaussian_to_target(target, centers, lambda);
        double err = gaussian_sup_error(target.fn, net);
        pts.push_back({md, err, "gaussian-ridge", seed});
        if (save_nets) {
            std::string name = "gauss_net_m" + std::to_string(m) + ".txt";
            auto os = open_output(out_dir, name);
            save_gaussian(net, os);
            manifest.outputs.push_back(name);
        }
        manifest.timings_s.emplace_back("m" + std::to_string(m), seconds_since(c0));
    }
    auto run = ScalingRun::assemble(pts, ScalingPrediction{gamma, 1},
                                    "Gaussian grid refinement, rate m^-gamma under the "
                                    "weighted-smoothness hypothesis");
    {
        auto os = open_output(out_dir, "gauss_fit.csv");
        run.write_csv(os);
        manifest.outputs.push_back("gauss_fit.csv");
    }
    manifest.finished_at = iso_now();
    manifest.timings_s.emplace_back("total", seconds_since(t0));
    {
        auto os = open_output(out_dir, "gauss_fit_manifest.txt");
        manifest.write(os);
    }
    ExperimentResult res;
    res.manifest = manifest;
    for (const auto& o : manifest.outputs)
        res.output_paths.push_back((std::filesystem::path(out_dir) / o).string());
    return res;
}

} // namespace compo
