#include "compo/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>

#include "compo/rng.hpp"

namespace compo {

namespace {
constexpr double kDivergenceThreshold = 1e12;
}

void TrainConfig::validate(std::size_t sample_count) const {
    if (!(learning_rate > 0)) throw ConfigError("TrainConfig: learning_rate must be positive");
    if (momentum < 0 || momentum >= 1) throw ConfigError("TrainConfig: momentum must be in [0,1)");
    if (batch_size < 1) throw ConfigError("TrainConfig: batch_size must be >= 1");
    if (batch_size > sample_count)
        throw ConfigError("TrainConfig: batch_size exceeds the sample count");
    if (epochs < 1) throw ConfigError("TrainConfig: epochs must be >= 1");
    if (restarts < 1) throw ConfigError("TrainConfig: restarts must be >= 1");
}

std::string training_provenance() {
    return "init=uniform(-s,s),s=sqrt(6/(fan_in+fan_out)),bias=0; shuffle=full_permutation_per_epoch;"
           " batch_order=ascending_sample_index; update=heavy_ball(v=mu*v-lr*g);"
           " bn=biased_batch_var,eps=1e-5,running_momentum=0.1,inference=running_stats";
}

TrainReport sgd_train(Net& net, const Dataset& train, const TrainConfig& cfg,
                      const Dataset& test) {
    cfg.validate(train.size());
    if (train.dim != net.input_dim()) throw ConfigError("sgd_train: train dimension mismatch");
    if (test.size() > 0 && test.dim != net.input_dim())
        throw ConfigError("sgd_train: test dimension mismatch");

    const auto t0 = std::chrono::steady_clock::now();
    TrainReport rep;
    rep.seed = cfg.seed;
    rep.provenance = training_provenance();

    Rng rng(cfg.seed);
    std::vector<double> params = net.params();
    std::vector<double> velocity(params.size(), 0.0);
    std::vector<double> grad;
    const std::size_t n = train.size();

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        auto perm = rng.permutation(n);
        double epoch_loss = 0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            std::size_t len = std::min(cfg.batch_size, n - start);
            std::vector<std::size_t> idx(perm.begin() + start, perm.begin() + start + len);
            std::sort(idx.begin(), idx.end());
            double loss;
            try {
                loss = net.batch_grad(train, idx, grad, true);
            } catch (const NumericError& e) {
                rep.diverged = true;
                rep.diagnostic = std::string("aborted at epoch ") + std::to_string(epoch) + ": " +
                                 e.what();
                rep.epoch_loss.push_back(std::numeric_limits<double>::quiet_NaN());
                rep.final_params = net.params();
                rep.wall_seconds =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                return rep;
            }
            if (!std::isfinite(loss) || loss > kDivergenceThreshold) {
                rep.diverged = true;
                std::ostringstream os;
                os << "aborted at epoch " << epoch << ": batch loss " << loss
                   << " exceeds the divergence threshold " << kDivergenceThreshold;
                rep.diagnostic = os.str();
                rep.epoch_loss.push_back(loss);
                rep.final_params = net.params();
                rep.wall_seconds =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                return rep;
            }
            epoch_loss += loss * static_cast<double>(len);
            for (std::size_t k = 0; k < params.size(); ++k) {
                velocity[k] = cfg.momentum * velocity[k] - cfg.learning_rate * grad[k];
                params[k] += velocity[k];
            }
            net.set_params(params);
        }
        rep.epoch_loss.push_back(epoch_loss / static_cast<double>(n));
        if (cfg.test_every > 0 && test.size() > 0 && (epoch + 1) % cfg.test_every == 0)
            rep.test_trace.emplace_back(epoch + 1, net.mse(test));
    }

    rep.train_mse = net.mse(train);
    rep.test_mse = test.size() > 0 ? net.mse(test) : std::numeric_limits<double>::quiet_NaN();
    rep.final_params = net.params();
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

TrainReport best_of_restarts(const NetworkArch& arch, const Dataset& train,
                             const TrainConfig& cfg, const Dataset& test,
                             std::vector<TrainReport>* all_reports) {
    cfg.validate(train.size());
    bool found = false;
    TrainReport best;
    std::ostringstream failures;
    for (std::size_t r = 0; r < cfg.restarts; ++r) {
        TrainConfig run_cfg = cfg;
        run_cfg.seed = cfg.seed + r;
        auto net = init_network(arch, run_cfg.seed);
        TrainReport rep = sgd_train(*net, train, run_cfg, test);
        if (all_reports) all_reports->push_back(rep);
        if (rep.diverged) {
            failures << "seed " << run_cfg.seed << ": " << rep.diagnostic << "; ";
            continue;
        }
        if (!found || rep.test_mse < best.test_mse) {
            best = rep;
            found = true;
        }
    }
    if (!found)
        throw NumericError("best_of_restarts: every restart diverged (" + failures.str() + ")");
    return best;
}

void write_report_jsonl(const TrainReport& report, std::ostream& os) {
    char num[40];
    std::size_t next_test = 0;
    for (std::size_t e = 0; e < report.epoch_loss.size(); ++e) {
        std::snprintf(num, sizeof num, "%.17g", report.epoch_loss[e]);
        os << "{\"epoch\":" << e + 1 << ",\"train_mse\":" << num << "}\n";
        while (next_test < report.test_trace.size() &&
               report.test_trace[next_test].first == e + 1) {
            std::snprintf(num, sizeof num, "%.17g", report.test_trace[next_test].second);
            os << "{\"epoch\":" << e + 1 << ",\"test_mse\":" << num << "}\n";
            ++next_test;
        }
    }
}

std::vector<std::string> report_summary_header() {
    return {"seed", "epochs", "train_mse", "test_mse", "diverged"};
}

std::vector<std::string> report_summary_row(const TrainReport& report) {
    char num[40];
    std::vector<std::string> row;
    row.push_back(std::to_string(report.seed));
    row.push_back(std::to_string(report.epoch_loss.size()));
    std::snprintf(num, sizeof num, "%.17g", report.train_mse);
    row.push_back(num);
    std::snprintf(num, sizeof num, "%.17g", report.test_mse);
    row.push_back(num);
    row.push_back(report.diverged ? "1" : "0");
    return row;
}

std::vector<TrainReport> staged_train_tree(DeepTreeNet& net, const CompositionalTarget& target,
                                           const TrainConfig& cfg, std::size_t samples_per_node) {
    if (net.topology().leaves != target.topology().leaves)
        throw ConfigError("staged_train_tree: topology mismatch");
    std::vector<TrainReport> reports;
    for (std::size_t v = 1; v < net.topology().leaves; ++v) {
        const auto& fv = target.node_fn(v);
        Rng rng(cfg.seed + v);
        Dataset node_data;
        node_data.dim = 2;
        for (std::size_t i = 0; i < samples_per_node; ++i) {
            double x[2] = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
            node_data.add(std::span<const double>(x, 2), fv(x[0], x[1]));
        }
        TrainConfig node_cfg = cfg;
        node_cfg.seed = cfg.seed + v;
        node_cfg.batch_size = std::min(cfg.batch_size, samples_per_node);
        reports.push_back(sgd_train(net.node(v), node_data, node_cfg, Dataset{2, {}, {}}));
    }
    return reports;
}

} // namespace compo
