#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "compo/networks.hpp"
#include "compo/targets.hpp"

namespace compo {

/// Hyperparameters of the SGD protocol (defaults mirror the cos4 figure:
/// momentum 0.9, learning rate 1e-4, mini-batches of 3000, 2000 epochs,
/// best of 5 restarts).
struct TrainConfig {
    double learning_rate = 1e-4;
    double momentum = 0.9;
    std::size_t batch_size = 3000;
    std::size_t epochs = 2000;
    std::size_t restarts = 5;
    std::uint64_t seed = 0;
    std::size_t test_every = 0; // 0: evaluate test MSE only after training

    void validate(std::size_t sample_count) const;
};

struct TrainReport {
    double train_mse = 0;
    double test_mse = 0;
    std::vector<double> epoch_loss; // one entry per completed epoch
    std::vector<std::pair<std::size_t, double>> test_trace;
    double wall_seconds = 0;
    std::uint64_t seed = 0;
    bool diverged = false;
    std::string diagnostic;
    std::vector<double> final_params;
    std::string provenance; // conventions the protocol statement leaves open
};

/// Classical momentum SGD on the mean squared error: v <- mu v - eta g,
/// theta <- theta + v. The dataset is reshuffled every epoch with the
/// config's seeded generator; a short final batch is kept. Within a batch,
/// samples accumulate in ascending index order, so batch_size = N with
/// momentum 0 reproduces deterministic full-batch gradient descent.
/// Divergence (loss above 1e12 or non-finite) aborts with a diagnostic.
TrainReport sgd_train(Net& net, const Dataset& train, const TrainConfig& cfg,
                      const Dataset& test);

/// Runs sgd_train on freshly initialized networks with seeds
/// cfg.seed+0 .. cfg.seed+restarts-1 and returns the report with the lowest
/// test MSE (ties resolved toward the lower seed). Diverged restarts are
/// skipped; if every restart diverges a NumericError aggregates them.
TrainReport best_of_restarts(const NetworkArch& arch, const Dataset& train,
                             const TrainConfig& cfg, const Dataset& test,
                             std::vector<TrainReport>* all_reports = nullptr);

/// Per-node (staged) fitting of a tree network: every node's ShallowNet is
/// trained by SGD against its constituent oracle f_v on [-1,1]^2. Node v
/// uses seed cfg.seed + v for sampling and training.
std::vector<TrainReport> staged_train_tree(DeepTreeNet& net, const CompositionalTarget& target,
                                           const TrainConfig& cfg,
                                           std::size_t samples_per_node = 4000);

/// The convention string recorded in every report.
std::string training_provenance();

/// JSON-lines export: one record per epoch {epoch, train_mse}, interleaved
/// with {epoch, test_mse} records at the config's test_every cadence.
void write_report_jsonl(const TrainReport& report, std::ostream& os);

/// One summary CSV row: seed, epochs, train_mse, test_mse, diverged.
/// The header row lives in report_summary_header().
std::vector<std::string> report_summary_row(const TrainReport& report);
std::vector<std::string> report_summary_header();

} // namespace compo
