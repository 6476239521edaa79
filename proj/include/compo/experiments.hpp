#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "compo/errors.hpp"
#include "compo/targets.hpp"

namespace compo {

/// Flat key=value experiment configuration. Values resolve with precedence
/// command-line flag > config file > built-in default.
class ExperimentConfig {
public:
    ExperimentConfig() = default;

    /// Parse a structured-text config file: one `key = value` per line,
    /// blank lines and lines starting with # ignored.
    static ExperimentConfig from_file(const std::string& path);

    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const { return entries_.count(key) > 0; }

    std::string get(const std::string& key, const std::string& fallback) const;
    double get_num(const std::string& key, double fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_list(const std::string& key, const std::vector<double>& fallback) const;

    /// Canonical sorted dump; identical configs hash identically.
    std::string canonical() const;
    std::uint64_t hash() const; // FNV-1a over canonical()

    const std::map<std::string, std::string>& entries() const { return entries_; }

private:
    std::map<std::string, std::string> entries_;
};

/// Reviewer-facing record of one run. Data files stay byte-identical across
/// reruns; timestamps and wall-clock timings live here instead.
struct RunManifest {
    std::string experiment;
    std::uint64_t config_hash = 0;
    std::string started_at;
    std::string finished_at;
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> outputs;
    std::vector<std::pair<std::string, double>> timings_s;
    std::vector<std::string> notes;
    std::string config_dump;

    void write(std::ostream& os) const;
};

struct ExperimentResult {
    RunManifest manifest;
    std::vector<std::string> output_paths;
};

/// Resolve the output directory: explicit config `out`, else $COMPO_LAB_OUT,
/// else ./out. Creates the directory.
std::string resolve_out_dir(const ExperimentConfig& cfg);

/// The cos_4th depth-comparison protocol. Defaults follow the full figure
/// protocol (60k/60k samples, 2000 epochs, batch 3000, lr 1e-4, momentum 0.9,
/// 5 restarts, depth lists 24/48/72/128/256, 12/24/36, 8/16/24, batchnorm for
/// depth >= 2); `reduced=true` (the default) scales to 6k/6k samples, 200
/// epochs and batch 600.
ExperimentResult run_cos4(const ExperimentConfig& cfg);

/// Shallow-vs-deep scaling study on a compositional target: Gaussian linear
/// fits by default, SGD optional, plus a synthetic power-law injection mode
/// for validating the exponent fitter end to end.
ExperimentResult run_scaling_study(const ExperimentConfig& cfg);

/// The staged Q-polynomial construction: 9 units for the inner quadratic,
/// ten 3-unit squaring stages (39 units, 11 layers), against the 2^11+1-unit
/// shallow reference count.
ExperimentResult run_q_study(const ExperimentConfig& cfg);

/// The Q construction itself, exposed for direct verification.
struct QStudyCore {
    double stage1_error = 0;
    std::vector<double> squaring_errors; // one per squaring stage, sup on [0,0.9]
    double end_to_end_sup = 0;
    std::size_t total_units = 0;
    std::size_t layers = 0;
    std::size_t shallow_reference_units = 0;
};

QStudyCore q_study_core(const QPolyCoeffs& coeffs, std::size_t search_iters, std::uint64_t seed);

/// Boolean Fourier demo: exact expansion plus low-order/sparse error curves.
ExperimentResult run_boolean_demo(const ExperimentConfig& cfg);

/// VC-bound table over (kind, d, units).
ExperimentResult run_vc_table(const ExperimentConfig& cfg);

/// Gaussian grid-center refinement study on a 1-d catalog target.
ExperimentResult run_gauss_fit(const ExperimentConfig& cfg);

} // namespace compo
