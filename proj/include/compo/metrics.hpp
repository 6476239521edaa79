#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "compo/domain.hpp"
#include "compo/gaussian.hpp"
#include "compo/networks.hpp"
#include "compo/targets.hpp"

namespace compo {

enum class SampleMethod { grid, quasirandom };

/// A sampled lower estimate of sup |f - g|, reported with its sample count.
struct SupError {
    double value = 0;
    std::size_t samples = 0;
};

/// Default sampling for a given dimension: 1e4 grid points for d <= 2,
/// 1e5 quasi-random points above.
SampleMethod default_sup_method(std::size_t dim);
std::size_t default_sup_resolution(std::size_t dim);

SupError sup_norm_error(const VectorFn& f, const VectorFn& g, const Box& domain,
                        SampleMethod method, std::size_t resolution);
SupError sup_norm_error(const ScalarTarget& f, const Net& g, const Box& domain,
                        SampleMethod method, std::size_t resolution);

/// Tree norm of the error: sum over internal vertices of the per-constituent
/// sup error on its node domain.
struct TreeError {
    double total = 0;
    std::vector<double> per_node; // index v-1
};

TreeError tree_error(const CompositionalTarget& target, const DeepTreeNet& net,
                     const std::vector<Box>& node_domains,
                     SampleMethod method = SampleMethod::grid, std::size_t resolution = 10000);
TreeError tree_error(const CompositionalTarget& target, const TreeGaussianNet& net,
                     const std::vector<Box>& node_domains,
                     SampleMethod method = SampleMethod::grid, std::size_t resolution = 10000);

/// Ordinary least squares on (log n, log e). residual is the RMS of the
/// log-space residuals.
struct LineFit {
    double slope = 0;
    double intercept = 0;
    double residual = 0;
};

LineFit fit_scaling_exponent(const std::vector<std::pair<double, double>>& pairs);

/// Theoretical rates: shallow -r/d, deep (per-node) -r/2.
std::pair<double, double> predicted_exponents(int r, std::size_t d);

/// Closed-form VC-dimension upper bounds: shallow (d+2)N^2, binary tree
/// 4 n^2 (d-1)^2.
enum class VcKind { shallow, tree };
std::uint64_t vc_bounds(VcKind kind, std::uint64_t d, std::uint64_t n_or_units);

/// Smoothness-class assumption attached to a scaling run; recorded as
/// metadata only (the class membership itself is not computable here).
struct ScalingPrediction {
    int r = 1;             // assumed smoothness order (gamma for Gaussian runs)
    std::size_t d_eff = 2; // d for whole-function fits, 2 for tree nodes
    double predicted_exponent() const { return -static_cast<double>(r) / d_eff; }
};

struct ScalingPoint {
    double complexity = 0; // unit count n or grid parameter m
    double error = 0;
    std::string surrogate; // which estimator produced the point
    std::uint64_t seed = 0;
};

/// A measured error-vs-complexity sequence with its fitted exponent.
struct ScalingRun {
    std::vector<ScalingPoint> points; // complexity strictly increasing
    LineFit fit;
    ScalingPrediction prediction;
    std::string smoothness_note;

    static ScalingRun assemble(std::vector<ScalingPoint> points, ScalingPrediction prediction,
                               std::string smoothness_note = {});

    /// Columns: n, error, surrogate, seed, predicted_exponent, fitted_slope.
    void write_csv(std::ostream& os) const;
};

/// Empirical check of the Lipschitz composition step: perturb h1 and h2 by
/// fixed smooth bumps scaled to sup-norm eps and measure the sup error of
/// h(h1,h2) against the perturbed composition over [-1,1]^4. For Lipschitz h
/// the error propagates linearly, slope ~ 1.
struct CompositionScaling {
    std::vector<std::pair<double, double>> table; // (eps, composite sup error)
    double slope = 0;                             // log-log, over positive eps
};

CompositionScaling composition_lipschitz_test(const BivariateFn& h, const BivariateFn& h1,
                                              const BivariateFn& h2,
                                              const std::vector<double>& eps_list,
                                              const BivariateFn& perturb1 = {},
                                              const BivariateFn& perturb2 = {},
                                              std::size_t resolution = 20000);

} // namespace compo
