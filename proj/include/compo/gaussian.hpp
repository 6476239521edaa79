#pragma once

#include <optional>
#include <span>
#include <vector>

#include "compo/domain.hpp"
#include "compo/targets.hpp"
#include "compo/tree.hpp"

namespace compo {

/// Provenance of a regular center grid (spacing 1/m over [-c*m, c*m]^d).
struct GridSpec {
    std::size_t m = 1;
    double c = 1.0;
};

/// Gaussian centers with cached minimal separation (positive by invariant:
/// duplicate points are rejected).
class CenterSet {
public:
    explicit CenterSet(std::vector<std::vector<double>> points);
    CenterSet(std::vector<std::vector<double>> points, double separation,
              std::optional<GridSpec> spec);

    const std::vector<std::vector<double>>& points() const { return points_; }
    std::size_t size() const { return points_.size(); }
    std::size_t dim() const { return points_.empty() ? 0 : points_.front().size(); }
    double separation() const { return separation_; }
    const std::optional<GridSpec>& grid_spec() const { return spec_; }

private:
    std::vector<std::vector<double>> points_;
    double separation_;
    std::optional<GridSpec> spec_;
};

/// Regular grid with spacing 1/m covering [-c*m, c*m]^d: coordinates j/m for
/// integer j in [-c*m^2, c*m^2]. Fill distance <= sqrt(d)/(2m) and
/// separation exactly 1/m.
CenterSet grid_centers(std::size_t m, std::size_t dim, double c = 1.0,
                       std::size_t max_points = 1000000);

/// Exact minimum pairwise Euclidean distance. Brute force below 4096 points,
/// spatial buckets above. Duplicates are a degenerate-input error.
double minimal_separation(const std::vector<std::vector<double>>& points);

/// Fixed-width Gaussian network: G(x) = sum_k a_k exp(-|x - x_k|^2).
class GaussianNet {
public:
    GaussianNet(CenterSet centers, std::vector<double> coeffs);

    double eval(std::span<const double> x) const;
    const CenterSet& centers() const { return centers_; }
    const std::vector<double>& coeffs() const { return coeffs_; }

private:
    CenterSet centers_;
    std::vector<double> coeffs_;
};

/// Ridge least squares for the coefficients: minimizes
/// sum_i (G(x_i) - y_i)^2 + lambda |a|^2 via the normal equations and a
/// symmetric factorization. The solution is linear in the sample values.
GaussianNet fit_gaussian_coeffs(const CenterSet& centers,
                                const std::vector<std::vector<double>>& sample_xs,
                                const std::vector<double>& sample_ys, double lambda);

/// Default fit sample set: the centers plus a 3x oversampled grid (aligned
/// when the centers came from grid_centers, a bounding-box grid at spacing
/// separation/3 otherwise).
std::vector<std::vector<double>> default_fit_samples(const CenterSet& centers,
                                                     std::size_t max_points = 4000000);

/// Fit a target sampled on default_fit_samples.
GaussianNet fit_gaussian_to_target(const ScalarTarget& target, const CenterSet& centers,
                                   double lambda = 1e-10);

/// Binary-tree Gaussian network: one bivariate GaussianNet per internal
/// vertex.
class TreeGaussianNet {
public:
    TreeGaussianNet(TreeTopology topo, std::vector<GaussianNet> nodes);

    double eval(std::span<const double> x) const;
    std::vector<double> eval_nodes(std::span<const double> x) const;
    const GaussianNet& node(std::size_t vertex) const;
    const TreeTopology& topology() const { return topo_; }

private:
    TreeTopology topo_;
    std::vector<GaussianNet> nodes_; // index v-1
};

/// Fit every constituent f_v independently by fit_gaussian_coeffs against
/// the target's per-node oracles.
TreeGaussianNet fit_tree_gaussian(const CompositionalTarget& target,
                                  const std::vector<CenterSet>& node_centers,
                                  double lambda = 1e-10);

/// Estimation window for the sup norm on R^d: the center bounding box padded
/// by 3 on every side (Gaussian decay bounds the tail contribution by the
/// coefficient l1 norm times exp(-9)).
Box gaussian_norm_window(const CenterSet& centers);

/// Sup |f - G| over the window: dense grid at spacing min(0.05, 1/(4m)) for
/// d <= 2, 1e5 seeded quasi-random points for d > 2.
double gaussian_sup_error(const VectorFn& f, const GaussianNet& g);

} // namespace compo
