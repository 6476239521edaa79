#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "compo/domain.hpp"
#include "compo/tree.hpp"

namespace compo {

using BivariateFn = std::function<double(double, double)>;
using VectorFn = std::function<double(std::span<const double>)>;

/// A plain target function on a finite box, the uniform wrapper every
/// experiment consumes.
struct ScalarTarget {
    std::string label;
    std::size_t arity = 0;
    Box domain;
    VectorFn fn;

    /// Evaluate with arity and domain checks (out-of-domain is an error,
    /// never clamped).
    double eval(std::span<const double> x) const;
    double eval1(double x) const { return eval(std::span<const double>(&x, 1)); }
};

/// A hierarchical composition of bivariate constituents over a balanced
/// binary tree. Leaf position i reads input coordinate leaf_order[i].
class CompositionalTarget {
public:
    CompositionalTarget(TreeTopology topo, std::vector<BivariateFn> node_fns,
                        std::vector<std::size_t> leaf_order, Box domain);

    /// Evaluate the composition bottom-up.
    double eval(std::span<const double> x) const;

    /// Evaluate and return the output of every internal vertex
    /// (index v-1 for vertex v; the root value is nodes[0]).
    std::vector<double> eval_nodes(std::span<const double> x) const;

    const BivariateFn& node_fn(std::size_t vertex) const;
    const TreeTopology& topology() const { return topo_; }
    std::size_t arity() const { return topo_.leaves; }
    const Box& domain() const { return domain_; }
    const std::vector<std::size_t>& leaf_order() const { return leaf_order_; }

    /// Same tree with a different leaf-to-coordinate assignment.
    CompositionalTarget with_leaf_order(std::vector<std::size_t> order) const;

    /// Black-box view for the generic error/sampling machinery.
    ScalarTarget as_scalar(const std::string& label) const;

private:
    TreeTopology topo_;
    std::vector<BivariateFn> node_fns_; // index v-1 for internal vertex v
    std::vector<std::size_t> leaf_order_;
    Box domain_;
};

/// Build a tree target from per-vertex functions keyed by heap index
/// (1..d-1). Missing or extra vertices are rejected by identifier.
CompositionalTarget build_tree_target(std::size_t d,
                                      const std::map<std::size_t, BivariateFn>& node_fns);

// ---------------------------------------------------------------------------
// Builtin targets
// ---------------------------------------------------------------------------

/// Coefficients of the inner quadratic of the Q polynomial:
/// A x^2 y^2 + B x^2 y + C x y^2 + D x^2 + 2E xy + F y^2 + 2G x + 2H y + I.
struct QPolyCoeffs {
    double a = 1, b = 0, c = 0, d = 0, e = 0, f = 0, g = 0, h = 0, i = 0;
    static constexpr std::size_t count = 9;
};

/// f(x) = 2(2cos^2 x - 1)^2 - 1 = cos 4x on [-2pi, 2pi].
ScalarTarget make_cos4();

/// The inner quadratic of Q, rescaled by its sup over [-1,1]^2 (estimated on
/// a 401x401 grid) so the staged powers stay in [-1,1].
ScalarTarget make_q_inner(const QPolyCoeffs& c);

/// Q(x,y) = (normalized inner quadratic)^(2^10) on [-1,1]^2.
ScalarTarget make_q_poly(const QPolyCoeffs& c);

/// f(x) = exp(-|x|^2) on R^d. The stated box is wide enough to cover every
/// grid-refinement estimation window used by the studies (m <= 8).
ScalarTarget make_gauss_bump(std::size_t dim);

/// f(x) = exp(-|x - offset*1|^2): the bump moved off every grid point, used
/// to exercise refinement with a target outside the span of the centers.
ScalarTarget make_gauss_bump_shifted(std::size_t dim, double offset = 1.0 / 3.0);

/// Random smooth compositional tree: every node is a degree-<=3 bivariate
/// trigonometric polynomial with seeded uniform coefficients, rescaled to map
/// [-1,1]^2 into [-1,1].
CompositionalTarget make_random_tree(std::size_t d, std::uint64_t seed);

/// One random node function of the family used by make_random_tree.
BivariateFn make_random_node_fn(Rng& rng);

/// Label-based lookup over the builtin targets. Recognized labels:
/// cos4, q_poly (params A..I), gauss_bump (param d), gauss_bump_off
/// (params d, offset), tree_random (params d, seed).
ScalarTarget lookup_target(const std::string& label,
                           const std::map<std::string, double>& params = {});

/// Labels served by lookup_target.
std::vector<std::string> builtin_target_labels();

} // namespace compo
