#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "compo/networks.hpp"
#include "compo/targets.hpp"

namespace compo {

/// A single block H: R^2 -> R, closed form or a trained 2-input network.
using BlockFn = BivariateFn;

/// View a 2-input network as a block.
BlockFn block_from_net(const Net& net);

/// One layer of a scalable operator: out[i] = H(x[2i], x[2i+1]). With the
/// mirror-symmetry variant the blocks whose inputs lie in the second half of
/// the layer apply H with swapped arguments.
std::vector<double> apply_layer(const BlockFn& block, std::span<const double> x, bool mirror);

/// K = H_2 o H_4 o ... o H_{2M}: M halving layers built from one block,
/// consuming 2^M inputs down to a scalar.
struct ScalableOperator {
    std::size_t depth = 1; // M
    BlockFn block;
    bool mirror = false;

    std::size_t input_dim() const { return std::size_t{1} << depth; }
    double eval(std::span<const double> x) const;
};

ScalableOperator build_scalable_operator(BlockFn block, std::size_t depth, bool mirror = false);

/// Result of a structural identity check on seeded random inputs.
struct ShiftInvarianceResult {
    bool passed = true;
    std::vector<double> counterexample; // first failing full-width input
    std::string detail;
};

using LayerFn = std::function<std::vector<double>(std::span<const double>)>;

/// Verifies layer(x + y) = layer(x) + layer(y) (concatenation, bit-exact)
/// on `trials` seeded random inputs of the given width.
ShiftInvarianceResult check_shift_invariance(const LayerFn& layer, std::size_t width,
                                             std::size_t trials, std::uint64_t seed = 424242);

/// Same check for a block layer (mirror off).
ShiftInvarianceResult check_shift_invariance(const BlockFn& block, std::size_t width,
                                             std::size_t trials, std::uint64_t seed = 424242);

/// Mirror variant: the second half of a mirrored layer must equal the plain
/// layer with per-block swapped arguments.
ShiftInvarianceResult check_mirror_identity(const BlockFn& block, std::size_t width,
                                            std::size_t trials, std::uint64_t seed = 424242);

/// The equivalent compositional target: the balanced tree over 2^M leaves
/// whose every node function is the block (argument-swapped on mirrored
/// positions), evaluating bit-identically to the operator.
CompositionalTarget operator_as_tree_target(const ScalableOperator& op);

} // namespace compo
