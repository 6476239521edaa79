#include "compo/scalable_ops.hpp"

#include <bit>
#include <map>
#include <memory>
#include <sstream>

#include "compo/rng.hpp"

namespace compo {

BlockFn block_from_net(const Net& net) {
    if (net.input_dim() != 2) throw ConfigError("block_from_net: block networks take 2 inputs");
    auto copy = net.clone();
    std::shared_ptr<Net> shared(std::move(copy));
    return [shared](double a, double b) {
        double x[2] = {a, b};
        return shared->eval(std::span<const double>(x, 2));
    };
}

std::vector<double> apply_layer(const BlockFn& block, std::span<const double> x, bool mirror) {
    if (x.size() < 2 || x.size() % 2 != 0)
        throw ConfigError("apply_layer: input length must be even and >= 2, got " +
                          std::to_string(x.size()));
    const std::size_t blocks = x.size() / 2;
    std::vector<double> out(blocks);
    for (std::size_t i = 0; i < blocks; ++i) {
        // block i consumes (x[2i], x[2i+1]); with mirror on, blocks fed from
        // the second half of the layer swap their arguments
        bool swapped = mirror && 2 * i >= blocks;
        out[i] = swapped ? block(x[2 * i + 1], x[2 * i]) : block(x[2 * i], x[2 * i + 1]);
    }
    return out;
}

double ScalableOperator::eval(std::span<const double> x) const {
    if (x.size() != input_dim())
        throw ConfigError("ScalableOperator: expected " + std::to_string(input_dim()) +
                          " inputs, got " + std::to_string(x.size()));
    std::vector<double> cur(x.begin(), x.end());
    while (cur.size() > 1) cur = apply_layer(block, cur, mirror);
    return cur[0];
}

ScalableOperator build_scalable_operator(BlockFn block, std::size_t depth, bool mirror) {
    if (depth < 1) throw ConfigError("build_scalable_operator: depth M must be >= 1");
    if (!block) throw ConfigError("build_scalable_operator: empty block");
    return ScalableOperator{depth, std::move(block), mirror};
}

ShiftInvarianceResult check_shift_invariance(const LayerFn& layer, std::size_t width,
                                             std::size_t trials, std::uint64_t seed) {
    if (trials < 1) throw ConfigError("check_shift_invariance: trials must be >= 1");
    if (width < 4 || width % 2 != 0)
        throw ConfigError("check_shift_invariance: width must be even and >= 4");
    Rng rng(seed);
    const std::size_t half = width / 2;
    for (std::size_t t = 0; t < trials; ++t) {
        std::vector<double> full(width);
        for (double& v : full) v = rng.uniform(-1.0, 1.0);
        auto whole = layer(full);
        auto left = layer(std::span<const double>(full.data(), half));
        auto right = layer(std::span<const double>(full.data() + half, half));
        left.insert(left.end(), right.begin(), right.end());
        if (whole != left) {
            std::ostringstream os;
            os << "trial " << t << ": layer(x+y) differs from layer(x)+layer(y)";
            return ShiftInvarianceResult{false, full, os.str()};
        }
    }
    return {};
}

ShiftInvarianceResult check_shift_invariance(const BlockFn& block, std::size_t width,
                                             std::size_t trials, std::uint64_t seed) {
    if (width % 4 != 0)
        throw ConfigError("check_shift_invariance: block layers need width divisible by 4");
    LayerFn layer = [&block](std::span<const double> x) { return apply_layer(block, x, false); };
    return check_shift_invariance(layer, width, trials, seed);
}

ShiftInvarianceResult check_mirror_identity(const BlockFn& block, std::size_t width,
                                            std::size_t trials, std::uint64_t seed) {
    if (trials < 1) throw ConfigError("check_mirror_identity: trials must be >= 1");
    if (width < 4 || width % 4 != 0)
        throw ConfigError("check_mirror_identity: width must be divisible by 4 and >= 4");
    Rng rng(seed);
    BlockFn swapped = [&block](double a, double b) { return block(b, a); };
    const std::size_t half = width / 2;
    for (std::size_t t = 0; t < trials; ++t) {
        std::vector<double> full(width);
        for (double& v : full) v = rng.uniform(-1.0, 1.0);
        auto whole = apply_layer(block, full, true);
        auto left = apply_layer(block, std::span<const double>(full.data(), half), false);
        auto right = apply_layer(swapped, std::span<const double>(full.data() + half, half), false);
        left.insert(left.end(), right.begin(), right.end());
        if (whole != left) {
            std::ostringstream os;
            os << "trial " << t << ": mirrored layer differs from H' + (H o R)";
            return ShiftInvarianceResult{false, full, os.str()};
        }
    }
    return {};
}

CompositionalTarget operator_as_tree_target(const ScalableOperator& op) {
    const std::size_t d = op.input_dim();
    std::map<std::size_t, BivariateFn> fns;
    for (std::size_t v = 1; v < d; ++v) {
        // vertex v sits at depth l = floor(log2 v) and matches block p = v - 2^l
        // of the operator layer with 2^l blocks
        std::size_t level_start = std::bit_floor(v);
        std::size_t p = v - level_start;
        bool swapped = op.mirror && 2 * p >= level_start;
        BlockFn block = op.block;
        fns[v] = swapped ? BivariateFn([block](double a, double b) { return block(b, a); })
                         : block;
    }
    return build_tree_target(d, fns);
}

} // namespace compo
