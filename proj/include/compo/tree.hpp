#pragma once

#include <cstddef>
#include <string>

#include "compo/errors.hpp"

namespace compo {

/// Balanced binary tree over d = 2^L leaves, heap-indexed:
/// internal vertices are 1..d-1 (root = 1, children of v are 2v and 2v+1),
/// leaves are d..2d-1 (leaf position i maps to vertex d+i).
struct TreeTopology {
    std::size_t leaves = 0;

    TreeTopology() = default;
    explicit TreeTopology(std::size_t d) : leaves(d) {
        if (d < 2 || (d & (d - 1)) != 0)
            throw ConfigError("tree arity must be a power of two >= 2, got " + std::to_string(d));
    }

    std::size_t internal_count() const { return leaves - 1; }
    static bool is_power_of_two(std::size_t d) { return d >= 1 && (d & (d - 1)) == 0; }

    bool is_leaf(std::size_t v) const { return v >= leaves; }
    std::size_t left(std::size_t v) const { return 2 * v; }
    std::size_t right(std::size_t v) const { return 2 * v + 1; }
    std::size_t leaf_vertex(std::size_t position) const { return leaves + position; }
    std::size_t leaf_position(std::size_t v) const { return v - leaves; }

    bool valid_internal(std::size_t v) const { return v >= 1 && v < leaves; }
};

} // namespace compo
