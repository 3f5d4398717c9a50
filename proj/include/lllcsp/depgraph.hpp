#pragma once

#include <span>
#include <vector>

#include "lllcsp/csp.hpp"

namespace lllcsp {

/// Graph on constraints, adjacent when scopes intersect. Distances are only
/// tracked up to 3; anything farther reads as `far`.
class LineGraph {
public:
    static constexpr int far = 4;

    static LineGraph build(const Instance& inst);
    /// Any simple undirected graph; used for graph-level tests.
    static LineGraph from_adjacency(std::vector<std::vector<int>> adjacency);

    int size() const { return static_cast<int>(adj_.size()); }
    std::span<const int> neighbors(int c) const { return adj_[static_cast<std::size_t>(c)]; }
    int degree(int c) const { return static_cast<int>(adj_[static_cast<std::size_t>(c)].size()); }
    int max_degree() const { return max_degree_; }

    /// Geodesic distance capped at `far`.
    int distance(int a, int b) const;
    /// Vertices at distance 1 or 2 (the square graph's neighbors).
    std::span<const int> within2(int c) const { return within2_[static_cast<std::size_t>(c)]; }
    /// Vertices at distance 2 or 3, sorted.
    std::span<const int> ring23(int c) const { return ring23_[static_cast<std::size_t>(c)]; }

private:
    void index();

    std::vector<std::vector<int>> adj_;
    // Ball of radius 3 around each vertex as sorted (vertex, distance) pairs.
    std::vector<std::vector<std::pair<int, int>>> ball_;
    std::vector<std::vector<int>> within2_;
    std::vector<std::vector<int>> ring23_;
    int max_degree_ = 0;
};

/// Sorted member list.
using Tree23 = std::vector<int>;

/// Members pairwise at distance >= 2 and connected under distance-2-or-3 links.
bool is_23_tree(const LineGraph& g, std::span<const int> members);

/// All {2,3}-trees of size t containing root, sorted lexicographically.
/// With `root_is_min`, only trees whose smallest member is root.
/// Throws ErrorKind::resource once more than `budget` partial trees are held.
std::vector<Tree23> enumerate_23_trees(
    const LineGraph& g, int root, int t, std::size_t budget, bool root_is_min = false);

/// Greedy {2,3}-tree inside b containing anchor: repeatedly adds the lowest
/// vertex of b at distance >= 2 from every member and <= 3 from some member.
/// Throws std::invalid_argument if anchor is not in b or b is not connected
/// in the square graph.
Tree23 extract_23_tree(const LineGraph& g, std::span<const int> b, int anchor);

struct Component {
    std::vector<int> constraints;  ///< sorted
    std::vector<int> variables;    ///< union of their scopes, sorted
};

/// Connected components of the square graph restricted to f, ordered by
/// smallest member.
std::vector<Component> frozen_components(const Instance& inst, const LineGraph& g, std::span<const int> f);

} // namespace lllcsp
