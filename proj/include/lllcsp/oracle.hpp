#pragma once

#include <cstdint>
#include <vector>

#include "lllcsp/csp.hpp"
#include "lllcsp/marginal.hpp"

namespace lllcsp {

/// Number of complete satisfying assignments extending x, by plain
/// depth-first enumeration. Throws ErrorKind::resource above caps.oracle_space.
BigInt brute_count(const Instance& inst, const PartialAssignment& x, const Caps& caps = {});

/// Exact conditional marginal of v given x. Throws ErrorKind::unsat when x has no satisfying extension.
std::vector<BigRational> brute_marginal(const Instance& inst, const PartialAssignment& x, int v, const Caps& caps = {});

/// Every satisfying assignment, in lexicographic order.
std::vector<std::vector<int>> brute_solutions(const Instance& inst, const Caps& caps = {});

/// Exactly uniform satisfying assignment. Throws ErrorKind::unsat when there is none.
std::vector<int> brute_sample(const Instance& inst, std::uint64_t seed, const Caps& caps = {});

/// Maximal coupling of two distributions on the same finite set: the
/// diagonal carries min(mu, nu); the rest is transported greedily in value order.
std::vector<std::vector<BigRational>> maximal_coupling(
    const std::vector<BigRational>& mu, const std::vector<BigRational>& nu);

struct CouplingDistribution {
    std::vector<BigRational> mu_cp;  ///< probability the coupling process reaches each node
    std::vector<BigRational> px;
    std::vector<BigRational> py;
    std::vector<BigInt> sx;  ///< |S_x| per node
    std::vector<BigInt> sy;

    /// Point for the coupling linear program (x-side at 2i, y-side at 2i+1).
    std::vector<BigRational> lp_point() const;
};

/// Exact coupling flows on a tree. Where a conditional marginal is undefined
/// (no satisfying extension) the flow continues along the diagonal so the
/// flow identities still hold.
CouplingDistribution brute_coupling(const Instance& inst, const TruncatedTree& tree, const Caps& caps = {});

} // namespace lllcsp
