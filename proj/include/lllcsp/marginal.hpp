#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "lllcsp/csp.hpp"
#include "lllcsp/lp.hpp"

namespace lllcsp {

enum class NodeKind { internal, good_leaf, bad_leaf };

struct CouplingNode {
    PartialAssignment x;
    PartialAssignment y;
    std::vector<int> disagree;        ///< assigned variables where x and y differ, sorted
    std::vector<int> frozen_cons;     ///< constraints above p_tree under x or y, sorted
    std::vector<int> dangerous_vars;  ///< disagree plus unassigned variables of frozen_cons, sorted
    int next_var = -1;
    int parent = -1;
    int depth = 0;
    NodeKind kind = NodeKind::internal;
    /// Child for value pair (a, b) sits at index a * domain(next_var) + b.
    std::vector<int> children;

    std::size_t set_size() const { return x.size(); }
};

struct TruncatedTree {
    int var = -1;       ///< the variable whose two values are compared
    int x_value = -1;   ///< root x assigns var = x_value
    int y_value = -1;
    int ell = 0;        ///< |prefix| + 1
    int L = 2;
    std::vector<CouplingNode> nodes;  ///< breadth-first, root first
    std::size_t good_leaves = 0;
    std::size_t bad_leaves = 0;

    const CouplingNode& root() const { return nodes.front(); }
};

/// Breadth-first L-truncated coupling tree rooted at (prefix + v=a, prefix + v=b).
/// Throws ErrorKind::resource when more than caps.tree_nodes nodes are needed.
TruncatedTree build_tree(const Instance& inst, const PartialAssignment& prefix, int v, int a, int b, int L,
    const BigRational& p_tree, const Caps& caps = {});

enum class RatioKind { finite, infinite, undefined };

struct LeafRatio {
    RatioKind kind = RatioKind::finite;
    BigInt nx{1};  ///< completions under x of the components where x and y differ
    BigInt ny{1};
    BigRational value() const
    {
        BigRational r(nx, ny);
        r.canonicalize();
        return r;
    }
};

/// Ratio of satisfying completions under x and y at a good leaf, by
/// enumerating the unassigned dangerous variables. Components on which x and
/// y agree cancel.
LeafRatio leaf_ratio(const Instance& inst, const CouplingNode& leaf, const Caps& caps = {});

/// Structural rows: root fixing, flow conservation and coupling-error rows.
/// Variable 2i is the x-side value of node i, 2i+1 the y-side value.
/// `eta` empty means infinite (coupling-error rows omitted).
LPModel build_lp(const TruncatedTree& tree, int q, const std::optional<BigRational>& eta);
/// Appends the leaf ratio rows for [r_lo, r_hi]; r_lo = 0 or r_hi empty (infinite) drop the matching side.
void add_ratio_rows(LPModel& model, const TruncatedTree& tree, const std::vector<std::optional<LeafRatio>>& ratios,
    const BigRational& r_lo, const std::optional<BigRational>& r_hi);

/// Feasibility for one bracket. Trees of a single node are decided exactly.
LPStatus lp_feasible(const TruncatedTree& tree, const std::vector<std::optional<LeafRatio>>& ratios,
    const BigRational& r_lo, const std::optional<BigRational>& r_hi, int q, const std::optional<BigRational>& eta,
    const LPOptions& options = {});

struct RatioInterval {
    double r_lo = 0;
    double r_hi = 0;  ///< may be infinite
    double err = 0;   ///< may be infinite
    bool exact = false;         ///< decided without floating point
    std::size_t tree_nodes = 0;
    std::size_t good_leaves = 0;
    std::size_t bad_leaves = 0;
    std::size_t lp_solves = 0;

    /// Certified range for the true ratio: [(1-err) r_lo, (1+err) r_hi].
    BigRational lower_bound() const;
    std::optional<BigRational> upper_bound() const;
};

struct CertifyOptions {
    Caps caps;
    LPOptions lp;
    /// Whether the refined-mode event holds at the prefix; required for the refined error formula.
    bool event_holds = false;
    /// Certificate slack added when the LP was solved in floating point.
    double numeric_slack = 1e-6;
};

/// Grid step for the parameters' purpose: 1 + eps/(8n) for counting, 1 + eps/(16nq) for sampling.
double grid_step(const Params& params, int n);

/// Certifies mu[v=b | prefix] / mu[v=a | prefix] by search over a geometric grid.
/// Throws ErrorKind::regime when even the unbounded bracket is infeasible.
RatioInterval certify_ratio(const Instance& inst, const PartialAssignment& prefix, int v, int a, int b,
    const Params& params, const CertifyOptions& options = {});

struct MarginalEstimate {
    int anchor = 0;
    std::vector<BigRational> dist;   ///< estimated distribution, sums to 1
    std::vector<BigRational> lower;  ///< certified lower bound of the true marginal per value
    std::vector<BigRational> upper;
    std::vector<double> mult_error;  ///< max(est/lower, upper/est) - 1 per value
    double tv_bound = 0;
    std::vector<RatioInterval> ratios;  ///< indexed by value; the anchor's entry is unused
};

MarginalEstimate estimate_marginal(const Instance& inst, const PartialAssignment& prefix, int v,
    const Params& params, const CertifyOptions& options = {});

} // namespace lllcsp
