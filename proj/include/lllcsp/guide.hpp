#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lllcsp/csp.hpp"
#include "lllcsp/depgraph.hpp"

namespace lllcsp {

struct GuideResult {
    std::vector<int> vars;    ///< v*_1 .. v*_s in assignment order
    std::vector<int> values;  ///< a*_1 .. a*_s
    PartialAssignment final;  ///< P_s
    std::vector<int> dangerous;    ///< every constraint ever declared dangerous, sorted
    std::vector<int> frozen_vars;  ///< sorted
    std::vector<BigRational> potential_trace;  ///< H(P_0) .. H(P_s); empty for randomized runs
    std::vector<std::string> warnings;

    std::size_t stages() const { return vars.size(); }
    /// P_i (P_0 is empty).
    PartialAssignment prefix(std::size_t i) const { return final.prefix(i); }
};

/// Distribution over the domain of v given the current partial assignment.
using ValueSource = std::function<std::vector<BigRational>(const PartialAssignment&, int v)>;

/// Randomized greedy: lowest available variable each stage, value drawn
/// uniformly (or from `source` when given), constraints whose conditional
/// probability exceeds p_guide freeze their unassigned variables.
GuideResult greedy_randomized(
    const Instance& inst, const BigRational& p_guide, std::uint64_t seed, const ValueSource& source = {});

/// Sum over trees of prod over members of P[C | x] / p_guide.
BigRational potential_simple(
    const Instance& inst, const PartialAssignment& x, std::span<const Tree23> trees, const BigRational& p_guide);

/// Sum over trees of prod over members other than the one containing v of
/// (4 k q eta + 2 P[C | x] / p_tree). Throws std::invalid_argument if a tree
/// does not contain exactly one constraint whose scope holds v, and
/// ErrorKind::regime if eta is infinite.
BigRational potential_refined(const Instance& inst, const PartialAssignment& x, int v,
    std::span<const Tree23> trees_v, const Params& params);

enum class GuideMode { simple, refined };

/// A potential as a weighted sum of products of per-constraint factors, kept
/// in a form that supports cheap re-evaluation after one more assignment.
class Potential {
public:
    static Potential build(
        const Instance& inst, const LineGraph& g, const Params& params, GuideMode mode, const Caps& caps);

    GuideMode mode() const { return mode_; }
    int tree_size() const { return tree_size_; }
    std::size_t num_terms() const { return terms_.size(); }
    /// Simple mode: every tree once. Refined mode: trees grouped by the constraint they are rooted at.
    const std::vector<Tree23>& trees_rooted_at(int c) const { return by_root_[static_cast<std::size_t>(c)]; }
    const std::vector<Tree23>& all_trees() const { return all_trees_; }

    BigRational factor(const Instance& inst, int c, const PartialAssignment& x) const;
    std::vector<BigRational> factors(const Instance& inst, const PartialAssignment& x) const;
    BigRational evaluate(const std::vector<BigRational>& factors) const;
    BigRational evaluate(const Instance& inst, const PartialAssignment& x) const;
    /// H(x with v = a) given the factors and value at x.
    BigRational evaluate_extension(const Instance& inst, const PartialAssignment& x,
        const std::vector<BigRational>& factors, const BigRational& value, int v, int a) const;
    /// Refined mode: per-variable inner sums.
    std::vector<BigRational> per_variable(const Instance& inst, const std::vector<BigRational>& factors) const;

private:
    struct Term {
        int root = -1;
        BigRational weight{1};
        std::vector<int> factors;
    };

    BigRational term_value(const Term& term, const std::vector<BigRational>& factors) const;

    GuideMode mode_ = GuideMode::simple;
    int tree_size_ = 1;
    BigRational p_;
    BigRational offset_{0};
    std::vector<Term> terms_;
    std::vector<std::vector<int>> terms_of_;  // constraint -> term indices whose product mentions it
    std::vector<std::vector<Tree23>> by_root_;
    std::vector<Tree23> all_trees_;
};

struct EventReport {
    bool holds = true;
    std::vector<BigRational> per_variable;
    BigRational threshold;  ///< n^4 2^-floor(L/(k delta^2))
};

/// Requires a refined-mode potential.
EventReport check_event_E(
    const Instance& inst, const PartialAssignment& x, const Params& params, const Potential& refined);

/// Deterministic guide choosing each value by minimizing the mode's
/// potential. Ties go to the value with the least summed violation probability
/// over the variable's constraints, then to the smallest value. Throws ErrorKind::regime when a final
/// component of the square graph on dangerous constraints exceeds L, unless
/// `force` is set (then it only warns).
GuideResult derandomized_guide(const Instance& inst, const Params& params, GuideMode mode, const Caps& caps = {},
    bool force = false);

} // namespace lllcsp
