#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <gmpxx.h>

#include "lllcsp/error.hpp"

namespace lllcsp {

using BigInt = mpz_class;
using BigRational = mpq_class;

/// Resource limits. Every breach surfaces as ErrorKind::resource.
struct Caps {
    std::uint64_t oracle_space = std::uint64_t{1} << 24;   ///< brute-force completions
    std::uint64_t enumeration_space = std::uint64_t{1} << 24; ///< per component / leaf
    std::size_t tree_nodes = 1'000'000;
    std::size_t lp_cells = 20'000'000;                     ///< dense tableau entries
    std::uint64_t resamples = 1'000'000;                   ///< Moser-Tardos
    std::size_t tree23_budget = 2'000'000;                 ///< partial {2,3}-trees explored
};

struct Constraint {
    std::vector<int> scope;
    std::vector<std::vector<int>> violating;
};

/// Partial assignment: value per variable (-1 when unassigned) plus the
/// order in which variables were set.
class PartialAssignment {
public:
    PartialAssignment() = default;
    explicit PartialAssignment(int num_vars) : values_(static_cast<std::size_t>(num_vars), -1) {}

    int num_vars() const { return static_cast<int>(values_.size()); }
    std::size_t size() const { return order_.size(); }
    bool empty() const { return order_.empty(); }
    bool assigned(int v) const { return values_[static_cast<std::size_t>(v)] >= 0; }
    int value(int v) const { return values_[static_cast<std::size_t>(v)]; }
    std::span<const int> values() const { return values_; }
    std::span<const int> order() const { return order_; }

    /// Copy with v = a appended. Throws std::invalid_argument if v is already set.
    PartialAssignment extend(int v, int a) const;
    void assign(int v, int a);

    /// True when every assignment made by `base` is also made here.
    bool extends(const PartialAssignment& base) const;
    /// The first `count` assignments in order.
    PartialAssignment prefix(std::size_t count) const;

    friend bool operator==(const PartialAssignment& a, const PartialAssignment& b)
    {
        return a.values_ == b.values_;
    }

private:
    std::vector<int> values_;
    std::vector<int> order_;
};

/// Exact conditional violation probability: numerator / denominator.
struct ExactProb {
    BigInt numerator{0};
    BigInt denominator{1};

    BigRational to_rational() const;
    bool exceeds(const BigRational& threshold) const;
};

class Instance {
public:
    /// Validates and normalizes. Constraints with no violating tuples are
    /// dropped (a warning is recorded); a constraint violated by every tuple of
    /// its scope raises ErrorKind::unsat.
    static Instance build(std::vector<int> domain_sizes, std::vector<Constraint> constraints);

    int num_vars() const { return static_cast<int>(domains_.size()); }
    int num_constraints() const { return static_cast<int>(constraints_.size()); }
    int domain(int v) const { return domains_[static_cast<std::size_t>(v)]; }
    std::span<const int> domains() const { return domains_; }
    const Constraint& constraint(int c) const { return constraints_[static_cast<std::size_t>(c)]; }
    std::span<const Constraint> constraints() const { return constraints_; }
    std::span<const int> constraints_of(int v) const { return var_constraints_[static_cast<std::size_t>(v)]; }
    const std::vector<std::string>& warnings() const { return warnings_; }

    int q() const { return q_; }
    int k() const { return k_; }
    int delta() const { return delta_; }
    /// Largest unconditional violation probability over constraints.
    const BigRational& p() const { return p_; }

    /// Violation test for a constraint whose scope is fully assigned.
    bool violated(int c, std::span<const int> values) const;
    /// True when some constraint with fully assigned scope is violated.
    bool any_violated(std::span<const int> values) const;
    /// True when `values` is complete and satisfies all constraints.
    bool satisfies(std::span<const int> values) const;

private:
    struct Table {
        std::vector<std::uint64_t> radix;
        std::vector<char> bad;
    };

    std::vector<int> domains_;
    std::vector<Constraint> constraints_;
    std::vector<Table> tables_;
    std::vector<std::vector<int>> var_constraints_;
    std::vector<std::string> warnings_;
    int q_ = 0;
    int k_ = 0;
    int delta_ = 0;
    BigRational p_{0};
};

ExactProb cond_violation_prob(const Instance& inst, int c, const PartialAssignment& x);

/// Uniform product-measure probability of each value of v.
inline BigRational value_prob(const Instance& inst, int v) { return BigRational(1, inst.domain(v)); }

enum class Purpose { count, sample, simple };

struct ParamOptions {
    double epsilon = 0.2;
    std::optional<int> L;
    std::optional<BigRational> p_freeze;  ///< sets p' = p''
    std::optional<BigRational> p_guide;   ///< overrides p' alone
    Purpose purpose = Purpose::count;
};

struct Params {
    int q = 2;
    int k = 1;
    int delta = 0;
    BigRational p{0};
    BigRational p_guide;  ///< freezing threshold of the guiding assignment
    BigRational p_tree;   ///< freezing threshold inside coupling trees
    int L = 2;
    bool L_overridden = false;
    int L_default = 2;
    /// (1 - 3 p'' q)^-delta - 1, exact; empty when 3 p'' q >= 1 (infinite).
    std::optional<BigRational> eta;
    double epsilon = 0.2;
    Purpose purpose = Purpose::count;
    std::vector<std::string> warnings;

    /// max(delta, 1); formulas dividing by or taking logs of delta use it.
    int delta_eff() const { return delta > 0 ? delta : 1; }
    /// floor(L / (k delta^2)), the exponent of the certified error terms.
    int decay_exponent() const;
    /// Size of the {2,3}-trees in the refined potential, at least 1.
    int tree_size_refined() const;
};

Params derive_params(const Instance& inst, const ParamOptions& options = {});

BigRational compute_eta(const BigRational& p_tree, int q, int delta);

struct ConditionCheck {
    std::string name;
    std::string statement;
    bool holds = false;
    std::string lhs;
    std::string rhs;
};

struct ConditionReport {
    std::vector<ConditionCheck> checks;
    /// q^3 k p delta^7, compared against an unspecified absolute constant.
    BigRational headline_value{0};

    const ConditionCheck* find(const std::string& name) const;
    bool holds(const std::string& name) const;
};

/// Named parameter inequalities. Never throws; violations only weaken guarantees.
ConditionReport check_conditions(const Instance& inst, const Params& params);

/// Parses "0.001", "1/1000", "1e-3" into an exact rational.
BigRational parse_rational(const std::string& text);
std::string to_decimal(const BigRational& value, int digits = 12);

/// Counts completions of `free_vars` (unassigned in x) satisfying every
/// constraint in `constraints`, whose scopes must lie in assigned(x) ∪ free_vars.
/// Throws ErrorKind::resource when the raw space exceeds `cap`.
BigInt count_completions(const Instance& inst, const PartialAssignment& x, std::span<const int> free_vars,
    std::span<const int> constraints, std::uint64_t cap);

/// All satisfying completions (values of `free_vars` in the given order).
std::vector<std::vector<int>> list_completions(const Instance& inst, const PartialAssignment& x,
    std::span<const int> free_vars, std::span<const int> constraints, std::uint64_t cap);

} // namespace lllcsp
