#include "lllcsp/guide.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

namespace lllcsp {

namespace {

// Shared select, assign and freeze loop; `choose` picks the value of each selected variable.
template <typename Choose>
GuideResult run_guide(const Instance& inst, const BigRational& threshold, Choose&& choose)
{
    const int n = inst.num_vars();
    const int m = inst.num_constraints();
    GuideResult result;
    result.final = PartialAssignment(n);
    std::vector<char> available(static_cast<std::size_t>(n), 1);
    std::vector<char> frozen(static_cast<std::size_t>(n), 0);
    std::vector<char> dangerous(static_cast<std::size_t>(m), 0);

    auto inspect = [&](int c) {
        if (dangerous[static_cast<std::size_t>(c)])
            return;
        if (!cond_violation_prob(inst, c, result.final).exceeds(threshold))
            return;
        dangerous[static_cast<std::size_t>(c)] = 1;
        for (int u : inst.constraint(c).scope)
            if (available[static_cast<std::size_t>(u)]) {
                available[static_cast<std::size_t>(u)] = 0;
                frozen[static_cast<std::size_t>(u)] = 1;
            }
    };

    bool first = true;
    for (int v = 0; v < n; ++v) {
        if (!available[static_cast<std::size_t>(v)])
            continue;
        int a = choose(result.final, v);
        result.final.assign(v, a);
        available[static_cast<std::size_t>(v)] = 0;
        result.vars.push_back(v);
        result.values.push_back(a);
        if (first) {
            for (int c = 0; c < m; ++c)
                inspect(c);
            first = false;
        } else {
            for (int c : inst.constraints_of(v))
                inspect(c);
        }
    }
    for (int c = 0; c < m; ++c)
        if (dangerous[static_cast<std::size_t>(c)])
            result.dangerous.push_back(c);
    for (int v = 0; v < n; ++v)
        if (frozen[static_cast<std::size_t>(v)])
            result.frozen_vars.push_back(v);
    return result;
}

int draw_value(std::mt19937_64& rng, const std::vector<BigRational>& dist)
{
    double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    double acc = 0;
    int last_positive = 0;
    for (std::size_t a = 0; a < dist.size(); ++a) {
        double pa = dist[a].get_d();
        if (pa > 0)
            last_positive = static_cast<int>(a);
        acc += pa;
        if (u < acc && pa > 0)
            return static_cast<int>(a);
    }
    return last_positive;
}

BigRational eta_term(const Params& params)
{
    if (!params.eta)
        throw Error(ErrorKind::regime, "refined potential needs a finite eta (3 p'' q < 1)");
    return 4 * params.k * params.q * *params.eta;
}

BigRational refined_threshold(int n, int exponent)
{
    BigInt two_pow;
    mpz_ui_pow_ui(two_pow.get_mpz_t(), 2, static_cast<unsigned long>(exponent));
    BigInt n4 = BigInt(n) * n * n * n;
    BigRational t(n4, two_pow);
    t.canonicalize();
    return t;
}

} // namespace

GuideResult greedy_randomized(
    const Instance& inst, const BigRational& p_guide, std::uint64_t seed, const ValueSource& source)
{
    std::mt19937_64 rng(seed);
    return run_guide(inst, p_guide, [&](const PartialAssignment& x, int v) {
        if (!source)
            return std::uniform_int_distribution<int>(0, inst.domain(v) - 1)(rng);
        auto dist = source(x, v);
        BigRational total = 0;
        for (const auto& pa : dist)
            total += pa;
        if (total == 0)
            throw Error(ErrorKind::unsat, "marginal undefined: no satisfying extension of the current prefix");
        return draw_value(rng, dist);
    });
}

BigRational potential_simple(
    const Instance& inst, const PartialAssignment& x, std::span<const Tree23> trees, const BigRational& p_guide)
{
    BigRational total = 0;
    for (const auto& tree : trees) {
        BigRational product = 1;
        for (int c : tree)
            product *= cond_violation_prob(inst, c, x).to_rational() / p_guide;
        total += product;
    }
    return total;
}

BigRational potential_refined(const Instance& inst, const PartialAssignment& x, int v,
    std::span<const Tree23> trees_v, const Params& params)
{
    const BigRational offset = eta_term(params);
    BigRational total = 0;
    for (const auto& tree : trees_v) {
        int holders = 0;
        for (int c : tree) {
            const auto& scope = inst.constraint(c).scope;
            if (std::find(scope.begin(), scope.end(), v) != scope.end())
                ++holders;
        }
        if (holders != 1)
            throw std::invalid_argument("tree does not contain exactly one constraint on the variable");
        BigRational product = 1;
        for (int c : tree) {
            const auto& scope = inst.constraint(c).scope;
            if (std::find(scope.begin(), scope.end(), v) != scope.end())
                continue;
            product *= offset + 2 * cond_violation_prob(inst, c, x).to_rational() / params.p_tree;
        }
        total += product;
    }
    return total;
}

Potential Potential::build(
    const Instance& inst, const LineGraph& g, const Params& params, GuideMode mode, const Caps& caps)
{
    Potential pot;
    pot.mode_ = mode;
    const int m = inst.num_constraints();
    pot.by_root_.assign(static_cast<std::size_t>(m), {});
    pot.terms_of_.assign(static_cast<std::size_t>(m), {});
    std::size_t budget = caps.tree23_budget;
    auto take = [&](int root, bool root_is_min) {
        auto trees = enumerate_23_trees(g, root, pot.tree_size_, budget, root_is_min);
        budget -= std::min(budget, trees.size());
        return trees;
    };

    if (mode == GuideMode::simple) {
        pot.tree_size_ = std::max(1, params.L / params.delta_eff());
        pot.p_ = params.p_guide;
        for (int c = 0; c < m; ++c) {
            auto trees = take(c, true);
            for (auto& tree : trees) {
                Term term;
                term.factors = tree;
                pot.terms_.push_back(std::move(term));
                pot.all_trees_.push_back(std::move(tree));
            }
        }
    } else {
        pot.tree_size_ = params.tree_size_refined();
        pot.p_ = params.p_tree;
        pot.offset_ = eta_term(params);
        for (int c = 0; c < m; ++c) {
            auto trees = take(c, false);
            for (const auto& tree : trees) {
                Term term;
                term.root = c;
                term.weight = static_cast<long>(inst.constraint(c).scope.size());
                for (int member : tree)
                    if (member != c)
                        term.factors.push_back(member);
                pot.terms_.push_back(std::move(term));
            }
            pot.by_root_[static_cast<std::size_t>(c)] = std::move(trees);
        }
    }
    for (std::size_t i = 0; i < pot.terms_.size(); ++i)
        for (int c : pot.terms_[i].factors)
            pot.terms_of_[static_cast<std::size_t>(c)].push_back(static_cast<int>(i));
    return pot;
}

BigRational Potential::factor(const Instance& inst, int c, const PartialAssignment& x) const
{
    BigRational prob = cond_violation_prob(inst, c, x).to_rational();
    if (mode_ == GuideMode::simple)
        return prob / p_;
    return offset_ + 2 * prob / p_;
}

std::vector<BigRational> Potential::factors(const Instance& inst, const PartialAssignment& x) const
{
    std::vector<BigRational> out;
    out.reserve(static_cast<std::size_t>(inst.num_constraints()));
    for (int c = 0; c < inst.num_constraints(); ++c)
        out.push_back(factor(inst, c, x));
    return out;
}

BigRational Potential::term_value(const Term& term, const std::vector<BigRational>& factors) const
{
    BigRational value = term.weight;
    for (int c : term.factors)
        value *= factors[static_cast<std::size_t>(c)];
    return value;
}

BigRational Potential::evaluate(const std::vector<BigRational>& factors) const
{
    BigRational total = 0;
    for (const auto& term : terms_)
        total += term_value(term, factors);
    return total;
}

BigRational Potential::evaluate(const Instance& inst, const PartialAssignment& x) const
{
    return evaluate(factors(inst, x));
}

BigRational Potential::evaluate_extension(const Instance& inst, const PartialAssignment& x,
    const std::vector<BigRational>& factors, const BigRational& value, int v, int a) const
{
    const PartialAssignment ext = x.extend(v, a);
    std::vector<BigRational> updated = factors;
    for (int c : inst.constraints_of(v))
        updated[static_cast<std::size_t>(c)] = factor(inst, c, ext);
    // Members of one tree have disjoint scopes, so each term meets v at most once.
    BigRational out = value;
    for (int c : inst.constraints_of(v))
        for (int t : terms_of_[static_cast<std::size_t>(c)]) {
            const Term& term = terms_[static_cast<std::size_t>(t)];
            out += term_value(term, updated) - term_value(term, factors);
        }
    return out;
}

std::vector<BigRational> Potential::per_variable(const Instance& inst, const std::vector<BigRational>& factors) const
{
    std::vector<BigRational> root_sum(static_cast<std::size_t>(inst.num_constraints()), BigRational(0));
    for (const auto& term : terms_) {
        if (term.root < 0)
            continue;
        BigRational product = 1;
        for (int c : term.factors)
            product *= factors[static_cast<std::size_t>(c)];
        root_sum[static_cast<std::size_t>(term.root)] += product;
    }
    std::vector<BigRational> out(static_cast<std::size_t>(inst.num_vars()), BigRational(0));
    for (int v = 0; v < inst.num_vars(); ++v)
        for (int c : inst.constraints_of(v))
            out[static_cast<std::size_t>(v)] += root_sum[static_cast<std::size_t>(c)];
    return out;
}

EventReport check_event_E(
    const Instance& inst, const PartialAssignment& x, const Params& params, const Potential& refined)
{
    if (refined.mode() != GuideMode::refined)
        throw std::invalid_argument("event check needs the refined potential");
    EventReport report;
    report.threshold = refined_threshold(inst.num_vars(), params.decay_exponent());
    report.per_variable = refined.per_variable(inst, refined.factors(inst, x));
    for (const auto& value : report.per_variable)
        if (value > report.threshold)
            report.holds = false;
    return report;
}

GuideResult derandomized_guide(
    const Instance& inst, const Params& params, GuideMode mode, const Caps& caps, bool force)
{
    const LineGraph g = LineGraph::build(inst);
    const Potential pot = Potential::build(inst, g, params, mode, caps);
    PartialAssignment start(inst.num_vars());
    std::vector<BigRational> factors = pot.factors(inst, start);
    BigRational value = pot.evaluate(factors);
    std::vector<BigRational> trace{value};

    std::vector<std::string> warnings;
    const BigRational limit = mode == GuideMode::simple
        ? BigRational(1)
        : refined_threshold(inst.num_vars(), params.decay_exponent());
    if (value >= limit)
        warnings.push_back("initial potential " + to_decimal(value, 6) + " is not below its bound "
            + to_decimal(limit, 6) + "; the guide's guarantees do not apply");

    GuideResult result = run_guide(inst, params.p_guide, [&](const PartialAssignment& x, int v) {
        // Ties on the potential go to the value with the least local violation mass, then the smallest value.
        int best = 0;
        BigRational best_value;
        BigRational best_local;
        for (int a = 0; a < inst.domain(v); ++a) {
            BigRational h = pot.evaluate_extension(inst, x, factors, value, v, a);
            if (a > 0 && h > best_value)
                continue;
            const PartialAssignment ext = x.extend(v, a);
            BigRational local = 0;
            for (int c : inst.constraints_of(v))
                local += cond_violation_prob(inst, c, ext).to_rational();
            if (a == 0 || h < best_value || local < best_local) {
                best = a;
                best_value = h;
                best_local = local;
            }
        }
        const PartialAssignment ext = x.extend(v, best);
        for (int c : inst.constraints_of(v))
            factors[static_cast<std::size_t>(c)] = pot.factor(inst, c, ext);
        value = best_value;
        trace.push_back(value);
        return best;
    });
    result.potential_trace = std::move(trace);
    result.warnings = std::move(warnings);

    std::size_t largest = 0;
    for (const auto& comp : frozen_components(inst, g, result.dangerous))
        largest = std::max(largest, comp.constraints.size());
    if (largest > static_cast<std::size_t>(params.L)) {
        std::string message = "a component of dangerous constraints has " + std::to_string(largest)
            + " members, above the bound L = " + std::to_string(params.L);
        if (!force)
            throw Error(ErrorKind::regime, message);
        result.warnings.push_back(message);
    }
    return result;
}

} // namespace lllcsp
