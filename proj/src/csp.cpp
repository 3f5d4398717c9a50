#include "lllcsp/csp.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <stdexcept>

namespace lllcsp {

namespace {

constexpr std::uint64_t max_table_size = std::uint64_t{1} << 22;

BigRational pow_rational(const BigRational& base, int exponent)
{
    BigRational out{1};
    for (int i = 0; i < exponent; ++i)
        out *= base;
    return out;
}

BigRational int_pow(int base, int exponent) { return pow_rational(BigRational(base), exponent); }

} // namespace

PartialAssignment PartialAssignment::extend(int v, int a) const
{
    PartialAssignment out = *this;
    out.assign(v, a);
    return out;
}

void PartialAssignment::assign(int v, int a)
{
    if (v < 0 || v >= num_vars())
        throw std::invalid_argument("variable " + std::to_string(v) + " out of range");
    if (a < 0)
        throw std::invalid_argument("negative value");
    if (assigned(v))
        throw std::invalid_argument("variable " + std::to_string(v) + " is already assigned");
    values_[static_cast<std::size_t>(v)] = a;
    order_.push_back(v);
}

bool PartialAssignment::extends(const PartialAssignment& base) const
{
    if (base.num_vars() != num_vars())
        return false;
    for (int v : base.order())
        if (value(v) != base.value(v))
            return false;
    return true;
}

PartialAssignment PartialAssignment::prefix(std::size_t count) const
{
    PartialAssignment out(num_vars());
    for (std::size_t i = 0; i < count && i < order_.size(); ++i)
        out.assign(order_[i], value(order_[i]));
    return out;
}

BigRational ExactProb::to_rational() const
{
    BigRational r(numerator, denominator);
    r.canonicalize();
    return r;
}

bool ExactProb::exceeds(const BigRational& threshold) const
{
    return BigInt(numerator * threshold.get_den()) > BigInt(threshold.get_num() * denominator);
}

Instance Instance::build(std::vector<int> domain_sizes, std::vector<Constraint> constraints)
{
    Instance inst;
    const int n = static_cast<int>(domain_sizes.size());
    for (int v = 0; v < n; ++v)
        if (domain_sizes[static_cast<std::size_t>(v)] < 2)
            throw std::invalid_argument("variable " + std::to_string(v) + " has domain size below 2");
    inst.domains_ = std::move(domain_sizes);
    inst.q_ = inst.domains_.empty() ? 2 : *std::max_element(inst.domains_.begin(), inst.domains_.end());

    int index = 0;
    for (auto& c : constraints) {
        const std::string label = "constraint " + std::to_string(index++);
        if (c.scope.empty())
            throw std::invalid_argument(label + " has an empty scope");
        std::set<int> seen;
        std::uint64_t size = 1;
        for (int v : c.scope) {
            if (v < 0 || v >= n)
                throw std::invalid_argument(label + " mentions out-of-range variable " + std::to_string(v));
            if (!seen.insert(v).second)
                throw std::invalid_argument(label + " repeats variable " + std::to_string(v));
            size *= static_cast<std::uint64_t>(inst.domains_[static_cast<std::size_t>(v)]);
            if (size > max_table_size)
                throw Error(ErrorKind::resource, label + " has more than 2^22 scope assignments");
        }

        Table table;
        table.radix.resize(c.scope.size());
        std::uint64_t r = 1;
        for (std::size_t i = 0; i < c.scope.size(); ++i) {
            table.radix[i] = r;
            r *= static_cast<std::uint64_t>(inst.domains_[static_cast<std::size_t>(c.scope[i])]);
        }
        table.bad.assign(size, 0);
        for (const auto& tuple : c.violating) {
            if (tuple.size() != c.scope.size())
                throw std::invalid_argument(label + " has a violating tuple of the wrong length");
            std::uint64_t code = 0;
            for (std::size_t i = 0; i < tuple.size(); ++i) {
                int a = tuple[i];
                if (a < 0 || a >= inst.domains_[static_cast<std::size_t>(c.scope[i])])
                    throw std::invalid_argument(label + " has an out-of-domain value " + std::to_string(a));
                code += static_cast<std::uint64_t>(a) * table.radix[i];
            }
            if (table.bad[code])
                throw std::invalid_argument(label + " repeats a violating tuple");
            table.bad[code] = 1;
        }
        if (c.violating.empty()) {
            inst.warnings_.push_back(label + " has no violating tuples and was dropped");
            continue;
        }
        if (c.violating.size() == size)
            throw Error(ErrorKind::unsat, label + " is violated by every assignment of its scope");
        inst.constraints_.push_back(std::move(c));
        inst.tables_.push_back(std::move(table));
    }

    inst.var_constraints_.assign(static_cast<std::size_t>(n), {});
    for (int c = 0; c < inst.num_constraints(); ++c)
        for (int v : inst.constraints_[static_cast<std::size_t>(c)].scope)
            inst.var_constraints_[static_cast<std::size_t>(v)].push_back(c);

    inst.k_ = 0;
    inst.delta_ = 0;
    inst.p_ = 0;
    std::vector<int> mark(inst.constraints_.size(), -1);
    for (int c = 0; c < inst.num_constraints(); ++c) {
        const auto& con = inst.constraints_[static_cast<std::size_t>(c)];
        inst.k_ = std::max(inst.k_, static_cast<int>(con.scope.size()));
        int degree = 0;
        for (int v : con.scope)
            for (int other : inst.var_constraints_[static_cast<std::size_t>(v)])
                if (other != c && mark[static_cast<std::size_t>(other)] != c) {
                    mark[static_cast<std::size_t>(other)] = c;
                    ++degree;
                }
        inst.delta_ = std::max(inst.delta_, degree);
        BigRational prob(static_cast<unsigned long>(con.violating.size()),
            static_cast<unsigned long>(inst.tables_[static_cast<std::size_t>(c)].bad.size()));
        prob.canonicalize();
        if (prob > inst.p_)
            inst.p_ = prob;
    }
    return inst;
}

bool Instance::violated(int c, std::span<const int> values) const
{
    const auto& con = constraints_[static_cast<std::size_t>(c)];
    const auto& table = tables_[static_cast<std::size_t>(c)];
    std::uint64_t code = 0;
    for (std::size_t i = 0; i < con.scope.size(); ++i)
        code += static_cast<std::uint64_t>(values[static_cast<std::size_t>(con.scope[i])]) * table.radix[i];
    return table.bad[code] != 0;
}

bool Instance::any_violated(std::span<const int> values) const
{
    for (int c = 0; c < num_constraints(); ++c) {
        bool complete = true;
        for (int v : constraints_[static_cast<std::size_t>(c)].scope)
            if (values[static_cast<std::size_t>(v)] < 0) {
                complete = false;
                break;
            }
        if (complete && violated(c, values))
            return true;
    }
    return false;
}

bool Instance::satisfies(std::span<const int> values) const
{
    if (static_cast<int>(values.size()) != num_vars())
        return false;
    for (int v = 0; v < num_vars(); ++v)
        if (values[static_cast<std::size_t>(v)] < 0 || values[static_cast<std::size_t>(v)] >= domain(v))
            return false;
    for (int c = 0; c < num_constraints(); ++c)
        if (violated(c, values))
            return false;
    return true;
}

ExactProb cond_violation_prob(const Instance& inst, int c, const PartialAssignment& x)
{
    const auto& con = inst.constraint(c);
    ExactProb out;
    unsigned long consistent = 0;
    for (const auto& tuple : con.violating) {
        bool ok = true;
        for (std::size_t i = 0; i < tuple.size(); ++i) {
            int v = con.scope[i];
            if (x.assigned(v) && x.value(v) != tuple[i]) {
                ok = false;
                break;
            }
        }
        if (ok)
            ++consistent;
    }
    out.numerator = consistent;
    out.denominator = 1;
    for (int v : con.scope)
        if (!x.assigned(v))
            out.denominator *= inst.domain(v);
    return out;
}

int Params::decay_exponent() const
{
    const int d = delta_eff();
    return L / (k * d * d);
}

int Params::tree_size_refined() const { return std::max(1, decay_exponent()); }

BigRational compute_eta(const BigRational& p_tree, int q, int delta)
{
    BigRational base = BigRational(1) - 3 * p_tree * q;
    if (base <= 0)
        throw std::domain_error("eta is infinite");
    BigRational out = BigRational(1) / pow_rational(base, delta) - 1;
    out.canonicalize();
    return out;
}

Params derive_params(const Instance& inst, const ParamOptions& options)
{
    Params params;
    params.q = inst.q();
    params.k = std::max(1, inst.k());
    params.delta = inst.delta();
    params.p = inst.p();
    params.epsilon = options.epsilon;
    params.purpose = options.purpose;
    if (!(options.epsilon > 0 && options.epsilon < 1))
        throw std::invalid_argument("epsilon must lie in (0, 1)");

    const int d = params.delta_eff();
    BigRational p_default = BigRational(1) / (int_pow(params.q, 2) * params.k * int_pow(d, 4) * 1000);
    p_default.canonicalize();
    params.p_tree = options.p_freeze.value_or(p_default);
    params.p_guide = options.p_freeze.value_or(p_default);
    if (options.p_guide)
        params.p_guide = *options.p_guide;
    if (params.p_tree <= 0 || params.p_guide <= 0)
        throw std::invalid_argument("freezing thresholds must be positive");

    const double n = std::max(1, inst.num_vars());
    const double dn = d * n;
    double L_real = 0;
    switch (options.purpose) {
    case Purpose::count: L_real = 80.0 * params.k * d * d * std::log(dn); break;
    case Purpose::sample: L_real = 80.0 * params.k * d * d * std::log(dn / options.epsilon); break;
    case Purpose::simple: L_real = 10.0 * d * std::log(dn); break;
    }
    params.L_default = std::max(2, static_cast<int>(std::ceil(L_real)));
    params.L = params.L_default;
    if (options.L) {
        if (*options.L < 2)
            throw std::invalid_argument("L must be at least 2");
        params.L = *options.L;
        params.L_overridden = true;
        params.warnings.push_back("L overridden to " + std::to_string(params.L) + " (default "
            + std::to_string(params.L_default) + "); error certificates use the given L");
    }

    if (BigRational(1) - 3 * params.p_tree * params.q > 0)
        params.eta = compute_eta(params.p_tree, params.q, params.delta);
    else
        params.warnings.push_back("3 p'' q >= 1: eta is infinite and the coupling-error rows are vacuous");
    return params;
}

const ConditionCheck* ConditionReport::find(const std::string& name) const
{
    for (const auto& c : checks)
        if (c.name == name)
            return &c;
    return nullptr;
}

bool ConditionReport::holds(const std::string& name) const
{
    const auto* c = find(name);
    return c && c->holds;
}

namespace {

// lhs <= 1 / (coefficient * delta^power * extra); an infinite right side when delta = 0.
ConditionCheck inverse_bound(std::string name, std::string statement, const BigRational& lhs,
    const BigRational& coefficient, int delta, int power)
{
    ConditionCheck check;
    check.name = std::move(name);
    check.statement = std::move(statement);
    check.lhs = lhs.get_str();
    if (delta == 0) {
        check.rhs = "inf";
        check.holds = true;
        return check;
    }
    BigRational rhs = BigRational(1) / (coefficient * int_pow(delta, power));
    rhs.canonicalize();
    check.rhs = rhs.get_str();
    check.holds = lhs <= rhs;
    return check;
}

} // namespace

ConditionReport check_conditions(const Instance& inst, const Params& params)
{
    ConditionReport report;
    const int q = params.q;
    const int k = params.k;
    const int delta = params.delta;
    const BigRational& p = params.p;
    const BigRational& p1 = params.p_guide;
    const BigRational& p2 = params.p_tree;
    // Upper bound on e, so a reported "holds" is always sound.
    const BigRational e_hi("2718281828459046/1000000000000000");

    {
        ConditionCheck c;
        c.name = "lll_symmetric";
        c.statement = "e p (Delta + 1) <= 1";
        BigRational lhs = e_hi * p * (delta + 1);
        c.lhs = to_decimal(lhs);
        c.rhs = "1";
        c.holds = lhs <= 1;
        report.checks.push_back(c);
    }
    report.checks.push_back(inverse_bound("marginal_p_tree", "p'' <= 1/(100 q^2 k Delta^4)", p2,
        BigRational(100 * q * q * k), delta, 4));
    report.checks.push_back(inverse_bound("marginal_p_guide", "p'/p'' <= 1/(100 Delta^3 q)", p1 / p2,
        BigRational(100 * q), delta, 3));
    {
        ConditionCheck c = inverse_bound("refined_p_freeze", "p' = p'' <= 1/(1000 q^2 k Delta^4)", p2,
            BigRational(1000 * q * q * k), delta, 4);
        c.holds = c.holds && p1 == p2;
        report.checks.push_back(c);
    }
    report.checks.push_back(
        inverse_bound("refined_p", "p/p'' <= 1/(1000 Delta^3)", p / p2, BigRational(1000), delta, 3));
    report.checks.push_back(inverse_bound("subroutine_p_guide", "p' <= 1/(10000 q^3 k Delta^7)", p1,
        BigRational(10000 * q * q * q * k), delta, 7));
    report.checks.push_back(
        inverse_bound("simple_guide_p", "p/p' <= 1/(10 Delta^3)", p / p1, BigRational(10), delta, 3));
    {
        ConditionCheck c;
        c.name = "L_lower";
        c.statement = "L >= 8 k Delta^2";
        c.lhs = std::to_string(params.L);
        c.rhs = std::to_string(8 * k * delta * delta);
        c.holds = params.L >= 8 * k * delta * delta;
        report.checks.push_back(c);
    }
    {
        ConditionCheck c;
        c.name = "coupling_tv";
        c.statement = "e p'' q Delta <= 1";
        BigRational lhs = e_hi * p2 * q * delta;
        c.lhs = to_decimal(lhs);
        c.rhs = "1";
        c.holds = lhs <= 1;
        report.checks.push_back(c);
    }
    {
        ConditionCheck c;
        c.name = "eta_small";
        c.statement = "eta <= 1/(2q)";
        c.rhs = BigRational(1, 2 * q).get_str();
        if (params.eta) {
            c.lhs = params.eta->get_str();
            c.holds = *params.eta <= BigRational(1, 2 * q);
        } else {
            c.lhs = "inf";
            c.holds = false;
        }
        report.checks.push_back(c);
    }
    report.headline_value = int_pow(q, 3) * k * p * int_pow(delta, 7);
    (void)inst;
    return report;
}

BigRational parse_rational(const std::string& text)
{
    auto fail = [&] { return std::invalid_argument("not a rational number: '" + text + "'"); };
    if (text.empty())
        throw fail();
    auto slash = text.find('/');
    if (slash != std::string::npos) {
        std::string num = text.substr(0, slash);
        std::string den = text.substr(slash + 1);
        auto digits = [](const std::string& s, bool allow_sign) {
            if (s.empty())
                return false;
            std::size_t i = (allow_sign && (s[0] == '-' || s[0] == '+')) ? 1 : 0;
            if (i == s.size())
                return false;
            for (; i < s.size(); ++i)
                if (!std::isdigit(static_cast<unsigned char>(s[i])))
                    return false;
            return true;
        };
        if (!digits(num, true) || !digits(den, false))
            throw fail();
        BigInt d(den);
        if (d == 0)
            throw fail();
        BigRational r(BigInt(num[0] == '+' ? num.substr(1) : num), d);
        r.canonicalize();
        return r;
    }

    std::size_t i = 0;
    bool negative = false;
    if (text[i] == '+' || text[i] == '-') {
        negative = text[i] == '-';
        ++i;
    }
    std::string mantissa;
    int scale = 0;
    bool dot = false;
    bool any = false;
    for (; i < text.size(); ++i) {
        char ch = text[i];
        if (std::isdigit(static_cast<unsigned char>(ch))) {
            mantissa += ch;
            any = true;
            if (dot)
                ++scale;
        } else if (ch == '.' && !dot) {
            dot = true;
        } else {
            break;
        }
    }
    if (!any)
        throw fail();
    long exponent = 0;
    if (i < text.size()) {
        if (text[i] != 'e' && text[i] != 'E')
            throw fail();
        ++i;
        bool eneg = false;
        if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
            eneg = text[i] == '-';
            ++i;
        }
        if (i == text.size())
            throw fail();
        for (; i < text.size(); ++i) {
            if (!std::isdigit(static_cast<unsigned char>(text[i])))
                throw fail();
            exponent = exponent * 10 + (text[i] - '0');
            if (exponent > 10000)
                throw fail();
        }
        if (eneg)
            exponent = -exponent;
    }
    exponent -= scale;
    BigInt num(mantissa);
    BigInt ten_pow;
    mpz_ui_pow_ui(ten_pow.get_mpz_t(), 10, static_cast<unsigned long>(exponent < 0 ? -exponent : exponent));
    BigRational r = exponent >= 0 ? BigRational(num * ten_pow) : BigRational(num, ten_pow);
    r.canonicalize();
    return negative ? BigRational(-r) : r;
}

std::string to_decimal(const BigRational& value, int digits)
{
    BigInt scale;
    mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(digits));
    BigRational scaled = abs(value) * scale + BigRational(1, 2);
    BigInt rounded = scaled.get_num() / scaled.get_den();
    BigInt whole = rounded / scale;
    BigInt frac = rounded % scale;
    std::string out = (value < 0 && rounded != 0) ? "-" : "";
    out += whole.get_str();
    if (digits > 0) {
        std::string f = frac.get_str();
        out += "." + std::string(static_cast<std::size_t>(digits) - f.size(), '0') + f;
    }
    return out;
}

namespace {

// Shared enumerator: constraints are checked as soon as their last free
// variable is set. `visit` returns false to stop early.
template <typename Visit>
void enumerate_completions(const Instance& inst, const PartialAssignment& x, std::span<const int> free_vars,
    std::span<const int> constraints, std::uint64_t cap, Visit&& visit)
{
    const int n = inst.num_vars();
    std::vector<int> position(static_cast<std::size_t>(n), -1);
    double space = 1;
    for (std::size_t i = 0; i < free_vars.size(); ++i) {
        int v = free_vars[i];
        if (x.assigned(v))
            throw std::invalid_argument("free variable " + std::to_string(v) + " is assigned");
        position[static_cast<std::size_t>(v)] = static_cast<int>(i);
        space *= inst.domain(v);
        if (space > static_cast<double>(cap))
            throw Error(ErrorKind::resource,
                "enumeration over " + std::to_string(free_vars.size()) + " variables exceeds the cap of "
                    + std::to_string(cap) + " assignments");
    }

    std::vector<int> values(x.values().begin(), x.values().end());
    std::vector<std::vector<int>> trigger(free_vars.size());
    for (int c : constraints) {
        int last = -1;
        for (int v : inst.constraint(c).scope) {
            int pos = position[static_cast<std::size_t>(v)];
            if (pos < 0 && !x.assigned(v))
                throw std::invalid_argument("constraint scope leaves the enumerated region");
            last = std::max(last, pos);
        }
        if (last < 0) {
            if (inst.violated(c, values))
                return;
        } else {
            trigger[static_cast<std::size_t>(last)].push_back(c);
        }
    }

    const std::size_t depth_total = free_vars.size();
    if (depth_total == 0) {
        visit(values);
        return;
    }
    std::vector<int> next(depth_total, 0);
    std::size_t depth = 0;
    while (true) {
        int v = free_vars[depth];
        if (next[depth] >= inst.domain(v)) {
            values[static_cast<std::size_t>(v)] = -1;
            next[depth] = 0;
            if (depth == 0)
                return;
            --depth;
            continue;
        }
        values[static_cast<std::size_t>(v)] = next[depth]++;
        bool ok = true;
        for (int c : trigger[depth])
            if (inst.violated(c, values)) {
                ok = false;
                break;
            }
        if (!ok)
            continue;
        if (depth + 1 == depth_total) {
            if (!visit(values))
                return;
        } else {
            ++depth;
        }
    }
}

} // namespace

BigInt count_completions(const Instance& inst, const PartialAssignment& x, std::span<const int> free_vars,
    std::span<const int> constraints, std::uint64_t cap)
{
    std::uint64_t count = 0;
    enumerate_completions(inst, x, free_vars, constraints, cap, [&](const std::vector<int>&) {
        ++count;
        return true;
    });
    BigInt out;
    mpz_import(out.get_mpz_t(), 1, 1, sizeof(count), 0, 0, &count);
    return out;
}

std::vector<std::vector<int>> list_completions(const Instance& inst, const PartialAssignment& x,
    std::span<const int> free_vars, std::span<const int> constraints, std::uint64_t cap)
{
    std::vector<std::vector<int>> out;
    enumerate_completions(inst, x, free_vars, constraints, cap, [&](const std::vector<int>& values) {
        std::vector<int> row;
        row.reserve(free_vars.size());
        for (int v : free_vars)
            row.push_back(values[static_cast<std::size_t>(v)]);
        out.push_back(std::move(row));
        return true;
    });
    return out;
}

} // namespace lllcsp
