#include "lllcsp/pipeline.hpp"

#include "lllcsp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

namespace lllcsp {

namespace {

struct ResidualPart {
    std::vector<int> free_vars;
    std::vector<int> constraints;
};

// Unassigned variables of each dangerous component and every constraint touching them.
std::vector<ResidualPart> residual_parts(
    const Instance& inst, const LineGraph& g, const PartialAssignment& x, std::span<const int> dangerous)
{
    std::vector<ResidualPart> parts;
    for (const auto& comp : frozen_components(inst, g, dangerous)) {
        ResidualPart part;
        for (int v : comp.variables)
            if (!x.assigned(v))
                part.free_vars.push_back(v);
        std::set<int> cons(comp.constraints.begin(), comp.constraints.end());
        for (int v : part.free_vars)
            for (int c : inst.constraints_of(v))
                cons.insert(c);
        part.constraints.assign(cons.begin(), cons.end());
        parts.push_back(std::move(part));
    }
    return parts;
}

void check_space(const Instance& inst, const ResidualPart& part, std::uint64_t cap)
{
    double space = 1;
    for (int v : part.free_vars)
        space *= inst.domain(v);
    if (space > static_cast<double>(cap))
        throw Error(ErrorKind::resource, "residual component with " + std::to_string(part.free_vars.size())
                + " unassigned variables exceeds the enumeration cap of " + std::to_string(cap));
}

} // namespace

BigInt count_residual_exact(const Instance& inst, const GuideResult& guide, const Caps& caps)
{
    const PartialAssignment& x = guide.final;
    if (inst.any_violated(x.values()))
        return 0;
    const LineGraph g = LineGraph::build(inst);
    BigInt total = 1;
    for (const auto& part : residual_parts(inst, g, x, guide.dangerous)) {
        check_space(inst, part, caps.enumeration_space);
        total *= count_completions(inst, x, part.free_vars, part.constraints, caps.enumeration_space);
        if (total == 0)
            break;
    }
    return total;
}

CountResult count_approx(const Instance& inst, const Params& params, const Caps& caps)
{
    CountResult result;
    result.params = params;
    result.regime = check_conditions(inst, params);
    result.warnings = inst.warnings();
    result.warnings.insert(result.warnings.end(), params.warnings.begin(), params.warnings.end());

    result.guide = derandomized_guide(inst, params, GuideMode::refined, caps, true);
    result.warnings.insert(result.warnings.end(), result.guide.warnings.begin(), result.guide.warnings.end());
    result.residual = count_residual_exact(inst, result.guide, caps);
    if (result.residual == 0)
        throw Error(ErrorKind::regime, "the guiding assignment has no satisfying completion");

    const LineGraph g = LineGraph::build(inst);
    const Potential refined = Potential::build(inst, g, params, GuideMode::refined, caps);
    CertifyOptions options;
    options.caps = caps;
    options.lp.cell_cap = caps.lp_cells;

    BigRational product = 1;
    double growth = 1;
    for (std::size_t i = 0; i < result.guide.stages(); ++i) {
        StepMarginal step;
        step.var = result.guide.vars[i];
        step.value = result.guide.values[i];
        const PartialAssignment prefix = result.guide.prefix(i);
        step.event_holds = check_event_E(inst, prefix, params, refined).holds;
        options.event_holds = step.event_holds;
        step.marginal = estimate_marginal(inst, prefix, step.var, params, options);
        const BigRational& mu = step.marginal.dist[static_cast<std::size_t>(step.value)];
        if (mu == 0)
            throw Error(ErrorKind::internal, "estimated marginal of the guide's own value is zero at stage "
                    + std::to_string(i + 1));
        product *= mu;
        growth *= 1 + step.marginal.mult_error[static_cast<std::size_t>(step.value)];
        result.steps.push_back(std::move(step));
    }
    result.estimate = BigRational(result.residual) / product;
    result.relative_error_bound = growth - 1;
    if (result.relative_error_bound > 0)
        result.relative_error_bound = std::nextafter(result.relative_error_bound, std::numeric_limits<double>::infinity());
    return result;
}

std::vector<int> moser_tardos(
    const Instance& inst, std::uint64_t seed, std::uint64_t resample_cap, std::uint64_t* resamples)
{
    std::mt19937_64 rng(seed);
    const int n = inst.num_vars();
    std::vector<int> values(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v)
        values[static_cast<std::size_t>(v)] = std::uniform_int_distribution<int>(0, inst.domain(v) - 1)(rng);
    std::set<int> violated;
    for (int c = 0; c < inst.num_constraints(); ++c)
        if (inst.violated(c, values))
            violated.insert(c);
    std::uint64_t count = 0;
    while (!violated.empty()) {
        if (count >= resample_cap)
            throw Error(ErrorKind::regime,
                "Moser-Tardos exceeded its cap of " + std::to_string(resample_cap) + " resamples");
        ++count;
        const int c = *violated.begin();
        std::set<int> touched;
        for (int v : inst.constraint(c).scope) {
            values[static_cast<std::size_t>(v)] = std::uniform_int_distribution<int>(0, inst.domain(v) - 1)(rng);
            for (int other : inst.constraints_of(v))
                touched.insert(other);
        }
        for (int other : touched) {
            if (inst.violated(other, values))
                violated.insert(other);
            else
                violated.erase(other);
        }
    }
    if (resamples)
        *resamples = count;
    return values;
}

const char* to_string(SamplePath path)
{
    switch (path) {
    case SamplePath::normal: return "normal";
    case SamplePath::early_termination_event: return "early-termination-E";
    case SamplePath::early_termination_component: return "early-termination-component";
    }
    return "normal";
}

Sampler::Sampler(const Instance& inst, const Params& params, const Caps& caps)
    : inst_(inst), params_(params), caps_(caps), graph_(LineGraph::build(inst))
{
    potential_ = std::make_unique<Potential>(Potential::build(inst, graph_, params_, GuideMode::refined, caps_));
    const int d = params_.delta_eff();
    const double n = std::max(1, inst.num_vars());
    component_bound_ = static_cast<int>(std::ceil(80.0 * d * std::log(d * n)));

    try {
        moser_tardos(inst, 0x5eed, caps_.resamples);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::regime)
            throw;
        // Fall back to enumeration; an over-cap instance surfaces as a resource error.
        if (brute_count(inst, PartialAssignment(inst.num_vars()), caps_) > 0)
            return;
        throw Error(ErrorKind::unsat, "instance has no satisfying assignment");
    }
}

Sampler::~Sampler() = default;

std::vector<int> Sampler::fallback(std::uint64_t seed) const
{
    return moser_tardos(inst_, seed ^ 0x9e3779b97f4a7c15ULL, caps_.resamples);
}

SampleResult Sampler::sample(std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    const int n = inst_.num_vars();
    const int m = inst_.num_constraints();
    PartialAssignment x(n);
    std::vector<char> available(static_cast<std::size_t>(n), 1);
    std::vector<char> dangerous(static_cast<std::size_t>(m), 0);
    std::vector<int> dangerous_list;
    bool first = true;

    CertifyOptions options;
    options.caps = caps_;
    options.lp.cell_cap = caps_.lp_cells;
    options.event_holds = true;

    auto finish = [&](SamplePath path) {
        SampleResult out;
        out.assignment = fallback(seed);
        out.path = path;
        return out;
    };

    for (int v = 0; v < n; ++v) {
        std::vector<int> key(x.values().begin(), x.values().end());
        auto ev = event_cache_.find(key);
        if (ev == event_cache_.end())
            ev = event_cache_.emplace(key, check_event_E(inst_, x, params_, *potential_).holds).first;
        if (!ev->second)
            return finish(SamplePath::early_termination_event);
        if (!available[static_cast<std::size_t>(v)])
            continue;

        key.push_back(v);
        auto mc = marginal_cache_.find(key);
        if (mc == marginal_cache_.end()) {
            MarginalEstimate est = estimate_marginal(inst_, x, v, params_, options);
            ++marginal_queries_;
            worst_tv_bound_ = std::max(worst_tv_bound_, est.tv_bound);
            mc = marginal_cache_.emplace(key, std::move(est.dist)).first;
        }
        const auto& dist = mc->second;
        double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        int value = -1;
        double acc = 0;
        for (std::size_t a = 0; a < dist.size(); ++a) {
            double pa = dist[a].get_d();
            if (pa <= 0)
                continue;
            value = static_cast<int>(a);
            acc += pa;
            if (u < acc)
                break;
        }
        x.assign(v, value);
        available[static_cast<std::size_t>(v)] = 0;

        auto inspect = [&](int c) {
            if (dangerous[static_cast<std::size_t>(c)] || !cond_violation_prob(inst_, c, x).exceeds(params_.p_tree))
                return;
            dangerous[static_cast<std::size_t>(c)] = 1;
            dangerous_list.push_back(c);
            for (int u2 : inst_.constraint(c).scope)
                available[static_cast<std::size_t>(u2)] = 0;
        };
        if (first) {
            for (int c = 0; c < m; ++c)
                inspect(c);
            first = false;
        } else {
            for (int c : inst_.constraints_of(v))
                inspect(c);
        }
    }

    std::vector<int> values(x.values().begin(), x.values().end());
    const auto comps = frozen_components(inst_, graph_, dangerous_list);
    for (const auto& comp : comps)
        if (static_cast<int>(comp.constraints.size()) > component_bound_)
            return finish(SamplePath::early_termination_component);

    for (const auto& part : residual_parts(inst_, graph_, x, dangerous_list)) {
        if (part.free_vars.empty())
            continue;
        std::vector<int> key(part.free_vars.begin(), part.free_vars.end());
        key.push_back(-1);
        for (int c : part.constraints)
            for (int u : inst_.constraint(c).scope) {
                key.push_back(u);
                key.push_back(values[static_cast<std::size_t>(u)]);
            }
        auto cc = completion_cache_.find(key);
        if (cc == completion_cache_.end()) {
            check_space(inst_, part, caps_.enumeration_space);
            cc = completion_cache_
                     .emplace(key, list_completions(inst_, x, part.free_vars, part.constraints, caps_.enumeration_space))
                     .first;
        }
        const auto& options_list = cc->second;
        if (options_list.empty())
            return finish(SamplePath::early_termination_component);
        const auto& pick = options_list[std::uniform_int_distribution<std::size_t>(0, options_list.size() - 1)(rng)];
        for (std::size_t i = 0; i < part.free_vars.size(); ++i)
            values[static_cast<std::size_t>(part.free_vars[i])] = pick[i];
    }

    if (!inst_.satisfies(values))
        throw Error(ErrorKind::internal, "sampler produced an assignment violating a constraint");
    SampleResult out;
    out.assignment = std::move(values);
    return out;
}

SampleResult sample_approx(const Instance& inst, const Params& params, std::uint64_t seed, const Caps& caps)
{
    Sampler sampler(inst, params, caps);
    return sampler.sample(seed);
}

} // namespace lllcsp
