#include "lllcsp/cli.hpp"

#include <cmath>
#include <functional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "lllcsp/io.hpp"
#include "lllcsp/oracle.hpp"
#include "lllcsp/pipeline.hpp"

namespace lllcsp {

namespace {

using Json = nlohmann::json;

struct Options {
    std::string file;
    std::string format;
    double epsilon = 0.2;
    int L = 0;
    std::string p_freeze;
    std::string p_guide;
    std::uint64_t seed = 0;
    std::size_t samples = 1;
    std::string caps;
    int var = -1;
    bool json = false;
};

Caps parse_caps(const std::string& text)
{
    Caps caps;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (item.empty())
            continue;
        auto eq = item.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("--caps entry '" + item + "' is not key=value");
        const std::string key = item.substr(0, eq);
        std::uint64_t value = 0;
        try {
            std::size_t used = 0;
            value = std::stoull(item.substr(eq + 1), &used);
            if (used != item.size() - eq - 1)
                throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw std::invalid_argument("--caps value in '" + item + "' is not a nonnegative integer");
        }
        if (key == "oracle")
            caps.oracle_space = value;
        else if (key == "enum")
            caps.enumeration_space = value;
        else if (key == "nodes")
            caps.tree_nodes = value;
        else if (key == "lp")
            caps.lp_cells = value;
        else if (key == "resamples")
            caps.resamples = value;
        else if (key == "tree23")
            caps.tree23_budget = value;
        else
            throw std::invalid_argument("unknown --caps key '" + key + "'");
    }
    return caps;
}

Instance load(const Options& opt)
{
    std::optional<InstanceFormat> kind;
    if (!opt.format.empty()) {
        kind = parse_format_name(opt.format);
        if (!kind)
            throw std::invalid_argument("unknown --format '" + opt.format + "'");
    }
    return load_instance(opt.file, kind);
}

Params make_params(const Instance& inst, const Options& opt, Purpose purpose)
{
    ParamOptions po;
    po.epsilon = opt.epsilon;
    po.purpose = purpose;
    if (opt.L > 0)
        po.L = opt.L;
    if (!opt.p_freeze.empty())
        po.p_freeze = parse_rational(opt.p_freeze);
    if (!opt.p_guide.empty())
        po.p_guide = parse_rational(opt.p_guide);
    return derive_params(inst, po);
}

std::string rational_text(const BigRational& r)
{
    return r.get_str();
}

Json instance_json(const Instance& inst)
{
    return Json{{"variables", inst.num_vars()}, {"constraints", inst.num_constraints()}, {"q", inst.q()},
        {"k", inst.k()}, {"delta", inst.delta()}, {"p", rational_text(inst.p())}};
}

Json params_json(const Params& p)
{
    Json out{{"p_guide", rational_text(p.p_guide)}, {"p_tree", rational_text(p.p_tree)}, {"L", p.L},
        {"L_default", p.L_default}, {"L_overridden", p.L_overridden}, {"epsilon", p.epsilon},
        {"decay_exponent", p.decay_exponent()}};
    out["eta"] = p.eta ? Json(rational_text(*p.eta)) : Json(nullptr);
    return out;
}

Json regime_json(const ConditionReport& report)
{
    Json checks = Json::array();
    for (const auto& c : report.checks)
        checks.push_back(
            {{"name", c.name}, {"statement", c.statement}, {"holds", c.holds}, {"lhs", c.lhs}, {"rhs", c.rhs}});
    return Json{{"headline_value", to_decimal(report.headline_value)}, {"checks", checks}};
}

Json number(double x)
{
    return std::isfinite(x) ? Json(x) : Json("inf");
}

void print_regime(std::ostream& out, const ConditionReport& report)
{
    out << "regime (q^3 k p delta^7 = " << to_decimal(report.headline_value) << "):\n";
    for (const auto& c : report.checks)
        out << "  [" << (c.holds ? "ok" : "--") << "] " << c.name << ": " << c.statement << " (" << c.lhs
            << " vs " << c.rhs << ")\n";
}

void print_warnings(std::ostream& out, const std::vector<std::string>& warnings)
{
    for (const auto& w : warnings)
        out << "warning: " << w << '\n';
}

int cmd_count(const Options& opt, std::ostream& out)
{
    const Instance inst = load(opt);
    const Caps caps = parse_caps(opt.caps);
    const Params params = make_params(inst, opt, Purpose::count);
    const CountResult r = count_approx(inst, params, caps);

    if (opt.json) {
        Json steps = Json::array();
        for (const auto& s : r.steps) {
            const auto a = static_cast<std::size_t>(s.value);
            std::size_t nodes = 0;
            std::size_t bad = 0;
            for (std::size_t b = 0; b < s.marginal.ratios.size(); ++b)
                if (static_cast<int>(b) != s.marginal.anchor) {
                    nodes += s.marginal.ratios[b].tree_nodes;
                    bad += s.marginal.ratios[b].bad_leaves;
                }
            steps.push_back({{"var", s.var}, {"value", s.value}, {"event_holds", s.event_holds},
                {"marginal", rational_text(s.marginal.dist[a])}, {"mult_error", number(s.marginal.mult_error[a])},
                {"tree_nodes", nodes}, {"bad_leaves", bad}});
        }
        Json report{{"command", "count"}, {"instance", instance_json(inst)}, {"params", params_json(r.params)},
            {"estimate", rational_text(r.estimate)}, {"estimate_decimal", to_decimal(r.estimate, 6)},
            {"relative_error_bound", number(r.relative_error_bound)}, {"residual", r.residual.get_str()},
            {"guide", {{"stages", r.guide.stages()}, {"dangerous", r.guide.dangerous.size()},
                          {"frozen_vars", r.guide.frozen_vars.size()}}},
            {"steps", steps}, {"regime", regime_json(r.regime)}, {"warnings", r.warnings}};
        out << report.dump(2) << '\n';
        return 0;
    }
    out << "estimate: " << to_decimal(r.estimate, 6) << " (" << rational_text(r.estimate) << ")\n";
    out << "relative error bound: " << r.relative_error_bound << '\n';
    out << "guide: " << r.guide.stages() << " stages, " << r.guide.dangerous.size() << " dangerous constraints, "
        << r.guide.frozen_vars.size() << " frozen variables; residual count " << r.residual.get_str() << '\n';
    print_regime(out, r.regime);
    print_warnings(out, r.warnings);
    return 0;
}

int cmd_sample(const Options& opt, std::ostream& out)
{
    const Instance inst = load(opt);
    const Caps caps = parse_caps(opt.caps);
    const Params params = make_params(inst, opt, Purpose::sample);
    Sampler sampler(inst, params, caps);
    Json samples = Json::array();
    for (std::size_t i = 0; i < opt.samples; ++i) {
        const SampleResult s = sampler.sample(opt.seed + i);
        if (opt.json) {
            samples.push_back({{"seed", opt.seed + i}, {"assignment", s.assignment}, {"path", to_string(s.path)}});
            continue;
        }
        for (std::size_t v = 0; v < s.assignment.size(); ++v)
            out << (v ? " " : "") << s.assignment[v];
        out << "  # path " << to_string(s.path) << '\n';
    }
    if (opt.json) {
        Json report{{"command", "sample"}, {"instance", instance_json(inst)}, {"params", params_json(params)},
            {"samples", samples}, {"marginal_queries", sampler.marginal_queries()},
            {"worst_tv_bound", number(sampler.worst_tv_bound())}, {"component_bound", sampler.component_bound()},
            {"warnings", inst.warnings()}};
        out << report.dump(2) << '\n';
    } else {
        out << "marginal queries: " << sampler.marginal_queries() << ", worst TV bound per query: "
            << sampler.worst_tv_bound() << '\n';
        print_warnings(out, inst.warnings());
    }
    return 0;
}

int cmd_exact(const Options& opt, std::ostream& out)
{
    const Instance inst = load(opt);
    const Caps caps = parse_caps(opt.caps);
    const PartialAssignment empty(inst.num_vars());
    const BigInt count = brute_count(inst, empty, caps);
    std::vector<BigRational> marginal;
    if (opt.var >= 0) {
        if (opt.var >= inst.num_vars())
            throw std::invalid_argument("--var is out of range");
        marginal = brute_marginal(inst, empty, opt.var, caps);
    }
    if (opt.json) {
        Json report{{"command", "exact"}, {"instance", instance_json(inst)}, {"count", count.get_str()}};
        if (opt.var >= 0) {
            Json m = Json::array();
            for (const auto& x : marginal)
                m.push_back(rational_text(x));
            report["marginal"] = {{"var", opt.var}, {"distribution", m}};
        }
        out << report.dump(2) << '\n';
        return 0;
    }
    out << "count: " << count.get_str() << '\n';
    if (opt.var >= 0) {
        out << "marginal of variable " << opt.var << ':';
        for (const auto& x : marginal)
            out << ' ' << rational_text(x);
        out << '\n';
    }
    return 0;
}

struct CheckOutcome {
    std::string name;
    std::string status;  // pass, fail, skipped
    std::string detail;
};

CheckOutcome run_check(const std::string& name, const std::function<std::string()>& body)
{
    try {
        return {name, "pass", body()};
    } catch (const std::logic_error& e) {
        return {name, "fail", e.what()};
    } catch (const Error& e) {
        return {name, "skipped", std::string(to_string(e.kind())) + ": " + e.what()};
    }
}

[[noreturn]] void violated(const std::string& what)
{
    throw std::logic_error(what);
}

std::string check_stage_bound(const Instance& inst, const GuideResult& g, const BigRational& bound)
{
    for (std::size_t i = 0; i <= g.stages(); ++i) {
        const PartialAssignment x = g.prefix(i);
        for (int c = 0; c < inst.num_constraints(); ++c)
            if (cond_violation_prob(inst, c, x).exceeds(bound))
                violated("constraint " + std::to_string(c) + " exceeds p'q at stage " + std::to_string(i));
    }
    return std::to_string(g.stages() + 1) + " stages checked";
}

int cmd_verify(const Options& opt, std::ostream& out)
{
    const Instance inst = load(opt);
    const Caps caps = parse_caps(opt.caps);
    const Params params = make_params(inst, opt, Purpose::count);
    const BigRational stage_bound = params.p_guide * params.q;
    std::vector<CheckOutcome> checks;

    std::optional<GuideResult> guide;
    checks.push_back(run_check("guide_stage_probability", [&] {
        guide = derandomized_guide(inst, params, GuideMode::refined, caps, true);
        return check_stage_bound(inst, *guide, stage_bound);
    }));
    checks.push_back(run_check("potential_nonincreasing", [&] {
        if (!guide)
            throw Error(ErrorKind::regime, "no guide run");
        for (std::size_t i = 1; i < guide->potential_trace.size(); ++i)
            if (guide->potential_trace[i] > guide->potential_trace[i - 1])
                violated("potential increases at stage " + std::to_string(i));
        return std::to_string(guide->potential_trace.size()) + " values";
    }));
    checks.push_back(run_check("event_all_stages", [&] {
        if (!guide)
            throw Error(ErrorKind::regime, "no guide run");
        const LineGraph g = LineGraph::build(inst);
        const Potential refined = Potential::build(inst, g, params, GuideMode::refined, caps);
        for (std::size_t i = 0; i <= guide->stages(); ++i)
            if (!check_event_E(inst, guide->prefix(i), params, refined).holds)
                violated("event fails at stage " + std::to_string(i));
        return std::string("holds at every prefix");
    }));
    checks.push_back(run_check("randomized_guide_stage_probability", [&] {
        return check_stage_bound(inst, greedy_randomized(inst, params.p_guide, opt.seed), stage_bound);
    }));
    checks.push_back(run_check("count_within_bound", [&] {
        const BigInt exact = brute_count(inst, PartialAssignment(inst.num_vars()), caps);
        if (exact == 0)
            throw Error(ErrorKind::unsat, "instance is unsatisfiable");
        const CountResult r = count_approx(inst, params, caps);
        const double rel = std::abs(BigRational(r.estimate / exact - 1).get_d());
        if (rel > r.relative_error_bound)
            violated("relative error " + std::to_string(rel) + " exceeds bound "
                     + std::to_string(r.relative_error_bound));
        return "relative error " + std::to_string(rel) + " within " + std::to_string(r.relative_error_bound);
    }));
    checks.push_back(run_check("coupling_point_feasible", [&] {
        int v = 0;
        while (v < inst.num_vars() && inst.constraints_of(v).empty())
            ++v;
        if (v == inst.num_vars())
            throw Error(ErrorKind::regime, "no constrained variable");
        const PartialAssignment empty(inst.num_vars());
        const TruncatedTree tree = build_tree(inst, empty, v, 1, 0, params.L, params.p_tree, caps);
        const CouplingDistribution cd = brute_coupling(inst, tree, caps);
        if (cd.sy[0] == 0)
            throw Error(ErrorKind::unsat, "ratio undefined");
        std::vector<std::optional<LeafRatio>> ratios(tree.nodes.size());
        for (std::size_t i = 0; i < tree.nodes.size(); ++i)
            if (tree.nodes[i].kind == NodeKind::good_leaf)
                ratios[i] = leaf_ratio(inst, tree.nodes[i], caps);
        BigRational r(cd.sx[0], cd.sy[0]);
        r.canonicalize();
        LPModel model = build_lp(tree, params.q, params.eta);
        add_ratio_rows(model, tree, ratios, r, r);
        const double violation = model.max_scaled_violation(cd.lp_point());
        if (violation > 1e-9)
            violated("scaled violation " + std::to_string(violation));
        return std::to_string(tree.nodes.size()) + " nodes, scaled violation " + std::to_string(violation);
    }));
    checks.push_back(run_check("moser_tardos_satisfies", [&] {
        if (!inst.satisfies(moser_tardos(inst, opt.seed, caps.resamples)))
            violated("returned assignment violates a constraint");
        return std::string("ok");
    }));

    bool failed = false;
    for (const auto& c : checks)
        failed = failed || c.status == "fail";
    if (opt.json) {
        Json list = Json::array();
        for (const auto& c : checks)
            list.push_back({{"name", c.name}, {"status", c.status}, {"detail", c.detail}});
        out << Json{{"command", "verify"}, {"instance", instance_json(inst)}, {"checks", list}, {"ok", !failed}}.dump(2)
            << '\n';
    } else {
        for (const auto& c : checks)
            out << c.status << ' ' << c.name << ": " << c.detail << '\n';
    }
    return failed ? exit_code(ErrorKind::internal) : 0;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Approximate counting and sampling of CSP solutions under local lemma conditions"};
    app.require_subcommand(1);
    Options opt;

    auto common = [&](CLI::App* sub, bool model_flags) {
        sub->add_option("file", opt.file, "instance file")->required();
        sub->add_option("--format", opt.format, "dimacs-cnf | hypergraph-coloring | generic-csp (default: detect)");
        sub->add_option("--caps", opt.caps, "resource caps, e.g. oracle=16777216,nodes=1000000,lp=20000000");
        sub->add_flag("--json", opt.json, "machine-readable report");
        if (!model_flags)
            return;
        sub->add_option("--epsilon", opt.epsilon, "target accuracy (default 0.2)");
        sub->add_option("--L", opt.L, "coupling tree depth override");
        sub->add_option("--p-freeze", opt.p_freeze, "freezing threshold used for both the guide and the trees");
        sub->add_option("--p-guide", opt.p_guide, "freezing threshold of the guide alone");
        sub->add_option("--seed", opt.seed, "random seed");
    };
    auto* count = app.add_subcommand("count", "deterministic approximate count");
    common(count, true);
    auto* sample = app.add_subcommand("sample", "near-uniform satisfying assignments");
    common(sample, true);
    sample->add_option("--samples", opt.samples, "number of samples (default 1)");
    auto* exact = app.add_subcommand("exact", "brute-force count and marginal");
    common(exact, false);
    exact->add_option("--var", opt.var, "also print the marginal of this variable");
    auto* verify = app.add_subcommand("verify", "run the invariant suite on an instance");
    common(verify, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return exit_code(ErrorKind::syntax);
    }

    auto report = [&](ErrorKind kind, const std::string& message) {
        if (opt.json)
            out << Json{{"error", {{"kind", to_string(kind)}, {"message", message}}}}.dump(2) << '\n';
        err << "error (" << to_string(kind) << "): " << message << '\n';
        return exit_code(kind);
    };
    try {
        if (*count)
            return cmd_count(opt, out);
        if (*sample)
            return cmd_sample(opt, out);
        if (*exact)
            return cmd_exact(opt, out);
        return cmd_verify(opt, out);
    } catch (const Error& e) {
        return report(e.kind(), e.what());
    } catch (const std::invalid_argument& e) {
        return report(ErrorKind::syntax, e.what());
    } catch (const std::exception& e) {
        return report(ErrorKind::internal, e.what());
    }
}

} // namespace lllcsp
