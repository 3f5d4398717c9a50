#include "lllcsp/marginal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace lllcsp {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

bool exceeds_either(const Instance& inst, int c, const PartialAssignment& x, const PartialAssignment& y,
    const BigRational& p_tree)
{
    return cond_violation_prob(inst, c, x).exceeds(p_tree) || cond_violation_prob(inst, c, y).exceeds(p_tree);
}

// Fills dangerous_vars, next_var and kind from x, y, disagree and frozen_cons.
void classify(const Instance& inst, CouplingNode& node, int limit, std::vector<char>& mark)
{
    node.dangerous_vars = node.disagree;
    for (int c : node.frozen_cons)
        for (int u : inst.constraint(c).scope)
            if (!node.x.assigned(u))
                node.dangerous_vars.push_back(u);
    std::sort(node.dangerous_vars.begin(), node.dangerous_vars.end());
    node.dangerous_vars.erase(
        std::unique(node.dangerous_vars.begin(), node.dangerous_vars.end()), node.dangerous_vars.end());

    for (int u : node.dangerous_vars)
        mark[static_cast<std::size_t>(u)] = 1;
    std::vector<int> touching;
    for (int u : node.dangerous_vars)
        for (int c : inst.constraints_of(u))
            touching.push_back(c);
    std::sort(touching.begin(), touching.end());
    touching.erase(std::unique(touching.begin(), touching.end()), touching.end());

    node.next_var = -1;
    for (int c : touching) {
        int best = -1;
        for (int u : inst.constraint(c).scope)
            if (!mark[static_cast<std::size_t>(u)] && !node.x.assigned(u) && (best < 0 || u < best))
                best = u;
        if (best >= 0) {
            node.next_var = best;
            break;
        }
    }
    for (int u : node.dangerous_vars)
        mark[static_cast<std::size_t>(u)] = 0;

    const auto size = static_cast<int>(node.set_size());
    if (size >= limit)
        node.kind = NodeKind::bad_leaf;
    else if (node.next_var < 0)
        node.kind = NodeKind::good_leaf;
    else
        node.kind = NodeKind::internal;
    if (node.kind != NodeKind::internal)
        node.next_var = -1;
}

BigRational as_rational(double value) { return BigRational(value); }

double round_up(const BigRational& value)
{
    double d = value.get_d();
    if (BigRational(d) < value)
        d = std::nextafter(d, inf);
    return d;
}

} // namespace

TruncatedTree build_tree(const Instance& inst, const PartialAssignment& prefix, int v, int a, int b, int L,
    const BigRational& p_tree, const Caps& caps)
{
    if (v < 0 || v >= inst.num_vars() || prefix.assigned(v))
        throw std::invalid_argument("tree variable must be unassigned in the prefix");
    if (a == b || a < 0 || b < 0 || a >= inst.domain(v) || b >= inst.domain(v))
        throw std::invalid_argument("tree values must be distinct and in the domain");
    if (L < 2)
        throw std::invalid_argument("L must be at least 2");

    TruncatedTree tree;
    tree.var = v;
    tree.x_value = a;
    tree.y_value = b;
    tree.ell = static_cast<int>(prefix.size()) + 1;
    tree.L = L;
    const int limit = L + tree.ell;
    std::vector<char> mark(static_cast<std::size_t>(inst.num_vars()), 0);

    CouplingNode root;
    root.x = prefix.extend(v, a);
    root.y = prefix.extend(v, b);
    root.disagree = {v};
    for (int c = 0; c < inst.num_constraints(); ++c)
        if (exceeds_either(inst, c, root.x, root.y, p_tree))
            root.frozen_cons.push_back(c);
    classify(inst, root, limit, mark);
    tree.nodes.push_back(std::move(root));

    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        if (tree.nodes[i].kind != NodeKind::internal)
            continue;
        const int w = tree.nodes[i].next_var;
        const int d = inst.domain(w);
        if (tree.nodes.size() + static_cast<std::size_t>(d * d) > caps.tree_nodes)
            throw Error(ErrorKind::resource, "coupling tree for L = " + std::to_string(L) + " exceeds the cap of "
                    + std::to_string(caps.tree_nodes) + " nodes");
        std::vector<int> children;
        for (int xa = 0; xa < d; ++xa)
            for (int ya = 0; ya < d; ++ya) {
                const CouplingNode& parent = tree.nodes[i];
                CouplingNode child;
                child.x = parent.x.extend(w, xa);
                child.y = parent.y.extend(w, ya);
                child.disagree = parent.disagree;
                if (xa != ya)
                    child.disagree.insert(std::upper_bound(child.disagree.begin(), child.disagree.end(), w), w);
                child.frozen_cons = parent.frozen_cons;
                for (int c : inst.constraints_of(w))
                    if (!std::binary_search(parent.frozen_cons.begin(), parent.frozen_cons.end(), c)
                        && exceeds_either(inst, c, child.x, child.y, p_tree))
                        child.frozen_cons.insert(
                            std::upper_bound(child.frozen_cons.begin(), child.frozen_cons.end(), c), c);
                child.parent = static_cast<int>(i);
                child.depth = parent.depth + 1;
                classify(inst, child, limit, mark);
                children.push_back(static_cast<int>(tree.nodes.size()));
                tree.nodes.push_back(std::move(child));
            }
        tree.nodes[i].children = std::move(children);
    }
    for (const auto& node : tree.nodes) {
        if (node.kind == NodeKind::good_leaf)
            ++tree.good_leaves;
        else if (node.kind == NodeKind::bad_leaf)
            ++tree.bad_leaves;
    }
    return tree;
}

LeafRatio leaf_ratio(const Instance& inst, const CouplingNode& leaf, const Caps& caps)
{
    const int n = inst.num_vars();
    std::vector<char> in_vd(static_cast<std::size_t>(n), 0);
    for (int u : leaf.dangerous_vars)
        in_vd[static_cast<std::size_t>(u)] = 1;

    std::vector<int> relevant;
    for (int u : leaf.dangerous_vars)
        for (int c : inst.constraints_of(u))
            relevant.push_back(c);
    std::sort(relevant.begin(), relevant.end());
    relevant.erase(std::unique(relevant.begin(), relevant.end()), relevant.end());

    // Union-find over unassigned dangerous variables, joined through relevant constraints.
    std::vector<int> parent(static_cast<std::size_t>(n));
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int u) {
        while (parent[static_cast<std::size_t>(u)] != u)
            u = parent[static_cast<std::size_t>(u)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(u)])];
        return u;
    };

    LeafRatio out;
    bool x_dead = false;
    bool y_dead = false;
    bool shared_dead = false;
    std::vector<int> anchor_of(relevant.size(), -1);
    for (std::size_t i = 0; i < relevant.size(); ++i) {
        int c = relevant[i];
        int first = -1;
        for (int u : inst.constraint(c).scope) {
            if (leaf.x.assigned(u))
                continue;
            if (!in_vd[static_cast<std::size_t>(u)])
                throw std::invalid_argument("leaf_ratio needs a true leaf of the coupling tree");
            if (first < 0)
                first = u;
            else
                parent[static_cast<std::size_t>(find(u))] = find(first);
        }
        anchor_of[i] = first;
        if (first < 0) {
            bool vx = inst.violated(c, leaf.x.values());
            bool vy = inst.violated(c, leaf.y.values());
            x_dead = x_dead || vx;
            y_dead = y_dead || vy;
        }
    }

    struct Group {
        std::vector<int> vars;
        std::vector<int> cons;
    };
    std::vector<int> group_of(static_cast<std::size_t>(n), -1);
    std::vector<Group> groups;
    for (int u : leaf.dangerous_vars) {
        if (leaf.x.assigned(u))
            continue;
        int r = find(u);
        if (group_of[static_cast<std::size_t>(r)] < 0) {
            group_of[static_cast<std::size_t>(r)] = static_cast<int>(groups.size());
            groups.emplace_back();
        }
        groups[static_cast<std::size_t>(group_of[static_cast<std::size_t>(r)])].vars.push_back(u);
    }
    for (std::size_t i = 0; i < relevant.size(); ++i)
        if (anchor_of[i] >= 0)
            groups[static_cast<std::size_t>(group_of[static_cast<std::size_t>(find(anchor_of[i]))])].cons.push_back(
                relevant[i]);

    for (const auto& group : groups) {
        bool agree = true;
        for (int c : group.cons)
            for (int u : inst.constraint(c).scope)
                if (leaf.x.assigned(u) && leaf.x.value(u) != leaf.y.value(u))
                    agree = false;
        BigInt cx = count_completions(inst, leaf.x, group.vars, group.cons, caps.enumeration_space);
        if (agree) {
            if (cx == 0)
                shared_dead = true;
            continue;
        }
        BigInt cy = count_completions(inst, leaf.y, group.vars, group.cons, caps.enumeration_space);
        out.nx *= cx;
        out.ny *= cy;
    }
    if (x_dead || shared_dead)
        out.nx = 0;
    if (y_dead || shared_dead)
        out.ny = 0;
    if (out.ny == 0)
        out.kind = out.nx == 0 ? RatioKind::undefined : RatioKind::infinite;
    return out;
}

LPModel build_lp(const TruncatedTree& tree, int q, const std::optional<BigRational>& eta)
{
    LPModel model;
    model.num_vars = static_cast<int>(2 * tree.nodes.size());
    auto px = [](std::size_t i) { return static_cast<int>(2 * i); };
    auto py = [](std::size_t i) { return static_cast<int>(2 * i + 1); };
    model.rows.push_back({{{px(0), BigRational(1)}}, true, BigRational(1), "root x"});
    model.rows.push_back({{{py(0), BigRational(1)}}, true, BigRational(1), "root y"});

    std::optional<BigRational> coupling;
    if (eta && 4 * q * *eta < 1)
        coupling = 4 * q * *eta;

    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        const auto& node = tree.nodes[i];
        if (node.kind != NodeKind::internal)
            continue;
        const int d = static_cast<int>(std::lround(std::sqrt(static_cast<double>(node.children.size()))));
        auto child = [&](int a, int b) {
            return static_cast<std::size_t>(node.children[static_cast<std::size_t>(a * d + b)]);
        };
        const std::string at = " node " + std::to_string(i) + " value ";
        for (int a = 0; a < d; ++a) {
            LPRow fx{{{px(i), BigRational(1)}}, true, BigRational(0), "flow x" + at + std::to_string(a)};
            LPRow fy{{{py(i), BigRational(1)}}, true, BigRational(0), "flow y" + at + std::to_string(a)};
            for (int b = 0; b < d; ++b) {
                fx.terms.emplace_back(px(child(a, b)), BigRational(-1));
                fy.terms.emplace_back(py(child(b, a)), BigRational(-1));
            }
            model.rows.push_back(std::move(fx));
            model.rows.push_back(std::move(fy));
            if (coupling) {
                LPRow cx{{{px(i), BigRational(-*coupling)}}, false, BigRational(0), "coupling x" + at + std::to_string(a)};
                LPRow cy{{{py(i), BigRational(-*coupling)}}, false, BigRational(0), "coupling y" + at + std::to_string(a)};
                for (int b = 0; b < d; ++b) {
                    if (b == a)
                        continue;
                    cx.terms.emplace_back(px(child(a, b)), BigRational(1));
                    cy.terms.emplace_back(py(child(b, a)), BigRational(1));
                }
                model.rows.push_back(std::move(cx));
                model.rows.push_back(std::move(cy));
            }
        }
    }
    return model;
}

void add_ratio_rows(LPModel& model, const TruncatedTree& tree, const std::vector<std::optional<LeafRatio>>& ratios,
    const BigRational& r_lo, const std::optional<BigRational>& r_hi)
{
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        if (tree.nodes[i].kind != NodeKind::good_leaf || !ratios[i])
            continue;
        const LeafRatio& lr = *ratios[i];
        if (lr.kind == RatioKind::undefined)
            continue;
        const int px = static_cast<int>(2 * i);
        const int py = static_cast<int>(2 * i + 1);
        const std::string at = " leaf " + std::to_string(i);
        if (r_lo > 0) {
            LPRow row{{}, false, BigRational(0), "ratio lower" + at};
            if (lr.ny != 0)
                row.terms.emplace_back(py, BigRational(r_lo * lr.ny));
            row.terms.emplace_back(px, BigRational(-lr.nx));
            model.rows.push_back(std::move(row));
        }
        if (r_hi) {
            LPRow row{{}, false, BigRational(0), "ratio upper" + at};
            if (lr.nx != 0)
                row.terms.emplace_back(px, BigRational(lr.nx));
            if (lr.ny != 0)
                row.terms.emplace_back(py, BigRational(-*r_hi * lr.ny));
            if (!row.terms.empty())
                model.rows.push_back(std::move(row));
        }
    }
}

LPStatus lp_feasible(const TruncatedTree& tree, const std::vector<std::optional<LeafRatio>>& ratios,
    const BigRational& r_lo, const std::optional<BigRational>& r_hi, int q, const std::optional<BigRational>& eta,
    const LPOptions& options)
{
    if (tree.nodes.size() == 1 && tree.root().kind == NodeKind::good_leaf) {
        const LeafRatio& lr = *ratios[0];
        if (lr.kind == RatioKind::undefined)
            return LPStatus::feasible;
        bool ok = r_lo * lr.ny <= lr.nx;
        if (r_hi)
            ok = ok && lr.nx <= *r_hi * lr.ny;
        return ok ? LPStatus::feasible : LPStatus::infeasible;
    }
    LPModel model = build_lp(tree, q, eta);
    add_ratio_rows(model, tree, ratios, r_lo, r_hi);
    return solve_feasibility(model, options).status;
}

BigRational RatioInterval::lower_bound() const
{
    if (!(err < 1))
        return 0;
    return (1 - as_rational(err)) * as_rational(r_lo);
}

std::optional<BigRational> RatioInterval::upper_bound() const
{
    if (std::isinf(r_hi) || std::isinf(err))
        return std::nullopt;
    return (1 + as_rational(err)) * as_rational(r_hi);
}

double grid_step(const Params& params, int n)
{
    const double nn = std::max(1, n);
    if (params.purpose == Purpose::sample)
        return 1.0 + params.epsilon / (16.0 * nn * params.q);
    return 1.0 + params.epsilon / (8.0 * nn);
}

RatioInterval certify_ratio(const Instance& inst, const PartialAssignment& prefix, int v, int a, int b,
    const Params& params, const CertifyOptions& options)
{
    const TruncatedTree tree = build_tree(inst, prefix, v, b, a, params.L, params.p_tree, options.caps);
    std::vector<std::optional<LeafRatio>> ratios(tree.nodes.size());
    for (std::size_t i = 0; i < tree.nodes.size(); ++i)
        if (tree.nodes[i].kind == NodeKind::good_leaf)
            ratios[i] = leaf_ratio(inst, tree.nodes[i], options.caps);

    RatioInterval out;
    out.tree_nodes = tree.nodes.size();
    out.good_leaves = tree.good_leaves;
    out.bad_leaves = tree.bad_leaves;
    out.exact = tree.nodes.size() == 1;

    const int n = inst.num_vars();
    const double step = grid_step(params, n);
    const long J = static_cast<long>(std::ceil(std::max(1, n) * std::log(static_cast<double>(params.q)) / std::log(step)));
    const long top = 2 * J + 2;
    // Candidate i: 0 -> 0, 1..2J+1 -> step^(i-1-J), top -> infinity.
    auto value = [&](long i) -> double {
        if (i <= 0)
            return 0.0;
        if (i >= top)
            return inf;
        return std::pow(step, static_cast<double>(i - 1 - J));
    };
    auto feasible = [&](double lo, double hi) {
        ++out.lp_solves;
        std::optional<BigRational> hi_exact;
        if (!std::isinf(hi))
            hi_exact = as_rational(hi);
        LPStatus status = lp_feasible(tree, ratios, as_rational(lo), hi_exact, params.q, params.eta, options.lp);
        if (status == LPStatus::not_converged)
            throw Error(ErrorKind::resource, "linear program did not converge within its iteration cap");
        return status == LPStatus::feasible;
    };

    if (!feasible(0.0, inf))
        throw Error(ErrorKind::regime, "coupling linear program is infeasible for every ratio bracket; "
                                       "parameter conditions are badly violated or L is too small");
    long lo = 0;
    long hi = top;  // least feasible upper end lies in [lo, hi]
    while (lo < hi) {
        long mid = lo + (hi - lo) / 2;
        if (feasible(0.0, value(mid)))
            hi = mid;
        else
            lo = mid + 1;
    }
    out.r_hi = value(hi);

    lo = 0;  // greatest feasible lower end lies in [lo, hi]
    hi = top - 1;
    while (lo < hi) {
        long mid = lo + (hi - lo + 1) / 2;
        if (feasible(value(mid), inf))
            lo = mid;
        else
            hi = mid - 1;
    }
    out.r_lo = value(lo);

    const double slack = out.exact ? 0.0 : options.numeric_slack;
    if (tree.bad_leaves == 0) {
        out.err = slack;
    } else {
        const ConditionReport report = check_conditions(inst, params);
        const int j = params.decay_exponent();
        if (params.purpose == Purpose::simple) {
            bool ok = report.holds("marginal_p_tree") && report.holds("marginal_p_guide") && report.holds("L_lower");
            out.err = ok ? 4.0 * std::ldexp(1.0, -j) + slack : inf;
        } else {
            bool ok = report.holds("refined_p_freeze") && report.holds("refined_p") && report.holds("L_lower")
                && options.event_holds;
            const double n4 = std::pow(static_cast<double>(n), 4);
            out.err = ok ? 4.0 * n4 * std::ldexp(1.0, -j) + slack : inf;
        }
    }
    return out;
}

MarginalEstimate estimate_marginal(const Instance& inst, const PartialAssignment& prefix, int v,
    const Params& params, const CertifyOptions& options)
{
    const int d = inst.domain(v);
    MarginalEstimate est;
    bool found = false;
    for (int anchor = 0; anchor < d && !found; ++anchor) {
        std::vector<RatioInterval> ratios(static_cast<std::size_t>(d));
        bool finite = true;
        for (int b = 0; b < d && finite; ++b) {
            if (b == anchor)
                continue;
            ratios[static_cast<std::size_t>(b)] = certify_ratio(inst, prefix, v, anchor, b, params, options);
            if (!ratios[static_cast<std::size_t>(b)].upper_bound())
                finite = false;
        }
        if (finite) {
            est.anchor = anchor;
            est.ratios = std::move(ratios);
            found = true;
        }
    }
    if (!found)
        throw Error(ErrorKind::regime,
            "no value of variable " + std::to_string(v) + " has certified nonzero conditional mass");

    const auto a = static_cast<std::size_t>(est.anchor);
    std::vector<BigRational> rho(static_cast<std::size_t>(d), BigRational(0));
    rho[a] = 1;
    std::vector<BigRational> lo(static_cast<std::size_t>(d), BigRational(1));
    std::vector<BigRational> hi(static_cast<std::size_t>(d), BigRational(1));
    for (int b = 0; b < d; ++b) {
        if (b == est.anchor)
            continue;
        const auto& r = est.ratios[static_cast<std::size_t>(b)];
        rho[static_cast<std::size_t>(b)] = r.r_lo > 0 ? as_rational(std::sqrt(r.r_lo * r.r_hi)) : BigRational(0);
        if (r.r_lo == r.r_hi)
            rho[static_cast<std::size_t>(b)] = as_rational(r.r_lo);
        lo[static_cast<std::size_t>(b)] = r.lower_bound();
        hi[static_cast<std::size_t>(b)] = *r.upper_bound();
    }
    const BigRational sum_rho = std::accumulate(rho.begin(), rho.end(), BigRational(0));
    const BigRational sum_lo = std::accumulate(lo.begin(), lo.end(), BigRational(0));
    const BigRational sum_hi = std::accumulate(hi.begin(), hi.end(), BigRational(0));

    est.dist.assign(static_cast<std::size_t>(d), BigRational(0));
    est.lower.assign(static_cast<std::size_t>(d), BigRational(0));
    est.upper.assign(static_cast<std::size_t>(d), BigRational(0));
    est.mult_error.assign(static_cast<std::size_t>(d), 0.0);
    BigRational tv = 0;
    for (int b = 0; b < d; ++b) {
        const auto i = static_cast<std::size_t>(b);
        // True marginal is rho_b / sum rho with rho_anchor = 1; extremes put the other ratios at the opposite ends.
        est.dist[i] = rho[i] / sum_rho;
        if (i == a) {
            est.lower[i] = 1 / sum_hi;
            est.upper[i] = 1 / sum_lo;
        } else {
            est.lower[i] = lo[i] / (sum_hi - hi[i] + lo[i]);
            est.upper[i] = hi[i] / (sum_lo - lo[i] + hi[i]);
        }
        if (est.upper[i] > 1)
            est.upper[i] = 1;
        const BigRational& p = est.dist[i];
        if (p == 0)
            est.mult_error[i] = est.upper[i] == 0 ? 0.0 : inf;
        else if (est.lower[i] == 0)
            est.mult_error[i] = inf;
        else
            est.mult_error[i] = round_up(std::max(BigRational(p / est.lower[i]), BigRational(est.upper[i] / p)) - 1);
        tv += std::max(BigRational(p - est.lower[i]), BigRational(est.upper[i] - p));
    }
    est.tv_bound = round_up(tv / 2);
    return est;
}

} // namespace lllcsp
