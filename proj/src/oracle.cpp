#include "lllcsp/oracle.hpp"

#include <algorithm>
#include <random>

namespace lllcsp {

namespace {

class Enumerator {
public:
    Enumerator(const Instance& inst, const PartialAssignment& x, const Caps& caps)
        : inst_(inst), values_(x.values().begin(), x.values().end())
    {
        double space = 1;
        for (int v = 0; v < inst.num_vars(); ++v)
            if (!x.assigned(v)) {
                free_.push_back(v);
                space *= inst.domain(v);
                if (space > static_cast<double>(caps.oracle_space))
                    throw Error(ErrorKind::resource, "brute-force space exceeds the oracle cap of "
                            + std::to_string(caps.oracle_space) + " assignments");
            }
    }

    template <typename Visit>
    void run(Visit&& visit)
    {
        if (inst_.any_violated(values_))
            return;
        descend(0, visit);
    }

private:
    template <typename Visit>
    void descend(std::size_t depth, Visit& visit)
    {
        if (depth == free_.size()) {
            visit(values_);
            return;
        }
        const int v = free_[depth];
        for (int a = 0; a < inst_.domain(v); ++a) {
            values_[static_cast<std::size_t>(v)] = a;
            bool ok = true;
            for (int c : inst_.constraints_of(v)) {
                bool complete = true;
                for (int u : inst_.constraint(c).scope)
                    if (values_[static_cast<std::size_t>(u)] < 0) {
                        complete = false;
                        break;
                    }
                if (complete && inst_.violated(c, values_)) {
                    ok = false;
                    break;
                }
            }
            if (ok)
                descend(depth + 1, visit);
        }
        values_[static_cast<std::size_t>(v)] = -1;
    }

    const Instance& inst_;
    std::vector<int> values_;
    std::vector<int> free_;
};

} // namespace

BigInt brute_count(const Instance& inst, const PartialAssignment& x, const Caps& caps)
{
    unsigned long long count = 0;
    Enumerator(inst, x, caps).run([&](const std::vector<int>&) { ++count; });
    return BigInt(std::to_string(count));
}

std::vector<BigRational> brute_marginal(const Instance& inst, const PartialAssignment& x, int v, const Caps& caps)
{
    std::vector<BigInt> counts;
    BigInt total = 0;
    for (int a = 0; a < inst.domain(v); ++a) {
        counts.push_back(brute_count(inst, x.extend(v, a), caps));
        total += counts.back();
    }
    if (total == 0)
        throw Error(ErrorKind::unsat, "conditional marginal undefined: no satisfying extension");
    std::vector<BigRational> out;
    for (const auto& c : counts) {
        BigRational r(c, total);
        r.canonicalize();
        out.push_back(r);
    }
    return out;
}

std::vector<std::vector<int>> brute_solutions(const Instance& inst, const Caps& caps)
{
    std::vector<std::vector<int>> out;
    Enumerator(inst, PartialAssignment(inst.num_vars()), caps).run([&](const std::vector<int>& values) {
        out.push_back(values);
    });
    return out;
}

std::vector<int> brute_sample(const Instance& inst, std::uint64_t seed, const Caps& caps)
{
    auto all = brute_solutions(inst, caps);
    if (all.empty())
        throw Error(ErrorKind::unsat, "instance has no satisfying assignment");
    std::mt19937_64 rng(seed);
    return all[std::uniform_int_distribution<std::size_t>(0, all.size() - 1)(rng)];
}

std::vector<std::vector<BigRational>> maximal_coupling(
    const std::vector<BigRational>& mu, const std::vector<BigRational>& nu)
{
    const std::size_t d = mu.size();
    std::vector<std::vector<BigRational>> pi(d, std::vector<BigRational>(d, BigRational(0)));
    std::vector<BigRational> rest_mu(d);
    std::vector<BigRational> rest_nu(d);
    for (std::size_t a = 0; a < d; ++a) {
        pi[a][a] = std::min(mu[a], nu[a]);
        rest_mu[a] = mu[a] - pi[a][a];
        rest_nu[a] = nu[a] - pi[a][a];
    }
    std::size_t b = 0;
    for (std::size_t a = 0; a < d; ++a)
        while (rest_mu[a] > 0 && b < d) {
            if (rest_nu[b] == 0) {
                ++b;
                continue;
            }
            BigRational moved = std::min(rest_mu[a], rest_nu[b]);
            pi[a][b] += moved;
            rest_mu[a] -= moved;
            rest_nu[b] -= moved;
        }
    return pi;
}

std::vector<BigRational> CouplingDistribution::lp_point() const
{
    std::vector<BigRational> point;
    point.reserve(2 * px.size());
    for (std::size_t i = 0; i < px.size(); ++i) {
        point.push_back(px[i]);
        point.push_back(py[i]);
    }
    return point;
}

CouplingDistribution brute_coupling(const Instance& inst, const TruncatedTree& tree, const Caps& caps)
{
    const std::size_t size = tree.nodes.size();
    CouplingDistribution out;
    out.mu_cp.assign(size, BigRational(0));
    out.px.assign(size, BigRational(0));
    out.py.assign(size, BigRational(0));
    out.sx.resize(size);
    out.sy.resize(size);
    for (std::size_t i = 0; i < size; ++i) {
        out.sx[i] = brute_count(inst, tree.nodes[i].x, caps);
        out.sy[i] = brute_count(inst, tree.nodes[i].y, caps);
    }
    out.mu_cp[0] = 1;
    out.px[0] = 1;
    out.py[0] = 1;

    for (std::size_t i = 0; i < size; ++i) {
        const auto& node = tree.nodes[i];
        if (node.kind != NodeKind::internal)
            continue;
        const int w = node.next_var;
        const auto d = static_cast<std::size_t>(inst.domain(w));
        auto child = [&](std::size_t a, std::size_t b) { return static_cast<std::size_t>(node.children[a * d + b]); };

        if (out.sx[i] == 0 || out.sy[i] == 0) {
            for (std::size_t a = 0; a < d; ++a) {
                out.px[child(a, a)] = out.px[i];
                out.py[child(a, a)] = out.py[i];
            }
            continue;
        }
        std::vector<BigRational> mu(d);
        std::vector<BigRational> nu(d);
        for (std::size_t a = 0; a < d; ++a) {
            mu[a] = BigRational(out.sx[child(a, 0)], out.sx[i]);
            nu[a] = BigRational(out.sy[child(0, a)], out.sy[i]);
            mu[a].canonicalize();
            nu[a].canonicalize();
        }
        const auto pi = maximal_coupling(mu, nu);
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b < d; ++b) {
                const std::size_t c = child(a, b);
                out.mu_cp[c] = out.mu_cp[i] * pi[a][b];
                if (mu[a] > 0)
                    out.px[c] = out.px[i] * pi[a][b] / mu[a];
                else if (a == b)
                    out.px[c] = out.px[i];
                if (nu[b] > 0)
                    out.py[c] = out.py[i] * pi[a][b] / nu[b];
                else if (a == b)
                    out.py[c] = out.py[i];
            }
    }
    return out;
}

} // namespace lllcsp
