#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <vector>

#include "lllcsp/csp.hpp"
#include "lllcsp/depgraph.hpp"

namespace lllcsp::testing {

struct InstanceShape {
    int n = 8;
    int q = 2;            ///< every domain has this size unless mixed_domains
    bool mixed_domains = false;
    int k_min = 2;
    int k_max = 3;
    int delta_max = 3;
    int constraints = 6;  ///< attempted; fewer when the degree bound blocks placements
    int max_violating = 1;
};

/// Random instance respecting the arity and dependency-degree bounds.
inline Instance random_instance(std::mt19937_64& rng, const InstanceShape& shape)
{
    std::vector<int> domains(static_cast<std::size_t>(shape.n), shape.q);
    if (shape.mixed_domains)
        for (auto& d : domains)
            d = std::uniform_int_distribution<int>(2, shape.q)(rng);

    std::vector<Constraint> cons;
    std::vector<std::set<int>> neighbors;
    std::vector<std::vector<int>> by_var(static_cast<std::size_t>(shape.n));
    for (int attempt = 0; attempt < shape.constraints * 20 && static_cast<int>(cons.size()) < shape.constraints;
         ++attempt) {
        const int k = std::uniform_int_distribution<int>(shape.k_min, std::min(shape.k_max, shape.n))(rng);
        std::vector<int> vars(static_cast<std::size_t>(shape.n));
        for (int v = 0; v < shape.n; ++v)
            vars[static_cast<std::size_t>(v)] = v;
        std::shuffle(vars.begin(), vars.end(), rng);
        vars.resize(static_cast<std::size_t>(k));
        std::sort(vars.begin(), vars.end());

        std::set<int> touching;
        for (int v : vars)
            for (int c : by_var[static_cast<std::size_t>(v)])
                touching.insert(c);
        if (static_cast<int>(touching.size()) > shape.delta_max)
            continue;
        bool ok = true;
        for (int c : touching)
            if (!neighbors[static_cast<std::size_t>(c)].count(static_cast<int>(cons.size()))
                && static_cast<int>(neighbors[static_cast<std::size_t>(c)].size()) + 1 > shape.delta_max)
                ok = false;
        if (!ok)
            continue;

        Constraint c;
        c.scope = vars;
        std::uint64_t space = 1;
        for (int v : vars)
            space *= static_cast<std::uint64_t>(domains[static_cast<std::size_t>(v)]);
        const int bad = std::uniform_int_distribution<int>(
            1, static_cast<int>(std::min<std::uint64_t>(static_cast<std::uint64_t>(shape.max_violating), space - 1)))(rng);
        std::set<std::vector<int>> tuples;
        while (static_cast<int>(tuples.size()) < bad) {
            std::vector<int> t;
            for (int v : vars)
                t.push_back(std::uniform_int_distribution<int>(0, domains[static_cast<std::size_t>(v)] - 1)(rng));
            tuples.insert(t);
        }
        c.violating.assign(tuples.begin(), tuples.end());

        const int id = static_cast<int>(cons.size());
        neighbors.emplace_back(touching);
        for (int other : touching)
            neighbors[static_cast<std::size_t>(other)].insert(id);
        for (int v : vars)
            by_var[static_cast<std::size_t>(v)].push_back(id);
        cons.push_back(std::move(c));
    }
    return Instance::build(std::move(domains), std::move(cons));
}

/// Random k-CNF (single violating tuple per clause).
inline Instance random_cnf(std::mt19937_64& rng, int n, int k, int delta_max, int clauses)
{
    InstanceShape s;
    s.n = n;
    s.q = 2;
    s.k_min = k;
    s.k_max = k;
    s.delta_max = delta_max;
    s.constraints = clauses;
    s.max_violating = 1;
    return random_instance(rng, s);
}

/// Random simple graph on `size` vertices with maximum degree at most `d`.
inline LineGraph random_graph(std::mt19937_64& rng, int size, int d, double density)
{
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(size));
    std::vector<std::pair<int, int>> pairs;
    for (int a = 0; a < size; ++a)
        for (int b = a + 1; b < size; ++b)
            pairs.emplace_back(a, b);
    std::shuffle(pairs.begin(), pairs.end(), rng);
    std::bernoulli_distribution keep(density);
    for (auto [a, b] : pairs) {
        auto& na = adj[static_cast<std::size_t>(a)];
        auto& nb = adj[static_cast<std::size_t>(b)];
        if (static_cast<int>(na.size()) >= d || static_cast<int>(nb.size()) >= d || !keep(rng))
            continue;
        na.push_back(b);
        nb.push_back(a);
    }
    for (auto& list : adj)
        std::sort(list.begin(), list.end());
    return LineGraph::from_adjacency(std::move(adj));
}

} // namespace lllcsp::testing
