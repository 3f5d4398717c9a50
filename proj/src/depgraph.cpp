#include "lllcsp/depgraph.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>

namespace lllcsp {

LineGraph LineGraph::build(const Instance& inst)
{
    const int m = inst.num_constraints();
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(m));
    std::vector<int> mark(static_cast<std::size_t>(m), -1);
    for (int c = 0; c < m; ++c) {
        for (int v : inst.constraint(c).scope)
            for (int other : inst.constraints_of(v))
                if (other != c && mark[static_cast<std::size_t>(other)] != c) {
                    mark[static_cast<std::size_t>(other)] = c;
                    adj[static_cast<std::size_t>(c)].push_back(other);
                }
        std::sort(adj[static_cast<std::size_t>(c)].begin(), adj[static_cast<std::size_t>(c)].end());
    }
    LineGraph g;
    g.adj_ = std::move(adj);
    g.index();
    return g;
}

LineGraph LineGraph::from_adjacency(std::vector<std::vector<int>> adjacency)
{
    const int m = static_cast<int>(adjacency.size());
    for (int c = 0; c < m; ++c) {
        auto& row = adjacency[static_cast<std::size_t>(c)];
        std::sort(row.begin(), row.end());
        row.erase(std::unique(row.begin(), row.end()), row.end());
        for (int u : row) {
            if (u < 0 || u >= m || u == c)
                throw std::invalid_argument("adjacency entry out of range or a loop");
            const auto& back = adjacency[static_cast<std::size_t>(u)];
            if (std::find(back.begin(), back.end(), c) == back.end())
                throw std::invalid_argument("adjacency is not symmetric");
        }
    }
    LineGraph g;
    g.adj_ = std::move(adjacency);
    g.index();
    return g;
}

void LineGraph::index()
{
    const int m = size();
    ball_.assign(static_cast<std::size_t>(m), {});
    within2_.assign(static_cast<std::size_t>(m), {});
    ring23_.assign(static_cast<std::size_t>(m), {});
    max_degree_ = 0;
    std::vector<int> dist(static_cast<std::size_t>(m), -1);
    for (int c = 0; c < m; ++c) {
        max_degree_ = std::max(max_degree_, degree(c));
        std::vector<int> frontier{c};
        std::vector<int> seen{c};
        dist[static_cast<std::size_t>(c)] = 0;
        for (int d = 1; d <= 3; ++d) {
            std::vector<int> next;
            for (int u : frontier)
                for (int w : neighbors(u))
                    if (dist[static_cast<std::size_t>(w)] < 0) {
                        dist[static_cast<std::size_t>(w)] = d;
                        next.push_back(w);
                        seen.push_back(w);
                    }
            frontier = std::move(next);
        }
        auto& ball = ball_[static_cast<std::size_t>(c)];
        for (int u : seen) {
            int d = dist[static_cast<std::size_t>(u)];
            ball.emplace_back(u, d);
            if (d == 1 || d == 2)
                within2_[static_cast<std::size_t>(c)].push_back(u);
            if (d == 2 || d == 3)
                ring23_[static_cast<std::size_t>(c)].push_back(u);
            dist[static_cast<std::size_t>(u)] = -1;
        }
        std::sort(ball.begin(), ball.end());
        std::sort(within2_[static_cast<std::size_t>(c)].begin(), within2_[static_cast<std::size_t>(c)].end());
        std::sort(ring23_[static_cast<std::size_t>(c)].begin(), ring23_[static_cast<std::size_t>(c)].end());
    }
}

int LineGraph::distance(int a, int b) const
{
    const auto& ball = ball_[static_cast<std::size_t>(a)];
    auto it = std::lower_bound(ball.begin(), ball.end(), std::pair<int, int>{b, -1});
    if (it != ball.end() && it->first == b)
        return it->second;
    return far;
}

bool is_23_tree(const LineGraph& g, std::span<const int> members)
{
    if (members.empty())
        return false;
    const std::size_t t = members.size();
    for (std::size_t i = 0; i < t; ++i)
        for (std::size_t j = i + 1; j < t; ++j)
            if (members[i] == members[j] || g.distance(members[i], members[j]) < 2)
                return false;
    std::vector<char> reached(t, 0);
    std::vector<std::size_t> stack{0};
    reached[0] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
        std::size_t i = stack.back();
        stack.pop_back();
        for (std::size_t j = 0; j < t; ++j) {
            if (reached[j])
                continue;
            int d = g.distance(members[i], members[j]);
            if (d == 2 || d == 3) {
                reached[j] = 1;
                ++count;
                stack.push_back(j);
            }
        }
    }
    return count == t;
}

std::vector<Tree23> enumerate_23_trees(const LineGraph& g, int root, int t, std::size_t budget, bool root_is_min)
{
    if (t < 1)
        throw std::invalid_argument("tree size must be at least 1");
    std::set<Tree23> level{{root}};
    std::size_t explored = 1;
    for (int size = 1; size < t; ++size) {
        std::set<Tree23> next;
        for (const auto& tree : level) {
            std::set<int> candidates;
            for (int w : tree)
                for (int u : g.ring23(w))
                    if (!root_is_min || u > root)
                        candidates.insert(u);
            for (int u : candidates) {
                bool ok = true;
                for (int w : tree)
                    if (g.distance(u, w) < 2) {
                        ok = false;
                        break;
                    }
                if (!ok)
                    continue;
                Tree23 grown = tree;
                grown.insert(std::upper_bound(grown.begin(), grown.end(), u), u);
                if (next.insert(std::move(grown)).second && ++explored > budget)
                    throw Error(ErrorKind::resource,
                        "{2,3}-tree enumeration of size " + std::to_string(t) + " exceeds the budget of "
                            + std::to_string(budget) + " partial trees");
            }
        }
        level = std::move(next);
    }
    return {level.begin(), level.end()};
}

Tree23 extract_23_tree(const LineGraph& g, std::span<const int> b, int anchor)
{
    std::vector<int> members(b.begin(), b.end());
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
    if (!std::binary_search(members.begin(), members.end(), anchor))
        throw std::invalid_argument("anchor is not in the set");

    std::vector<char> reached(members.size(), 0);
    std::vector<std::size_t> stack{static_cast<std::size_t>(
        std::lower_bound(members.begin(), members.end(), anchor) - members.begin())};
    reached[stack.back()] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
        std::size_t i = stack.back();
        stack.pop_back();
        for (std::size_t j = 0; j < members.size(); ++j)
            if (!reached[j] && g.distance(members[i], members[j]) <= 2) {
                reached[j] = 1;
                ++count;
                stack.push_back(j);
            }
    }
    if (count != members.size())
        throw std::invalid_argument("set is not connected in the square graph");

    Tree23 tree{anchor};
    while (true) {
        int pick = -1;
        for (int u : members) {
            bool apart = true;
            bool near = false;
            for (int w : tree) {
                int d = g.distance(u, w);
                if (d < 2) {
                    apart = false;
                    break;
                }
                if (d <= 3)
                    near = true;
            }
            if (apart && near) {
                pick = u;
                break;
            }
        }
        if (pick < 0)
            break;
        tree.insert(std::upper_bound(tree.begin(), tree.end(), pick), pick);
    }
    return tree;
}

std::vector<Component> frozen_components(const Instance& inst, const LineGraph& g, std::span<const int> f)
{
    std::vector<int> members(f.begin(), f.end());
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());

    std::vector<std::size_t> parent(members.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t i) {
        while (parent[i] != i)
            i = parent[i] = parent[parent[i]];
        return i;
    };
    for (std::size_t i = 0; i < members.size(); ++i)
        for (int u : g.within2(members[i])) {
            auto it = std::lower_bound(members.begin(), members.end(), u);
            if (it != members.end() && *it == u) {
                std::size_t a = find(i);
                std::size_t b = find(static_cast<std::size_t>(it - members.begin()));
                if (a != b)
                    parent[std::max(a, b)] = std::min(a, b);
            }
        }

    std::vector<Component> out;
    std::vector<int> slot(members.size(), -1);
    for (std::size_t i = 0; i < members.size(); ++i) {
        std::size_t r = find(i);
        if (slot[r] < 0) {
            slot[r] = static_cast<int>(out.size());
            out.emplace_back();
        }
        out[static_cast<std::size_t>(slot[r])].constraints.push_back(members[i]);
    }
    for (auto& comp : out) {
        for (int c : comp.constraints)
            for (int v : inst.constraint(c).scope)
                comp.variables.push_back(v);
        std::sort(comp.variables.begin(), comp.variables.end());
        comp.variables.erase(std::unique(comp.variables.begin(), comp.variables.end()), comp.variables.end());
    }
    return out;
}

} // namespace lllcsp
