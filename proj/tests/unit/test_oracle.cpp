#include <cmath>
#include <map>
#include <random>

#include "catch_amalgamated.hpp"

#include "lllcsp/oracle.hpp"
#include "support/coupling_checks.hpp"
#include "support/generators.hpp"

using namespace lllcsp;

namespace {

Constraint clause(std::vector<int> scope)
{
    return Constraint{scope, {std::vector<int>(scope.size(), 0)}};
}

Instance two_overlapping_clauses()
{
    return Instance::build({2, 2, 2, 2, 2}, {clause({0, 1, 2}), clause({2, 3, 4})});
}

std::vector<std::optional<LeafRatio>> good_leaf_ratios(const Instance& inst, const TruncatedTree& tree)
{
    std::vector<std::optional<LeafRatio>> ratios(tree.nodes.size());
    for (std::size_t i = 0; i < tree.nodes.size(); ++i)
        if (tree.nodes[i].kind == NodeKind::good_leaf)
            ratios[i] = leaf_ratio(inst, tree.nodes[i]);
    return ratios;
}

} // namespace

TEST_CASE("brute counts of small instances")
{
    auto free = Instance::build({2, 2, 2}, {});
    CHECK(brute_count(free, PartialAssignment(3)) == 8);

    auto one = Instance::build({2, 2}, {clause({0, 1})});
    CHECK(brute_count(one, PartialAssignment(2)) == 3);
    CHECK(brute_count(one, PartialAssignment(2).extend(0, 0)) == 1);

    CHECK(brute_count(two_overlapping_clauses(), PartialAssignment(5)) == 25);
}

TEST_CASE("brute counts partition over the values of a variable")
{
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 30; ++trial) {
        testing::InstanceShape shape;
        shape.n = 9;
        shape.q = 3;
        shape.mixed_domains = true;
        shape.constraints = 6;
        shape.max_violating = 4;
        auto inst = testing::random_instance(rng, shape);
        const PartialAssignment empty(inst.num_vars());
        const int v = trial % inst.num_vars();
        BigInt total = 0;
        for (int a = 0; a < inst.domain(v); ++a)
            total += brute_count(inst, empty.extend(v, a));
        CHECK(total == brute_count(inst, empty));
        CHECK(brute_solutions(inst).size() == total.get_ui());
    }
}

TEST_CASE("brute-force cap raises a resource error")
{
    auto inst = Instance::build(std::vector<int>(20, 2), {});
    Caps caps;
    caps.oracle_space = 1000;
    try {
        brute_count(inst, PartialAssignment(20), caps);
        FAIL("expected a resource error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::resource);
    }
}

TEST_CASE("exact marginals")
{
    auto free = Instance::build({3, 2}, {});
    auto m = brute_marginal(free, PartialAssignment(2), 0);
    CHECK(m == std::vector<BigRational>{BigRational(1, 3), BigRational(1, 3), BigRational(1, 3)});

    auto forced = Instance::build({2, 2}, {clause({0, 1})});
    auto point = brute_marginal(forced, PartialAssignment(2).extend(1, 0), 0);
    CHECK(point == std::vector<BigRational>{0, 1});

    auto dead = Instance::build({2, 2}, {clause({0}), Constraint{{0}, {{1}}}});
    try {
        brute_marginal(dead, PartialAssignment(2), 1);
        FAIL("expected an unsat error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::unsat);
    }

    std::mt19937_64 rng(43);
    for (int trial = 0; trial < 20; ++trial) {
        testing::InstanceShape shape;
        shape.n = 8;
        shape.q = 3;
        shape.constraints = 5;
        auto inst = testing::random_instance(rng, shape);
        if (brute_count(inst, PartialAssignment(inst.num_vars())) == 0)
            continue;
        auto dist = brute_marginal(inst, PartialAssignment(inst.num_vars()), trial % inst.num_vars());
        BigRational sum = 0;
        for (const auto& p : dist)
            sum += p;
        CHECK(sum == 1);
    }
}

TEST_CASE("exact sampler")
{
    auto single = Instance::build({2, 2}, {clause({0}), Constraint{{1}, {{1}}}});
    for (std::uint64_t seed = 0; seed < 20; ++seed)
        CHECK(brute_sample(single, seed) == std::vector<int>{1, 0});

    auto dead = Instance::build({2}, {clause({0}), Constraint{{0}, {{1}}}});
    CHECK_THROWS_AS(brute_sample(dead, 1), Error);

    // Per-cell histogram on the 25-solution instance within 4 sigma.
    auto inst = two_overlapping_clauses();
    const auto solutions = brute_solutions(inst);
    REQUIRE(solutions.size() == 25);
    const int draws = 100000;
    std::map<std::vector<int>, int> hist;
    for (int s = 0; s < draws; ++s)
        ++hist[brute_sample(inst, static_cast<std::uint64_t>(s))];
    CHECK(hist.size() == 25);
    const double p = 1.0 / 25;
    const double sigma = std::sqrt(draws * p * (1 - p));
    for (const auto& sol : solutions)
        CHECK(std::abs(hist[sol] - draws * p) <= 4 * sigma);

    // Chi-square sanity on the free cube.
    auto cube = Instance::build({2, 2, 2}, {});
    std::map<std::vector<int>, int> counts;
    for (int s = 0; s < 10000; ++s)
        ++counts[brute_sample(cube, static_cast<std::uint64_t>(s) + 7)];
    double chi = 0;
    for (const auto& [a, c] : counts)
        chi += (c - 1250.0) * (c - 1250.0) / 1250.0;
    CHECK(counts.size() == 8);
    CHECK(chi < 24.3);  // 0.999 quantile with 7 degrees of freedom
}

TEST_CASE("maximal coupling")
{
    std::vector<BigRational> mu{BigRational(1, 2), BigRational(1, 2), 0};
    std::vector<BigRational> nu{BigRational(1, 4), BigRational(1, 4), BigRational(1, 2)};
    auto pi = maximal_coupling(mu, nu);
    BigRational diag = 0;
    for (std::size_t a = 0; a < 3; ++a) {
        BigRational row = 0;
        BigRational col = 0;
        for (std::size_t b = 0; b < 3; ++b) {
            row += pi[a][b];
            col += pi[b][a];
            CHECK(pi[a][b] >= 0);
        }
        CHECK(row == mu[a]);
        CHECK(col == nu[a]);
        diag += pi[a][a];
    }
    CHECK(diag == BigRational(1, 2));

    auto same = maximal_coupling(nu, nu);
    for (std::size_t a = 0; a < 3; ++a)
        CHECK(same[a][a] == nu[a]);
}

TEST_CASE("coupling flows on trees without constraints stay on the diagonal")
{
    auto inst = Instance::build({2, 2, 2}, {});
    auto tree = build_tree(inst, PartialAssignment(3), 0, 0, 1, 2, BigRational(1, 100));
    auto cd = brute_coupling(inst, tree);
    CHECK(tree.nodes.size() == 1);
    CHECK(cd.px[0] == 1);
    CHECK(testing::check_flow_identities(inst, tree, cd, BigRational(0)).empty());
}

TEST_CASE("disjoint forced marginals put all flow off the diagonal")
{
    // v0 = 0 forces v1 = 1 and v0 = 1 forces v1 = 0.
    auto inst = Instance::build({2, 2}, {Constraint{{0, 1}, {{0, 0}, {1, 1}}}});
    // With p_tree = 1 nothing freezes, so v1 is coupled rather than left dangerous.
    auto tree = build_tree(inst, PartialAssignment(2), 0, 0, 1, 4, BigRational(1));
    REQUIRE(tree.nodes.size() == 5);
    const auto& root = tree.root();
    REQUIRE(root.next_var == 1);
    auto cd = brute_coupling(inst, tree);
    CHECK(cd.mu_cp[static_cast<std::size_t>(root.children[1 * 2 + 0])] == 1);
    for (int a = 0; a < 2; ++a)
        CHECK(cd.mu_cp[static_cast<std::size_t>(root.children[static_cast<std::size_t>(a * 2 + a)])] == 0);
    CHECK(testing::check_flow_identities(inst, tree, cd, std::nullopt).empty());
}

TEST_CASE("coupling points satisfy the linear program on random trees")
{
    std::mt19937_64 rng(47);
    int trees = 0;
    for (int trial = 0; trial < 80; ++trial) {
        testing::InstanceShape shape;
        shape.n = 10;
        shape.q = 2 + trial % 2;
        shape.k_min = 2;
        shape.k_max = 3;
        shape.constraints = 6;
        shape.max_violating = 2;
        auto inst = testing::random_instance(rng, shape);
        if (inst.num_constraints() == 0 || brute_count(inst, PartialAssignment(inst.num_vars())) == 0)
            continue;
        ParamOptions options;
        options.L = 6;
        auto params = derive_params(inst, options);
        const int v = inst.constraint(0).scope.front();
        auto tree = build_tree(inst, PartialAssignment(inst.num_vars()), v, 1, 0, params.L, params.p_tree);
        auto cd = brute_coupling(inst, tree);
        if (cd.sy[0] == 0 || cd.sx[0] == 0)
            continue;
        ++trees;
        INFO("trial " << trial);
        CHECK(testing::check_flow_identities(inst, tree, cd, params.eta).empty());

        BigRational r(cd.sx[0], cd.sy[0]);
        r.canonicalize();
        auto model = build_lp(tree, params.q, params.eta);
        add_ratio_rows(model, tree, good_leaf_ratios(inst, tree), r, r);
        std::string why;
        CHECK(model.satisfied_exactly(cd.lp_point(), &why));
        CHECK(why.empty());
    }
    CHECK(trees >= 20);
}
