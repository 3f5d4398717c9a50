#include <random>

#include "catch_amalgamated.hpp"

#include "lllcsp/lp.hpp"

using namespace lllcsp;

namespace {

LPRow row(std::vector<std::pair<int, BigRational>> terms, bool equality, BigRational rhs)
{
    return LPRow{std::move(terms), equality, std::move(rhs), ""};
}

/// Random system with a known feasible point inside the unit box.
LPModel planted(std::mt19937_64& rng, std::vector<BigRational>& x)
{
    const int n = 2 + static_cast<int>(rng() % 8);
    const int m = 1 + static_cast<int>(rng() % 8);
    x.assign(static_cast<std::size_t>(n), 0);
    for (auto& v : x) {
        const int r = static_cast<int>(rng() % 5);
        v = r == 0 ? BigRational(0) : r == 1 ? BigRational(1) : BigRational(static_cast<long>(rng() % 100), 100);
    }
    LPModel model;
    model.num_vars = n;
    for (int i = 0; i < m; ++i) {
        LPRow r;
        r.equality = rng() % 2;
        BigRational lhs = 0;
        for (int j = 0; j < n; ++j) {
            if (rng() % 2 == 0)
                continue;
            BigRational c(static_cast<int>(rng() % 11) - 5);
            if (c == 0)
                continue;
            r.terms.emplace_back(j, c);
            lhs += c * x[static_cast<std::size_t>(j)];
        }
        r.rhs = r.equality ? lhs : lhs + BigRational(static_cast<long>(rng() % 3));
        model.rows.push_back(r);
    }
    return model;
}

} // namespace

TEST_CASE("trivial systems")
{
    LPModel empty;
    empty.num_vars = 2;
    CHECK(solve_feasibility(empty).status == LPStatus::feasible);

    LPModel fixed;
    fixed.num_vars = 2;
    fixed.rows.push_back(row({{0, 1}}, true, BigRational(1, 3)));
    fixed.rows.push_back(row({{0, 1}, {1, 1}}, true, 1));
    auto result = solve_feasibility(fixed);
    REQUIRE(result.status == LPStatus::feasible);
    CHECK(std::abs(result.point[0] - 1.0 / 3) < 1e-9);
    CHECK(std::abs(result.point[1] - 2.0 / 3) < 1e-9);
}

TEST_CASE("box bounds make a system infeasible")
{
    LPModel model;
    model.num_vars = 2;
    model.rows.push_back(row({{0, 1}, {1, 1}}, true, 3));
    CHECK(solve_feasibility(model).status == LPStatus::infeasible);

    LPModel negative;
    negative.num_vars = 1;
    negative.rows.push_back(row({{0, 1}}, false, BigRational(-1, 2)));
    CHECK(solve_feasibility(negative).status == LPStatus::infeasible);
}

TEST_CASE("conflicting equalities are reported infeasible")
{
    LPModel model;
    model.num_vars = 2;
    model.rows.push_back(row({{0, 1}, {1, -1}}, true, 0));
    model.rows.push_back(row({{0, 1}, {1, 1}}, true, 1));
    model.rows.push_back(row({{0, 1}}, true, BigRational(1, 5)));
    CHECK(solve_feasibility(model).status == LPStatus::infeasible);
}

TEST_CASE("planted feasible systems are solved")
{
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 2000; ++trial) {
        std::vector<BigRational> x;
        auto model = planted(rng, x);
        REQUIRE(model.satisfied_exactly(x));
        auto result = solve_feasibility(model);
        INFO("trial " << trial);
        REQUIRE(result.status == LPStatus::feasible);
        CHECK(model.max_scaled_violation(result.point) <= 1e-9);
    }
}

TEST_CASE("planted contradictions are never reported feasible")
{
    std::mt19937_64 rng(2);
    int certified = 0;
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<BigRational> x;
        auto model = planted(rng, x);
        // Minus the sum of all rows with the right-hand side pushed below
        // what any feasible point could reach.
        LPRow sum;
        std::vector<BigRational> coef(static_cast<std::size_t>(model.num_vars), 0);
        BigRational rhs = 0;
        for (const auto& r : model.rows) {
            if (!r.equality)
                continue;
            for (const auto& [j, c] : r.terms)
                coef[static_cast<std::size_t>(j)] -= c;
            rhs -= r.rhs;
        }
        for (int j = 0; j < model.num_vars; ++j)
            if (coef[static_cast<std::size_t>(j)] != 0)
                sum.terms.emplace_back(j, coef[static_cast<std::size_t>(j)]);
        sum.rhs = rhs - 1;
        model.rows.push_back(sum);
        auto result = solve_feasibility(model);
        CHECK(result.status != LPStatus::feasible);
        certified += result.status == LPStatus::infeasible;
    }
    CHECK(certified == 500);
}

TEST_CASE("scaled violation measures rows and boxes")
{
    LPModel model;
    model.num_vars = 2;
    model.rows.push_back(row({{0, 4}, {1, 2}}, false, 2));
    std::vector<BigRational> inside{BigRational(1, 4), BigRational(1, 2)};
    CHECK(model.max_scaled_violation(inside) == 0);
    std::vector<BigRational> over{1, 0};
    CHECK(model.max_scaled_violation(over) == Catch::Approx(0.5));
    std::vector<double> outside{-0.25, 0};
    CHECK(model.max_scaled_violation(outside) == Catch::Approx(0.25));
    std::string why;
    CHECK_FALSE(model.satisfied_exactly(over, &why));
    CHECK_FALSE(why.empty());
}

TEST_CASE("oversized tableaus raise a resource error")
{
    LPModel model;
    model.num_vars = 50;
    for (int i = 0; i < 50; ++i)
        model.rows.push_back(row({{i, 1}}, true, BigRational(1, 2)));
    LPOptions options;
    options.cell_cap = 100;
    try {
        solve_feasibility(model, options);
        FAIL("expected a resource error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::resource);
    }
}
