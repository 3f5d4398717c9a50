#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "lllcsp/csp.hpp"

namespace lllcsp {

/// Row of a feasibility system: sum of terms (<= or =) rhs.
struct LPRow {
    std::vector<std::pair<int, BigRational>> terms;
    bool equality = false;
    BigRational rhs{0};
    std::string label;
};

/// Feasibility system over variables boxed in [0, 1], with exact coefficients.
struct LPModel {
    int num_vars = 0;
    std::vector<LPRow> rows;

    /// Largest violation over rows and boxes after scaling each row so its
    /// largest coefficient has magnitude 1. Computed exactly, returned rounded.
    double max_scaled_violation(const std::vector<BigRational>& point) const;
    double max_scaled_violation(const std::vector<double>& point) const;
    /// Exact check; on failure `why` names the first violated row.
    bool satisfied_exactly(const std::vector<BigRational>& point, std::string* why = nullptr) const;
};

enum class LPStatus { feasible, infeasible, not_converged };

struct LPOptions {
    double tolerance = 1e-9;
    std::size_t max_iterations = 200'000;
    std::size_t cell_cap = 20'000'000;
};

struct LPResult {
    LPStatus status = LPStatus::infeasible;
    std::vector<double> point;  ///< structural values when feasible
    std::size_t iterations = 0;
    double max_violation = 0;
};

/// Phase-one bounded-variable primal simplex on a dense tableau; Dantzig
/// pricing with a switch to Bland's rule after a run of degenerate pivots.
/// Infeasible is only reported with an exactly checked Farkas certificate;
/// anything else that fails to reach a feasible point is not_converged.
/// Throws ErrorKind::resource when the tableau would exceed cell_cap.
LPResult solve_feasibility(const LPModel& model, const LPOptions& options = {});

} // namespace lllcsp
