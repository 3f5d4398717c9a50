#include "lllcsp/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lllcsp {

namespace {

BigRational row_scale(const LPRow& row)
{
    BigRational scale = 0;
    for (const auto& [var, coef] : row.terms)
        scale = std::max(scale, BigRational(abs(coef)));
    return scale == 0 ? BigRational(1) : scale;
}

template <typename Value>
BigRational to_exact(const Value& v)
{
    if constexpr (std::is_same_v<Value, BigRational>)
        return v;
    else
        return BigRational(v);
}

template <typename Point>
double violation(const LPModel& model, const Point& point)
{
    BigRational worst = 0;
    for (const auto& value : point) {
        BigRational x = to_exact(value);
        worst = std::max(worst, BigRational(-x));
        worst = std::max(worst, BigRational(x - 1));
    }
    for (const auto& row : model.rows) {
        BigRational lhs = 0;
        for (const auto& [var, coef] : row.terms)
            lhs += coef * to_exact(point[static_cast<std::size_t>(var)]);
        BigRational excess = (lhs - row.rhs) / row_scale(row);
        if (row.equality)
            excess = abs(excess);
        worst = std::max(worst, excess);
    }
    return worst.get_d();
}

} // namespace

double LPModel::max_scaled_violation(const std::vector<BigRational>& point) const { return violation(*this, point); }

double LPModel::max_scaled_violation(const std::vector<double>& point) const { return violation(*this, point); }

bool LPModel::satisfied_exactly(const std::vector<BigRational>& point, std::string* why) const
{
    for (std::size_t i = 0; i < point.size(); ++i)
        if (point[i] < 0 || point[i] > 1) {
            if (why)
                *why = "variable " + std::to_string(i) + " outside [0, 1]";
            return false;
        }
    for (const auto& row : rows) {
        BigRational lhs = 0;
        for (const auto& [var, coef] : row.terms)
            lhs += coef * point[static_cast<std::size_t>(var)];
        bool ok = row.equality ? lhs == row.rhs : lhs <= row.rhs;
        if (!ok) {
            if (why)
                *why = row.label + ": lhs " + lhs.get_str() + " vs rhs " + row.rhs.get_str();
            return false;
        }
    }
    return true;
}

namespace {

/// Phase-one bounded-variable simplex on a dense tableau B^-1 A, with periodic
/// reinversion from the original rows to shed accumulated rounding.
class PhaseOne {
public:
    PhaseOne(const LPModel& model, const LPOptions& options) : model_(model), options_(options)
    {
        m_ = model.rows.size();
        nstruct_ = static_cast<std::size_t>(model.num_vars);
        scale_.reserve(m_);
        for (const auto& row : model.rows)
            scale_.push_back(row_scale(row));

        ncols_ = nstruct_;
        upper_.assign(nstruct_, 1.0);
        slack_of_.assign(m_, -1);
        art_of_.assign(m_, -1);
        sign_.assign(m_, 1.0);
        std::vector<double> b(m_);
        for (std::size_t i = 0; i < m_; ++i)
            b[i] = BigRational(model.rows[i].rhs / scale_[i]).get_d();
        for (std::size_t i = 0; i < m_; ++i)
            if (!model.rows[i].equality) {
                slack_of_[i] = static_cast<int>(ncols_++);
                upper_.push_back(inf);
            }
        for (std::size_t i = 0; i < m_; ++i)
            if (slack_of_[i] < 0 || b[i] < 0) {
                art_of_[i] = static_cast<int>(ncols_++);
                upper_.push_back(inf);
                sign_[i] = b[i] >= 0 ? 1.0 : -1.0;
            }
        if (2 * (m_ + 1) * ncols_ > options.cell_cap)
            throw Error(ErrorKind::resource, "linear program with " + std::to_string(m_) + " rows and "
                    + std::to_string(ncols_) + " columns exceeds the tableau cap of "
                    + std::to_string(options.cell_cap) + " cells");

        is_art_.assign(ncols_, 0);
        base_.assign(m_, std::vector<double>(ncols_, 0.0));
        rhs_.assign(m_, 0.0);
        basis_.assign(m_, -1);
        for (std::size_t i = 0; i < m_; ++i) {
            auto& row = base_[i];
            for (const auto& [var, coef] : model.rows[i].terms)
                row[static_cast<std::size_t>(var)] += BigRational(coef / scale_[i]).get_d();
            if (slack_of_[i] >= 0)
                row[static_cast<std::size_t>(slack_of_[i])] = 1.0;
            for (auto& value : row)
                value *= sign_[i];
            rhs_[i] = b[i] * sign_[i];
            if (art_of_[i] >= 0) {
                row[static_cast<std::size_t>(art_of_[i])] = 1.0;
                is_art_[static_cast<std::size_t>(art_of_[i])] = 1;
                basis_[i] = art_of_[i];
            } else {
                basis_[i] = slack_of_[i];
            }
        }
        t_ = base_;
        beta_ = rhs_;
        where_.assign(ncols_, -1);
        for (std::size_t i = 0; i < m_; ++i)
            where_[static_cast<std::size_t>(basis_[i])] = static_cast<int>(i);
        at_upper_.assign(ncols_, 0);
        retired_.assign(ncols_, 0);
        refresh_cost();
    }

    LPResult run()
    {
        LPResult result;
        const std::size_t reinvert_every = std::max<std::size_t>(100, m_);
        std::size_t since_reinvert = 0;
        bool fresh = true;
        std::size_t stall = 0;
        double objective = phase_objective();
        double last_objective = objective;

        for (;;) {
            if (result.iterations >= options_.max_iterations) {
                result.status = LPStatus::not_converged;
                return result;
            }
            if (since_reinvert >= reinvert_every) {
                reinvert();
                since_reinvert = 0;
                fresh = true;
                objective = phase_objective();
            }
            const bool bland = stall > 50;

            int enter = -1;
            double best = 0;
            for (std::size_t j = 0; j < ncols_; ++j) {
                if (where_[j] >= 0 || retired_[j])
                    continue;
                const double gain = at_upper_[j] ? cost_[j] : -cost_[j];
                if (gain <= cost_tol)
                    continue;
                if (bland) {
                    enter = static_cast<int>(j);
                    break;
                }
                if (gain > best) {
                    best = gain;
                    enter = static_cast<int>(j);
                }
            }
            if (enter < 0) {
                if (fresh)
                    break;
                reinvert();
                since_reinvert = 0;
                fresh = true;
                objective = phase_objective();
                continue;
            }
            const auto e = static_cast<std::size_t>(enter);
            const double dir = at_upper_[e] ? -1.0 : 1.0;

            // Harris two-pass ratio test: the largest step keeping every basic
            // variable within feas_tol of its bounds, then the largest pivot
            // among rows blocking before it.
            double bound = upper_[e];
            for (std::size_t i = 0; i < m_; ++i) {
                const double rate = t_[i][e] * dir;  // basic i moves by -rate * step
                if (std::abs(rate) > pivot_tol)
                    bound = std::min(bound, limit(i, rate, feas_tol));
            }
            bound = std::max(bound, 0.0);
            double step = upper_[e];
            int leave = -1;
            double best_pivot = 0;
            for (std::size_t i = 0; i < m_; ++i) {
                const double rate = t_[i][e] * dir;
                if (std::abs(rate) <= pivot_tol)
                    continue;
                const double exact_limit = std::max(limit(i, rate, 0.0), 0.0);
                if (exact_limit > bound)
                    continue;
                const bool better = std::abs(rate) > best_pivot
                    || (bland && std::abs(rate) == best_pivot && basis_[i] < basis_[static_cast<std::size_t>(leave)]);
                if (better) {
                    step = exact_limit;
                    leave = static_cast<int>(i);
                    best_pivot = std::abs(rate);
                }
            }
            if (leave >= 0 && upper_[e] <= step) {
                step = upper_[e];
                leave = -1;
            }
            if (step == inf) {
                // Phase one is bounded below, so this is rounding; retry from a fresh basis once.
                if (fresh) {
                    result.status = LPStatus::not_converged;
                    return result;
                }
                reinvert();
                since_reinvert = 0;
                fresh = true;
                continue;
            }
            ++result.iterations;
            ++since_reinvert;
            fresh = false;

            for (std::size_t i = 0; i < m_; ++i)
                beta_[i] -= t_[i][e] * dir * step;
            objective += cost_[e] * dir * step;
            if (leave < 0)
                at_upper_[e] = !at_upper_[e];
            else
                pivot(static_cast<std::size_t>(leave), e, (at_upper_[e] ? upper_[e] : 0.0) + dir * step);

            if (objective < last_objective - 1e-12) {
                last_objective = objective;
                stall = 0;
            } else {
                ++stall;
            }
        }

        std::vector<double> x(nstruct_, 0.0);
        for (std::size_t j = 0; j < nstruct_; ++j) {
            const double value = where_[j] >= 0 ? beta_[static_cast<std::size_t>(where_[j])]
                                                : (at_upper_[j] ? upper_[j] : 0.0);
            x[j] = std::clamp(value, 0.0, 1.0);
        }
        result.max_violation = model_.max_scaled_violation(x);
        if (result.max_violation <= options_.tolerance) {
            result.status = LPStatus::feasible;
            result.point = std::move(x);
        } else if (farkas_certificate()) {
            result.status = LPStatus::infeasible;
        } else {
            result.status = LPStatus::not_converged;
        }
        return result;
    }

private:
    static constexpr double inf = std::numeric_limits<double>::infinity();
    static constexpr double pivot_tol = 1e-9;
    static constexpr double feas_tol = 1e-10;
    static constexpr double cost_tol = 1e-11;

    double limit(std::size_t i, double rate, double slack) const
    {
        const auto bi = static_cast<std::size_t>(basis_[i]);
        if (rate > 0)
            return (beta_[i] + slack) / rate;
        if (upper_[bi] == inf)
            return inf;
        return (upper_[bi] - beta_[i] + slack) / (-rate);
    }

    double phase_objective() const
    {
        double total = 0;
        for (std::size_t i = 0; i < m_; ++i)
            if (is_art_[static_cast<std::size_t>(basis_[i])])
                total += beta_[i];
        return total;
    }

    void refresh_cost()
    {
        cost_.assign(ncols_, 0.0);
        for (std::size_t j = 0; j < ncols_; ++j)
            cost_[j] = is_art_[j] ? 1.0 : 0.0;
        for (std::size_t i = 0; i < m_; ++i)
            if (is_art_[static_cast<std::size_t>(basis_[i])])
                for (std::size_t j = 0; j < ncols_; ++j)
                    cost_[j] -= t_[i][j];
        for (std::size_t i = 0; i < m_; ++i)
            cost_[static_cast<std::size_t>(basis_[i])] = 0.0;
    }

    void pivot(std::size_t r, std::size_t e, double entering_value)
    {
        const auto out = static_cast<std::size_t>(basis_[r]);
        const double piv = t_[r][e];
        for (auto& value : t_[r])
            value /= piv;
        const auto& pr = t_[r];
        for (std::size_t i = 0; i < m_; ++i) {
            if (i == r)
                continue;
            const double f = t_[i][e];
            if (f == 0.0)
                continue;
            auto& ti = t_[i];
            for (std::size_t j = 0; j < ncols_; ++j)
                ti[j] -= f * pr[j];
            ti[e] = 0.0;
        }
        const double fc = cost_[e];
        for (std::size_t j = 0; j < ncols_; ++j)
            cost_[j] -= fc * pr[j];
        cost_[e] = 0.0;

        // A leaving variable always lands on a bound; record which one.
        const bool to_upper = upper_[out] != inf && beta_[r] >= upper_[out] * 0.5;
        where_[out] = -1;
        at_upper_[out] = to_upper;
        if (is_art_[out])
            retired_[out] = 1;
        basis_[r] = static_cast<int>(e);
        where_[e] = static_cast<int>(r);
        at_upper_[e] = 0;
        beta_[r] = entering_value;
    }

    /// Recomputes B^-1 A and the basic values from the original rows by
    /// Gauss-Jordan elimination with partial pivoting. Keeps the old state
    /// when the basis looks singular.
    bool reinvert()
    {
        std::vector<std::vector<double>> mat = base_;
        std::vector<double> r = rhs_;
        for (std::size_t j = 0; j < ncols_; ++j)
            if (where_[j] < 0 && at_upper_[j])
                for (std::size_t i = 0; i < m_; ++i)
                    r[i] -= base_[i][j] * upper_[j];
        std::vector<char> used(m_, 0);
        std::vector<int> new_basis(m_, -1);
        for (std::size_t k = 0; k < m_; ++k) {
            const auto j = static_cast<std::size_t>(basis_[k]);
            std::size_t p = m_;
            double best = 0;
            for (std::size_t i = 0; i < m_; ++i)
                if (!used[i] && std::abs(mat[i][j]) > best) {
                    best = std::abs(mat[i][j]);
                    p = i;
                }
            if (p == m_ || best < 1e-11)
                return false;
            used[p] = 1;
            new_basis[p] = static_cast<int>(j);
            const double piv = mat[p][j];
            for (auto& value : mat[p])
                value /= piv;
            r[p] /= piv;
            for (std::size_t i = 0; i < m_; ++i) {
                if (i == p)
                    continue;
                const double f = mat[i][j];
                if (f == 0.0)
                    continue;
                for (std::size_t c = 0; c < ncols_; ++c)
                    mat[i][c] -= f * mat[p][c];
                mat[i][j] = 0.0;
                r[i] -= f * r[p];
            }
        }
        t_ = std::move(mat);
        beta_ = std::move(r);
        basis_ = std::move(new_basis);
        std::fill(where_.begin(), where_.end(), -1);
        for (std::size_t i = 0; i < m_; ++i)
            where_[static_cast<std::size_t>(basis_[i])] = static_cast<int>(i);
        refresh_cost();
        return true;
    }

    /// Exact Farkas check built from the phase-one duals y = c_B B^-1: with
    /// row multipliers w (free on equalities, one sign on inequalities),
    /// w A x over the [0,1] box cannot reach w b.
    bool farkas_certificate() const
    {
        std::vector<BigRational> w(m_);
        for (std::size_t i = 0; i < m_; ++i) {
            // The column that was e_i in the initial tableau.
            const auto col = static_cast<std::size_t>(art_of_[i] >= 0 ? art_of_[i] : slack_of_[i]);
            double y = 0;
            for (std::size_t k = 0; k < m_; ++k)
                if (is_art_[static_cast<std::size_t>(basis_[k])])
                    y += t_[k][col];
            w[i] = BigRational(y) * BigRational(sign_[i]) / scale_[i];
        }
        for (int orientation : {1, -1}) {
            std::vector<BigRational> g(nstruct_, BigRational(0));
            BigRational h = 0;
            for (std::size_t i = 0; i < m_; ++i) {
                BigRational wi = w[i];
                if (!model_.rows[i].equality && sgn(wi) == -orientation)
                    wi = 0;
                if (wi == 0)
                    continue;
                for (const auto& [var, coef] : model_.rows[i].terms)
                    g[static_cast<std::size_t>(var)] += wi * coef;
                h += wi * model_.rows[i].rhs;
            }
            // orientation +1: every feasible x has g.x <= h; -1: g.x >= h.
            BigRational extreme = 0;
            for (const auto& gj : g)
                if (sgn(gj) == -orientation)
                    extreme += gj;
            if (orientation == 1 ? extreme > h : extreme < h)
                return true;
        }
        return false;
    }

    const LPModel& model_;
    const LPOptions& options_;
    std::size_t m_ = 0;
    std::size_t nstruct_ = 0;
    std::size_t ncols_ = 0;
    std::vector<BigRational> scale_;
    std::vector<double> upper_;
    std::vector<int> slack_of_;
    std::vector<int> art_of_;
    std::vector<double> sign_;
    std::vector<char> is_art_;
    std::vector<std::vector<double>> base_;
    std::vector<double> rhs_;
    std::vector<std::vector<double>> t_;
    std::vector<double> beta_;
    std::vector<double> cost_;
    std::vector<int> basis_;
    std::vector<int> where_;
    std::vector<char> at_upper_;
    std::vector<char> retired_;
};

} // namespace

LPResult solve_feasibility(const LPModel& model, const LPOptions& options)
{
    return PhaseOne(model, options).run();
}


} // namespace lllcsp
