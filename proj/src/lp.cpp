#include "fpg/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fpg/error.hpp"
#include "fpg/numeric.hpp"

namespace fpg {

void BoundedLp::add_row(const std::vector<double>& row, double rhs) {
    require(row.size() == n, ErrorKind::ParameterDomain, "constraint row has the wrong length");
    A.insert(A.end(), row.begin(), row.end());
    b.push_back(rhs);
}

LpSolution solve_bounded_lp(const BoundedLp& lp, const LpOptions& options) {
    const std::size_t n = lp.n;
    const std::size_t R = lp.rows();
    const std::size_t V = n + R;
    require(lp.c.size() == n && lp.upper.size() == n && lp.A.size() == R * n, ErrorKind::ParameterDomain,
            "inconsistent LP dimensions");
    for (std::size_t r = 0; r < R; ++r)
        require(lp.b[r] >= 0.0, ErrorKind::ParameterDomain, "LP needs b >= 0 (origin feasible)");
    for (double u : lp.upper) require(u >= 0.0, ErrorKind::ParameterDomain, "LP upper bounds must be >= 0");

    constexpr double kInf = std::numeric_limits<double>::infinity();
    constexpr double kPivotEps = 1e-12;
    const double tol = options.tol;
    const std::size_t max_pivots = options.max_pivots ? options.max_pivots : 50 * V + 1000;

    // Tableau B⁻¹[A I]; slacks start basic.
    std::vector<double> T(R * V, 0.0);
    for (std::size_t r = 0; r < R; ++r) {
        std::copy_n(lp.A.begin() + static_cast<std::ptrdiff_t>(r * n), n, T.begin() + static_cast<std::ptrdiff_t>(r * V));
        T[r * V + n + r] = 1.0;
    }
    std::vector<double> upper(V, kInf);
    std::copy(lp.upper.begin(), lp.upper.end(), upper.begin());
    std::vector<std::size_t> basis(R);
    std::vector<long> row_of(V, -1);
    for (std::size_t r = 0; r < R; ++r) {
        basis[r] = n + r;
        row_of[n + r] = static_cast<long>(r);
    }
    std::vector<double> xb(lp.b);
    std::vector<char> at_upper(V, 0);
    std::vector<double> d(V, 0.0);  // reduced costs
    std::copy(lp.c.begin(), lp.c.end(), d.begin());

    LpSolution sol;
    for (;;) {
        std::size_t enter = V;
        for (std::size_t j = 0; j < V; ++j) {
            if (row_of[j] >= 0) continue;
            if ((!at_upper[j] && d[j] > tol) || (at_upper[j] && d[j] < -tol)) {
                enter = j;
                break;
            }
        }
        if (enter == V) break;
        const double dir = at_upper[enter] ? -1.0 : 1.0;

        double step = upper[enter];
        long leave = -1;
        bool leave_to_upper = false;
        for (std::size_t r = 0; r < R; ++r) {
            const double a = dir * T[r * V + enter];
            double lim;
            bool to_upper;
            if (a > kPivotEps) {
                lim = std::max(0.0, xb[r]) / a;
                to_upper = false;
            } else if (a < -kPivotEps && std::isfinite(upper[basis[r]])) {
                lim = std::max(0.0, upper[basis[r]] - xb[r]) / -a;
                to_upper = true;
            } else {
                continue;
            }
            if (lim < step || (lim == step && leave >= 0 && basis[r] < basis[static_cast<std::size_t>(leave)])) {
                step = lim;
                leave = static_cast<long>(r);
                leave_to_upper = to_upper;
            }
        }
        if (!std::isfinite(step)) throw Error(ErrorKind::Numerical, "LP is unbounded");

        for (std::size_t r = 0; r < R; ++r) xb[r] -= step * dir * T[r * V + enter];

        if (leave < 0) {
            at_upper[enter] = !at_upper[enter];
            ++sol.bound_flips;
            continue;
        }

        if (++sol.pivots > max_pivots) throw Error(ErrorKind::Numerical, "LP pivot budget exhausted");
        const auto p = static_cast<std::size_t>(leave);
        const std::size_t out = basis[p];
        const double entering_value = (at_upper[enter] ? upper[enter] : 0.0) + dir * step;
        at_upper[out] = leave_to_upper;
        row_of[out] = -1;
        at_upper[enter] = 0;
        basis[p] = enter;
        row_of[enter] = static_cast<long>(p);
        xb[p] = entering_value;

        double* prow = &T[p * V];
        const double piv = prow[enter];
        for (std::size_t j = 0; j < V; ++j) prow[j] /= piv;
        prow[enter] = 1.0;
        for (std::size_t r = 0; r < R; ++r) {
            if (r == p) continue;
            double* row = &T[r * V];
            const double f = row[enter];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < V; ++j) row[j] -= f * prow[j];
            row[enter] = 0.0;
        }
        const double f = d[enter];
        for (std::size_t j = 0; j < V; ++j) d[j] -= f * prow[j];
        d[enter] = 0.0;
    }

    sol.x.assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        const double v = row_of[j] >= 0 ? xb[static_cast<std::size_t>(row_of[j])] : (at_upper[j] ? upper[j] : 0.0);
        sol.x[j] = std::clamp(v, 0.0, upper[j]);
    }
    CompensatedSum obj;
    for (std::size_t j = 0; j < n; ++j) obj.add(lp.c[j] * sol.x[j]);
    sol.objective = obj.value();
    return sol;
}

}  // namespace fpg
