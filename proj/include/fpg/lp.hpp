#pragma once

#include <cstddef>
#include <vector>

namespace fpg {

/// maximize cᵀx  subject to  A x ≤ b,  0 ≤ xⱼ ≤ upperⱼ,  with b ≥ 0 so that
/// the origin is a feasible starting vertex (no phase one needed).
struct BoundedLp {
    std::size_t n = 0;
    std::vector<double> c;
    std::vector<double> upper;  // may be +inf
    std::vector<double> A;      // row-major, rows() × n
    std::vector<double> b;

    std::size_t rows() const noexcept { return b.size(); }
    void add_row(const std::vector<double>& row, double rhs);
};

struct LpOptions {
    double tol = 1e-10;          // optimality / feasibility tolerance
    std::size_t max_pivots = 0;  // 0: 50·(n + rows) + 1000
};

struct LpSolution {
    double objective = 0.0;
    std::vector<double> x;
    std::size_t pivots = 0;
    std::size_t bound_flips = 0;
};

/// Dense tableau simplex with the upper-bounding technique and Bland's rule
/// (finite termination on degenerate vertices).
LpSolution solve_bounded_lp(const BoundedLp& lp, const LpOptions& options = {});

}  // namespace fpg
