#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fpg/simplex.hpp"

namespace fpg {

/// Logarithmic mean (a - b)/(log a - log b), continuous at a = b.
double log_mean(double a, double b) noexcept;

/// ∂/∂a of log_mean(a, b).
double log_mean_da(double a, double b) noexcept;

/// Upwind/log-mean mobility for one vertex pair.
inline double tau_entry(double rho_i, double rho_j, double phi_i, double phi_j) noexcept {
    if (phi_i > phi_j) return rho_i;
    if (phi_i < phi_j) return rho_j;
    return log_mean(rho_i, rho_j);
}

/// Dense symmetric mobility matrix τᵢⱼ for one (ρ, Φ).
class TauWeights {
public:
    TauWeights(std::vector<double> rho, std::vector<double> phi);

    double operator()(std::size_t i, std::size_t j) const noexcept { return values_[i * n_ + j]; }
    std::size_t size() const noexcept { return n_; }
    std::span<const double> rho() const noexcept { return rho_; }
    std::span<const double> phi() const noexcept { return phi_; }

private:
    std::size_t n_;
    std::vector<double> rho_;
    std::vector<double> phi_;
    std::vector<double> values_;
};

TauWeights tau_weights(const Density& rho, std::span<const double> phi);

/// The weighted Laplacian p ↦ σ, σᵢ = Σⱼ mⱼ τᵢⱼ (pᵢ - pⱼ). Self-adjoint and
/// positive semidefinite in the l²_m inner product, kernel = constants.
/// Mobilities are stored densely up to kDenseLimit vertices and regenerated
/// row by row beyond that.
class TauOperator {
public:
    static constexpr std::size_t kDenseLimit = 2000;

    TauOperator(const Density& rho, std::span<const double> phi);

    std::size_t size() const noexcept { return rho_.size(); }
    double tau(std::size_t i, std::size_t j) const noexcept;

    void apply(std::span<const double> p, std::span<double> out) const;

    /// dᵢ = Σⱼ mⱼ τᵢⱼ (j ≠ i), the Jacobi diagonal.
    std::span<const double> diagonal() const noexcept { return diag_; }

    /// ∂/∂ρ of ½ Σᵢⱼ mᵢ mⱼ τᵢⱼ(ρ) (pᵢ - pⱼ)², holding p fixed (Euclidean coordinates).
    void density_gradient(std::span<const double> p, std::span<double> out) const;

    const WeightSequence& weights() const noexcept { return *weights_; }

private:
    WeightsPtr weights_;
    std::vector<double> rho_;
    std::vector<double> phi_;
    std::optional<TauWeights> dense_;
    std::vector<double> diag_;
};

TangentVector apply_tau(const Density& rho, std::span<const double> phi, std::span<const double> p);

struct InvertOptions {
    double rel_tol = 1e-10;     // guaranteed bound on ‖apply_tau(p) - σ‖_{l²_m} / ‖σ‖_{l²_m}
    double aim = 1e-13;         // iteration continues toward this while it still makes progress
    std::size_t max_iters = 0;  // 0: 20·N + 200
};

struct InvertStats {
    std::size_t iterations = 0;
    double relative_residual = 0.0;
};

/// Mean-free p (Σ mᵢpᵢ = 0) with apply_tau(p) = σ, by preconditioned conjugate
/// gradients in the l²_m inner product.
std::vector<double> invert_tau(const TauOperator& op, std::span<const double> sigma, const InvertOptions& opts = {},
                               InvertStats* stats = nullptr);
std::vector<double> invert_tau(const Density& rho, std::span<const double> phi, const TangentVector& sigma,
                               const InvertOptions& opts = {});

/// g(σ¹, σ²) = Σ mᵢ p¹ᵢ σ²ᵢ with p¹ = invert_tau(σ¹).
double inner_product_g(const Density& rho, std::span<const double> phi, const TangentVector& s1,
                       const TangentVector& s2);

/// ½ Σᵢⱼ mᵢ mⱼ τᵢⱼ (p¹ᵢ - p¹ⱼ)(p²ᵢ - p²ⱼ), the double-sum form of g.
double dirichlet_form(const TauOperator& op, std::span<const double> p1, std::span<const double> p2);

struct NormEquivalenceReport {
    double g = 0.0;             // g(σ, σ)
    double p_norm2 = 0.0;       // ‖p‖²
    double sigma_norm2 = 0.0;   // ‖σ‖²
    double rho_inf = 0.0;
    double rho_sup = 0.0;
    // inf ρ ‖p‖² ≤ g ≤ sup ρ ‖p‖² and (inf ρ)²/sup ρ · g ≤ ‖σ‖² ≤ 2 sup ρ · g, as rhs - lhs.
    double margin_g_lower = 0.0;
    double margin_g_upper = 0.0;
    double margin_sigma_lower = 0.0;
    double margin_sigma_upper = 0.0;

    /// All margins nonnegative up to rounding at the scale of the compared terms.
    bool holds() const noexcept;
};

NormEquivalenceReport norm_equivalence_check(const Density& rho, std::span<const double> phi,
                                             const TangentVector& sigma);

struct KernelReport {
    std::size_t dimension = 0;
    std::vector<double> eigenvalues;  // ascending, of the operator in the l²_m inner product
    double threshold = 0.0;           // 1e-10 · largest eigenvalue
    double spectral_gap_ratio = 0.0;  // second-smallest / largest
};

/// Number of near-zero eigenvalues of the weighted Laplacian (dense eigensolve, N ≤ 500).
KernelReport kernel_dimension_check(const Density& rho, std::span<const double> phi);

enum class GeodesicInit { Linear, Previous };

struct GeodesicConfig {
    std::size_t knots = 32;
    std::size_t max_iters = 2000;
    double grad_tol = 1e-8;  // on final_grad_norm
    GeodesicInit init = GeodesicInit::Linear;
    double positivity_floor = 1e-13;
    double boundary_warning_level = 1e-2;  // path minimum at or below this sets the boundary warning
    std::size_t history = 12;               // quasi-Newton memory
};

struct GeodesicResult {
    double distance = 0.0;
    double action = 0.0;
    std::vector<Density> path;  // knots+1 densities, endpoints included
    std::size_t iterations = 0;
    double final_grad_norm = 0.0;  // eᵀH₀e / action: estimated relative excess of the action
    std::vector<double> action_history;
    bool converged = false;
    bool stall_warning = false;
    bool boundary_warning = false;
    double path_min = 0.0;
    double tolerance = 0.0;  // estimated accuracy of `distance` for this discretization
};

/// Discrete minimum-action path between two interior densities. The action uses
/// the trapezoidal rule on each segment, which over-estimates the action of the
/// piecewise-linear path, so sqrt(action) is an upper bound on d_Φ (up to the
/// optimizer tolerance) that does not increase when the knot count doubles. `warm_start` (used with GeodesicInit::Previous) may have
/// any knot count and is linearly resampled.
GeodesicResult geodesic_distance(const Density& a, const Density& b, std::span<const double> phi,
                                 const GeodesicConfig& config, const std::vector<Density>* warm_start = nullptr);

}  // namespace fpg
