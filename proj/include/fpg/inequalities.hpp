#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fpg/metric.hpp"
#include "fpg/simplex.hpp"

namespace fpg {

/// Densities ν with nu_inf ≤ νᵢ ≤ nu_sup for every vertex.
struct TalagrandClass {
    double nu_inf = 0.5;
    double nu_sup = 2.0;

    void validate() const;
    bool contains(const Density& nu) const noexcept;
};

/// Constants of the local Talagrand inequality d² ≤ κ H, β = 1, Φ = -log μ.
/// As with ConstantsReport, C4 (and so κ) overflows for any non-flat μ, so the
/// logarithms are the record and the plain values may be +inf.
struct TalagrandConstants {
    double C0 = 0.0;
    std::size_t N0 = 0;
    double M_N0 = 0.0;
    double phi_sup = 0.0;
    double log_C3 = 0.0;
    double log_C4 = 0.0;
    double log_C6 = 0.0;
    double log_T = 0.0;
    double log_kappa = 0.0;
    double C3 = 0.0;
    double C4 = 0.0;
    double C5 = 1.0;
    double C6 = 0.0;
    double T = 0.0;
    double kappa = 0.0;
};

TalagrandConstants talagrand_kappa(const Density& mu, const TalagrandClass& cls, double delta = 0.5);

/// Φᵢ = -log μᵢ.
std::vector<double> potential_of(const Density& mu);

struct TalagrandReport {
    TalagrandConstants constants;
    double distance = 0.0;  // geodesic upper bound on d_Φ(μ, ν)
    double distance2 = 0.0;
    double entropy = 0.0;   // H(ν|μ)
    double rhs = 0.0;       // κ H + 1e-9
    double ratio = 0.0;     // d²/H, NaN when H = 0
    bool passed = false;
    GeodesicResult geodesic;
};

TalagrandReport verify_talagrand(const Density& mu, const Density& nu, const TalagrandClass& cls,
                                 const GeodesicConfig& geo_config, double delta = 0.5);

enum class LpMode { Explicit, RowGenerated };

struct W1Stats {
    LpMode mode = LpMode::Explicit;
    std::size_t rounds = 0;  // row-generation rounds (1 for explicit)
    std::size_t constraints = 0;
    std::size_t pivots = 0;
};

/// Vertex counts up to which every pairwise difference row is built up front.
inline constexpr std::size_t kW1ExplicitLimit = 30;
inline constexpr std::size_t kW1MaxVertices = 500;

/// Bounded-Lipschitz dual: max Σ mᵢψᵢ(μᵢ - νᵢ) over ‖ψ‖∞ ≤ 1 and |ψᵢ - ψⱼ| ≤ 1
/// (unit ground distance between distinct vertices), as the larger of the two
/// signed maximizations.
double w1_distance(const Density& mu, const Density& nu, const WeightSequence& weights, W1Stats* stats = nullptr);

struct W1Report {
    double w1 = 0.0;
    double distance = 0.0;
    double bound = 0.0;  // √2 · distance + 1e-6
    bool passed = false;
    std::size_t refinements = 0;
    std::size_t knots = 0;
    W1Stats lp;
    GeodesicResult geodesic;
};

/// W1 ≤ √2 · d̂; on failure the geodesic is re-solved with doubled knots
/// (warm-started) up to `max_refinements` times before the verdict.
W1Report verify_w1_bound(const Density& mu, const Density& nu, std::span<const double> phi,
                         const GeodesicConfig& geo_config, std::size_t max_refinements = 2);

}  // namespace fpg
