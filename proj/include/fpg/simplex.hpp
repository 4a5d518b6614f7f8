#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fpg/graph.hpp"

namespace fpg {

/// Nonnegative ρ with Σ mᵢρᵢ = 1 (within 1e-12), tied to the weights it is
/// measured against.
class Density {
public:
    static constexpr double kMassTolerance = 1e-12;

    /// Validates nonnegativity and unit mass.
    Density(WeightsPtr weights, std::vector<double> rho);

    /// Rescales a nonnegative, not identically zero vector to unit mass.
    static Density normalized(WeightsPtr weights, std::vector<double> raw);

    /// ρ ≡ 1.
    static Density uniform(WeightsPtr weights);

    std::span<const double> values() const noexcept { return rho_; }
    double operator[](std::size_t i) const noexcept { return rho_[i]; }
    std::size_t size() const noexcept { return rho_.size(); }
    const WeightSequence& weights() const noexcept { return *weights_; }
    const WeightsPtr& weights_ptr() const noexcept { return weights_; }

    double mass() const noexcept;
    double inf() const noexcept;
    double sup() const noexcept;
    bool interior() const noexcept { return inf() > 0.0; }

private:
    WeightsPtr weights_;
    std::vector<double> rho_;
};

/// σ with Σ mᵢσᵢ = 0 (within 1e-12 relative to the scale of σ).
class TangentVector {
public:
    static constexpr double kMeanTolerance = 1e-12;

    TangentVector(WeightsPtr weights, std::vector<double> sigma);

    std::span<const double> values() const noexcept { return sigma_; }
    double operator[](std::size_t i) const noexcept { return sigma_[i]; }
    std::size_t size() const noexcept { return sigma_.size(); }
    const WeightSequence& weights() const noexcept { return *weights_; }
    const WeightsPtr& weights_ptr() const noexcept { return weights_; }

    /// Σ mᵢσᵢ as computed; zero up to rounding.
    double weighted_mean() const noexcept;

private:
    WeightsPtr weights_;
    std::vector<double> sigma_;
};

enum class EntropyMode {
    Strict,   // reject ρᵢ = 0 whenever β > 0
    Lenient,  // apply 0·log 0 = 0
};

/// Constants of the invariant-set and decay argument. The raw values can leave
/// double range for realistic potentials (C1 ~ exp(-4‖Φ‖/(M β))), so the
/// logarithms are the primary record and the plain fields are exp() of them,
/// possibly 0 or +inf.
struct ConstantsReport {
    double C0 = 0.0;
    std::size_t N0 = 0;
    double M_N0 = 0.0;
    double delta = 0.5;
    double log_C1 = 0.0;
    double log_C2 = 0.0;
    double log_decay_rate = 0.0;
    double C1 = 0.0;
    double C2 = 0.0;
    double decay_rate_C = 0.0;
};

/// ρ*ᵢ = e^{-Φᵢ/β} / Σⱼ mⱼ e^{-Φⱼ/β}; requires β > 0.
Density gibbs(const GraphSpec& spec);

/// Σ mᵢΦᵢρᵢ + β Σ mᵢρᵢ log ρᵢ.
double free_energy(const Density& rho, const GraphSpec& spec, EntropyMode mode = EntropyMode::Strict);

/// H(ν|μ) = Σ mᵢνᵢ log(νᵢ/μᵢ). Throws InfiniteEntropy if some μᵢ = 0 < νᵢ.
double relative_entropy(const Density& nu, const Density& mu);

/// L = Σ mᵢ (ρᵢ - ρ*ᵢ)² / ρ*ᵢ.
double relative_energy_L(const Density& rho, const Density& rho_star);

/// ‖ρ - ρ*‖²_{l²_m}.
double l2m_distance2(const Density& a, const Density& b);

/// C0, N₀, M_{N₀}, C1, C2 and the decay rate C = β (C1/C2)(inf ρ*/sup ρ*).
ConstantsReport invariant_constants(const Density& rho0, const GraphSpec& spec, double delta = 0.5);

/// Removes the m-weighted mean: x - (Σ mᵢxᵢ) 𝟙.
TangentVector project_tangent(std::span<const double> x, const WeightsPtr& weights);

}  // namespace fpg
