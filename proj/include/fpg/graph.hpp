#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace fpg {

struct Geometric {
    double ratio;  // q in (0, 1); raw weights (1-q) q^(i-1)
};

struct PowerLaw {
    double exponent;  // s > 1; raw weights i^(-s) / zeta(s)
};

struct Explicit {
    std::vector<double> values;  // positive, unnormalized
};

/// The infinite weight family a truncation is drawn from.
class WeightFamily {
public:
    using Kind = std::variant<Geometric, PowerLaw, Explicit>;

    static WeightFamily geometric(double q);
    static WeightFamily power_law(double s);
    static WeightFamily explicit_values(std::vector<double> values);

    /// Parses `geometric:q=0.5`, `powerlaw:s=2.0` or `explicit:file=<path>`
    /// (one positive decimal per line).
    static WeightFamily parse(std::string_view text);

    const Kind& kind() const noexcept { return kind_; }
    const std::string& description() const noexcept { return description_; }

private:
    WeightFamily(Kind kind, std::string description);

    Kind kind_;
    std::string description_;
};

/// First N weights of a family, renormalized so that Σ mᵢ = 1.
class WeightSequence {
public:
    WeightSequence(std::vector<double> m, WeightFamily family, double raw_tail_mass,
                   bool tail_is_upper_bound);

    std::span<const double> m() const noexcept { return m_; }
    double operator[](std::size_t i) const noexcept { return m_[i]; }
    std::size_t size() const noexcept { return m_.size(); }
    const WeightFamily& family() const noexcept { return family_; }

    /// Mass the untruncated family places beyond index N, before renormalization.
    double raw_tail_mass() const noexcept { return raw_tail_mass_; }
    /// True when raw_tail_mass is a bound rather than an exact value.
    bool tail_is_upper_bound() const noexcept { return tail_is_upper_bound_; }

    /// Σ_{i > n0} mᵢ within the truncation (n0 counts vertices, 1-based).
    double tail_within(std::size_t n0) const noexcept { return suffix_[n0]; }

private:
    std::vector<double> m_;
    std::vector<double> suffix_;  // suffix_[k] = Σ_{i >= k} m_i (0-based), suffix_[N] = 0
    WeightFamily family_;
    double raw_tail_mass_;
    bool tail_is_upper_bound_;
};

using WeightsPtr = std::shared_ptr<const WeightSequence>;

/// Full problem instance: weights, potential Φ and diffusion constant β.
class GraphSpec {
public:
    GraphSpec(WeightsPtr weights, std::vector<double> phi, double beta);

    const WeightSequence& weights() const noexcept { return *weights_; }
    const WeightsPtr& weights_ptr() const noexcept { return weights_; }
    std::span<const double> phi() const noexcept { return phi_; }
    double beta() const noexcept { return beta_; }
    std::size_t size() const noexcept { return phi_.size(); }

    /// ‖Φ‖_∞ over the truncation.
    double phi_sup_norm() const noexcept;

private:
    WeightsPtr weights_;
    std::vector<double> phi_;
    double beta_;
};

WeightSequence build_weights(const WeightFamily& family, std::size_t n);

inline WeightsPtr make_weights(const WeightFamily& family, std::size_t n) {
    return std::make_shared<const WeightSequence>(build_weights(family, n));
}

/// One sparse row of a locally finite graph: (column, a_ij) pairs.
using SparseRow = std::vector<std::pair<std::size_t, double>>;

/// Sender network induced by a locally finite graph: mᵢ ∝ Σⱼ a_ij.
WeightSequence from_locally_finite(std::span<const SparseRow> rows);

/// Smallest N₀ with (tail mass beyond N₀)^{1/2} · C0 < delta. The tail counts the
/// renormalized weights past N₀ plus the family's raw tail beyond the truncation.
std::size_t estimate_N0(const WeightSequence& weights, double c0, double delta);

/// M_{N₀} = min_{i ≤ N₀} mᵢ (N₀ is a vertex count, 1-based).
double min_weight_prefix(const WeightSequence& weights, std::size_t n0);

}  // namespace fpg
