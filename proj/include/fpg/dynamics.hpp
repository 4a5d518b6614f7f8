#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "fpg/simplex.hpp"

namespace fpg {

enum class RhsKind {
    Fpe,       // gradient flow of the free energy, upwind/log-mean branches by Φ
    Phibar,    // same summands, branches ordered by the density-dependent potential Φ̄
    BetaZero,  // pure transport, β = 0
    Master,    // constant potential: σᵢ = β Σⱼ mⱼ(ρⱼ - ρᵢ)
};

std::string_view to_string(RhsKind kind);
RhsKind parse_rhs_kind(std::string_view text);

/// Φ̄ᵢ = Φᵢ - β log ρᵢ (Minus, the default) or Φᵢ + β log ρᵢ (Plus).
enum class PhibarSign { Minus, Plus };

struct IntegratorConfig {
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
    double max_step = std::numeric_limits<double>::infinity();
    double t_end = 10.0;
    double record_every = 0.1;
    double positivity_floor = 1e-13;
    PhibarSign phibar_sign = PhibarSign::Minus;

    void validate() const;
};

TangentVector fpe_rhs(const Density& rho, const GraphSpec& spec);
TangentVector fpe_rhs_phibar(const Density& rho, const GraphSpec& spec, PhibarSign sign = PhibarSign::Minus);
TangentVector beta_zero_rhs(const Density& rho, const GraphSpec& spec);
TangentVector master_rhs(const Density& rho, const GraphSpec& spec);

/// Raw right-hand side on an unchecked state vector. Returns false when the
/// state leaves the domain of the equation (a nonpositive entry where a
/// logarithm is needed); `out` is then unspecified.
bool evaluate_rhs(RhsKind kind, std::span<const double> rho, const GraphSpec& spec, PhibarSign sign,
                  std::span<double> out);

/// Checks kind/β/Φ compatibility; throws Misuse or ParameterDomain.
void check_rhs_kind(RhsKind kind, const GraphSpec& spec);

/// Potential used to order the mobility branches for the given kind at ρ.
std::vector<double> ordering_potential(RhsKind kind, std::span<const double> rho, const GraphSpec& spec,
                                       PhibarSign sign);

/// Pairs with 0 < |Φᵢ - Φⱼ| < 1e-12: almost ties that still take the strict branches.
std::size_t near_tie_pairs(std::span<const double> phi);

struct TrajectoryRecord {
    RhsKind kind = RhsKind::Fpe;
    GraphSpec spec;
    IntegratorConfig config;
    std::vector<double> times{};
    std::vector<std::vector<double>> states{};
    std::vector<double> F_values{};
    std::vector<double> L_values{};  // NaN when β = 0 (no Gibbs state)
    std::vector<double> mass_values{};
    std::vector<double> inf_values{};
    std::vector<double> sup_values{};
    std::vector<double> reference{};  // ρ* used for L; empty when β = 0
    std::size_t steps_accepted = 0;
    std::size_t steps_rejected = 0;
    std::size_t positivity_rejections = 0;
    std::size_t near_ties = 0;

    Density state(std::size_t k) const;
};

/// Dormand–Prince 5(4) in density coordinates. Steps are rejected and halved
/// when a component drops below the positivity floor (or below 0 for β = 0),
/// and clipped to land exactly on the record grid k·record_every.
TrajectoryRecord integrate(RhsKind kind, const Density& rho0, const GraphSpec& spec,
                           const IntegratorConfig& config);

struct MonitorOptions {
    std::size_t dissipation_samples = 20;
    double dissipation_rel_tol = 1e-4;
    double fd_step = 1e-3;
};

struct MonitorReport {
    // (a) F(t_{k+1}) - F(t_k) ≤ 1e-10
    bool F_monotone = true;
    double max_F_increase = -std::numeric_limits<double>::infinity();
    // (b) C1 - 1e-9 ≤ inf ρ, sup ρ ≤ C2 + 1e-9 once inside [C1, C2]
    bool barrier_checked = false;
    bool barrier = true;
    bool barrier_entered = false;
    double barrier_margin_lower = std::numeric_limits<double>::infinity();
    double barrier_margin_upper = std::numeric_limits<double>::infinity();
    // (c) L(t_{k+1}) ≤ L(t_k) + 1e-12
    bool L_checked = false;
    bool L_monotone = true;
    double max_L_increase = -std::numeric_limits<double>::infinity();
    // (d) centered difference of F against -g(σ, σ)
    bool dissipation_checked = false;
    bool dissipation = true;
    std::size_t dissipation_sampled = 0;
    double max_dissipation_rel_error = 0.0;
    // L(t) ≤ L(0) e^{-Ct}, in logs, slack 1e-6
    bool decay_checked = false;
    bool L_decay = true;
    double L_decay_margin = std::numeric_limits<double>::infinity();
    // ‖ρ - ρ*‖² ≤ (sup ρ*/inf ρ*) ‖ρ0 - ρ*‖² e^{-Ct} + 1e-9
    bool l2_bound = true;
    double l2_margin = std::numeric_limits<double>::infinity();
    // |Σ mᵢρᵢ - 1| ≤ 1e-10
    bool mass = true;
    double max_mass_error = 0.0;
    // master kind: ‖ρ - 1‖∞ ≤ ‖ρ0 - 1‖∞ e^{-βt/2} + 1e-6
    bool linf_checked = false;
    bool linf_decay = true;
    double linf_margin = std::numeric_limits<double>::infinity();

    bool passed() const noexcept {
        return F_monotone && barrier && L_monotone && dissipation && L_decay && l2_bound && mass && linf_decay;
    }
};

/// `constants` may be null (β = 0 or no valid truncation); the checks that
/// need them are then skipped.
MonitorReport monitor(const TrajectoryRecord& traj, const ConstantsReport* constants,
                      const MonitorOptions& options = {});

/// Least-squares decay rate of log L over the recorded points with L > 1e-12.
double decay_rate_fit(const TrajectoryRecord& traj);

}  // namespace fpg
