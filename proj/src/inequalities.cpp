#include "fpg/inequalities.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

#include "fpg/error.hpp"
#include "fpg/lp.hpp"
#include "fpg/numeric.hpp"

namespace fpg {

void TalagrandClass::validate() const {
    require(nu_inf > 0.0 && std::isfinite(nu_sup) && nu_inf <= nu_sup, ErrorKind::ParameterDomain,
            "class bounds must satisfy 0 < nu_inf <= nu_sup < inf");
}

bool TalagrandClass::contains(const Density& nu) const noexcept {
    return nu.inf() >= nu_inf && nu.sup() <= nu_sup;
}

std::vector<double> potential_of(const Density& mu) {
    require(mu.interior(), ErrorKind::Domain, "reference measure must be interior");
    std::vector<double> phi(mu.size());
    for (std::size_t i = 0; i < phi.size(); ++i) phi[i] = -std::log(mu[i]);
    return phi;
}

TalagrandConstants talagrand_kappa(const Density& mu, const TalagrandClass& cls, double delta) {
    cls.validate();
    require(mu.interior(), ErrorKind::Domain, "reference measure must be interior");
    const double sup = mu.sup();
    const double inf = mu.inf();
    const auto& weights = mu.weights();

    TalagrandConstants k;
    k.C0 = 4.0 * (sup / inf) * cls.nu_sup * cls.nu_sup + 4.0 * sup + 2.0 * weighted_norm2(weights.m(), mu.values());
    k.N0 = estimate_N0(weights, k.C0, delta);
    k.M_N0 = min_weight_prefix(weights, k.N0);
    k.phi_sup = max_abs(potential_of(mu));

    const double phi = k.phi_sup;
    const double M = k.M_N0;
    k.log_C3 = std::min({std::log(0.5 * cls.nu_inf), -4.0 * phi / M - std::log(4.0),
                         std::log(M) - std::log(4.0 * (2.0 * phi + 1.0))});
    const double barrier_exponent = phi == 0.0 ? 0.0 : 2.0 * phi / M * std::exp(-k.log_C3);
    k.log_C4 = std::max({std::log(2.0 * cls.nu_sup), barrier_exponent - std::log(2.0 * M),
                         std::log(2.0 * phi + 2.0) - std::log(M), std::log(2.0) - std::log(M)});
    k.C5 = sup / inf;
    k.log_C6 = k.log_C3 - k.log_C4 + std::log(inf) - std::log(sup);
    k.log_T = std::log(std::log(4.0 * k.C5)) - k.log_C6;
    k.log_kappa = std::log(2.0) + k.log_T + log_add_exp(0.0, std::log(2.0) + 2.0 * (k.log_C4 - k.log_C3));

    k.C3 = std::exp(k.log_C3);
    k.C4 = std::exp(k.log_C4);
    k.C6 = std::exp(k.log_C6);
    k.T = std::exp(k.log_T);
    k.kappa = std::exp(k.log_kappa);
    return k;
}

TalagrandReport verify_talagrand(const Density& mu, const Density& nu, const TalagrandClass& cls,
                                 const GeodesicConfig& geo_config, double delta) {
    cls.validate();
    require(mu.size() == nu.size(), ErrorKind::ParameterDomain, "densities have different sizes");
    if (!cls.contains(nu))
        throw Error(ErrorKind::ClassViolation, "nu outside [" + std::to_string(cls.nu_inf) + ", " +
                                                   std::to_string(cls.nu_sup) + "] (inf " + std::to_string(nu.inf()) +
                                                   ", sup " + std::to_string(nu.sup()) + ")");
    TalagrandReport rep;
    rep.constants = talagrand_kappa(mu, cls, delta);
    const auto phi = potential_of(mu);
    rep.geodesic = geodesic_distance(mu, nu, phi, geo_config);
    rep.distance = rep.geodesic.distance;
    rep.distance2 = rep.distance * rep.distance;
    rep.entropy = relative_entropy(nu, mu);
    // κ·H in logs: κ alone may overflow while the product stays meaningful.
    rep.rhs = (rep.entropy == 0.0 ? 0.0 : std::exp(rep.constants.log_kappa + std::log(rep.entropy))) + 1e-9;
    rep.ratio = rep.entropy > 0.0 ? rep.distance2 / rep.entropy : std::nan("");
    rep.passed = rep.distance2 <= rep.rhs;
    return rep;
}

namespace {

// max Σ sᵢ ψᵢ over ψ ∈ [-1,1]^N with pairwise spread ≤ 1, via x = ψ + 1 ∈ [0,2].
double signed_bl_max(const std::vector<double>& s, double s_total, W1Stats& stats) {
    const std::size_t n = s.size();
    BoundedLp lp;
    lp.n = n;
    lp.c = s;
    lp.upper.assign(n, 2.0);
    std::vector<double> row(n, 0.0);
    auto add_pair = [&](std::size_t i, std::size_t j) {
        row[i] = 1.0;
        row[j] = -1.0;
        lp.add_row(row, 1.0);
        row[i] = 0.0;
        row[j] = 0.0;
    };

    LpSolution sol;
    if (n <= kW1ExplicitLimit) {
        stats.mode = LpMode::Explicit;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j) add_pair(i, j);
        sol = solve_bounded_lp(lp);
        stats.rounds += 1;
        stats.pivots += sol.pivots;
    } else {
        stats.mode = LpMode::RowGenerated;
        std::set<std::pair<std::size_t, std::size_t>> present;
        for (std::size_t round = 0;; ++round) {
            if (round >= 200) throw Error(ErrorKind::Numerical, "W1 row generation did not terminate");
            sol = solve_bounded_lp(lp);
            stats.rounds += 1;
            stats.pivots += sol.pivots;
            const auto hi = static_cast<std::size_t>(std::max_element(sol.x.begin(), sol.x.end()) - sol.x.begin());
            const auto lo = static_cast<std::size_t>(std::min_element(sol.x.begin(), sol.x.end()) - sol.x.begin());
            bool added = false;
            for (std::size_t i = 0; i < n; ++i) {
                if (sol.x[i] - sol.x[lo] > 1.0 + 1e-12 && present.emplace(i, lo).second) {
                    add_pair(i, lo);
                    added = true;
                }
                if (sol.x[hi] - sol.x[i] > 1.0 + 1e-12 && present.emplace(hi, i).second) {
                    add_pair(hi, i);
                    added = true;
                }
            }
            if (!added) break;
        }
    }
    stats.constraints = std::max(stats.constraints, lp.rows());
    return sol.objective - s_total;
}

}  // namespace

double w1_distance(const Density& mu, const Density& nu, const WeightSequence& weights, W1Stats* stats) {
    const std::size_t n = weights.size();
    require(mu.size() == n && nu.size() == n, ErrorKind::ParameterDomain, "densities do not match the weights");
    if (n > kW1MaxVertices)
        throw Error(ErrorKind::Budget, "W1 linear program limited to N <= " + std::to_string(kW1MaxVertices));
    const auto m = weights.m();
    std::vector<double> c(n), neg(n);
    bool zero = true;
    for (std::size_t i = 0; i < n; ++i) {
        c[i] = m[i] * (mu[i] - nu[i]);
        neg[i] = -c[i];
        zero = zero && c[i] == 0.0;
    }
    W1Stats local;
    if (zero) {
        if (stats) *stats = local;
        return 0.0;
    }
    const double total = compensated_sum(c);
    const double plus = signed_bl_max(c, total, local);
    const double minus = signed_bl_max(neg, -total, local);
    if (stats) *stats = local;
    return std::max({plus, minus, 0.0});
}

W1Report verify_w1_bound(const Density& mu, const Density& nu, std::span<const double> phi,
                         const GeodesicConfig& geo_config, std::size_t max_refinements) {
    W1Report rep;
    rep.w1 = w1_distance(mu, nu, mu.weights(), &rep.lp);
    GeodesicConfig cfg = geo_config;
    rep.geodesic = geodesic_distance(mu, nu, phi, cfg);
    for (;;) {
        rep.knots = cfg.knots;
        rep.distance = rep.geodesic.distance;
        rep.bound = std::sqrt(2.0) * rep.distance + 1e-6;
        rep.passed = rep.w1 <= rep.bound;
        if (rep.passed || rep.refinements >= max_refinements) break;
        ++rep.refinements;
        cfg.knots *= 2;
        cfg.init = GeodesicInit::Previous;
        auto previous = std::move(rep.geodesic.path);
        rep.geodesic = geodesic_distance(mu, nu, phi, cfg, &previous);
    }
    return rep;
}

}  // namespace fpg
