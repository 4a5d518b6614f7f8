#include "fpg/simplex.hpp"

#include <algorithm>
#include <cmath>

#include "fpg/error.hpp"
#include "fpg/numeric.hpp"

namespace fpg {

Density::Density(WeightsPtr weights, std::vector<double> rho) : weights_(std::move(weights)), rho_(std::move(rho)) {
    require(weights_ != nullptr, ErrorKind::ParameterDomain, "density needs weights");
    require(rho_.size() == weights_->size(), ErrorKind::ParameterDomain, "density length does not match weights");
    for (double r : rho_)
        require(r >= 0.0 && std::isfinite(r), ErrorKind::Domain, "density values must be finite and nonnegative");
    require(std::abs(mass() - 1.0) <= kMassTolerance, ErrorKind::Domain, "density mass differs from 1");
}

Density Density::normalized(WeightsPtr weights, std::vector<double> raw) {
    require(weights != nullptr && raw.size() == weights->size(), ErrorKind::ParameterDomain,
            "density length does not match weights");
    for (double r : raw)
        require(r >= 0.0 && std::isfinite(r), ErrorKind::Domain, "density values must be finite and nonnegative");
    const double total = weighted_sum(weights->m(), raw);
    require(total > 0.0, ErrorKind::Domain, "cannot normalize a zero density");
    for (double& r : raw) r /= total;
    return Density(std::move(weights), std::move(raw));
}

Density Density::uniform(WeightsPtr weights) {
    const std::size_t n = weights->size();
    return Density(std::move(weights), std::vector<double>(n, 1.0));
}

double Density::mass() const noexcept { return weighted_sum(weights_->m(), rho_); }
double Density::inf() const noexcept { return min_of(rho_); }
double Density::sup() const noexcept { return max_of(rho_); }

TangentVector::TangentVector(WeightsPtr weights, std::vector<double> sigma)
    : weights_(std::move(weights)), sigma_(std::move(sigma)) {
    require(weights_ != nullptr, ErrorKind::ParameterDomain, "tangent vector needs weights");
    require(sigma_.size() == weights_->size(), ErrorKind::ParameterDomain,
            "tangent vector length does not match weights");
    CompensatedSum scale;
    for (std::size_t i = 0; i < sigma_.size(); ++i) {
        require(std::isfinite(sigma_[i]), ErrorKind::Domain, "tangent vector must be finite");
        scale.add((*weights_)[i] * std::abs(sigma_[i]));
    }
    require(std::abs(weighted_mean()) <= kMeanTolerance * std::max(1.0, scale.value()), ErrorKind::Domain,
            "tangent vector is not mean-free");
}

double TangentVector::weighted_mean() const noexcept { return weighted_sum(weights_->m(), sigma_); }

Density gibbs(const GraphSpec& spec) {
    if (!(spec.beta() > 0.0)) throw Error(ErrorKind::UndefinedGibbs, "Gibbs state requires beta > 0");
    const auto phi = spec.phi();
    std::vector<double> expo(phi.size());
    for (std::size_t i = 0; i < phi.size(); ++i) expo[i] = -phi[i] / spec.beta();
    const double shift = max_of(expo);
    std::vector<double> e(phi.size());
    for (std::size_t i = 0; i < phi.size(); ++i) e[i] = std::exp(expo[i] - shift);
    const double z = weighted_sum(spec.weights().m(), e);
    for (double& v : e) v /= z;
    return Density(spec.weights_ptr(), std::move(e));
}

double free_energy(const Density& rho, const GraphSpec& spec, EntropyMode mode) {
    const auto m = spec.weights().m();
    const auto phi = spec.phi();
    CompensatedSum potential;
    for (std::size_t i = 0; i < m.size(); ++i) potential.add(m[i] * phi[i] * rho[i]);
    if (spec.beta() == 0.0) return potential.value();

    if (mode == EntropyMode::Strict && !rho.interior())
        throw Error(ErrorKind::Domain, "free energy with beta > 0 needs an interior density");
    CompensatedSum entropy;
    for (std::size_t i = 0; i < m.size(); ++i)
        if (rho[i] > 0.0) entropy.add(m[i] * rho[i] * std::log(rho[i]));
    return potential.value() + spec.beta() * entropy.value();
}

double relative_entropy(const Density& nu, const Density& mu) {
    require(nu.size() == mu.size(), ErrorKind::ParameterDomain, "densities have different sizes");
    const auto m = nu.weights().m();
    // Summed as Σ mᵢ μᵢ h(νᵢ/μᵢ), h(x) = x log x - x + 1 ≥ 0. The added Σ mᵢ(μᵢ - νᵢ)
    // vanishes for unit-mass densities and makes every term nonnegative, so the
    // result cannot go negative through cancellation when ν ≈ μ.
    CompensatedSum s;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (nu[i] == 0.0) {
            s.add(m[i] * mu[i]);
            continue;
        }
        if (mu[i] == 0.0)
            throw Error(ErrorKind::InfiniteEntropy, "mu vanishes where nu is positive (vertex " + std::to_string(i) + ")");
        const double d = (nu[i] - mu[i]) / mu[i];
        const double term = (1.0 + d) * std::log1p(d) - d;
        s.add(m[i] * mu[i] * std::max(term, 0.0));
    }
    return s.value();
}

double relative_energy_L(const Density& rho, const Density& rho_star) {
    require(rho_star.interior(), ErrorKind::Domain, "reference density must be interior");
    const auto m = rho.weights().m();
    CompensatedSum s;
    for (std::size_t i = 0; i < m.size(); ++i) {
        const double d = rho[i] - rho_star[i];
        s.add(m[i] * d * d / rho_star[i]);
    }
    return s.value();
}

double l2m_distance2(const Density& a, const Density& b) {
    const auto m = a.weights().m();
    CompensatedSum s;
    for (std::size_t i = 0; i < m.size(); ++i) {
        const double d = a[i] - b[i];
        s.add(m[i] * d * d);
    }
    return s.value();
}

ConstantsReport invariant_constants(const Density& rho0, const GraphSpec& spec, double delta) {
    require(spec.beta() > 0.0, ErrorKind::ParameterDomain, "invariant constants need beta > 0");
    require(rho0.interior(), ErrorKind::Domain, "initial density must be interior");
    const Density star = gibbs(spec);
    const double beta = spec.beta();
    const double star_sup = star.sup();
    const double star_inf = star.inf();
    const double rho0_sup = rho0.sup();

    ConstantsReport r;
    r.delta = delta;
    r.C0 = 4.0 * (star_sup / star_inf) * rho0_sup * rho0_sup + 4.0 * star_sup +
           2.0 * weighted_norm2(spec.weights().m(), star.values());
    r.N0 = estimate_N0(spec.weights(), r.C0, delta);
    r.M_N0 = min_weight_prefix(spec.weights(), r.N0);

    const double phi = spec.phi_sup_norm();
    const double M = r.M_N0;
    r.log_C1 = std::min({std::log(0.5 * rho0.inf()), -4.0 * phi / (M * beta) - std::log(4.0),
                         std::log(beta * M) - std::log(4.0 * (2.0 * phi + beta))});
    r.C1 = std::exp(r.log_C1);

    // 2‖Φ‖/(β C1 M) = 2‖Φ‖/(β M) · e^{-log C1}; +inf once C1 underflows.
    const double barrier_exponent = phi == 0.0 ? 0.0 : 2.0 * phi / (beta * M) * std::exp(-r.log_C1);
    r.log_C2 = std::max({std::log(2.0 * rho0_sup), barrier_exponent - std::log(2.0 * M),
                         std::log(2.0 * phi + 2.0 * beta) - std::log(beta * M), std::log(2.0) - std::log(M)});
    r.C2 = std::exp(r.log_C2);

    r.log_decay_rate = std::log(beta) + r.log_C1 - r.log_C2 + std::log(star_inf) - std::log(star_sup);
    r.decay_rate_C = std::exp(r.log_decay_rate);
    return r;
}

TangentVector project_tangent(std::span<const double> x, const WeightsPtr& weights) {
    require(x.size() == weights->size(), ErrorKind::ParameterDomain, "vector length does not match weights");
    const double c = weighted_sum(weights->m(), x);
    std::vector<double> sigma(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) sigma[i] = x[i] - c;
    return TangentVector(weights, std::move(sigma));
}

}  // namespace fpg
