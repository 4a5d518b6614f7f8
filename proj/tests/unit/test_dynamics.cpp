#include <doctest.h>

#include <cmath>

#include "fpg/dynamics.hpp"
#include "fpg/error.hpp"
#include "fpg/metric.hpp"
#include "support.hpp"

using namespace fpg;
using testing::kind_of;

namespace {

const auto kHalf = testing::explicit_weights({1, 1});

double sup_norm(const TangentVector& s) {
    double r = 0.0;
    for (double x : s.values()) r = std::max(r, std::fabs(x));
    return r;
}

GraphSpec random_spec(Rng& rng, std::size_t n, double beta) {
    const auto w = testing::geometric(rng.uniform(0.4, 0.8), n);
    return GraphSpec(w, testing::uniform_vector(rng, n, -1, 1), beta);
}

}  // namespace

TEST_CASE("equation kinds parse and validate") {
    CHECK(parse_rhs_kind("fpe") == RhsKind::Fpe);
    CHECK(parse_rhs_kind("phibar") == RhsKind::Phibar);
    CHECK(parse_rhs_kind("beta_zero") == RhsKind::BetaZero);
    CHECK(parse_rhs_kind("master") == RhsKind::Master);
    CHECK(to_string(RhsKind::Master) == "master");
    CHECK(kind_of([] { parse_rhs_kind("heat"); }) == ErrorKind::Config);

    const GraphSpec tilted(kHalf, {0.0, 1.0}, 1.0);
    const GraphSpec cold(kHalf, {0.0, 1.0}, 0.0);
    CHECK(kind_of([&] { check_rhs_kind(RhsKind::BetaZero, tilted); }) == ErrorKind::Misuse);
    CHECK(kind_of([&] { check_rhs_kind(RhsKind::Master, tilted); }) == ErrorKind::Misuse);
    CHECK(kind_of([&] { check_rhs_kind(RhsKind::Phibar, cold); }) == ErrorKind::ParameterDomain);
    CHECK(kind_of([&] { check_rhs_kind(RhsKind::Master, GraphSpec(kHalf, {1.0, 1.0}, 0.0)); }) ==
          ErrorKind::ParameterDomain);
}

TEST_CASE("fpe right-hand side by hand") {
    const GraphSpec spec(kHalf, {0.0, 1.0}, 1.0);
    const auto s = fpe_rhs(Density::uniform(kHalf), spec);
    CHECK(s[0] == 0.5);
    CHECK(s[1] == -0.5);
    CHECK(kind_of([&] { fpe_rhs(Density(kHalf, {2.0, 0.0}), spec); }) == ErrorKind::Domain);
}

TEST_CASE("Gibbs is stationary for both orderings") {
    Rng rng(1);
    for (int k = 0; k < 40; ++k) {
        const auto spec = random_spec(rng, 2 + static_cast<std::size_t>(rng.uniform() * 40), rng.uniform(0.3, 2.0));
        const auto star = gibbs(spec);
        CHECK(sup_norm(fpe_rhs(star, spec)) <= 1e-10);
        CHECK(sup_norm(fpe_rhs_phibar(star, spec)) <= 1e-10);
        CHECK(sup_norm(fpe_rhs_phibar(star, spec, PhibarSign::Plus)) <= 1e-10);
    }
}

TEST_CASE("constant potential reduces to the master equation") {
    Rng rng(2);
    for (int k = 0; k < 20; ++k) {
        const std::size_t n = 12;
        const auto w = testing::power_law(2.0, n);
        const double beta = rng.uniform(0.5, 2.0);
        const GraphSpec spec(w, std::vector<double>(n, 0.7), beta);
        const auto rho = testing::random_density(rng, w);
        const auto a = fpe_rhs(rho, spec);
        const auto b = master_rhs(rho, spec);
        for (std::size_t i = 0; i < n; ++i) {
            long double direct = 0;
            for (std::size_t j = 0; j < n; ++j) direct += w->m()[j] * (static_cast<long double>(rho[j]) - rho[i]);
            direct *= beta;
            CHECK(a[i] == doctest::Approx(static_cast<double>(direct)).epsilon(1e-12).scale(1.0));
            CHECK(b[i] == doctest::Approx(static_cast<double>(direct)).epsilon(1e-12).scale(1.0));
        }
    }
}

TEST_CASE("free energy decreases at rate g(sigma, sigma)") {
    // dF/dt = Σ mᵢ (Φᵢ + β(log ρᵢ + 1)) σᵢ must equal -g(σ, σ) with the Φ-ordered mobility.
    Rng rng(3);
    for (int k = 0; k < 30; ++k) {
        const auto spec = random_spec(rng, 3 + static_cast<std::size_t>(rng.uniform() * 20), rng.uniform(0.3, 2.0));
        const auto rho = testing::random_density(rng, spec.weights_ptr(), 1.0);
        const auto sigma = fpe_rhs(rho, spec);
        long double dF = 0;
        for (std::size_t i = 0; i < spec.size(); ++i)
            dF += spec.weights().m()[i] * (spec.phi()[i] + spec.beta() * (std::log(rho[i]) + 1)) * sigma[i];
        const double g = inner_product_g(rho, spec.phi(), sigma, sigma);
        CHECK(static_cast<double>(dF) == doctest::Approx(-g).epsilon(1e-9));
    }
}

TEST_CASE("phibar ordering") {
    const GraphSpec spec(kHalf, {0.0, 0.0}, 2.0);
    const std::vector<double> rho{1.5, 0.5};
    const auto minus = ordering_potential(RhsKind::Phibar, rho, spec, PhibarSign::Minus);
    CHECK(minus[0] == doctest::Approx(-2.0 * std::log(1.5)));
    const auto plus = ordering_potential(RhsKind::Phibar, rho, spec, PhibarSign::Plus);
    CHECK(plus[1] == doctest::Approx(2.0 * std::log(0.5)));
    CHECK(ordering_potential(RhsKind::Fpe, rho, spec, PhibarSign::Minus)[0] == 0.0);

    // With Φ ≡ 0 each summand is β(log ρⱼ - log ρᵢ) times the upwind density.
    const auto s = fpe_rhs_phibar(Density(kHalf, rho), spec);
    const double lo = 2.0 * (std::log(0.5) - std::log(1.5));
    CHECK(s[0] == doctest::Approx(0.5 * lo * 0.5));
    CHECK(s[1] == doctest::Approx(-0.5 * lo * 0.5));
    const auto sp = fpe_rhs_phibar(Density(kHalf, rho), spec, PhibarSign::Plus);
    CHECK(sp[0] == doctest::Approx(0.5 * lo * 1.5));
}

TEST_CASE("pure transport") {
    const auto w = testing::geometric(0.5, 3);
    const GraphSpec flat(w, {1.0, 1.0, 1.0}, 0.0);
    CHECK(sup_norm(beta_zero_rhs(Density::normalized(w, {3, 1, 2}), flat)) == 0.0);
    const GraphSpec ramp(w, {0.0, 1.0, 2.0}, 0.0);
    const auto s = beta_zero_rhs(Density::normalized(w, {1.0, 0.1, 0.1}), ramp);
    CHECK(s[0] >= 0.0);
    CHECK(s.weighted_mean() == doctest::Approx(0.0).scale(1.0));
    // Boundary densities are admissible without entropy.
    CHECK_NOTHROW(beta_zero_rhs(Density::normalized(w, {1.0, 0.0, 0.0}), ramp));
    CHECK(kind_of([&] { beta_zero_rhs(Density::uniform(w), GraphSpec(w, {0.0, 1.0, 2.0}, 1.0)); }) ==
          ErrorKind::Misuse);
}

TEST_CASE("near ties are counted") {
    CHECK(near_tie_pairs(std::vector<double>{0.0, 1e-13, 1.0, 1.0}) == 1);
    CHECK(near_tie_pairs(std::vector<double>{0.0, 0.5}) == 0);
}

TEST_CASE("integrator configuration") {
    IntegratorConfig c;
    CHECK_NOTHROW(c.validate());
    c.t_end = 0.0;
    CHECK(kind_of([&] { c.validate(); }) == ErrorKind::ParameterDomain);
    c = {};
    c.rel_tol = -1.0;
    CHECK(kind_of([&] { c.validate(); }) == ErrorKind::ParameterDomain);
    c = {};
    c.record_every = 0.0;
    CHECK(kind_of([&] { c.validate(); }) == ErrorKind::ParameterDomain);
}

TEST_CASE("two-state master equation closed form") {
    const GraphSpec spec(kHalf, {0.0, 0.0}, 1.0);
    IntegratorConfig c;
    c.t_end = 2.0;
    c.record_every = 0.5;
    for (RhsKind kind : {RhsKind::Master, RhsKind::Fpe}) {
        const auto traj = integrate(kind, Density(kHalf, {1.5, 0.5}), spec, c);
        REQUIRE(traj.times.size() == 5);
        for (std::size_t k = 0; k < traj.times.size(); ++k) {
            CHECK(traj.times[k] == 0.5 * static_cast<double>(k));
            const double e = 0.5 * std::exp(-traj.times[k]);
            CHECK(traj.states[k][0] == doctest::Approx(1 + e).epsilon(1e-7));
            CHECK(traj.states[k][1] == doctest::Approx(1 - e).epsilon(1e-7));
        }
        // L(t) = L(0) e^{-2t}.
        CHECK(decay_rate_fit(traj) == doctest::Approx(2.0).epsilon(0.02));
    }
}

TEST_CASE("record grid ends exactly at t_end") {
    const GraphSpec spec(kHalf, {0.0, 0.0}, 1.0);
    IntegratorConfig c;
    c.t_end = 1.05;
    c.record_every = 0.25;
    const auto traj = integrate(RhsKind::Master, Density(kHalf, {1.5, 0.5}), spec, c);
    REQUIRE(traj.times.size() == 6);
    CHECK(traj.times[4] == 1.0);
    CHECK(traj.times.back() == 1.05);
}

TEST_CASE("Gibbs start stays put") {
    Rng rng(4);
    const auto spec = random_spec(rng, 15, 1.0);
    const auto traj = integrate(RhsKind::Fpe, gibbs(spec), spec, {});
    for (const auto& s : traj.states)
        for (std::size_t i = 0; i < s.size(); ++i) CHECK(std::fabs(s[i] - traj.states[0][i]) <= 1e-9);
    const auto rep = monitor(traj, nullptr);
    CHECK(rep.passed());
    CHECK(kind_of([&] { decay_rate_fit(traj); }) == ErrorKind::InsufficientData);
}

TEST_CASE("perturbed flow passes every monitor") {
    Rng rng(5);
    for (int k = 0; k < 4; ++k) {
        const std::size_t n = 30;
        const auto w = testing::geometric(0.5, n);
        const GraphSpec spec(w, k % 2 ? testing::uniform_vector(rng, n, -1, 1) : std::vector<double>(n, 0.0),
                             0.5 + 0.5 * k);
        std::vector<double> raw(n);
        const auto star = gibbs(spec);
        for (std::size_t i = 0; i < n; ++i) raw[i] = star[i] * std::exp(rng.uniform(-0.5, 0.5));
        const auto rho0 = Density::normalized(w, raw);
        const auto traj = integrate(RhsKind::Fpe, rho0, spec, {});
        const auto constants = invariant_constants(rho0, spec);
        const auto rep = monitor(traj, &constants);
        CHECK(rep.passed());
        CHECK(rep.dissipation_checked);
        CHECK(rep.dissipation_sampled == 20);
        CHECK(rep.L_checked);
        CHECK(rep.decay_checked);
        CHECK(rep.barrier_checked);
        CHECK(rep.max_mass_error <= 1e-12);
        CHECK(decay_rate_fit(traj) >= constants.decay_rate_C);
    }
}

TEST_CASE("monitor scope follows the equation") {
    const auto w = testing::geometric(0.5, 6);
    const GraphSpec cold(w, {0.0, 0.5, 1.0, 1.5, 2.0, 2.5}, 0.0);
    IntegratorConfig c;
    c.t_end = 2.0;
    const auto traj = integrate(RhsKind::BetaZero, Density::uniform(w), cold, c);
    const auto rep = monitor(traj, nullptr);
    CHECK_FALSE(rep.dissipation_checked);
    CHECK_FALSE(rep.L_checked);
    CHECK(rep.F_monotone);
    CHECK(rep.mass);
    CHECK(std::isnan(traj.L_values[0]));

    const auto w30 = testing::geometric(0.5, 30);
    std::vector<double> raw(30, 1.0);
    raw[0] = 2.0;
    raw[29] = 3.0;
    const GraphSpec flat(w30, std::vector<double>(30, 0.0), 1.0);
    const auto rho0 = Density::normalized(w30, raw);
    const auto mtraj = integrate(RhsKind::Master, rho0, flat, c);
    const auto constants = invariant_constants(rho0, flat);
    const auto mrep = monitor(mtraj, &constants);
    CHECK(mrep.linf_checked);
    CHECK(mrep.linf_decay);
    CHECK(mrep.passed());
}
