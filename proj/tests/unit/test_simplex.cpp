#include <doctest.h>

#include <cmath>

#include "fpg/error.hpp"
#include "fpg/simplex.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace fpg;
using testing::kind_of;

namespace {

const auto kHalf = testing::explicit_weights({1, 1});

}  // namespace

TEST_CASE("density construction validates mass and sign") {
    CHECK(Density(kHalf, {1.5, 0.5}).mass() == 1.0);
    CHECK(kind_of([] { Density(kHalf, {1.5, 0.6}); }) == ErrorKind::Domain);
    CHECK(kind_of([] { Density(kHalf, {2.5, -0.5}); }) == ErrorKind::Domain);
    CHECK(kind_of([] { Density(kHalf, {1.0}); }) == ErrorKind::ParameterDomain);
    CHECK(kind_of([] { Density::normalized(kHalf, {0.0, 0.0}); }) == ErrorKind::Domain);

    const auto d = Density::normalized(kHalf, {3.0, 1.0});
    CHECK(d[0] == 1.5);
    CHECK(d[1] == 0.5);
    CHECK(d.inf() == 0.5);
    CHECK(d.sup() == 1.5);
    CHECK_FALSE(Density(kHalf, {2.0, 0.0}).interior());
}

TEST_CASE("tangent vectors are mean-free") {
    CHECK(TangentVector(kHalf, {0.5, -0.5}).weighted_mean() == 0.0);
    CHECK(kind_of([] { TangentVector(kHalf, {0.5, -0.4}); }) == ErrorKind::Domain);
    const auto s = project_tangent(std::vector<double>{1.0, 0.0}, kHalf);
    CHECK(s[0] == 0.5);
    CHECK(s[1] == -0.5);
    const auto w = testing::geometric(0.6, 7);
    const auto z = project_tangent(std::vector<double>(7, 3.25), w);
    for (double x : z.values()) CHECK(std::fabs(x) < 1e-15);
}

TEST_CASE("Gibbs density") {
    CHECK(gibbs(GraphSpec(kHalf, {0.0, 0.0}, 1.0))[0] == 1.0);
    const auto g = gibbs(GraphSpec(kHalf, {0.0, std::log(2.0)}, 1.0));
    CHECK(g[0] == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
    CHECK(g[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(kind_of([] { gibbs(GraphSpec(kHalf, {0.0, 1.0}, 0.0)); }) == ErrorKind::UndefinedGibbs);

    // Linear potential on geometric weights against the closed form.
    const auto w = testing::geometric(0.5, 30);
    std::vector<double> phi(30);
    for (std::size_t i = 0; i < 30; ++i) phi[i] = 0.3 * static_cast<double>(i);
    const double beta = 0.7;
    const auto star = gibbs(GraphSpec(w, phi, beta));
    long double z = 0;
    for (std::size_t i = 0; i < 30; ++i) z += static_cast<long double>(w->m()[i]) * std::exp(-phi[i] / beta);
    for (std::size_t i = 0; i < 30; ++i) {
        const double expected = static_cast<double>(std::exp(static_cast<long double>(-phi[i] / beta)) / z);
        CHECK(std::fabs(star[i] - expected) <= 1e-14 * expected);
    }

    // Potentials that overflow a naive exp(-Φ/β) still work.
    const auto big = gibbs(GraphSpec(kHalf, {-800.0, -799.0}, 1.0));
    CHECK(big[0] / big[1] == doctest::Approx(std::exp(1.0)));
}

TEST_CASE("free energy") {
    const auto w = testing::geometric(0.4, 6);
    CHECK(free_energy(Density::uniform(w), GraphSpec(w, std::vector<double>(6, 0.0), 2.0)) == 0.0);

    // At the Gibbs state F = -β log Σ mᵢ e^{-Φᵢ/β}; here Z = 3/4.
    const GraphSpec spec(kHalf, {0.0, std::log(2.0)}, 1.0);
    const Density star(kHalf, {4.0 / 3.0, 2.0 / 3.0});
    const long double direct = 0.5L * std::log(2.0L) * (2.0L / 3) + 0.5L * (4.0L / 3) * std::log(4.0L / 3) +
                               0.5L * (2.0L / 3) * std::log(2.0L / 3);
    CHECK(free_energy(star, spec) == doctest::Approx(static_cast<double>(direct)).epsilon(1e-15));
    CHECK(free_energy(star, spec) == doctest::Approx(std::log(4.0 / 3.0)).epsilon(1e-15));

    const GraphSpec cold(kHalf, {1.0, 3.0}, 0.0);
    const Density rho(kHalf, {0.5, 1.5});
    CHECK(free_energy(rho, cold) == 0.5 * 0.5 + 0.5 * 3.0 * 1.5);

    const Density edge(kHalf, {2.0, 0.0});
    CHECK(kind_of([&] { free_energy(edge, spec); }) == ErrorKind::Domain);
    CHECK(free_energy(edge, spec, EntropyMode::Lenient) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("Gibbs minimizes the free energy among sampled densities") {
    Rng rng(3);
    const auto w = testing::power_law(2.0, 12);
    const GraphSpec spec(w, testing::uniform_vector(rng, 12, -2, 2), 0.8);
    const double f_star = free_energy(gibbs(spec), spec);
    for (int k = 0; k < 200; ++k) CHECK(free_energy(testing::random_density(rng, w, 2.0), spec) >= f_star);
}

TEST_CASE("relative entropy and relative energy") {
    const Density mu(kHalf, {1.0, 1.0});
    const Density nu(kHalf, {1.5, 0.5});
    CHECK(relative_entropy(mu, mu) == 0.0);
    CHECK(relative_entropy(nu, mu) == doctest::Approx(0.75 * std::log(1.5) + 0.25 * std::log(0.5)).epsilon(1e-15));
    CHECK(relative_entropy(nu, mu) == doctest::Approx(0.1308).epsilon(1e-3));
    const Density point(kHalf, {2.0, 0.0});
    CHECK(kind_of([&] { relative_entropy(mu, point); }) == ErrorKind::InfiniteEntropy);
    CHECK(relative_entropy(point, mu) == doctest::Approx(std::log(2.0)));

    CHECK(relative_energy_L(nu, mu) == 0.25);
    CHECK(relative_energy_L(mu, mu) == 0.0);
    CHECK(l2m_distance2(nu, mu) == 0.25);

    Rng rng(5);
    const auto w = testing::geometric(0.7, 25);
    for (int k = 0; k < 50; ++k) {
        const auto a = testing::random_density(rng, w);
        const auto b = testing::random_density(rng, w);
        CHECK(relative_entropy(a, b) >= 0.0);
        // H ≤ log(1 + χ²) ≤ χ², with χ² = L(a | b).
        CHECK(relative_entropy(a, b) <= std::log1p(relative_energy_L(a, b)) + 1e-14);
    }
}

TEST_CASE("invariant constants follow the closed form") {
    Rng rng(9);
    const auto w = testing::geometric(0.5, 40);
    SUBCASE("constant potential stays in double range") {
        const GraphSpec spec(w, std::vector<double>(40, 0.0), 1.5);
        const auto rho0 = testing::random_density(rng, w, 0.5);
        const auto c = invariant_constants(rho0, spec, 0.5);
        // ρ* ≡ 1: C0 = 4 (sup ρ0)² + 4 + 2.
        CHECK(c.C0 == doctest::Approx(4 * rho0.sup() * rho0.sup() + 6).epsilon(1e-14));
        const auto m = testing::to_vector(w->m());
        CHECK(c.N0 == *oracle::scan_N0(m, w->raw_tail_mass(), c.C0, 0.5));
        const double M = m[c.N0 - 1];
        CHECK(c.M_N0 == M);
        const double C1 = std::min({0.5 * rho0.inf(), 0.25, 1.5 * M / (4 * 1.5)});
        const double C2 = std::max({2 * rho0.sup(), 1 / (2 * M), 2 * 1.5 / (1.5 * M), 2 / M});
        CHECK(c.C1 == doctest::Approx(C1).epsilon(1e-13));
        CHECK(c.C2 == doctest::Approx(C2).epsilon(1e-13));
        CHECK(c.decay_rate_C == doctest::Approx(1.5 * C1 / C2).epsilon(1e-13));
    }
    SUBCASE("non-constant potential is carried in logs") {
        const GraphSpec spec(w, testing::uniform_vector(rng, 40, -1, 1), 1.0);
        const auto c = invariant_constants(testing::random_density(rng, w, 0.5), spec, 0.5);
        CHECK(std::isfinite(c.log_C1));
        CHECK(c.log_C1 <= -4 * spec.phi_sup_norm() / c.M_N0 - std::log(4.0) + 1e-9);
        CHECK(c.C1 == std::exp(c.log_C1));
        CHECK(c.log_C2 >= c.log_C1);
        CHECK(c.decay_rate_C >= 0.0);
    }
    SUBCASE("short truncation is reported") {
        const auto tiny = testing::geometric(0.9, 5);
        const GraphSpec spec(tiny, std::vector<double>(5, 0.0), 1.0);
        CHECK(kind_of([&] { invariant_constants(Density::uniform(tiny), spec); }) ==
              ErrorKind::InsufficientTruncation);
    }
}

TEST_CASE("functional identities on random instances") {
    Rng rng(11);
    for (int k = 0; k < 100; ++k) {
        const auto n = 2 + static_cast<std::size_t>(rng.uniform() * 40);
        const auto w = k % 2 ? testing::geometric(rng.uniform(0.3, 0.9), n) : testing::power_law(rng.uniform(1.5, 3), n);
        const GraphSpec spec(w, testing::uniform_vector(rng, n, -2, 2), rng.uniform(0.3, 2));
        const auto star = gibbs(spec);
        const auto rho = testing::random_density(rng, w, 1.0);

        // F(ρ) - F(ρ*) = β H(ρ|ρ*), since Φ = -β log ρ* + const.
        const double gap = free_energy(rho, spec) - free_energy(star, spec);
        CHECK(std::fabs(gap - spec.beta() * relative_entropy(rho, star)) <= 1e-10 * std::max(1.0, std::fabs(gap)));

        // ‖ρ - ρ*‖² / sup ρ* ≤ L ≤ ‖ρ - ρ*‖² / inf ρ*.
        const double d2 = l2m_distance2(rho, star);
        const double L = relative_energy_L(rho, star);
        CHECK(d2 / star.sup() <= L * (1 + 1e-14));
        CHECK(L <= d2 / star.inf() * (1 + 1e-14));

        // A perturbation of at most 1e-9 per vertex gives H within 1e-12 of 0.
        std::vector<double> near(n);
        for (std::size_t i = 0; i < n; ++i) near[i] = rho[i] * (1 + 4e-10 / rho.sup() * rng.uniform(-1, 1));
        const auto nu = Density::normalized(w, std::move(near));
        double dmax = 0;
        for (std::size_t i = 0; i < n; ++i) dmax = std::max(dmax, std::fabs(nu[i] - rho[i]));
        REQUIRE(dmax <= 1e-9);
        CHECK(relative_entropy(nu, rho) <= 1e-12);
        CHECK(relative_entropy(nu, rho) >= -1e-12);
    }
}
