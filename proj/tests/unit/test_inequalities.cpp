#include <doctest.h>

#include <cmath>

#include "fpg/error.hpp"
#include "fpg/inequalities.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace fpg;
using testing::kind_of;

namespace {

Density perturbed_uniform(Rng& rng, const WeightsPtr& w, double eps) {
    std::vector<double> raw(w->size());
    for (double& x : raw) x = std::exp(eps * rng.uniform(-1, 1));
    return Density::normalized(w, std::move(raw));
}

}  // namespace

TEST_CASE("W1 equals total variation under the unit ground metric") {
    Rng rng(21);
    for (std::size_t n : {2, 3, 7, 20, 30}) {
        const auto w = testing::geometric(0.6, n);
        const auto m = testing::to_vector(w->m());
        for (int k = 0; k < 10; ++k) {
            const auto a = testing::random_density(rng, w, 1.5);
            const auto b = testing::random_density(rng, w, 1.5);
            W1Stats stats;
            const double d = w1_distance(a, b, *w, &stats);
            CHECK(stats.mode == LpMode::Explicit);
            CHECK(d == doctest::Approx(oracle::total_variation(m, testing::to_vector(a.values()),
                                                               testing::to_vector(b.values())))
                           .epsilon(1e-10));
        }
    }
}

TEST_CASE("W1 extremal and trivial pairs") {
    const auto w = testing::explicit_weights({1, 1});
    const Density mu(w, {2.0, 0.0});
    const Density nu(w, {0.0, 2.0});
    CHECK(w1_distance(mu, nu, *w) == 1.0);
    CHECK(w1_distance(mu, mu, *w) == 0.0);
    CHECK(w1_distance(nu, mu, *w) == 1.0);
}

TEST_CASE("W1 by row generation on larger graphs") {
    Rng rng(22);
    for (std::size_t n : {31, 80, 200}) {
        const auto w = testing::power_law(2.0, n);
        const auto m = testing::to_vector(w->m());
        const auto a = testing::random_density(rng, w, 1.0);
        const auto b = testing::random_density(rng, w, 1.0);
        W1Stats stats;
        const double d = w1_distance(a, b, *w, &stats);
        CHECK(stats.mode == LpMode::RowGenerated);
        CHECK(stats.rounds >= 1);
        CHECK(d == doctest::Approx(oracle::total_variation(m, testing::to_vector(a.values()),
                                                           testing::to_vector(b.values())))
                       .epsilon(1e-9));
    }
    const auto big = testing::geometric(0.99, 501);
    CHECK(kind_of([&] { w1_distance(Density::uniform(big), Density::uniform(big), *big); }) == ErrorKind::Budget);
}

TEST_CASE("Talagrand class validation") {
    CHECK(kind_of([] { TalagrandClass{0.0, 2.0}.validate(); }) == ErrorKind::ParameterDomain);
    CHECK(kind_of([] { TalagrandClass{2.0, 1.0}.validate(); }) == ErrorKind::ParameterDomain);
    CHECK(kind_of([] { TalagrandClass{0.5, INFINITY}.validate(); }) == ErrorKind::ParameterDomain);
    const auto w = testing::explicit_weights({1, 1});
    CHECK(TalagrandClass{0.5, 2.0}.contains(Density(w, {1.5, 0.5})));
    CHECK_FALSE(TalagrandClass{0.6, 2.0}.contains(Density(w, {1.5, 0.5})));
}

TEST_CASE("Talagrand constants and verification") {
    const auto w = testing::geometric(0.5, 15);
    const auto mu = Density::uniform(w);
    const TalagrandClass cls{0.5, 2.0};
    const auto k = talagrand_kappa(mu, cls);
    CHECK(std::isfinite(k.log_kappa));
    CHECK(std::isfinite(k.kappa));
    CHECK(k.kappa > 0.0);
    CHECK(k.phi_sup == 0.0);

    for (double x : potential_of(mu)) CHECK(x == 0.0);

    // geometric(0.7) leaves raw tail 0.7^10 ≈ 0.028 at N = 10, so √tail · C0 > δ for
    // every N0; a longer truncation gives a finite κ.
    const auto short_w = testing::geometric(0.7, 10);
    CHECK(kind_of([&] { talagrand_kappa(Density::uniform(short_w), cls); }) == ErrorKind::InsufficientTruncation);
    CHECK(std::isfinite(talagrand_kappa(Density::uniform(testing::geometric(0.7, 60)), cls).log_kappa));

    GeodesicConfig geo;
    geo.knots = 16;
    const auto same = verify_talagrand(mu, mu, cls, geo);
    CHECK(same.passed);
    CHECK(same.entropy == 0.0);
    CHECK(same.distance == 0.0);

    Rng rng(23);
    for (int s = 0; s < 5; ++s) {
        const auto nu = perturbed_uniform(rng, w, 0.3);
        REQUIRE(cls.contains(nu));
        const auto r = verify_talagrand(mu, nu, cls, geo);
        CHECK(r.passed);
        CHECK(r.entropy > 0.0);
        CHECK(r.distance2 <= r.rhs);
        CHECK(r.ratio == doctest::Approx(r.distance2 / r.entropy));
    }

    const auto far = Density::normalized(w, [&] {
        std::vector<double> raw(15, 1.0);
        raw[0] = 40.0;
        return raw;
    }());
    CHECK(kind_of([&] { verify_talagrand(mu, far, cls, geo); }) == ErrorKind::ClassViolation);
}

TEST_CASE("W1 bound against the geodesic distance") {
    Rng rng(24);
    GeodesicConfig geo;
    geo.knots = 16;
    for (std::size_t n : {2, 6, 12}) {
        const auto w = testing::geometric(0.5, n);
        const auto phi = testing::uniform_vector(rng, n, -1, 1);
        for (int k = 0; k < 3; ++k) {
            const auto a = testing::random_density(rng, w, 1.0);
            const auto b = testing::random_density(rng, w, 1.0);
            const auto r = verify_w1_bound(a, b, phi, geo);
            CHECK(r.passed);
            CHECK(r.w1 <= r.bound);
            CHECK(r.bound == doctest::Approx(std::sqrt(2.0) * r.distance + 1e-6));
        }
    }

    // Close to the boundary of the simplex the bound still holds.
    const auto w = testing::explicit_weights({1, 1});
    const Density a(w, {1.999, 0.001});
    const Density b(w, {0.001, 1.999});
    const auto r = verify_w1_bound(a, b, std::vector<double>{0.0, 0.0}, geo);
    CHECK(r.passed);
    CHECK(r.w1 == doctest::Approx(0.999));
}
