// Named polytope registry and the deterministic potential samplers.

#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "kfl/models.hpp"

using namespace kfl;

TEST_CASE("the registry knows every model name") {
  for (const char* name : {"p1", "p1-fano", "football", "dp3", "dp1", "dp1-trapezoid", "square"}) {
    Polytope P = make_polytope(name);
    REQUIRE(P.volume() > 0.0);
  }
  REQUIRE_THROWS_AS(make_polytope("no-such-model"), Error);
}

TEST_CASE("default cone angle is one except on the football") {
  REQUIRE(default_beta("football") == 0.5);
  REQUIRE(default_beta("p1") == 1.0);
  REQUIRE(default_beta("dp3") == 1.0);
}

TEST_CASE("sampled potentials are convex, normalized and reproducible") {
  ModelPtr m = kfltest::model("dp3", 65);
  Rng a(123), b(123);
  SymplecticPotential u = sample_potential(m, a, 0.6);
  SymplecticPotential v = sample_potential(m, b, 0.6);
  REQUIRE(u.dev == v.dev);  // same seed, same draw
  REQUIRE(u.normalized);
  REQUIRE(std::fabs(u.mean_dev()) <= 1e-12);
  REQUIRE(u.is_convex(1e-9));

  Rng c(124);
  SymplecticPotential w = sample_potential(m, c, 0.6);
  REQUIRE(u.dev != w.dev);
}

TEST_CASE("even samples mirror across the center of a symmetric model") {
  ModelPtr m = kfltest::model("p1-fano", 1025);
  Rng rng(5);
  SymplecticPotential u = sample_potential(m, rng, 0.7, 3, /*even_symmetric=*/true);
  const GridSpec& s = m->spec();
  const int N = s.shape[0];
  for (int i = 0; i < N; ++i) {
    const std::size_t k = s.index(i, 0), km = s.index(N - 1 - i, 0);
    REQUIRE(std::fabs(u.dev[k] - u.dev[km]) <= 1e-12);
  }
}

TEST_CASE("quadratic bumps are centered where requested") {
  ModelPtr m = kfltest::model("dp3", 65);
  SymplecticPotential u = quadratic_potential(m, 0.3, Vec2{0.2, -0.1});
  REQUIRE(u.normalized);
  REQUIRE(u.is_convex(1e-9));
  // un-normalized values differ by a constant from the requested paraboloid
  const GridSpec& s = m->spec();
  const MaskedGrid& g = m->grid();
  const std::size_t k0 = g.support[0], k1 = g.support[g.support.size() / 2];
  auto parab = [&](std::size_t k) {
    const Vec2 d = sub(s.node(k), Vec2{0.2, -0.1});
    return 0.3 * dot(2, d, d);
  };
  REQUIRE(kfltest::near(u.dev[k0] - u.dev[k1], parab(k0) - parab(k1), 1e-12));
}
