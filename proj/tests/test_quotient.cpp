// Quotient distance, quotient J-energy and the properness fit.

#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "kfl/quotient.hpp"

using namespace kfl;

TEST_CASE("quotient distance collapses affine orbits") {
  ModelPtr m = kfltest::model("dp3", 65);
  Rng rng(42);
  SymplecticPotential u = sample_potential(m, rng, 0.5);
  const AffineFunction g{{0.3, -0.2}, 0.4};
  SymplecticPotential v = torus_act(u, g);

  QuotientResult q = d1_quotient(u, v);
  REQUIRE(q.value <= 1e-8);
  REQUIRE(q.residual <= 1e-7);
  // u - v is (minus) the affine function up to its quadrature mean, so the
  // fitted slope must be the negated group element
  REQUIRE(kfltest::near(q.minimizer.b[0], -0.3, 1e-6));
  REQUIRE(kfltest::near(q.minimizer.b[1], 0.2, 1e-6));
  // dp3 is centrally symmetric, so the mean of the affine part is its constant
  REQUIRE(std::fabs(q.minimizer.c) <= 1e-6);
}

TEST_CASE("quotient distance never exceeds the plain distance") {
  ModelPtr m = kfltest::model("dp3", 65);
  Rng rng(7);
  for (int trial = 0; trial < 3; ++trial) {
    SymplecticPotential u = sample_potential(m, rng, 0.5);
    SymplecticPotential v = sample_potential(m, rng, 0.5);
    const double plain = d1_l1_route(u, v);
    QuotientResult q = d1_quotient(u, v);
    REQUIRE(q.value <= plain + 1e-12 * (1.0 + plain));
    REQUIRE(q.value >= 0.0);
  }
}

TEST_CASE("quotient solver matches the hierarchical grid search") {
  ModelPtr m = kfltest::model("dp3", 65);
  Rng rng(11);
  for (int trial = 0; trial < 3; ++trial) {
    SymplecticPotential u = sample_potential(m, rng, 0.6);
    SymplecticPotential v = sample_potential(m, rng, 0.6);
    QuotientResult q = d1_quotient(u, v);
    QuotientResult bf = brute_force_quotient(u, v);
    REQUIRE(std::fabs(q.value - bf.value) <= 1e-2);
    // the grid search stops at a finite step, so the smooth solver wins
    REQUIRE(q.value <= bf.value + 1e-6);
  }
}

TEST_CASE("quotient J-energy is invariant under the affine action") {
  ModelPtr m = kfltest::model("p1-fano", 1025);
  Rng rng(5);
  SymplecticPotential u = sample_potential(m, rng, 0.4);
  SymplecticPotential v = torus_act(u, AffineFunction{{0.25, 0.0}, 0.3});
  QuotientResult qu = j_quotient(u);
  QuotientResult qv = j_quotient(v);
  REQUIRE(std::fabs(qu.value - qv.value) <= 1e-5 * (1.0 + std::fabs(qu.value)));
}

TEST_CASE("quotient J-energy lower-bounds the plain J-energy") {
  ModelPtr m = kfltest::model("p1-fano", 1025);
  Rng rng(9);
  SymplecticPotential u = sample_potential(m, rng, 0.5);
  const JEnergy jr = j_energy(u);
  QuotientResult q = j_quotient(u);
  REQUIRE(q.value <= jr.j + 1e-9 * (1.0 + std::fabs(jr.j)));
  REQUIRE(q.value >= -1e-6);
}

TEST_CASE("quotient J-energy of an even potential is minimized near the origin") {
  ModelPtr m = kfltest::model("p1-fano", 1025);
  Rng rng(13);
  SymplecticPotential u = sample_potential(m, rng, 0.5, 3, /*even_symmetric=*/true);
  QuotientResult q = j_quotient(u);
  REQUIRE(std::fabs(q.minimizer.b[0]) <= 2e-3);
  REQUIRE(std::fabs(q.value - j_energy(u).j) <= 1e-6 * (1.0 + std::fabs(q.value)));
}

TEST_CASE("torus polar splitting passes the parts through") {
  TorusElement g;
  g.theta = {0.3, -0.1};
  g.radial = {1.5, 2.5};
  PolarParts p = torus_polar(g);
  REQUIRE(p.compact[0] == 0.3);
  REQUIRE(p.compact[1] == -0.1);
  REQUIRE(p.ray[0] == 1.5);
  REQUIRE(p.ray[1] == 2.5);
}

TEST_CASE("properness fit recovers a linear growth bound") {
  std::vector<double> d, f;
  for (int i = 0; i < 30; ++i) {
    d.push_back(0.1 * (i + 1));
    f.push_back(2.0 * d.back() - 1.0);
  }
  PropernessReport r = properness_fit(d, f, "linear");
  REQUIRE(std::fabs(r.C - 2.0) <= 2e-4);
  REQUIRE(std::fabs(r.D - 1.0) <= 2e-4);
  REQUIRE(r.min_margin >= -1e-12);
  REQUIRE(r.proper);
  REQUIRE(r.n_samples == 30);
  REQUIRE(r.family_descriptor == "linear");
}

TEST_CASE("properness fit rejects bounded data") {
  std::vector<double> d, f;
  for (int i = 0; i < 30; ++i) {
    d.push_back(0.1 * (i + 1));
    f.push_back(std::min(d.back(), 1.0));
  }
  PropernessReport r = properness_fit(d, f);
  REQUIRE(r.C <= 1.1e-3);
  REQUIRE_FALSE(r.proper);
}

TEST_CASE("properness fit returns zero slope for decreasing data") {
  std::vector<double> d, f;
  for (int i = 0; i < 30; ++i) {
    d.push_back(0.1 * (i + 1));
    f.push_back(-d.back());
  }
  PropernessReport r = properness_fit(d, f);
  REQUIRE(r.C == 0.0);
  REQUIRE_FALSE(r.proper);
  REQUIRE(r.min_margin >= -1e-12);
}

TEST_CASE("properness fit demands enough spread") {
  std::vector<double> d{1, 2, 3, 4, 5};
  std::vector<double> f{1, 2, 3, 4, 5};
  REQUIRE_THROWS_AS(properness_fit(d, f), Error);  // too few samples

  std::vector<double> d2(12, 1.0), f2(12, 0.5);  // no spread in distance
  try {
    properness_fit(d2, f2);
    FAIL("expected a spread failure");
  } catch (const Error& e) {
    REQUIRE(e.code() == ErrorCode::InsufficientSpread);
  }

  std::vector<double> d3(12, 1.0), f3(11, 0.5);  // length mismatch
  try {
    properness_fit(d3, f3);
    FAIL("expected a length mismatch failure");
  } catch (const Error& e) {
    REQUIRE(e.code() == ErrorCode::GridMismatch);
  }
}
