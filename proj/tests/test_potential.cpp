#include "helpers.hpp"

#include <cmath>

#include "kfl/potential.hpp"
#include "kfl/rng.hpp"

using namespace kfl;
using kfltest::near;

TEST_CASE("normalization removes the weighted mean and is idempotent", "[potential]") {
  ModelPtr m = kfltest::model("p1", 257);
  SymplecticPotential u = SymplecticPotential::from_deviation(m, [](const Vec2& y) {
    return y[0] * y[0] + 0.3;
  });
  REQUIRE_FALSE(u.normalized);
  REQUIRE(std::fabs(u.mean_dev()) > 0.1);
  SymplecticPotential v = u.normalize();
  REQUIRE(v.normalized);
  REQUIRE(near(v.mean_dev(), 0.0, 1e-13));
  SymplecticPotential w = v.normalize();
  for (std::size_t k : m->grid().support) REQUIRE(near(w.dev[k], v.dev[k], 1e-15));
}

TEST_CASE("segments interpolate linearly and reject bad times", "[potential]") {
  ModelPtr m = kfltest::model("p1-fano", 129);
  Rng rng(4);
  SymplecticPotential u0 = sample_potential(m, rng, 0.5);
  SymplecticPotential u1 = sample_potential(m, rng, 0.5);
  const SymplecticPotential mid = geodesic(u0, u1, 0.5);
  for (std::size_t k : m->grid().support)
    REQUIRE(near(mid.dev[k], 0.5 * (u0.dev[k] + u1.dev[k]), 1e-15));
  REQUIRE(geodesic(u0, u1, 0.0).dev == u0.dev);
  REQUIRE(geodesic(u0, u1, 1.0).dev == u1.dev);
  REQUIRE(mid.normalized);  // both endpoints are normalized samples
  REQUIRE_THROWS_AS(geodesic(u0, u1, -0.1), Error);
  REQUIRE_THROWS_AS(geodesic(u0, u1, 1.5), Error);

  const std::vector<double> tan = initial_tangent(u0, u1);
  for (std::size_t k : m->grid().support)
    REQUIRE(near(tan[k], u0.dev[k] - u1.dev[k], 1e-15));
}

TEST_CASE("rooftop envelope is the pointwise maximum", "[potential]") {
  ModelPtr m = kfltest::model("p1", 129);
  SymplecticPotential u = SymplecticPotential::from_deviation(m, [](const Vec2& y) {
    return y[0];
  });
  SymplecticPotential v = SymplecticPotential::from_deviation(m, [](const Vec2& y) {
    return 1.0 - y[0];
  });
  const SymplecticPotential r = rooftop_envelope(u, v);
  for (std::size_t k : m->grid().support) {
    const double y = m->spec().node(k)[0];
    REQUIRE(near(r.dev[k], std::max(y, 1.0 - y), 1e-15));
  }
  REQUIRE_FALSE(r.normalized);
}

TEST_CASE("torus action adds an affine function and keeps the gauge", "[potential]") {
  ModelPtr m = kfltest::model("dp1", 33);
  Rng rng(9);
  SymplecticPotential u = sample_potential(m, rng, 0.4);
  const AffineFunction g{{0.3, -0.2}, 0.7};
  const SymplecticPotential v = torus_act(u, g);
  REQUIRE(near(v.mean_dev(), 0.0, 1e-13));  // u was normalized, so v stays normalized
  // Differences of the acted deviation match the affine part exactly up to the
  // subtracted mean.
  const std::size_t k0 = m->grid().support.front();
  const Vec2 y0 = m->spec().node(k0);
  const double off = v.dev[k0] - u.dev[k0] - g.eval(2, y0);
  for (std::size_t k : m->grid().support) {
    const Vec2 y = m->spec().node(k);
    REQUIRE(near(v.dev[k] - u.dev[k], g.eval(2, y) + off, 1e-12));
  }

  // Non-normalized potentials are shifted verbatim.
  SymplecticPotential raw = u;
  raw.normalized = false;
  const SymplecticPotential w = torus_act(raw, g);
  for (std::size_t k : m->grid().support) {
    const Vec2 y = m->spec().node(k);
    REQUIRE(near(w.dev[k] - u.dev[k], g.eval(2, y), 1e-14));
  }

  // Group composition acts as addition of affine data.
  const AffineFunction g2{{-0.1, 0.4}, -1.0};
  const SymplecticPotential two_step = torus_act(torus_act(raw, g), g2);
  const SymplecticPotential one_step =
      torus_act(raw, AffineFunction{{g.b[0] + g2.b[0], g.b[1] + g2.b[1]}, g.c + g2.c});
  for (std::size_t k : m->grid().support)
    REQUIRE(near(two_step.dev[k], one_step.dev[k], 1e-13));
}

TEST_CASE("convexity defect separates convex from non-convex data", "[potential]") {
  ModelPtr m = kfltest::model("p1", 513);
  const SymplecticPotential flat = SymplecticPotential::zero(m);
  REQUIRE(flat.convexity_defect() == 0.0);
  REQUIRE(flat.is_convex());

  // uG'' >= 4 on (0,1), so a deviation with second derivative -1 stays convex.
  SymplecticPotential gentle = SymplecticPotential::from_deviation(m, [](const Vec2& y) {
    return 0.5 * y[0] * (1.0 - y[0]);
  });
  REQUIRE(gentle.is_convex());

  // A concave kink of slope jump 4 gives a second difference of about -4h.
  SymplecticPotential wild = SymplecticPotential::from_deviation(m, [](const Vec2& y) {
    return -2.0 * std::fabs(y[0] - 0.5);
  });
  REQUIRE(wild.convexity_defect() < -1e-3);
  REQUIRE_FALSE(wild.is_convex());
}

TEST_CASE("mixing grids or polytopes is rejected", "[potential]") {
  SymplecticPotential a = SymplecticPotential::zero(kfltest::model("p1", 129));
  SymplecticPotential b = SymplecticPotential::zero(kfltest::model("p1", 257));
  SymplecticPotential c = SymplecticPotential::zero(kfltest::model("p1-fano", 129));
  REQUIRE_THROWS_AS(require_same_model(a, b), Error);
  REQUIRE_THROWS_AS(require_same_model(a, c), Error);
  REQUIRE_THROWS_AS(geodesic(a, b, 0.5), Error);
}
