#include "helpers.hpp"

#include <cmath>

#include "kfl/model.hpp"

using namespace kfl;
using kfltest::near;

TEST_CASE("canonical segment potential has its closed form", "[model]") {
  ModelPtr m = kfltest::model("p1-fano", 257);
  // Facets 1+y >= 0 and 1-y >= 0 give u(y) = ((1+y)log(1+y) + (1-y)log(1-y))/2.
  for (double y : {0.0, 0.25, 0.5, -0.75}) {
    const double want = 0.5 * ((1.0 + y) * std::log1p(y) + (1.0 - y) * std::log1p(-y));
    REQUIRE(near(m->u_guillemin({y, 0.0}), want, 1e-14));
    REQUIRE(near(m->grad_guillemin({y, 0.0})[0], 0.5 * (std::log1p(y) - std::log1p(-y)), 1e-14));
    REQUIRE(near(m->hess_guillemin({y, 0.0}).a11, 1.0 / (1.0 - y * y), 1e-12));
  }
  REQUIRE(m->u_guillemin({0.0, 0.0}) == 0.0);
}

TEST_CASE("gradient and Hessian agree with finite differences", "[model]") {
  ModelPtr m = kfltest::model("dp3", 33);
  const double e = 1e-6;
  for (const Vec2 y : {Vec2{0.1, -0.2}, Vec2{-0.4, 0.3}, Vec2{0.25, 0.25}}) {
    const Vec2 g = m->grad_guillemin(y);
    for (int d = 0; d < 2; ++d) {
      Vec2 yp = y, ym = y;
      yp[d] += e;
      ym[d] -= e;
      const double fd = (m->u_guillemin(yp) - m->u_guillemin(ym)) / (2.0 * e);
      REQUIRE(near(g[d], fd, 1e-8));
      const Vec2 gp = m->grad_guillemin(yp);
      const Vec2 gm = m->grad_guillemin(ym);
      const Sym2 H = m->hess_guillemin(y);
      const double hd0 = (gp[0] - gm[0]) / (2.0 * e);
      const double hd1 = (gp[1] - gm[1]) / (2.0 * e);
      if (d == 0) {
        REQUIRE(near(H.a11, hd0, 1e-7));
        REQUIRE(near(H.a12, hd1, 1e-7));
      } else {
        REQUIRE(near(H.a12, hd0, 1e-7));
        REQUIRE(near(H.a22, hd1, 1e-7));
      }
    }
  }
}

TEST_CASE("node tables match the analytic formulas", "[model]") {
  ModelPtr m = kfltest::model("dp1", 33);
  for (std::size_t k : m->grid().support) {
    const Vec2 y = m->spec().node(k);
    REQUIRE(near(m->table_uG()[k], m->u_guillemin(y), 0.0));
    if (m->grid().inside[k]) {
      REQUIRE(near(m->table_gradG()[k][0], m->grad_guillemin(y)[0], 0.0));
      REQUIRE(near(m->table_logdetG()[k], std::log(m->hess_guillemin(y).det(2)), 1e-14));
    }
  }
}

TEST_CASE("moment map inverse round-trips interior slopes", "[model]") {
  ModelPtr m2 = kfltest::model("dp3", 33);
  for (const Vec2 y : {Vec2{0.2, -0.3}, Vec2{-0.5, 0.1}, Vec2{0.0, 0.0}, Vec2{0.7, 0.1}}) {
    const Vec2 g = m2->grad_guillemin(y);
    const Vec2 back = m2->moment_inverse(g);
    REQUIRE(near(back[0], y[0], 1e-9));
    REQUIRE(near(back[1], y[1], 1e-9));
  }
  ModelPtr m1 = kfltest::model("p1", 129);
  for (double y : {0.1, 0.5, 0.93}) {
    const Vec2 g = m1->grad_guillemin({y, 0.0});
    REQUIRE(near(m1->moment_inverse(g)[0], y, 1e-12));
  }
}

TEST_CASE("model construction rejects bad arguments", "[model]") {
  REQUIRE_THROWS_AS(ToricModel::create(make_polytope("p1"), 1), Error);
}

TEST_CASE("collar scales with the mesh", "[model]") {
  ModelPtr a = kfltest::model("p1-fano", 129);
  ModelPtr b = kfltest::model("p1-fano", 257);
  REQUIRE(a->collar() > 0.0);
  REQUIRE(near(a->collar(), 2.0 * b->collar(), 1e-15));
}
