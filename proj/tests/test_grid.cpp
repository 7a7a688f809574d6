#include "helpers.hpp"

#include <cmath>

#include "kfl/grid.hpp"

using namespace kfl;
using kfltest::near;

TEST_CASE("clipped cell weights reproduce volume exactly", "[grid]") {
  const struct {
    const char* name;
    int nodes;
    double volume;
  } cases[] = {{"p1", 257, 1.0}, {"p1-fano", 257, 2.0}, {"dp3", 65, 3.0}, {"dp1", 65, 4.0},
               {"square", 33, 4.0}};
  for (const auto& c : cases) {
    const MaskedGrid& g = kfltest::model(c.name, c.nodes)->grid();
    REQUIRE(near(g.total_weight, c.volume, 1e-10));
    REQUIRE(g.support.size() > 0);
    REQUIRE(g.interior.size() > 0);
    REQUIRE(g.interior.size() <= g.support.size());
  }
}

TEST_CASE("node quadrature is exact for affine integrands", "[grid]") {
  ModelPtr m = kfltest::model("dp1", 65);
  const MaskedGrid& g = m->grid();
  std::vector<double> f(g.spec.size(), 0.0);
  for (std::size_t k : g.support) {
    const Vec2 y = g.spec.node(k);
    f[k] = 3.0 * y[0] - 2.0 * y[1] + 0.25;
  }
  // integral of y over dp1 is volume * barycenter = (1/3, 1/3).
  const double want = 3.0 * (1.0 / 3.0) - 2.0 * (1.0 / 3.0) + 0.25 * 4.0;
  REQUIRE(near(g.integrate(f), want, 1e-10));
  REQUIRE(near(g.mean(f), want / 4.0, 1e-10));
}

TEST_CASE("grid size mismatch is rejected", "[grid]") {
  const MaskedGrid& g = kfltest::model("p1", 33)->grid();
  std::vector<double> f(g.spec.size() + 1, 0.0);
  REQUIRE_THROWS_AS(g.integrate(f), Error);
}

TEST_CASE("excised grids nest inside the full grid", "[grid]") {
  ModelPtr m = kfltest::model("dp3", 129);
  const MaskedGrid& g = m->grid();
  const MaskedGrid& e2 = m->excised(2);
  const MaskedGrid& e4 = m->excised(4);
  REQUIRE(m->collar() > 0.0);
  REQUIRE(e4.total_weight < e2.total_weight);
  REQUIRE(e2.total_weight < g.total_weight);
  REQUIRE(e4.total_weight > 2.0);  // collar strips stay thin at this resolution
  REQUIRE(e4.support.size() < e2.support.size());
  REQUIRE(e2.support.size() < g.support.size());
  REQUIRE(e2.spec == g.spec);
  REQUIRE_THROWS_AS(m->excised(3), Error);

  // Raw indicator sums shrink as the excision widens.
  std::vector<double> ones(g.spec.size(), 1.0);
  const double s2 = g.integrate_excised(ones, 2.0 * m->collar());
  const double s4 = g.integrate_excised(ones, 4.0 * m->collar());
  REQUIRE(s4 < s2);
  REQUIRE(s2 < 3.0);
  REQUIRE(s4 > 2.0);
}

TEST_CASE("graded interval rule handles endpoint singularities", "[grid]") {
  const auto pts = graded_interval_quadrature(0.0, 1.0);
  double poly = 0.0, lg = 0.0, rt = 0.0, total = 0.0;
  for (const auto& q : pts) {
    const double t = q.y[0];
    total += q.w;
    poly += q.w * t * t * t * t;
    lg += q.w * std::log(t);
    rt += q.w / std::sqrt(t);
  }
  REQUIRE(near(total, 1.0, 1e-13));
  REQUIRE(near(poly, 0.2, 1e-13));
  REQUIRE(near(lg, -1.0, 1e-9));
  REQUIRE(near(rt, 2.0, 2e-4));
}

TEST_CASE("facet quadrature integrates the lattice measure and affine data", "[grid]") {
  const Polytope P = make_polytope("dp1");
  for (int i = 0; i < static_cast<int>(P.facets().size()); ++i) {
    const auto pts = facet_quadrature(P, i);
    double total = 0.0, m0 = 0.0, m1 = 0.0;
    for (const auto& q : pts) {
      total += q.w;
      m0 += q.w * q.y[0];
      m1 += q.w * q.y[1];
    }
    REQUIRE(near(total, P.facet_measure(i), 1e-12));
    const Vec2 A = P.facet_vertices(i)[0];
    const Vec2 B = P.facet_vertices(i)[1];
    REQUIRE(near(m0, P.facet_measure(i) * 0.5 * (A[0] + B[0]), 1e-12));
    REQUIRE(near(m1, P.facet_measure(i) * 0.5 * (A[1] + B[1]), 1e-12));
  }
}

TEST_CASE("grid nodes mirror exactly on symmetric boxes", "[grid]") {
  const GridSpec s = kfltest::model("p1-fano", 1025)->spec();
  // Power-of-two-plus-one node counts on [-1,1] give exactly representable
  // spacing, so mirrored nodes coincide in floating point.
  for (int i = 0; i < s.shape[0]; ++i) {
    const double a = s.node(static_cast<std::size_t>(i))[0];
    const double b = s.node(static_cast<std::size_t>(s.shape[0] - 1 - i))[0];
    REQUIRE(a == -b);
  }
}
