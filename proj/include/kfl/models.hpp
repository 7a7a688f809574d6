#pragma once

// Named polytopes used across tests, experiments and the command line, plus
// deterministic samplers for convex potential families.

#include <cmath>
#include <string>
#include <vector>

#include "kfl/functionals.hpp"
#include "kfl/rng.hpp"

namespace kfl {

inline Polytope make_polytope(const std::string& name) {
  auto F = [](long long l0, long long l1, double c) {
    Facet f;
    f.normal = {l0, l1};
    f.offset = c;
    return f;
  };
  if (name == "p1") return Polytope::build(1, {F(1, 0, 0.0), F(-1, 0, 1.0)});
  if (name == "p1-fano") return Polytope::build(1, {F(1, 0, 1.0), F(-1, 0, 1.0)});
  if (name == "football") return Polytope::build(1, {F(1, 0, 0.0), F(-1, 0, 1.0)});
  if (name == "dp3")
    return Polytope::build(2, {F(1, 0, 1.0), F(-1, 0, 1.0), F(0, 1, 1.0), F(0, -1, 1.0),
                               F(1, 1, 1.0), F(-1, -1, 1.0)});
  if (name == "dp1")
    return Polytope::build(2, {F(1, 0, 1.0), F(0, 1, 1.0), F(-1, -1, 1.0), F(1, 1, 1.0)});
  if (name == "dp1-trapezoid")
    return Polytope::build(2, {F(1, 0, 0.0), F(0, 1, 0.0), F(-1, -1, 2.0), F(0, -1, 1.0)});
  if (name == "square")
    return Polytope::build(2, {F(1, 0, 1.0), F(-1, 0, 1.0), F(0, 1, 1.0), F(0, -1, 1.0)});
  fail(ErrorCode::ParameterOutOfRange, "unknown model name: " + name);
}

inline double default_beta(const std::string& name) { return name == "football" ? 0.5 : 1.0; }

// ---------------------------------------------------------------------------
// Samplers.  Deviations are built from nonnegative combinations of convex
// pieces (quadratics and smooth ridges), so they stay convex and smooth; the
// reference Hessian keeps the sums strictly convex.
// ---------------------------------------------------------------------------
namespace detail {

inline double softplus(double t) {
  if (t > 30.0) return t;
  if (t < -30.0) return 0.0;
  return std::log1p(std::exp(t));
}

}  // namespace detail

struct ConvexPiece {
  Vec2 w{0, 0};      // ridge direction (quadratic when amp_quad > 0)
  double theta = 0.0;
  double amp = 0.0;      // ridge amplitude
  double width = 1.0;    // ridge smoothing width
  Sym2 Q;                // quadratic part
  Vec2 lin{0, 0};
  double eval(int n, const Vec2& y) const {
    double s = 0.5 * (Q.a11 * y[0] * y[0] + 2.0 * Q.a12 * y[0] * y[1] + Q.a22 * y[1] * y[1]) +
               dot(n, lin, y);
    if (amp != 0.0) s += amp * width * detail::softplus((dot(n, w, y) - theta) / width);
    return s;
  }
};

// Random smooth convex deviation of a given rough amplitude.
inline SymplecticPotential sample_potential(const ModelPtr& m, Rng& rng, double amplitude,
                                            int pieces = 3, bool even_symmetric = false) {
  const int n = m->n();
  Vec2 lo, hi;
  m->polytope().bounding_box(lo, hi);
  const double diam = std::max(hi[0] - lo[0], n == 2 ? hi[1] - lo[1] : 0.0);
  std::vector<ConvexPiece> ps;
  {
    ConvexPiece q;
    const double a = amplitude * rng.uniform(0.2, 1.0) / (diam * diam);
    if (n == 1) {
      q.Q.a11 = 2.0 * a;
    } else {
      const double ang = rng.uniform(0.0, 3.14159265358979323846);
      const double l1 = 2.0 * a * rng.uniform(0.1, 1.0), l2 = 2.0 * a * rng.uniform(0.1, 1.0);
      const double cs = std::cos(ang), sn = std::sin(ang);
      q.Q.a11 = l1 * cs * cs + l2 * sn * sn;
      q.Q.a22 = l1 * sn * sn + l2 * cs * cs;
      q.Q.a12 = (l1 - l2) * cs * sn;
      if (even_symmetric) q.Q.a12 = 0.0;
    }
    ps.push_back(q);
  }
  for (int p = 0; p < pieces; ++p) {
    ConvexPiece r;
    if (n == 1) {
      r.w = {rng.uniform(0.0, 1.0) < 0.5 ? -1.0 : 1.0, 0.0};
    } else {
      const double ang = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
      r.w = {std::cos(ang), std::sin(ang)};
    }
    r.theta = rng.uniform(-0.3, 0.3) * diam;
    r.amp = amplitude * rng.uniform(0.1, 0.6) / diam;
    r.width = rng.uniform(0.05, 0.25) * diam;
    ps.push_back(r);
    if (even_symmetric) {
      // mirror the ridge through the center so the deviation is even
      ConvexPiece r2 = r;
      r2.w = scale(r.w, -1.0);
      ps.push_back(r2);
    }
  }
  const Vec2 center{0.5 * (lo[0] + hi[0]), n == 2 ? 0.5 * (lo[1] + hi[1]) : 0.0};
  SymplecticPotential u = SymplecticPotential::from_deviation(m, [&](const Vec2& y) {
    double s = 0.0;
    const Vec2 yc = sub(y, center);
    for (const auto& p : ps) s += p.eval(n, yc);
    return s;
  });
  return u.normalize();
}

// Quadratic bump family: dev = a * |y - y0|^2.
inline SymplecticPotential quadratic_potential(const ModelPtr& m, double a, const Vec2& y0) {
  SymplecticPotential u = SymplecticPotential::from_deviation(m, [&](const Vec2& y) {
    const Vec2 d = sub(y, y0);
    return a * dot(m->n(), d, d);
  });
  return u.normalize();
}

}  // namespace kfl
