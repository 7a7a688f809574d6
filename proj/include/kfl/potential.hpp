#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "kfl/errors.hpp"
#include "kfl/model.hpp"

namespace kfl {

// <b,y> + c.  Doubles as a torus-group element: the complexified torus acts
// on symplectic potentials by adding affine functions.
struct AffineFunction {
  Vec2 b{0, 0};
  double c = 0.0;

  double eval(int n, const Vec2& y) const { return dot(n, b, y) + c; }
  AffineFunction compose(const AffineFunction& o) const { return {add(b, o.b), c + o.c}; }
  bool operator==(const AffineFunction& o) const { return b == o.b && c == o.c; }
};

// Convex function on the polytope stored as its deviation from u_G.  The
// deviation lives on the full bounding-box grid, zero off-support; only
// support nodes are meaningful.
struct SymplecticPotential {
  ModelPtr model;
  std::vector<double> dev;
  bool normalized = false;

  static SymplecticPotential zero(ModelPtr m) {
    SymplecticPotential u;
    u.model = std::move(m);
    u.dev.assign(u.model->spec().size(), 0.0);
    u.normalized = true;  // mean deviation is zero
    return u;
  }

  template <typename F>
  static SymplecticPotential from_deviation(ModelPtr m, F f) {
    SymplecticPotential u = zero(m);
    u.normalized = false;
    for (std::size_t k : u.model->grid().support) u.dev[k] = f(u.model->spec().node(k));
    return u;
  }

  std::size_t size() const { return dev.size(); }
  double u_at(std::size_t k) const { return model->table_uG()[k] + dev[k]; }

  double mean_dev() const { return model->grid().mean(dev); }

  SymplecticPotential normalize() const {
    SymplecticPotential r = *this;
    const double m = mean_dev();
    for (std::size_t k : model->grid().support) r.dev[k] -= m;
    r.normalized = true;
    return r;
  }

  // Smallest second difference of u = u_G + dev over axis and diagonal node
  // triples; convexity holds when this is >= -tolerance.
  double convexity_defect() const {
    const GridSpec& s = model->spec();
    const auto& uG = model->table_uG();
    const auto& w = model->grid().weight;
    auto on = [&](int i, int j) { return w[s.index(i, j)] > 0.0; };
    auto val = [&](int i, int j) {
      const std::size_t k = s.index(i, j);
      return uG[k] + dev[k];
    };
    double defect = 0.0;
    const int n0 = s.shape[0], n1 = s.shape[1];
    if (model->n() == 1) {
      for (int i = 1; i + 1 < n0; ++i)
        if (on(i - 1, 0) && on(i, 0) && on(i + 1, 0))
          defect = std::min(defect, val(i - 1, 0) + val(i + 1, 0) - 2.0 * val(i, 0));
      return defect;
    }
    static const int dirs[4][2] = {{1, 0}, {0, 1}, {1, 1}, {1, -1}};
    for (int i = 0; i < n0; ++i) {
      for (int j = 0; j < n1; ++j) {
        if (!on(i, j)) continue;
        for (const auto& d : dirs) {
          const int ia = i - d[0], ja = j - d[1], ib = i + d[0], jb = j + d[1];
          if (ia < 0 || ib >= n0 || ja < 0 || jb < 0 || ja >= n1 || jb >= n1) continue;
          if (!on(ia, ja) || !on(ib, jb)) continue;
          defect = std::min(defect, val(ia, ja) + val(ib, jb) - 2.0 * val(i, j));
        }
      }
    }
    return defect;
  }

  bool is_convex(double tol_factor = 1e-9) const {
    double mag = 1.0;
    for (std::size_t k : model->grid().support) mag = std::max(mag, std::fabs(u_at(k)));
    return convexity_defect() >= -tol_factor * mag;
  }
};

inline void require_same_model(const SymplecticPotential& a, const SymplecticPotential& b) {
  if (a.model.get() != b.model.get()) {
    if (!a.model || !b.model || !(a.model->spec() == b.model->spec()) ||
        a.model->polytope().hash() != b.model->polytope().hash())
      fail(ErrorCode::GridMismatch, "potentials live on different models");
  }
  if (a.dev.size() != b.dev.size()) fail(ErrorCode::GridMismatch, "deviation arrays differ in size");
}

inline SymplecticPotential geodesic(const SymplecticPotential& u0, const SymplecticPotential& u1,
                                    double t) {
  require_same_model(u0, u1);
  if (!(t >= 0.0 && t <= 1.0)) fail(ErrorCode::ParameterOutOfRange, "geodesic time outside [0,1]");
  SymplecticPotential r = u0;
  for (std::size_t k = 0; k < r.dev.size(); ++k) r.dev[k] = (1.0 - t) * u0.dev[k] + t * u1.dev[k];
  r.normalized = u0.normalized && u1.normalized;
  return r;
}

inline std::vector<double> initial_tangent(const SymplecticPotential& u0,
                                           const SymplecticPotential& u1) {
  require_same_model(u0, u1);
  std::vector<double> t(u0.dev.size(), 0.0);
  for (std::size_t k : u0.model->grid().support) t[k] = -(u1.dev[k] - u0.dev[k]);
  return t;
}

// Pointwise maximum: the symplectic-side rooftop envelope.
inline SymplecticPotential rooftop_envelope(const SymplecticPotential& u,
                                            const SymplecticPotential& v) {
  require_same_model(u, v);
  SymplecticPotential r = u;
  for (std::size_t k = 0; k < r.dev.size(); ++k) r.dev[k] = std::max(u.dev[k], v.dev[k]);
  r.normalized = false;
  return r;
}

inline SymplecticPotential torus_act(const SymplecticPotential& u, const AffineFunction& g) {
  SymplecticPotential r = u;
  const GridSpec& s = u.model->spec();
  for (std::size_t k : u.model->grid().support) r.dev[k] += g.eval(u.model->n(), s.node(k));
  if (u.normalized) {
    const double m = r.mean_dev();
    for (std::size_t k : u.model->grid().support) r.dev[k] -= m;
  }
  return r;
}

}  // namespace kfl
