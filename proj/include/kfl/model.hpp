#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "kfl/errors.hpp"
#include "kfl/grid.hpp"
#include "kfl/parallel.hpp"
#include "kfl/polytope.hpp"
#include "kfl/vec.hpp"

namespace kfl {

// Polytope plus the Guillemin reference data and the working grid.  Immutable
// after create(); all closed-form reference fields are tabulated once.
class ToricModel {
public:
  static std::shared_ptr<const ToricModel> create(const Polytope& P, int nodes_per_axis) {
    std::shared_ptr<ToricModel> m(new ToricModel);
    m->P_ = P;
    m->grid_ = MaskedGrid::build(m->P_, GridSpec::over(m->P_, nodes_per_axis));
    const auto& spec = m->grid_.spec;
    double L1 = 0.0;
    for (const auto& f : P.facets())
      L1 = std::max(L1, static_cast<double>(std::llabs(f.normal[0]) + std::llabs(f.normal[1])));
    m->collar_ = std::max(spec.h(0), P.n() == 2 ? spec.h(1) : 0.0) * L1;
    // Keep the deeper excision well inside the polytope on coarse meshes; the
    // 2:4 ratio between the excised levels is what the extrapolation relies on.
    double inradius = 0.0;
    for (double l : m->grid_.minell) inradius = std::max(inradius, l);
    m->collar_ = std::min(m->collar_, 0.125 * inradius);

    const std::size_t N = spec.size();
    m->uG_.assign(N, 0.0);
    m->gradG_.assign(N, Vec2{0, 0});
    m->hessG_.assign(N, Sym2{});
    m->logdetG_.assign(N, 0.0);
    parallel_for(N, [&](std::size_t k) {
      const Vec2 y = spec.node(k);
      if (m->grid_.minell[k] > -1e-12 * m->scale()) m->uG_[k] = m->u_guillemin(y);
      if (m->grid_.inside[k]) {
        m->gradG_[k] = m->grad_guillemin(y);
        const Sym2 H = m->hess_guillemin(y);
        m->hessG_[k] = H;
        m->logdetG_[k] = std::log(H.det(P.n()));
      }
    });

    // Grids over the eps-shrunk polytope, used for integrands that are only
    // tame away from the boundary (paired evaluations feed extrapolation).
    m->shrunk2_ = std::make_unique<Polytope>(shrink(P, 2.0 * m->collar_));
    m->shrunk4_ = std::make_unique<Polytope>(shrink(P, 4.0 * m->collar_));
    m->excised2_ = MaskedGrid::build(*m->shrunk2_, spec);
    m->excised4_ = MaskedGrid::build(*m->shrunk4_, spec);
    return m;
  }

  const Polytope& polytope() const { return P_; }
  const MaskedGrid& grid() const { return grid_; }
  const GridSpec& spec() const { return grid_.spec; }
  int n() const { return P_.n(); }
  double volume() const { return P_.volume(); }
  double collar() const { return collar_; }
  // Shrunk-domain quadratures at eps = 2*collar and 4*collar.
  const MaskedGrid& excised(int k) const {
    if (k == 2) return excised2_;
    if (k == 4) return excised4_;
    fail(ErrorCode::ParameterOutOfRange, "excised grid only cached for k in {2,4}");
  }

  const std::vector<double>& table_uG() const { return uG_; }
  const std::vector<Vec2>& table_gradG() const { return gradG_; }
  const std::vector<Sym2>& table_hessG() const { return hessG_; }
  const std::vector<double>& table_logdetG() const { return logdetG_; }

  double u_guillemin(const Vec2& y) const {
    double s = 0.0;
    for (const auto& f : P_.facets()) {
      const double l = std::max(0.0, dot(P_.n(), f.normal, y) + f.offset);
      if (l > 0.0) s += l * std::log(l);
    }
    return 0.5 * s;
  }

  Vec2 grad_guillemin(const Vec2& y) const {
    Vec2 g{0, 0};
    for (const auto& f : P_.facets()) {
      const double l = dot(P_.n(), f.normal, y) + f.offset;
      const double t = 0.5 * (std::log(l) + 1.0);
      g[0] += t * f.normal[0];
      if (P_.n() == 2) g[1] += t * f.normal[1];
    }
    return g;
  }

  Sym2 hess_guillemin(const Vec2& y) const {
    Sym2 H;
    for (const auto& f : P_.facets()) {
      const double l = dot(P_.n(), f.normal, y) + f.offset;
      const double t = 0.5 / l;
      H.a11 += t * f.normal[0] * f.normal[0];
      if (P_.n() == 2) {
        H.a12 += t * f.normal[0] * f.normal[1];
        H.a22 += t * f.normal[1] * f.normal[1];
      }
    }
    return H;
  }

  double logdet_hess_guillemin(const Vec2& y) const { return std::log(hess_guillemin(y).det(P_.n())); }

  // Inverse of y -> grad u_G(y): the point of P whose reference moment image
  // is g.  Closed form on intervals, damped Newton in 2-D.
  Vec2 moment_inverse(const Vec2& g) const { return moment_inverse(g, P_.barycenter()); }

  Vec2 moment_inverse(const Vec2& g, Vec2 y) const {
    if (P_.n() == 1) {
      double A = 0.0, B = 0.0;
      for (const auto& f : P_.facets())
        (f.normal[0] > 0 ? A : B) = f.normal[0] > 0 ? -f.offset : f.offset;
      // grad u_G = log(l1/l2)/2, so the inverse is a logistic profile.
      const double t = 2.0 * g[0];
      const double s = t >= 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
      return {A + (B - A) * s, 0.0};
    }
    if (P_.min_ell(y) <= 0.0) y = P_.barycenter();
    const double gtol = 1e-11 * (1.0 + norm_inf(2, g));
    for (int it = 0; it < 100; ++it) {
      const Vec2 r = sub(grad_guillemin(y), g);
      if (norm_inf(2, r) <= gtol) return y;
      const Sym2 H = hess_guillemin(y);
      const Vec2 step = H.solve(P_.n(), {-r[0], -r[1]});
      if (norm_inf(2, step) <= 1e-15 * (1.0 + norm_inf(2, y))) return y;
      double t = 1.0;
      for (const auto& f : P_.facets()) {
        const double dl = dot(2, f.normal, step);
        if (dl < 0.0) {
          const double l = dot(2, f.normal, y) + f.offset;
          t = std::min(t, -0.9 * l / dl);
        }
      }
      // Armijo backtracking on u_G(y) - <g,y>, with a rounding allowance so
      // the test stays satisfiable once the predicted decrease drops below
      // the resolution of F in doubles.
      const double F0 = u_guillemin(y) - dot(2, g, y);
      const double slope = dot(2, r, step);
      const double fuzz = 4e-16 * (1.0 + std::fabs(F0));
      int bt = 0;
      while (bt < 60) {
        const Vec2 yn = add(y, {t * step[0], t * step[1]});
        if (P_.min_ell(yn) > 0.0 &&
            u_guillemin(yn) - dot(2, g, yn) <= F0 + 1e-4 * t * slope + fuzz) {
          y = yn;
          break;
        }
        t *= 0.5;
        ++bt;
      }
      if (bt == 60) fail(ErrorCode::NonConvergence, "moment inverse line search stalled");
    }
    fail(ErrorCode::NonConvergence, "moment inverse Newton did not converge");
  }

  // Legendre transform of u_G, evaluated exactly at the supporting point.
  double psi_ref(const Vec2& g) const {
    const Vec2 y = moment_inverse(g);
    return dot(P_.n(), g, y) - u_guillemin(y);
  }
  double psi_ref(const Vec2& g, const Vec2& warm) const {
    const Vec2 y = moment_inverse(g, warm);
    return dot(P_.n(), g, y) - u_guillemin(y);
  }

  double scale() const {
    double s = 1.0;
    for (const auto& f : P_.facets()) s = std::max(s, std::fabs(f.offset));
    return s;
  }

private:
  ToricModel() = default;

  static Polytope shrink(const Polytope& P, double eps) {
    std::vector<Facet> fs = P.facets();
    for (auto& f : fs) f.offset -= eps;
    return Polytope::build(P.n(), std::move(fs));
  }

  Polytope P_;
  MaskedGrid grid_;
  std::unique_ptr<Polytope> shrunk2_, shrunk4_;
  MaskedGrid excised2_, excised4_;
  double collar_ = 0.0;
  std::vector<double> uG_;
  std::vector<Vec2> gradG_;
  std::vector<Sym2> hessG_;
  std::vector<double> logdetG_;
};

using ModelPtr = std::shared_ptr<const ToricModel>;

}  // namespace kfl
