#pragma once

// The L1 Finsler distance on potentials, realized on the polytope.  Three
// routes are kept deliberately separate: the direct deviation integral, the
// rooftop (largest convex minorant) route through AM, and quadrature along
// the discretized segment geodesic.  They must agree; disagreement is a bug
// in the quadrature or a non-convex input, and is reported as an error.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "kfl/functionals.hpp"

namespace kfl {

struct DistanceReport {
  double d1_l1 = 0.0;
  double d1_pythagorean = 0.0;
  std::optional<double> d1_pathlength;
  std::optional<double> mixed_l1;
  double agreement = 0.0;
};

namespace detail {

inline double rel_gap(double a, double b) {
  const double m = std::max(std::fabs(a), std::fabs(b));
  if (m < 1e-14) return 0.0;
  return std::fabs(a - b) / m;
}

}  // namespace detail

inline double d1_l1_route(const SymplecticPotential& u, const SymplecticPotential& v) {
  require_same_model(u, v);
  const MaskedGrid& g = u.model->grid();
  std::vector<double> diff(u.dev.size(), 0.0);
  for (std::size_t k : g.support) diff[k] = std::fabs(u.dev[k] - v.dev[k]);
  return g.mean(diff);
}

inline double d1_pythagorean_route(const SymplecticPotential& u, const SymplecticPotential& v) {
  const SymplecticPotential roof = rooftop_envelope(u, v);
  return am(u) + am(v) - 2.0 * am(roof);
}

inline double d1_pathlength_route(const SymplecticPotential& u, const SymplecticPotential& v,
                                  int segments = 32) {
  require_same_model(u, v);
  const MaskedGrid& g = u.model->grid();
  std::vector<double> diff(u.dev.size(), 0.0);
  double total = 0.0;
  for (int s = 0; s < segments; ++s) {
    const double dt = 1.0 / segments;
    for (std::size_t k : g.support) diff[k] = std::fabs(v.dev[k] - u.dev[k]) * dt;
    total += g.mean(diff);
  }
  return total;
}

// Kahler-side L1 pairing: |psi_u - psi_v| integrated against both metric
// measures, each realized by pushing the node quadrature through the
// respective gradient map.  The potential's own dual value at its own
// gradient image is exact; the other one goes through the dual transform.
inline double mixed_l1(const SymplecticPotential& u, const SymplecticPotential& v) {
  require_same_model(u, v);
  DualPotential Du = DualPotential::build(u);
  DualPotential Dv = DualPotential::build(v);
  auto one_side = [](const SymplecticPotential& a, const DualPotential& Dother) {
    double lvl[2];
    for (int li = 0; li < 2; ++li) {
      DerivedFields F = derive_fields(a, li == 0 ? 2 : 4, false);
      std::vector<double> g(F.size());
      std::size_t warm = DualPotential::npos();
      for (std::size_t t = 0; t < F.size(); ++t) {
        const double psi_self = dot(2, F.grad_u[t], F.y[t]) - F.u_val[t];
        const double psi_other = Dother.eval(F.grad_u[t], warm);
        g[t] = std::fabs(psi_self - psi_other);
      }
      lvl[li] = F.mean(g);
    }
    return richardson(lvl[0], lvl[1]);
  };
  return one_side(u, Dv) + one_side(v, Du);
}

inline DistanceReport d1(const SymplecticPotential& u, const SymplecticPotential& v,
                         bool with_pathlength = true, bool with_mixed = false,
                         double route_tol = 1e-3) {
  DistanceReport r;
  r.d1_l1 = d1_l1_route(u, v);
  r.d1_pythagorean = d1_pythagorean_route(u, v);
  double agree = detail::rel_gap(r.d1_l1, r.d1_pythagorean);
  if (with_pathlength) {
    r.d1_pathlength = d1_pathlength_route(u, v);
    agree = std::max(agree, detail::rel_gap(r.d1_l1, *r.d1_pathlength));
    agree = std::max(agree, detail::rel_gap(r.d1_pythagorean, *r.d1_pathlength));
  }
  r.agreement = agree;
  if (agree > route_tol)
    fail(ErrorCode::RouteDisagreement,
         "d1 route disagreement " + std::to_string(agree) + " exceeds tolerance");
  if (with_mixed) r.mixed_l1 = mixed_l1(u, v);
  return r;
}

// sup over the manifold of the Kahler potential of u relative to the
// reference; equals the sup of the negated deviation, attained at the
// boundary of the moment image.
inline double sup_phi(const SymplecticPotential& u) {
  const MaskedGrid& g = u.model->grid();
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t k : g.support) m = std::max(m, -u.dev[k]);
  return m;
}

// Length of a sampled curve of potentials: sum over consecutive pairs of the
// mean absolute increment (the L1 speed integrated with the trapezoid rule in
// the time parameter).
inline double curve_length(const std::vector<SymplecticPotential>& samples,
                           const std::vector<double>& times) {
  if (samples.size() < 2 || samples.size() != times.size())
    fail(ErrorCode::PreconditionNotMet, "curve needs at least two samples with matching times");
  for (std::size_t i = 0; i + 1 < times.size(); ++i)
    if (!(times[i] < times[i + 1])) fail(ErrorCode::UnsortedTimestamps, "times must increase strictly");
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < samples.size(); ++i)
    total += d1_l1_route(samples[i], samples[i + 1]);
  return total;
}

}  // namespace kfl
