#pragma once

// Energy functionals on symplectic potentials.
//
// Everything is a polytope quadrature. Integrands that are singular or
// cancellation-sensitive at the boundary are evaluated on the eps-collar
// excision grids (eps = k * collar, k in {2,4}) and extrapolated linearly in
// eps; bounded exact integrands (AM and friends) use the full clipped-cell
// quadrature. Exponential integrals go through log-sum-exp throughout.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kfl/legendre.hpp"

namespace kfl {

// ---------------------------------------------------------------------------
// Node package over an excision grid: finite-difference derivatives of the
// potential plus, when requested, the matched reference point ytilde solving
// grad u_G(ytilde) = grad u(y) (the log-coordinate identification).
// ---------------------------------------------------------------------------
struct DerivedFields {
  std::vector<std::size_t> idx;
  std::vector<double> w;
  double wsum = 0.0;
  std::vector<Vec2> y;
  std::vector<double> u_val;
  std::vector<double> uG_at;
  std::vector<Vec2> gradG_at;
  std::vector<double> logdetG_at;
  std::vector<Vec2> grad_u;
  std::vector<double> logdet_u;
  bool matched = false;
  std::vector<Vec2> ytilde;
  std::vector<double> logdetG_match;
  std::vector<double> uG_match;

  std::size_t size() const { return idx.size(); }

  double mean(const std::vector<double>& vals) const {
    std::vector<double> terms(vals.size());
    for (std::size_t t = 0; t < vals.size(); ++t) terms[t] = w[t] * vals[t];
    return kahan_sum(terms) / wsum;
  }

  // log of the weighted mean of e^z, running-max shifted
  double logmeanexp(const std::vector<double>& z) const {
    double M = -std::numeric_limits<double>::infinity();
    for (double v : z) M = std::max(M, v);
    if (!std::isfinite(M)) return M;
    std::vector<double> terms(z.size());
    for (std::size_t t = 0; t < z.size(); ++t) terms[t] = w[t] * std::exp(z[t] - M);
    return M + std::log(kahan_sum(terms) / wsum);
  }
};

inline DerivedFields derive_fields(const SymplecticPotential& u, int level, bool matched) {
  const ToricModel& M = *u.model;
  const GridSpec& s = M.spec();
  const MaskedGrid& ex = M.excised(level);
  const std::vector<double>& wfull = M.grid().weight;
  DerivedFields F;
  F.matched = matched;
  const double h0 = s.h(0), h1 = s.n == 2 ? s.h(1) : 1.0;

  for (std::size_t k : ex.support) {
    const long long i1 = (long long)(k % s.shape[1]);
    const long long i0 = (long long)(k / s.shape[1]);
    bool ok = true;
    if (s.n == 1) {
      ok = i0 > 0 && i0 + 1 < s.shape[0] && wfull[k - 1] > 0.0 && wfull[k + 1] > 0.0;
    } else {
      ok = i0 > 0 && i0 + 1 < s.shape[0] && i1 > 0 && i1 + 1 < s.shape[1];
      if (ok)
        for (int d0 = -1; d0 <= 1 && ok; ++d0)
          for (int d1 = -1; d1 <= 1 && ok; ++d1)
            if (d0 || d1) ok = wfull[k + d0 * s.shape[1] + d1] > 0.0;
    }
    if (!ok) continue;
    F.idx.push_back(k);
    F.w.push_back(ex.weight[k]);
  }
  {
    std::vector<double> ws = F.w;
    F.wsum = kahan_sum(ws);
  }

  const std::size_t n = F.idx.size();
  if (n == 0) fail(ErrorCode::GridTooCoarse, "excision removed every interior node");
  F.y.resize(n);
  F.u_val.resize(n);
  F.uG_at.resize(n);
  F.gradG_at.resize(n);
  F.logdetG_at.resize(n);
  F.grad_u.resize(n);
  F.logdet_u.resize(n);
  if (matched) {
    F.ytilde.resize(n);
    F.logdetG_match.resize(n);
    F.uG_match.resize(n);
  }

  const auto& dev = u.dev;
  const auto& uG = M.table_uG();
  const auto& gradG = M.table_gradG();
  const auto& hessG = M.table_hessG();
  const auto& logdetG = M.table_logdetG();
  const int nn = M.n();

  const std::size_t chunk = 4096;
  const std::size_t nchunks = (n + chunk - 1) / chunk;
  std::vector<std::string> errs(nchunks);
  parallel_for(nchunks, [&](std::size_t ci) {
    const std::size_t t0 = ci * chunk, t1 = std::min(n, t0 + chunk);
    Vec2 warm{0, 0};
    bool have_warm = false;
    for (std::size_t t = t0; t < t1; ++t) {
      const std::size_t k = F.idx[t];
      const Vec2 yk = s.node(k);
      F.y[t] = yk;
      F.u_val[t] = uG[k] + dev[k];
      F.uG_at[t] = uG[k];
      F.gradG_at[t] = gradG[k];
      F.logdetG_at[t] = logdetG[k];
      Vec2 gv{0, 0};
      Sym2 Hv;
      if (nn == 1) {
        gv[0] = (dev[k + 1] - dev[k - 1]) / (2.0 * h0);
        Hv.a11 = (dev[k + 1] - 2.0 * dev[k] + dev[k - 1]) / (h0 * h0);
      } else {
        const long long S = s.shape[1];
        gv[0] = (dev[k + S] - dev[k - S]) / (2.0 * h0);
        gv[1] = (dev[k + 1] - dev[k - 1]) / (2.0 * h1);
        Hv.a11 = (dev[k + S] - 2.0 * dev[k] + dev[k - S]) / (h0 * h0);
        Hv.a22 = (dev[k + 1] - 2.0 * dev[k] + dev[k - 1]) / (h1 * h1);
        Hv.a12 = (dev[k + S + 1] + dev[k - S - 1] - dev[k + S - 1] - dev[k - S + 1]) / (4.0 * h0 * h1);
      }
      F.grad_u[t] = add(gradG[k], gv);
      const Sym2 H = hessG[k].plus(Hv);
      const double det = H.det(nn);
      if (det <= 1e-12) {
        if (errs[ci].empty()) errs[ci] = "non-positive Hessian determinant at an interior node";
        return;
      }
      F.logdet_u[t] = std::log(det);
      if (matched) {
        Vec2 yt;
        if (nn == 1) {
          yt = M.moment_inverse(F.grad_u[t]);
        } else {
          yt = M.moment_inverse(F.grad_u[t], have_warm ? warm : yk);
        }
        warm = yt;
        have_warm = true;
        F.ytilde[t] = yt;
        F.logdetG_match[t] = M.logdet_hess_guillemin(yt);
        F.uG_match[t] = M.u_guillemin(yt);
      }
    }
  });
  for (const auto& e : errs)
    if (!e.empty()) fail(ErrorCode::DegenerateHessian, e);
  return F;
}

inline double richardson(double at2, double at4) { return 2.0 * at2 - at4; }

// ---------------------------------------------------------------------------
// AM and the T-type means
// ---------------------------------------------------------------------------
inline double am(const SymplecticPotential& u) { return -u.model->grid().mean(u.dev); }

// V^{-1} int phi w_phi^n: the potential paired against its own volume form,
// pulled back to P.  Needs matched fields.
inline double t_self_level(const DerivedFields& F) {
  std::vector<double> g(F.size());
  for (std::size_t t = 0; t < F.size(); ++t)
    g[t] = dot(2, F.grad_u[t], sub(F.y[t], F.ytilde[t])) - F.u_val[t] + F.uG_match[t];
  return F.mean(g);
}

// V^{-1} int phi w^n: the potential paired against the reference volume form,
// evaluated in log coordinates (dual transform at the reference moment image).
inline double t_reference_level(const SymplecticPotential& u, const DualPotential& D, int level) {
  const ToricModel& M = *u.model;
  const MaskedGrid& ex = M.excised(level);
  const auto& gradG = M.table_gradG();
  const auto& uG = M.table_uG();
  const GridSpec& s = M.spec();
  std::vector<double> terms;
  terms.reserve(ex.support.size());
  std::size_t warm = DualPotential::npos();
  for (std::size_t k : ex.support) {
    const Vec2 y = s.node(k);
    const double psi_phi = D.eval(gradG[k], warm);
    const double psi_ref = dot(M.n(), gradG[k], y) - uG[k];
    terms.push_back(ex.weight[k] * (psi_phi - psi_ref));
  }
  return kahan_sum(terms) / ex.total_weight;
}

struct JEnergy {
  double j = 0.0, i = 0.0, i_minus_j = 0.0;
};

inline JEnergy j_energy(const SymplecticPotential& u) {
  if (!u.is_convex()) fail(ErrorCode::NonConvexInput, "potential is not convex on the grid");
  const double AM = am(u);
  DualPotential D = DualPotential::build(u);
  const double Tref = richardson(t_reference_level(u, D, 2), t_reference_level(u, D, 4));
  DerivedFields F2 = derive_fields(u, 2, true);
  DerivedFields F4 = derive_fields(u, 4, true);
  const double Tu = richardson(t_self_level(F2), t_self_level(F4));
  JEnergy r;
  r.j = Tref - AM;
  if (r.j < 0.0 && r.j > -1e-8) r.j = 0.0;
  r.i = Tref - Tu;
  r.i_minus_j = r.i - r.j;
  return r;
}

// ---------------------------------------------------------------------------
// Entropy of the metric volume form against the reference, as a discrete
// relative entropy: the compensated estimator mean(log rho) + log mean(1/rho)
// is nonnegative level-by-level, so the extrapolant is floored at zero.
// ---------------------------------------------------------------------------
inline double entropy_level(const DerivedFields& F) {
  std::vector<double> z(F.size());
  for (std::size_t t = 0; t < F.size(); ++t) z[t] = F.logdetG_match[t] - F.logdet_u[t];
  std::vector<double> nz(F.size());
  for (std::size_t t = 0; t < F.size(); ++t) nz[t] = -z[t];
  return F.mean(z) + F.logmeanexp(nz);
}

inline double entropy(const SymplecticPotential& u) {
  DerivedFields F2 = derive_fields(u, 2, true);
  DerivedFields F4 = derive_fields(u, 4, true);
  return std::max(0.0, richardson(entropy_level(F2), entropy_level(F4)));
}

// ---------------------------------------------------------------------------
// Boundary pairing of the deviation: V^{-1}[ int_{dP} v dsigma - (sigma/V) int_P v dy ].
// Facet values are obtained either by linear extrapolation from two interior
// points along the inward normal (exact for affine v) or by direct clipped
// bilinear interpolation at the facet point (the cruder independent route).
// ---------------------------------------------------------------------------
inline double eval_dev(const SymplecticPotential& u, const Vec2& p) {
  const ToricModel& M = *u.model;
  const GridSpec& s = M.spec();
  const auto& w = M.grid().weight;
  const double h0 = s.h(0);
  if (M.n() == 1) {
    long long i = (long long)std::floor((p[0] - s.lo[0]) / h0);
    i = std::max(0LL, std::min((long long)s.shape[0] - 2, i));
    const double t = (p[0] - (s.lo[0] + i * h0)) / h0;
    const double c0 = w[i] > 0.0 ? 1.0 - t : 0.0;
    const double c1 = w[i + 1] > 0.0 ? t : 0.0;
    if (c0 + c1 <= 0.0) return u.dev[w[i] >= w[i + 1] ? i : i + 1];
    return (c0 * u.dev[i] + c1 * u.dev[i + 1]) / (c0 + c1);
  }
  const double h1 = s.h(1);
  long long i0 = (long long)std::floor((p[0] - s.lo[0]) / h0);
  long long i1 = (long long)std::floor((p[1] - s.lo[1]) / h1);
  i0 = std::max(0LL, std::min((long long)s.shape[0] - 2, i0));
  i1 = std::max(0LL, std::min((long long)s.shape[1] - 2, i1));
  const double t0 = (p[0] - (s.lo[0] + i0 * h0)) / h0;
  const double t1 = (p[1] - (s.lo[1] + i1 * h1)) / h1;
  const std::size_t base = s.index((int)i0, (int)i1);
  const std::size_t S = (std::size_t)s.shape[1];
  const std::size_t ks[4] = {base, base + 1, base + S, base + S + 1};
  const double cs[4] = {(1 - t0) * (1 - t1), (1 - t0) * t1, t0 * (1 - t1), t0 * t1};
  double csum = 0.0, acc = 0.0;
  for (int q = 0; q < 4; ++q)
    if (w[ks[q]] > 0.0) {
      csum += cs[q];
      acc += cs[q] * u.dev[ks[q]];
    }
  if (csum <= 0.0) {
    std::size_t best = ks[0];
    for (int q = 1; q < 4; ++q)
      if (M.grid().minell[ks[q]] > M.grid().minell[best]) best = ks[q];
    return u.dev[best];
  }
  return acc / csum;
}

inline double boundary_linear_part(const SymplecticPotential& u, bool inward_extrapolate) {
  const ToricModel& M = *u.model;
  const Polytope& P = M.polytope();
  const GridSpec& s = M.spec();
  const double V = P.volume();

  // Probe rays point from each boundary quadrature node toward the deepest
  // grid node, so both extrapolation probes stay a full cell inside every
  // facet (min_ell is concave along the segment).  Linear extrapolation back
  // to the boundary is exact for affine deviations.
  Vec2 center{0, 0};
  double rho = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k)
    if (M.grid().minell[k] > rho) {
      rho = M.grid().minell[k];
      center = s.node(k);
    }
  double L1 = 0.0;
  for (const auto& f : P.facets())
    L1 = std::max(L1, static_cast<double>(std::llabs(f.normal[0]) + std::llabs(f.normal[1])));
  const double cell = std::max(s.h(0), P.n() == 2 ? s.h(1) : 0.0) * L1;
  const double t1 = std::min(0.45, 1.5 * std::max(M.collar(), cell) / rho);

  std::vector<double> terms;
  for (int i = 0; i < (int)P.facets().size(); ++i) {
    for (const QuadPoint& q : facet_quadrature(P, i)) {
      double v;
      if (inward_extrapolate) {
        const Vec2 d = sub(center, q.y);
        v = 2.0 * eval_dev(u, add(q.y, scale(d, t1))) - eval_dev(u, add(q.y, scale(d, 2.0 * t1)));
      } else {
        v = eval_dev(u, q.y);
      }
      terms.push_back(q.w * v);
    }
  }
  const double B = kahan_sum(terms);
  const double A = P.boundary_measure() / V;
  const double Iv = M.grid().integrate(u.dev);
  return (B - A * Iv) / V;
}

// ---------------------------------------------------------------------------
// K-energy, gauged to vanish at the reference potential.
//
// Both routes combine the interior log-determinant ratio with the linear
// boundary pairing; the factor two on the pairing comes from integrating the
// ratio's linearization by parts against the reference metric (each facet
// contributes its conormal derivative plus the restricted deviation).
// Primary route: excised means with inward-extrapolated facet probes.
// Oracle route: direct on-boundary evaluation of the same pairing.
// ---------------------------------------------------------------------------
inline double k_energy(const SymplecticPotential& u) {
  DerivedFields F2 = derive_fields(u, 2, false);
  DerivedFields F4 = derive_fields(u, 4, false);
  auto level = [](const DerivedFields& F) {
    std::vector<double> g(F.size());
    for (std::size_t t = 0; t < F.size(); ++t) g[t] = F.logdetG_at[t] - F.logdet_u[t];
    return F.mean(g);
  };
  const double nonlinear = richardson(level(F2), level(F4));
  return nonlinear + 2.0 * boundary_linear_part(u, true);
}

inline double k_energy_boundary_oracle(const SymplecticPotential& u) {
  DerivedFields F2 = derive_fields(u, 2, false);
  DerivedFields F4 = derive_fields(u, 4, false);
  auto level = [](const DerivedFields& F) {
    std::vector<double> g(F.size());
    for (std::size_t t = 0; t < F.size(); ++t) g[t] = F.logdetG_at[t] - F.logdet_u[t];
    return F.mean(g);
  };
  const double logpart = richardson(level(F2), level(F4));
  return logpart + 2.0 * boundary_linear_part(u, false);
}

// ---------------------------------------------------------------------------
// Reference Ricci data for the twisted (Fano / edge) classes.
// e^{f0_raw} = Q(y) * prod_i l_i^{beta-1} * exp(sum_i (beta - l_i)) with
// Q = det D^2 u_G * prod_i l_i a polynomial, positive on the closed polytope.
// The additive constant c0 enforces unit twisted mass; y_weighted is the
// twisted barycenter (analytically a/2).
// ---------------------------------------------------------------------------
struct RicciData {
  ModelPtr model;
  double beta = 1.0;
  Vec2 a{0, 0};
  double c0 = 0.0;
  Vec2 y_weighted{0, 0};

  double logQ(const Vec2& y) const {
    const Polytope& P = model->polytope();
    const auto& fs = P.facets();
    if (P.n() == 1) {
      double s = 0.0;
      for (std::size_t j = 0; j < fs.size(); ++j) {
        double prod = 1.0;
        for (std::size_t m = 0; m < fs.size(); ++m)
          if (m != j) prod *= std::max(0.0, P.ell((int)m, y));
        s += 0.5 * (double)(fs[j].normal[0] * fs[j].normal[0]) * prod;
      }
      return std::log(s);
    }
    double s = 0.0;
    for (std::size_t j = 0; j < fs.size(); ++j)
      for (std::size_t k = j + 1; k < fs.size(); ++k) {
        const double cr = (double)(fs[j].normal[0] * fs[k].normal[1] - fs[j].normal[1] * fs[k].normal[0]);
        if (cr == 0.0) continue;
        double prod = 1.0;
        for (std::size_t m = 0; m < fs.size(); ++m)
          if (m != j && m != k) prod *= std::max(0.0, P.ell((int)m, y));
        s += 0.25 * cr * cr * prod;
      }
    return std::log(s);
  }

  double f0_raw(const Vec2& y) const {
    const Polytope& P = model->polytope();
    double s = logQ(y);
    for (std::size_t j = 0; j < P.facets().size(); ++j) {
      const double l = P.ell((int)j, y);
      s += (beta - 1.0) * std::log(l) + (beta - l);
    }
    return s;
  }

  double f0(const Vec2& y) const { return f0_raw(y) + c0; }
};

inline RicciData ricci_data(const ModelPtr& m, double beta) {
  if (!(beta > 0.0 && beta <= 1.0)) fail(ErrorCode::ParameterOutOfRange, "beta must lie in (0,1]");
  if (beta < 1.0 && m->n() == 2)
    fail(ErrorCode::EdgeDimensionUnsupported, "cone angles along divisors are supported in dimension one only");
  RicciData R;
  R.model = m;
  R.beta = beta;
  const Polytope& P = m->polytope();
  // a solves <l_i, a> = 2(beta - c_i) for every facet
  Sym2 Mn;
  Vec2 rhs{0, 0};
  for (const auto& f : P.facets()) {
    const double l0 = (double)f.normal[0], l1 = (double)f.normal[1];
    const double b = 2.0 * (beta - f.offset);
    Mn.a11 += l0 * l0;
    Mn.a12 += l0 * l1;
    Mn.a22 += l1 * l1;
    rhs[0] += b * l0;
    rhs[1] += b * l1;
  }
  if (P.n() == 1) {
    R.a = {rhs[0] / Mn.a11, 0.0};
  } else {
    R.a = Mn.solve(2, rhs);
  }
  for (const auto& f : P.facets()) {
    const double got = dot(P.n(), Vec2{(double)f.normal[0], (double)f.normal[1]}, R.a);
    if (std::fabs(got - 2.0 * (beta - f.offset)) > 1e-9 * (1.0 + norm_inf(P.n(), R.a)))
      fail(ErrorCode::NotFano, "no affine solution to the twisted cohomology condition");
  }
  const double V = P.volume();
  if (m->n() == 1) {
    const Vec2 A = P.vertices()[0], B = P.vertices()[1];
    const double lo = std::min(A[0], B[0]), hi = std::max(A[0], B[0]);
    std::vector<double> mass, mom;
    for (const QuadPoint& q : graded_interval_quadrature(lo, hi)) {
      const double e = std::exp(R.f0_raw(q.y));
      mass.push_back(q.w * e);
      mom.push_back(q.w * e * q.y[0]);
    }
    const double S = kahan_sum(mass);
    R.c0 = -std::log(S / V);
    R.y_weighted = {kahan_sum(mom) / S, 0.0};
  } else {
    double den[2], num0[2], num1[2];
    for (int li = 0; li < 2; ++li) {
      const MaskedGrid& ex = m->excised(li == 0 ? 2 : 4);
      const GridSpec& s = m->spec();
      std::vector<double> mass, m0, m1;
      for (std::size_t k : ex.support) {
        const Vec2 y = s.node(k);
        const double e = std::exp(R.f0_raw(y));
        mass.push_back(ex.weight[k] * e);
        m0.push_back(ex.weight[k] * e * y[0]);
        m1.push_back(ex.weight[k] * e * y[1]);
      }
      den[li] = kahan_sum(mass) / ex.total_weight;
      num0[li] = kahan_sum(m0) / ex.total_weight;
      num1[li] = kahan_sum(m1) / ex.total_weight;
    }
    const double D = richardson(den[0], den[1]);
    R.c0 = -std::log(D);
    R.y_weighted = {richardson(num0[0], num0[1]) / D, richardson(num1[0], num1[1]) / D};
  }
  return R;
}

struct RicciPotentialResult {
  std::vector<double> values;  // f0 at support nodes of the full grid, 0 elsewhere
  double c0 = 0.0;
  Vec2 a{0, 0};
  double beta = 1.0;
};

inline RicciPotentialResult ricci_potential(const ModelPtr& m, double beta) {
  RicciData R = ricci_data(m, beta);
  RicciPotentialResult out;
  out.c0 = R.c0;
  out.a = R.a;
  out.beta = beta;
  out.values.assign(m->spec().size(), 0.0);
  for (std::size_t k : m->grid().support) out.values[k] = R.f0(m->spec().node(k));
  return out;
}

// ---------------------------------------------------------------------------
// Ding functional F(u) = -AM(u) - log V^{-1} int e^{f0 - phi} w^n, with the
// twisted integral pulled back through the reference moment image.  Vanishes
// at the reference by the normalization of f0.
// ---------------------------------------------------------------------------
inline double phi_tilde_ref(const ToricModel& M, const DualPotential& D, const Vec2& y, std::size_t& warm) {
  const Vec2 g = M.grad_guillemin(y);
  return D.eval(g, warm) - (dot(M.n(), g, y) - M.u_guillemin(y));
}

// log of V^{-1} int e^{f0 - phi} over P for a prebuilt dual potential
inline double ding_log_integral(const SymplecticPotential& u, const RicciData& R, const DualPotential& D) {
  const ToricModel& M = *u.model;
  const double V = M.volume();
  if (M.n() == 1) {
    const Vec2 A = M.polytope().vertices()[0], B = M.polytope().vertices()[1];
    const double lo = std::min(A[0], B[0]), hi = std::max(A[0], B[0]);
    std::vector<double> zs, ws;
    std::size_t warm = DualPotential::npos();
    for (const QuadPoint& q : graded_interval_quadrature(lo, hi)) {
      zs.push_back(R.f0_raw(q.y) + R.c0 - phi_tilde_ref(M, D, q.y, warm));
      ws.push_back(q.w / V);
    }
    double mx = -std::numeric_limits<double>::infinity();
    for (double z : zs) mx = std::max(mx, z);
    std::vector<double> terms(zs.size());
    for (std::size_t t = 0; t < zs.size(); ++t) terms[t] = ws[t] * std::exp(zs[t] - mx);
    return mx + std::log(kahan_sum(terms));
  }
  double z[2];
  for (int li = 0; li < 2; ++li) {
    const MaskedGrid& ex = M.excised(li == 0 ? 2 : 4);
    const GridSpec& s = M.spec();
    const auto& gradG = M.table_gradG();
    const auto& uG = M.table_uG();
    std::vector<double> zs, ws;
    std::size_t warm = DualPotential::npos();
    for (std::size_t k : ex.support) {
      const Vec2 y = s.node(k);
      const double phit = D.eval(gradG[k], warm) - (dot(2, gradG[k], y) - uG[k]);
      zs.push_back(R.f0_raw(y) + R.c0 - phit);
      ws.push_back(ex.weight[k] / ex.total_weight);
    }
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : zs) mx = std::max(mx, v);
    std::vector<double> terms(zs.size());
    for (std::size_t t = 0; t < zs.size(); ++t) terms[t] = ws[t] * std::exp(zs[t] - mx);
    z[li] = mx + std::log(kahan_sum(terms));
  }
  // extrapolate the mean, not its log
  const double mx = std::max(z[0], z[1]);
  const double comb = 2.0 * std::exp(z[0] - mx) - std::exp(z[1] - mx);
  if (!(comb > 0.0)) return z[0];
  return mx + std::log(comb);
}

inline double ding(const SymplecticPotential& u, double beta) {
  RicciData R = ricci_data(u.model, beta);
  DualPotential D = DualPotential::build(u);
  return -am(u) - ding_log_integral(u, R, D);
}

// ---------------------------------------------------------------------------
// Exact gap between the K-energy and the Ding functional, realized through
// the moment-transport tables on one-dimensional fibers: the relative entropy
// of the transported volume density against the twisted reference measure,
// minus half the Aubin I pairing of the transported potential.  All terms
// are gauged to vanish at the reference potential.
// ---------------------------------------------------------------------------
inline double ricci_average_gap(const SymplecticPotential& u, double beta) {
  const ToricModel& M = *u.model;
  if (M.n() != 1)
    fail(ErrorCode::ParameterOutOfRange,
         "transport realization of the energy gap requires a one-dimensional moment polytope");
  RicciData R = ricci_data(u.model, beta);
  DualPotential D = DualPotential::build(u);
  const double logint = ding_log_integral(u, R, D);
  DerivedFields F2 = derive_fields(u, 2, true);
  DerivedFields F4 = derive_fields(u, 4, true);
  // entropy core: log-density ratio + transported potential; I core: the
  // reference-coordinate potential minus the transported one
  auto level = [&](const DerivedFields& F, double& gcore, double& icore) {
    std::vector<double> g(F.size()), q(F.size());
    std::size_t warm = DualPotential::npos();
    for (std::size_t t = 0; t < F.size(); ++t) {
      const double rho = F.logdetG_match[t] - F.logdet_u[t];
      const double tu = dot(2, F.grad_u[t], sub(F.y[t], F.ytilde[t])) - F.u_val[t] + F.uG_match[t];
      g[t] = rho + tu;
      q[t] = phi_tilde_ref(M, D, F.y[t], warm) - tu;
    }
    gcore = F.mean(g);
    icore = F.mean(q);
  };
  double g2, i2, g4, i4;
  level(F2, g2, i2);
  level(F4, g4, i4);
  return richardson(g2, g4) + logint - 0.5 * richardson(i2, i4);
}

// Residual of the identity E = F + gap (all three terms gauged at the
// reference); analytically zero.
inline double ding_tian_residual(const SymplecticPotential& u) {
  return k_energy(u) - ding(u, 1.0) - ricci_average_gap(u, 1.0);
}

// ---------------------------------------------------------------------------
// Moment-map potentials and the modified (soliton) functionals.
// ---------------------------------------------------------------------------
inline AffineFunction psi_x(const ModelPtr& m, const Vec2& b) {
  const MaskedGrid& g = m->grid();
  const GridSpec& s = m->spec();
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t k : g.support) mx = std::max(mx, dot(m->n(), b, s.node(k)));
  std::vector<double> terms;
  terms.reserve(g.support.size());
  for (std::size_t k : g.support) terms.push_back(g.weight[k] * std::exp(dot(m->n(), b, s.node(k)) - mx));
  const double c = -(mx + std::log(kahan_sum(terms) / g.total_weight));
  return {b, c};
}

inline double am_x(const SymplecticPotential& u, const Vec2& b) {
  const AffineFunction psi = psi_x(u.model, b);
  const MaskedGrid& g = u.model->grid();
  const GridSpec& s = u.model->spec();
  std::vector<double> terms;
  terms.reserve(g.support.size());
  for (std::size_t k : g.support)
    terms.push_back(g.weight[k] * u.dev[k] * std::exp(psi.eval(u.model->n(), s.node(k))));
  return -kahan_sum(terms) / g.total_weight;
}

// Soliton direction: b solving the moment condition m(b) = y_weighted, where
// m(b) is the e^{<b,y>}-weighted barycenter of P and y_weighted the twisted
// barycenter from the Ricci data.  Newton with the covariance as Jacobian.
struct SolitonField {
  Vec2 b{0, 0};
  int iterations = 0;
  double residual = 0.0;
};

inline SolitonField soliton_field(const ModelPtr& m) {
  RicciData R = ricci_data(m, 1.0);
  const MaskedGrid& g = m->grid();
  const GridSpec& s = m->spec();
  const int n = m->n();
  auto moments = [&](const Vec2& b, Vec2& mean_y, Sym2& cov) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t k : g.support) mx = std::max(mx, dot(n, b, s.node(k)));
    std::vector<double> m00, m10, m11, m20, m21, m22;
    for (std::size_t k : g.support) {
      const Vec2 y = s.node(k);
      const double e = g.weight[k] * std::exp(dot(n, b, y) - mx);
      m00.push_back(e);
      m10.push_back(e * y[0]);
      m11.push_back(e * y[1]);
      m20.push_back(e * y[0] * y[0]);
      m21.push_back(e * y[0] * y[1]);
      m22.push_back(e * y[1] * y[1]);
    }
    const double Z = kahan_sum(m00);
    mean_y = {kahan_sum(m10) / Z, kahan_sum(m11) / Z};
    cov.a11 = kahan_sum(m20) / Z - mean_y[0] * mean_y[0];
    cov.a12 = kahan_sum(m21) / Z - mean_y[0] * mean_y[1];
    cov.a22 = kahan_sum(m22) / Z - mean_y[1] * mean_y[1];
  };
  SolitonField out;
  Vec2 b{0, 0};
  Vec2 mean_y;
  Sym2 cov;
  moments(b, mean_y, cov);
  double res = norm_inf(n, sub(mean_y, R.y_weighted));
  for (int it = 0; it < 60 && res > 1e-10; ++it) {
    Vec2 step;
    if (n == 1) {
      step = {(R.y_weighted[0] - mean_y[0]) / cov.a11, 0.0};
    } else {
      step = cov.solve(2, sub(R.y_weighted, mean_y));
    }
    double t = 1.0;
    for (int bt = 0; bt < 40; ++bt) {
      const Vec2 bn = add(b, scale(step, t));
      Vec2 my;
      Sym2 cv;
      moments(bn, my, cv);
      const double rn = norm_inf(n, sub(my, R.y_weighted));
      if (rn < res) {
        b = bn;
        mean_y = my;
        cov = cv;
        res = rn;
        break;
      }
      t *= 0.5;
    }
    out.iterations = it + 1;
  }
  out.b = b;
  out.residual = res;
  if (res > 1e-10)
    fail(ErrorCode::NonConvergence,
         "soliton moment solve stalled at residual " + std::to_string(res));
  return out;
}

struct SolitonFunctionals {
  double f_x = 0.0;
  double e_x = 0.0;
  double jensen_c = 0.0;
};

inline SolitonFunctionals soliton_functionals(const SymplecticPotential& u, const Vec2& b) {
  const ModelPtr& m = u.model;
  RicciData R = ricci_data(m, 1.0);
  const AffineFunction psi = psi_x(m, b);
  const int n = m->n();

  SolitonFunctionals out;
  {
    DualPotential D = DualPotential::build(u);
    out.f_x = -am_x(u, b) - ding_log_integral(u, R, D);
  }

  // modified K-energy: twisted entropy + self pairing - twisted AM, gauged at
  // the reference; the twisted measure is e^{psi} dy / V
  DerivedFields F2 = derive_fields(u, 2, true);
  DerivedFields F4 = derive_fields(u, 4, true);
  auto level = [&](const DerivedFields& F) {
    std::vector<double> g(F.size());
    for (std::size_t t = 0; t < F.size(); ++t) {
      const double psiy = psi.eval(n, F.y[t]);
      const double rho = F.logdetG_match[t] - F.logdet_u[t];
      const double tu = dot(2, F.grad_u[t], sub(F.y[t], F.ytilde[t])) - F.u_val[t] + F.uG_match[t];
      g[t] = std::exp(psiy) * (rho + tu - R.f0(F.ytilde[t]) + psiy);
    }
    return F.mean(g);
  };
  auto level_ref = [&](const DerivedFields& F) {
    std::vector<double> g(F.size());
    for (std::size_t t = 0; t < F.size(); ++t) {
      const double psiy = psi.eval(n, F.y[t]);
      g[t] = std::exp(psiy) * (psiy - R.f0(F.y[t]));
    }
    return F.mean(g);
  };
  const double Eraw = -am_x(u, b) + richardson(level(F2), level(F4));
  const double g0 = richardson(level_ref(F2), level_ref(F4));
  out.e_x = Eraw - g0;
  out.jensen_c = std::max(0.0, g0);
  return out;
}

// ---------------------------------------------------------------------------
// Futaki pairing of an affine direction: the orbit derivative of the K-energy,
// in closed form from the boundary measure and the barycenter.  The factor
// two matches the K-energy's boundary pairing.
// ---------------------------------------------------------------------------
inline double futaki_linear(const ModelPtr& m, const Vec2& b) {
  const Polytope& P = m->polytope();
  const double V = P.volume();
  double B = 0.0;
  for (int i = 0; i < (int)P.facets().size(); ++i) {
    const auto& verts = P.facet_vertices(i);
    Vec2 mid = verts[0];
    if (P.n() == 2) mid = scale(add(verts[0], verts[1]), 0.5);
    B += P.facet_measure(i) * dot(P.n(), b, mid);
  }
  return 2.0 * (B - (P.boundary_measure() / V) * dot(P.n(), b, P.barycenter()) * V) / V;
}

// The same pairing through the twisted measure: 2 V^{-1} int l (1 - e^{f0}) dy,
// the gap between the plain and the twisted barycenter.
inline double futaki_ricci_route(const ModelPtr& m, const Vec2& b) {
  RicciData R = ricci_data(m, 1.0);
  const GridSpec& s = m->spec();
  double lvl[2];
  for (int li = 0; li < 2; ++li) {
    const MaskedGrid& ex = m->excised(li == 0 ? 2 : 4);
    std::vector<double> terms;
    for (std::size_t k : ex.support) {
      const Vec2 y = s.node(k);
      terms.push_back(ex.weight[k] * dot(m->n(), b, y) * (1.0 - std::exp(R.f0(y))));
    }
    lvl[li] = kahan_sum(terms) / ex.total_weight;
  }
  return 2.0 * richardson(lvl[0], lvl[1]);
}

// ---------------------------------------------------------------------------
// Assembled report
// ---------------------------------------------------------------------------
struct EnergyReport {
  double am = 0.0;
  double j = 0.0, i = 0.0, i_minus_j = 0.0;
  double entropy = 0.0;
  double k_energy = 0.0;
  std::optional<double> ding;
  std::optional<double> modified_ding;
  std::optional<double> modified_k_energy;
  std::optional<Vec2> soliton_b;
  double beta = 1.0;
  std::array<int, 2> grid_resolution{0, 0};
  bool extrapolated = true;
};

inline EnergyReport energy_report(const SymplecticPotential& u, double beta = 1.0) {
  EnergyReport r;
  r.beta = beta;
  r.grid_resolution = {u.model->spec().shape[0], u.model->spec().shape[1]};
  r.am = am(u);
  const JEnergy je = j_energy(u);
  r.j = je.j;
  r.i = je.i;
  r.i_minus_j = je.i_minus_j;
  r.entropy = entropy(u);
  r.k_energy = k_energy(u);
  try {
    r.ding = ding(u, beta);
    if (beta == 1.0) {
      const SolitonField sf = soliton_field(u.model);
      r.soliton_b = sf.b;
      const SolitonFunctionals sfn = soliton_functionals(u, sf.b);
      r.modified_ding = sfn.f_x;
      r.modified_k_energy = sfn.e_x;
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NotFano && e.code() != ErrorCode::EdgeDimensionUnsupported) throw;
  }
  return r;
}

}  // namespace kfl
