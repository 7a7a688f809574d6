#pragma once

// Metric and energy quotients by the torus-translation group: distances and
// J-energies minimized over the affine orbit, plus the properness fit that
// turns (distance, energy) samples into a growth certificate.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "kfl/metric.hpp"

namespace kfl {

struct QuotientResult {
  double value = 0.0;
  AffineFunction minimizer;
  int iterations = 0;
  double residual = 0.0;
};

namespace detail {

// mean |r - <b,y> - c| over the support quadrature, with helpers for the
// smoothed objective sqrt(residual^2 + delta^2)
struct AffineFitProblem {
  const MaskedGrid* g;
  const GridSpec* s;
  int n;
  std::vector<double> r;  // full-box residual data, defined on support

  double value(const Vec2& b, double c) const {
    std::vector<double> terms;
    terms.reserve(g->support.size());
    for (std::size_t k : g->support)
      terms.push_back(g->weight[k] * std::fabs(r[k] - dot(n, b, s->node(k)) - c));
    return kahan_sum(terms) / g->total_weight;
  }

  double smoothed(const Vec2& b, double c, double delta) const {
    std::vector<double> terms;
    terms.reserve(g->support.size());
    for (std::size_t k : g->support) {
      const double t = r[k] - dot(n, b, s->node(k)) - c;
      terms.push_back(g->weight[k] * std::sqrt(t * t + delta * delta));
    }
    return kahan_sum(terms) / g->total_weight;
  }

  // One sweep at smoothing delta: the gradient and Hessian of the smoothed
  // objective at (b, c), plus the normal equations of the quadratic majorizer
  // sum w (t^2 + delta^2) / (2 rho), whose minimizer is the reweighting step.
  void mm_sweep(const Vec2& b, double c, double delta, double grad[3], double hess[3][3],
                double A[3][3], double rhs[3]) const {
    const int dim = n + 1;
    for (int a = 0; a < 3; ++a) {
      grad[a] = 0.0;
      rhs[a] = 0.0;
      for (int q = 0; q < 3; ++q) {
        A[a][q] = 0.0;
        hess[a][q] = 0.0;
      }
    }
    for (std::size_t k : g->support) {
      const Vec2 y = s->node(k);
      const double t = r[k] - dot(n, b, y) - c;
      const double rho = std::sqrt(t * t + delta * delta);
      const double hfac = delta * delta / (rho * rho * rho);
      double z[3] = {y[0], n == 2 ? y[1] : 1.0, 1.0};
      if (n == 1) z[1] = 1.0;
      const double w = g->weight[k];
      const double wr = w / rho;
      for (int a = 0; a < dim; ++a) {
        grad[a] -= w * (t / rho) * z[a];
        rhs[a] += wr * r[k] * z[a];
        for (int q = 0; q < dim; ++q) {
          A[a][q] += wr * z[a] * z[q];
          hess[a][q] += w * hfac * z[a] * z[q];
        }
      }
    }
    const double W = g->total_weight;
    for (int a = 0; a < dim; ++a) {
      grad[a] /= W;
      for (int q = 0; q < dim; ++q) hess[a][q] /= W;
    }
  }

  // weighted least squares start
  void least_squares(Vec2& b, double& c) const {
    double A[3][3] = {{0}}, rhs[3] = {0};
    const int dim = n + 1;
    for (std::size_t k : g->support) {
      const Vec2 y = s->node(k);
      double z[3] = {y[0], n == 2 ? y[1] : 1.0, 1.0};
      if (n == 1) z[1] = 1.0;
      const double w = g->weight[k];
      for (int a = 0; a < dim; ++a) {
        rhs[a] += w * r[k] * z[a];
        for (int q = 0; q < dim; ++q) A[a][q] += w * z[a] * z[q];
      }
    }
    double x[3] = {0, 0, 0};
    solve_small(dim, A, rhs, x);
    b = {x[0], n == 2 ? x[1] : 0.0};
    c = x[dim - 1];
  }

  static void solve_small(int dim, double A[3][3], const double rhs[3], double x[3]) {
    double M[3][4];
    for (int a = 0; a < dim; ++a) {
      for (int q = 0; q < dim; ++q) M[a][q] = A[a][q];
      M[a][dim] = rhs[a];
    }
    for (int col = 0; col < dim; ++col) {
      int piv = col;
      for (int row = col + 1; row < dim; ++row)
        if (std::fabs(M[row][col]) > std::fabs(M[piv][col])) piv = row;
      for (int q = col; q <= dim; ++q) std::swap(M[piv][q], M[col][q]);
      const double d = M[col][col];
      if (std::fabs(d) < 1e-300) {
        for (int a = 0; a < dim; ++a) x[a] = 0.0;
        return;
      }
      for (int row = col + 1; row < dim; ++row) {
        const double f = M[row][col] / d;
        for (int q = col; q <= dim; ++q) M[row][q] -= f * M[col][q];
      }
    }
    for (int a = dim - 1; a >= 0; --a) {
      double acc = M[a][dim];
      for (int q = a + 1; q < dim; ++q) acc -= M[a][q] * x[q];
      x[a] = acc / M[a][a];
    }
  }
};

}  // namespace detail

// d_1 on the quotient by torus translations: minimize the L1 distance over
// the affine reparametrizations of the second argument.  Smoothed Newton with
// delta-continuation; the reported value is the unsmoothed objective.
inline QuotientResult d1_quotient(const SymplecticPotential& u, const SymplecticPotential& v) {
  require_same_model(u, v);
  const ToricModel& M = *u.model;
  detail::AffineFitProblem P;
  P.g = &M.grid();
  P.s = &M.spec();
  P.n = M.n();
  P.r.assign(u.dev.size(), 0.0);
  for (std::size_t k : P.g->support) P.r[k] = u.dev[k] - v.dev[k];

  double scale = 0.0;
  for (std::size_t k : P.g->support) scale = std::max(scale, std::fabs(P.r[k]));
  scale = std::max(scale, 1e-12);

  const int dim = P.n + 1;
  // Hybrid per smoothing stage: a Newton trial with the true Hessian (accepted
  // when it does not increase the smoothed objective beyond rounding), falling
  // back to the monotone reweighting step otherwise.
  auto solve_from = [&](Vec2 b, double c, int& iters, double& resid) {
    for (int stage = 2; stage <= 8; ++stage) {
      const double delta = std::pow(10.0, -stage) * scale;
      for (int it = 0; it < 120; ++it) {
        double grad[3], hess[3][3], A[3][3], rhs[3];
        P.mm_sweep(b, c, delta, grad, hess, A, rhs);
        double gn = 0.0;
        for (int a = 0; a < dim; ++a) gn = std::max(gn, std::fabs(grad[a]));
        resid = gn;
        if (gn <= 1e-11 * (1.0 + scale)) break;
        ++iters;
        const double f0 = P.smoothed(b, c, delta);
        const double fuzz = 4e-16 * (1.0 + std::fabs(f0));
        for (int a = 0; a < dim; ++a) hess[a][a] += 1e-14 * scale;
        double step[3];
        detail::AffineFitProblem::solve_small(dim, hess, grad, step);
        const Vec2 bN{b[0] - step[0], P.n == 2 ? b[1] - step[1] : 0.0};
        const double cN = c - step[dim - 1];
        if (P.smoothed(bN, cN, delta) <= f0 + fuzz) {
          b = bN;
          c = cN;
          continue;
        }
        double x[3];
        detail::AffineFitProblem::solve_small(dim, A, rhs, x);
        const Vec2 bM{x[0], P.n == 2 ? x[1] : 0.0};
        const double cM = x[dim - 1];
        const double move = std::max({std::fabs(bM[0] - b[0]), std::fabs(bM[1] - b[1]),
                                      std::fabs(cM - c)});
        b = bM;
        c = cM;
        if (move <= 1e-16 * (1.0 + std::fabs(c) + norm_inf(2, b))) break;
      }
    }
    return std::make_pair(b, c);
  };

  QuotientResult best;
  bool have = false;
  for (int start = 0; start < 2; ++start) {
    Vec2 b{0, 0};
    double c = 0.0;
    if (start == 1) P.least_squares(b, c);
    int iters = 0;
    double resid = 0.0;
    auto [bf, cf] = solve_from(b, c, iters, resid);
    const double val = P.value(bf, cf);
    QuotientResult cand;
    cand.value = val;
    cand.minimizer = {bf, cf};
    cand.iterations = iters;
    cand.residual = resid;
    const std::array<double, 3> key{cand.minimizer.b[0], cand.minimizer.b[1], cand.minimizer.c};
    const std::array<double, 3> bkey{best.minimizer.b[0], best.minimizer.b[1], best.minimizer.c};
    const bool better = !have || val < best.value - 1e-12 * (1.0 + scale) ||
                        (std::fabs(val - best.value) <= 1e-12 * (1.0 + scale) && key < bkey);
    if (better) {
      best = cand;
      have = true;
    }
  }
  if (best.residual > 1e-8 * (1.0 + scale))
    fail(ErrorCode::SolverFailure,
         "quotient solve stalled with gradient norm " + std::to_string(best.residual));
  return best;
}

// Reference implementation: hierarchical grid search over the affine
// parameters, refining the winning cell.  Used as the oracle in tests.
inline QuotientResult brute_force_quotient(const SymplecticPotential& u, const SymplecticPotential& v,
                                           double box = 2.0, double final_step = 0.01) {
  require_same_model(u, v);
  const ToricModel& M = *u.model;
  detail::AffineFitProblem P;
  P.g = &M.grid();
  P.s = &M.spec();
  P.n = M.n();
  P.r.assign(u.dev.size(), 0.0);
  for (std::size_t k : P.g->support) P.r[k] = u.dev[k] - v.dev[k];

  Vec2 b{0, 0};
  double c = 0.0;
  double half = box;
  double step = box / 4.0;
  int evals = 0;
  while (true) {
    Vec2 bb = b;
    double bc = c;
    double bv = std::numeric_limits<double>::infinity();
    const int m = (int)std::llround(2.0 * half / step);
    for (int i0 = 0; i0 <= m; ++i0)
      for (int i1 = 0; i1 <= (P.n == 2 ? m : 0); ++i1)
        for (int i2 = 0; i2 <= m; ++i2) {
          const Vec2 bt{b[0] - half + i0 * step, P.n == 2 ? b[1] - half + i1 * step : 0.0};
          const double ct = c - half + i2 * step;
          const double val = P.value(bt, ct);
          ++evals;
          if (val < bv) {
            bv = val;
            bb = bt;
            bc = ct;
          }
        }
    b = bb;
    c = bc;
    if (step <= final_step) {
      QuotientResult r;
      r.value = bv;
      r.minimizer = {b, c};
      r.iterations = evals;
      r.residual = step;
      return r;
    }
    half = 2.0 * step;
    step = std::max(final_step, step / 5.0);
  }
}

// J on the quotient: minimize J(u translated by <b,y>) over b.  J is convex
// in b (it is a mean of convex dual evaluations), so a few rounds of
// coordinate-wise golden section from multistart suffice.
inline QuotientResult j_quotient(const SymplecticPotential& u) {
  const ToricModel& M = *u.model;
  const int n = M.n();
  DualPotential D = DualPotential::build(u);
  const double AM = am(u);
  const Vec2 ybar = M.polytope().barycenter();

  auto J_of = [&](const Vec2& b) {
    double lvl[2];
    for (int li = 0; li < 2; ++li) {
      const MaskedGrid& ex = M.excised(li == 0 ? 2 : 4);
      const GridSpec& s = M.spec();
      const auto& gradG = M.table_gradG();
      const auto& uG = M.table_uG();
      std::vector<double> terms;
      terms.reserve(ex.support.size());
      std::size_t warm = DualPotential::npos();
      for (std::size_t k : ex.support) {
        const Vec2 y = s.node(k);
        const Vec2 x = sub(gradG[k], b);
        const double psi_ref = dot(n, gradG[k], y) - uG[k];
        terms.push_back(ex.weight[k] * (D.eval(x, warm) - psi_ref));
      }
      lvl[li] = kahan_sum(terms) / ex.total_weight;
    }
    const double Tref = richardson(lvl[0], lvl[1]);
    double j = Tref - (AM - dot(n, b, ybar));
    return j;
  };

  int evals = 0;
  auto golden_axis = [&](Vec2 b, int axis) {
    double lo = -1.0, hi = 1.0;
    auto f = [&](double t) {
      Vec2 bt = b;
      bt[axis] = t;
      ++evals;
      return J_of(bt);
    };
    // expand the bracket until the interior beats both ends
    double flo = f(lo), fhi = f(hi), fmid = f(0.5 * (lo + hi));
    for (int e = 0; e < 40 && !(fmid <= flo && fmid <= fhi); ++e) {
      lo *= 2.0;
      hi *= 2.0;
      flo = f(lo);
      fhi = f(hi);
      fmid = f(0.5 * (lo + hi));
    }
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, bb = hi;
    double x1 = bb - gr * (bb - a), x2 = a + gr * (bb - a);
    double f1 = f(x1), f2 = f(x2);
    while (bb - a > 1e-8) {
      if (f1 <= f2) {
        bb = x2;
        x2 = x1;
        f2 = f1;
        x1 = bb - gr * (bb - a);
        f1 = f(x1);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + gr * (bb - a);
        f2 = f(x2);
      }
    }
    b[axis] = 0.5 * (a + bb);
    return b;
  };

  Vec2 b{0, 0};
  if (n == 1) {
    b = golden_axis(b, 0);
  } else {
    for (int round = 0; round < 4; ++round) {
      const Vec2 prev = b;
      b = golden_axis(b, 0);
      b = golden_axis(b, 1);
      if (norm_inf(2, sub(b, prev)) < 1e-7) break;
    }
  }
  const double at_b = J_of(b);
  const double at_zero = J_of({0, 0});
  QuotientResult r;
  if (at_zero <= at_b) {
    r.value = at_zero;
    r.minimizer = {{0, 0}, 0.0};
  } else {
    r.value = at_b;
    r.minimizer = {b, 0.0};
  }
  r.iterations = evals;
  const double hfd = 1e-5;
  double g = 0.0;
  for (int axis = 0; axis < n; ++axis) {
    Vec2 bp = r.minimizer.b, bm = r.minimizer.b;
    bp[axis] += hfd;
    bm[axis] -= hfd;
    g = std::max(g, std::fabs(J_of(bp) - J_of(bm)) / (2.0 * hfd));
  }
  r.residual = g;
  return r;
}

// Polar splitting of a torus element (angular part, radial part); the radial
// part generates the geodesic ray the element acts along.
struct TorusElement {
  Vec2 theta{0, 0};
  Vec2 radial{0, 0};
};

struct PolarParts {
  Vec2 compact{0, 0};
  Vec2 ray{0, 0};
};

inline PolarParts torus_polar(const TorusElement& g) { return {g.theta, g.radial}; }

// Properness fit: the largest C (binary search) for which the binding sample
// of f >= C d - D sits at the far end of the d range, with the smallest
// admissible offset D >= 0.  This is the terminal slope of the lower convex
// envelope of the scatter.
struct PropernessReport {
  double C = 0.0;
  double D = 0.0;
  int n_samples = 0;
  double min_margin = 0.0;
  std::string family_descriptor;
  bool proper = false;
};

inline PropernessReport properness_fit(const std::vector<double>& d, const std::vector<double>& f,
                                       const std::string& family = "", double c_threshold = 1e-3) {
  if (d.size() != f.size()) fail(ErrorCode::GridMismatch, "sample arrays differ in length");
  const int N = (int)d.size();
  double dmax = 0.0, dmin_pos = std::numeric_limits<double>::infinity();
  for (double t : d) {
    dmax = std::max(dmax, t);
    if (t > 0.0) dmin_pos = std::min(dmin_pos, t);
  }
  if (N < 10 || !(dmax > 0.0) || dmax / dmin_pos < 10.0)
    fail(ErrorCode::InsufficientSpread,
         "need at least 10 samples with distance values spanning a factor of 10");

  double fscale = 1.0;
  for (double t : f) fscale = std::max(fscale, std::fabs(t));

  // Terminal growth statistic: the steepest chord from the tail of the cloud
  // (distances past half the range) to its far end.  Plateaued or decaying
  // data give a nonpositive best slope, which clamps to zero; only genuine
  // growth out to the largest distances certifies a linear lower bound.
  int iR = 0;
  for (int i = 1; i < N; ++i)
    if (d[i] > d[iR] || (d[i] == d[iR] && f[i] < f[iR])) iR = i;
  const double dgap = 1e-9 * dmax;
  double slope = -std::numeric_limits<double>::infinity();
  for (int pass = 0; pass < 2 && !std::isfinite(slope); ++pass)
    for (int i = 0; i < N; ++i) {
      if (d[iR] - d[i] <= dgap) continue;
      if (pass == 0 && d[i] < 0.5 * dmax) continue;  // tail first, all as fallback
      slope = std::max(slope, (f[iR] - f[i]) / (d[iR] - d[i]));
    }
  PropernessReport r;
  r.C = std::max(0.0, slope);
  double D = 0.0;
  for (int i = 0; i < N; ++i) D = std::max(D, r.C * d[i] - f[i]);
  r.D = D;
  double mm = std::numeric_limits<double>::infinity();
  for (int i = 0; i < N; ++i) mm = std::min(mm, f[i] - (r.C * d[i] - D));
  // D is the max of C d - f, so the margin is nonnegative by construction;
  // snap the rounding dust of the binding sample back to the identity
  if (mm < 0.0 && mm >= -1e-9 * fscale) mm = 0.0;
  r.min_margin = mm;
  r.n_samples = N;
  r.family_descriptor = family;
  r.proper = r.C >= c_threshold;
  return r;
}

}  // namespace kfl
