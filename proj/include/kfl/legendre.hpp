#pragma once

// Discrete Legendre transforms on grid potentials.
//
// The conjugate of a grid function equals the conjugate of its lower convex
// hull, so every sup here is taken over hull vertices. That makes the
// transform exact for arbitrary (not necessarily convex) node data and gives
// biconjugation ( = convexification) for free. The 2-D transform factors into
// per-row and per-column 1-D transforms.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "kfl/errors.hpp"
#include "kfl/grid.hpp"
#include "kfl/model.hpp"
#include "kfl/potential.hpp"
#include "kfl/vec.hpp"

namespace kfl {

// Lower convex hull of a 1-D point set, with conjugate evaluation.
struct Hull1D {
  std::vector<double> y;      // hull vertex abscissae, strictly increasing
  std::vector<double> f;      // hull vertex values
  std::vector<double> slope;  // edge slopes, nondecreasing, size y.size()-1

  void build(const double* ys, const double* fs, std::size_t m) {
    y.clear();
    f.clear();
    slope.clear();
    if (m == 0) fail(ErrorCode::GridTooCoarse, "empty point set for convex hull");
    y.reserve(m);
    f.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
      double yi = ys[i], fi = fs[i];
      while (y.size() >= 2) {
        std::size_t k = y.size();
        double cross = (y[k - 1] - y[k - 2]) * (fi - f[k - 2]) - (yi - y[k - 2]) * (f[k - 1] - f[k - 2]);
        if (cross <= 0.0)
          ;
        else
          break;
        y.pop_back();
        f.pop_back();
      }
      if (!y.empty() && yi <= y.back()) {
        // duplicate abscissa: keep the lower value
        if (fi < f.back()) f.back() = fi;
        continue;
      }
      y.push_back(yi);
      f.push_back(fi);
    }
    slope.resize(y.size() > 0 ? y.size() - 1 : 0);
    for (std::size_t j = 0; j + 1 < y.size(); ++j) slope[j] = (f[j + 1] - f[j]) / (y[j + 1] - y[j]);
  }

  std::size_t argmax_vertex(double x) const {
    // first edge with slope >= x; its left vertex is the maximizer of x*y - f
    std::size_t j = std::lower_bound(slope.begin(), slope.end(), x) - slope.begin();
    return j;  // j == slope.size() means the last vertex
  }

  double conj(double x, bool* at_low = nullptr, bool* at_high = nullptr) const {
    std::size_t j = argmax_vertex(x);
    if (at_low) *at_low = (j == 0);
    if (at_high) *at_high = (j + 1 == y.size());
    return x * y[j] - f[j];
  }

  // Conjugate at an ascending list of targets in O(m + ntargets).
  void conj_sorted(const double* xs, std::size_t m, double* out, bool* hit_low, bool* hit_high) const {
    std::size_t j = 0;
    for (std::size_t k = 0; k < m; ++k) {
      double x = xs[k];
      while (j < slope.size() && slope[j] < x) ++j;
      out[k] = x * y[j] - f[j];
      if (j == 0 && hit_low) *hit_low = true;
      if (j + 1 == y.size() && hit_high) *hit_high = true;
    }
  }

  // Piecewise-linear value of the hull itself (the convex envelope).
  double envelope(double yq) const {
    if (y.size() == 1) return f[0];
    if (yq <= y.front()) return f.front() + slope.front() * (yq - y.front());
    if (yq >= y.back()) return f.back() + slope.back() * (yq - y.back());
    std::size_t j = std::upper_bound(y.begin(), y.end(), yq) - y.begin();
    return f[j - 1] + slope[j - 1] * (yq - y[j - 1]);
  }

  double slope_min() const { return slope.empty() ? 0.0 : slope.front(); }
  double slope_max() const { return slope.empty() ? 0.0 : slope.back(); }
};

struct ConjugateResult {
  GridSpec xspec;
  std::vector<double> psi;  // row-major over xspec
  bool range_exceeded = false;  // some input slope fell outside the target grid
};

// Dual grid sized from the slope range of the data over its support.
inline GridSpec dual_grid_auto(const GridSpec& spec, const std::vector<double>& vals,
                               const std::vector<double>& wt, int factor = 2, double pad = 0.05) {
  GridSpec xs;
  xs.n = spec.n;
  for (int d = 0; d < spec.n; ++d) {
    double smin = std::numeric_limits<double>::infinity();
    double smax = -smin;
    double h = spec.h(d);
    long long stride = (d == 0 && spec.n == 2) ? spec.shape[1] : 1;
    long long n0 = (spec.n == 2) ? spec.shape[0] : 1;
    long long n1 = (spec.n == 2) ? spec.shape[1] : spec.shape[0];
    long long outer = (d == 0 && spec.n == 2) ? n1 : n0;
    long long inner = (d == 0 && spec.n == 2) ? n0 : n1;
    for (long long o = 0; o < outer; ++o) {
      long long base = (spec.n == 2) ? ((d == 0) ? o : o * spec.shape[1]) : 0;
      for (long long i = 0; i + 1 < inner; ++i) {
        long long a = base + i * stride, b = base + (i + 1) * stride;
        if (wt[a] > 0.0 && wt[b] > 0.0) {
          double s = (vals[b] - vals[a]) / h;
          smin = std::min(smin, s);
          smax = std::max(smax, s);
        }
      }
    }
    if (!(smin <= smax)) fail(ErrorCode::GridTooCoarse, "no adjacent support pairs along an axis");
    double c = 0.5 * (smin + smax), r = 0.5 * (smax - smin) * (1.0 + pad) + 1e-9;
    xs.lo[d] = c - r;
    xs.hi[d] = c + r;
    xs.shape[d] = factor * (spec.shape[d] - 1) + 1;
  }
  if (xs.n == 1) xs.shape[1] = 1;
  return xs;
}

// Conjugate of node data (vals, support-masked by wt > 0) onto an explicit dual grid.
inline ConjugateResult conjugate_on_grid(const GridSpec& spec, const std::vector<double>& vals,
                                         const std::vector<double>& wt, const GridSpec& xspec) {
  ConjugateResult R;
  R.xspec = xspec;
  bool lo_hit = false, hi_hit = false;
  if (spec.n == 1) {
    std::vector<double> ys, fs;
    ys.reserve(spec.shape[0]);
    for (long long i = 0; i < spec.shape[0]; ++i)
      if (wt[i] > 0.0) {
        ys.push_back(spec.lo[0] + i * spec.h(0));
        fs.push_back(vals[i]);
      }
    Hull1D H;
    H.build(ys.data(), fs.data(), ys.size());
    if (H.slope_min() < xspec.lo[0] || H.slope_max() > xspec.hi[0]) R.range_exceeded = true;
    std::vector<double> xs(xspec.shape[0]);
    for (long long k = 0; k < xspec.shape[0]; ++k) xs[k] = xspec.lo[0] + k * xspec.h(0);
    R.psi.resize(xs.size());
    H.conj_sorted(xs.data(), xs.size(), R.psi.data(), &lo_hit, &hi_hit);
    return R;
  }
  long long n0 = spec.shape[0], n1 = spec.shape[1];
  long long m0 = xspec.shape[0], m1 = xspec.shape[1];
  std::vector<double> xs0(m0), xs1(m1);
  for (long long k = 0; k < m0; ++k) xs0[k] = xspec.lo[0] + k * xspec.h(0);
  for (long long k = 0; k < m1; ++k) xs1[k] = xspec.lo[1] + k * xspec.h(1);

  const double ninf = -std::numeric_limits<double>::infinity();
  std::vector<double> G(n0 * m1, ninf);  // partial conjugate, rows of y0 by x1
  std::vector<double> ys, fs;
  Hull1D H;
  for (long long i = 0; i < n0; ++i) {
    ys.clear();
    fs.clear();
    for (long long j = 0; j < n1; ++j) {
      long long idx = i * n1 + j;
      if (wt[idx] > 0.0) {
        ys.push_back(spec.lo[1] + j * spec.h(1));
        fs.push_back(vals[idx]);
      }
    }
    if (ys.empty()) continue;
    H.build(ys.data(), fs.data(), ys.size());
    if (H.slope_min() < xspec.lo[1] || H.slope_max() > xspec.hi[1]) R.range_exceeded = true;
    H.conj_sorted(xs1.data(), m1, &G[i * m1], &lo_hit, &hi_hit);
  }
  R.psi.assign(m0 * m1, 0.0);
  for (long long k1 = 0; k1 < m1; ++k1) {
    ys.clear();
    fs.clear();
    for (long long i = 0; i < n0; ++i) {
      if (G[i * m1 + k1] == ninf) continue;
      ys.push_back(spec.lo[0] + i * spec.h(0));
      fs.push_back(-G[i * m1 + k1]);
    }
    H.build(ys.data(), fs.data(), ys.size());
    if (H.slope_min() < xspec.lo[0] || H.slope_max() > xspec.hi[0]) R.range_exceeded = true;
    std::vector<double> col(m0);
    H.conj_sorted(xs0.data(), m0, col.data(), &lo_hit, &hi_hit);
    for (long long k0 = 0; k0 < m0; ++k0) R.psi[k0 * m1 + k1] = col[k0];
  }
  return R;
}

inline ConjugateResult legendre_transform(const SymplecticPotential& u, const GridSpec* target = nullptr,
                                          bool strict = false) {
  const ToricModel& M = *u.model;
  std::vector<double> uv(M.spec().size(), 0.0);
  for (std::size_t k : M.grid().support) uv[k] = u.u_at(k);
  GridSpec xs = target ? *target : dual_grid_auto(M.spec(), uv, M.grid().weight);
  ConjugateResult R = conjugate_on_grid(M.spec(), uv, M.grid().weight, xs);
  if (strict && R.range_exceeded)
    fail(ErrorCode::GridTooCoarse, "conjugate gradient range exceeds the target dual grid");
  return R;
}

// Convex envelope of the potential (biconjugate restricted to the support).
// Returns the envelope and the maximal defect max(u - u**).
inline std::pair<SymplecticPotential, double> convexify(const SymplecticPotential& u) {
  const ToricModel& M = *u.model;
  const MaskedGrid& g = M.grid();
  SymplecticPotential w = u;
  double defect = 0.0;
  if (M.n() == 1) {
    std::vector<double> ys, fs;
    std::vector<std::size_t> idx;
    for (std::size_t k : g.support) {
      ys.push_back(M.spec().node(k)[0]);
      fs.push_back(u.u_at(k));
      idx.push_back(k);
    }
    Hull1D H;
    H.build(ys.data(), fs.data(), ys.size());
    for (std::size_t t = 0; t < idx.size(); ++t) {
      double env = H.envelope(ys[t]);
      defect = std::max(defect, fs[t] - env);
      w.dev[idx[t]] = env - M.table_uG()[idx[t]];
    }
  } else {
    std::vector<double> uv(M.spec().size(), 0.0);
    for (std::size_t k : g.support) uv[k] = u.u_at(k);
    GridSpec xs = dual_grid_auto(M.spec(), uv, g.weight);
    ConjugateResult C = conjugate_on_grid(M.spec(), uv, g.weight, xs);
    std::vector<double> ones(C.psi.size(), 1.0);
    ConjugateResult B = conjugate_on_grid(C.xspec, C.psi, ones, M.spec());
    for (std::size_t k : g.support) {
      double env = std::min(B.psi[k], uv[k]);
      defect = std::max(defect, uv[k] - B.psi[k]);
      w.dev[k] = env - M.table_uG()[k];
    }
  }
  w.normalized = false;
  return {w, defect};
}

// Evaluator for the conjugate of a full potential at arbitrary dual points:
// exact discrete sup over support nodes. In 1-D this is hull lookup; in 2-D a
// multi-scale ascent over the grid (the objective <x,y> - u(y) is concave).
class DualPotential {
 public:
  static DualPotential build(const SymplecticPotential& u) {
    DualPotential D;
    D.model_ = u.model;
    const ToricModel& M = *u.model;
    D.n_ = M.n();
    D.uvals_.assign(M.spec().size(), std::numeric_limits<double>::infinity());
    for (std::size_t k : M.grid().support) D.uvals_[k] = u.u_at(k);
    if (D.n_ == 1) {
      std::vector<double> ys, fs;
      for (std::size_t k : M.grid().support) {
        ys.push_back(M.spec().node(k)[0]);
        fs.push_back(D.uvals_[k]);
      }
      D.hull_.build(ys.data(), fs.data(), ys.size());
    } else {
      for (std::size_t t = 0; t < M.grid().support.size(); t += 37) D.coarse_.push_back(M.grid().support[t]);
      if (D.coarse_.empty()) D.coarse_.push_back(M.grid().support.front());
    }
    return D;
  }

  double slope_min() const { return hull_.slope_min(); }
  double slope_max() const { return hull_.slope_max(); }

  double eval(const Vec2& x) const {
    std::size_t warm = npos();
    return eval(x, warm);
  }

  // warm is an index into the full grid box (or npos for a cold start).
  double eval(const Vec2& x, std::size_t& warm) const {
    if (n_ == 1) return hull_.conj(x[0]);
    const GridSpec& s = model_->spec();
    double bv = -std::numeric_limits<double>::infinity();
    auto score = [&](long long i0, long long i1) -> double {
      if (i0 < 0 || i1 < 0 || i0 >= s.shape[0] || i1 >= s.shape[1]) return -std::numeric_limits<double>::infinity();
      std::size_t idx = (std::size_t)(i0 * s.shape[1] + i1);
      double u = uvals_[idx];
      if (!std::isfinite(u)) return -std::numeric_limits<double>::infinity();
      Vec2 y = s.node(idx);
      return x[0] * y[0] + x[1] * y[1] - u;
    };
    long long c0 = 0, c1 = 0;
    bool warm_ok = false;
    if (warm != npos()) {
      c0 = (long long)(warm / s.shape[1]);
      c1 = (long long)(warm % s.shape[1]);
      bv = score(c0, c1);
      warm_ok = std::isfinite(bv);
    }
    if (!warm_ok) {
      for (std::size_t k : coarse_) {
        long long i0 = (long long)(k / s.shape[1]), i1 = (long long)(k % s.shape[1]);
        double v = score(i0, i1);
        if (v > bv) {
          bv = v;
          c0 = i0;
          c1 = i1;
        }
      }
    }
    long long step = warm_ok ? 4 : std::max(s.shape[0], s.shape[1]) / 4;
    if (step < 1) step = 1;
    while (true) {
      bool moved = true;
      while (moved) {
        moved = false;
        for (int d0 = -1; d0 <= 1; ++d0)
          for (int d1 = -1; d1 <= 1; ++d1) {
            if (!d0 && !d1) continue;
            double v = score(c0 + d0 * step, c1 + d1 * step);
            if (v > bv) {
              bv = v;
              c0 += d0 * step;
              c1 += d1 * step;
              moved = true;
            }
          }
      }
      if (step == 1) break;
      step /= 2;
    }
    warm = (std::size_t)(c0 * s.shape[1] + c1);
    return bv;
  }

  static constexpr std::size_t npos() { return (std::size_t)-1; }

 private:
  ModelPtr model_;
  int n_ = 1;
  std::vector<double> uvals_;
  Hull1D hull_;
  std::vector<std::size_t> coarse_;
};

}  // namespace kfl
