#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "kfl/errors.hpp"
#include "kfl/parallel.hpp"
#include "kfl/polytope.hpp"
#include "kfl/vec.hpp"

namespace kfl {

// Tensor grid of nodes over a box, row-major (index = i0 * shape[1] + i1).
struct GridSpec {
  int n = 2;
  std::array<int, 2> shape{2, 1};  // nodes per axis, shape[1] == 1 when n == 1
  Vec2 lo{0, 0};
  Vec2 hi{1, 0};

  static GridSpec over(const Polytope& P, int nodes_per_axis) {
    if (nodes_per_axis < 2) fail(ErrorCode::ParameterOutOfRange, "grid needs at least 2 nodes per axis");
    GridSpec g;
    g.n = P.n();
    P.bounding_box(g.lo, g.hi);
    // Pad each box side up to the next power of two and keep cells square:
    // the model polytopes have integer vertices and facet normals with
    // entries in {-1, 0, 1}, so every facet line then passes through nodes,
    // cut cells split along corner diagonals, and the corner-deposit
    // quadrature below is exact for affine integrands.
    double padded[2] = {1.0, 1.0};
    double longest = 0.0;
    for (int d = 0; d < P.n(); ++d) {
      padded[d] = std::exp2(std::ceil(std::log2(g.hi[d] - g.lo[d])));
      longest = std::max(longest, padded[d]);
    }
    const double h = longest / (nodes_per_axis - 1);
    g.shape[0] = static_cast<int>(std::lround(padded[0] / h)) + 1;
    g.shape[1] = P.n() == 2 ? static_cast<int>(std::lround(padded[1] / h)) + 1 : 1;
    g.hi[0] = g.lo[0] + (g.shape[0] - 1) * h;
    if (P.n() == 2) g.hi[1] = g.lo[1] + (g.shape[1] - 1) * h;
    return g;
  }

  double h(int d) const { return (hi[d] - lo[d]) / (shape[d] - 1); }
  std::size_t size() const { return static_cast<std::size_t>(shape[0]) * shape[1]; }

  Vec2 node(std::size_t idx) const {
    const std::size_t i1 = idx % shape[1];
    const std::size_t i0 = idx / shape[1];
    Vec2 y = {lo[0] + static_cast<double>(i0) * h(0), 0.0};
    if (n == 2) y[1] = lo[1] + static_cast<double>(i1) * h(1);
    return y;
  }

  std::size_t index(int i0, int i1) const {
    return static_cast<std::size_t>(i0) * shape[1] + i1;
  }

  bool operator==(const GridSpec& o) const {
    return n == o.n && shape == o.shape && lo[0] == o.lo[0] && lo[1] == o.lo[1] &&
           hi[0] == o.hi[0] && hi[1] == o.hi[1];
  }
};

// Grid bound to a polytope, with quadrature weights obtained by clipping each
// cell against the facets.  Weights deposit a cell's clipped area onto its
// corner nodes via the bilinear coordinates of the clipped centroid, which
// makes node sums exact for affine integrands; corners outside the closure
// are excluded and the remainder renormalized so integrands never need values
// beyond the polytope.
struct MaskedGrid {
  GridSpec spec;
  const Polytope* poly = nullptr;
  std::vector<double> weight;    // quadrature weight per node, 0 off-support
  std::vector<double> minell;    // smallest facet value at each node
  std::vector<uint8_t> inside;   // strictly interior nodes
  std::vector<std::size_t> support;  // indices with weight > 0
  std::vector<std::size_t> interior; // indices with inside == 1
  double total_weight = 0.0;

  static MaskedGrid build(const Polytope& P, const GridSpec& spec) {
    if (spec.n != P.n()) fail(ErrorCode::GridMismatch, "grid and polytope dimension differ");
    MaskedGrid g;
    g.spec = spec;
    g.poly = &P;
    const std::size_t N = spec.size();
    g.weight.assign(N, 0.0);
    g.minell.resize(N);
    g.inside.assign(N, 0);
    double scale = 1.0;
    for (const auto& f : P.facets()) scale = std::max(scale, std::fabs(f.offset));
    const double tol = 1e-12 * scale;
    for (std::size_t k = 0; k < N; ++k) {
      g.minell[k] = P.min_ell(spec.node(k));
      g.inside[k] = g.minell[k] > tol ? 1 : 0;
    }
    if (spec.n == 1) g.accumulate_1d(tol);
    else g.accumulate_2d(tol);
    for (std::size_t k = 0; k < N; ++k) {
      if (g.weight[k] > 0.0) g.support.push_back(k);
      if (g.inside[k]) g.interior.push_back(k);
    }
    std::vector<double> ws;
    ws.reserve(g.support.size());
    for (std::size_t k : g.support) ws.push_back(g.weight[k]);
    g.total_weight = kahan_sum(ws);
    return g;
  }

  double integrate(const std::vector<double>& f) const {
    if (f.size() != weight.size()) fail(ErrorCode::GridMismatch, "field size does not match grid");
    std::vector<double> terms;
    terms.reserve(support.size());
    for (std::size_t k : support) terms.push_back(weight[k] * f[k]);
    return kahan_sum(terms);
  }

  double mean(const std::vector<double>& f) const { return integrate(f) / total_weight; }

  // Sum of h^n weights over nodes with minell >= eps; used for integrands that
  // blow up at the boundary, paired with extrapolation in eps by the caller.
  double integrate_excised(const std::vector<double>& f, double eps) const {
    if (f.size() != weight.size()) fail(ErrorCode::GridMismatch, "field size does not match grid");
    const double cell = spec.n == 1 ? spec.h(0) : spec.h(0) * spec.h(1);
    std::vector<double> terms;
    for (std::size_t k = 0; k < f.size(); ++k)
      if (minell[k] >= eps) terms.push_back(cell * f[k]);
    return kahan_sum(terms);
  }

private:
  void accumulate_1d(double tol) {
    const Polytope& P = *poly;
    const double h = spec.h(0);
    for (int i = 0; i + 1 < spec.shape[0]; ++i) {
      const double x0 = spec.lo[0] + i * h, x1 = x0 + h;
      double a = x0, b = x1;
      for (const auto& f : P.facets()) {
        // l*x + c >= 0 restricted to [a, b]
        if (f.normal[0] > 0) a = std::max(a, -f.offset);
        else b = std::min(b, f.offset);
      }
      if (b - a <= 0.0) continue;
      const double len = b - a, mid = 0.5 * (a + b);
      const double s = (mid - x0) / h;
      double w0 = (1.0 - s), w1 = s;
      const bool in0 = minell[i] >= -tol, in1 = minell[i + 1] >= -tol;
      if (in0 && in1) {
        weight[i] += len * w0;
        weight[i + 1] += len * w1;
      } else if (in0) {
        weight[i] += len;
      } else if (in1) {
        weight[i + 1] += len;
      } else {
        weight[minell[i] > minell[i + 1] ? i : i + 1] += len;
      }
    }
  }

  void accumulate_2d(double tol) {
    const Polytope& P = *poly;
    const double h0 = spec.h(0), h1 = spec.h(1);
    const auto& facets = P.facets();
    for (int i = 0; i + 1 < spec.shape[0]; ++i) {
      for (int j = 0; j + 1 < spec.shape[1]; ++j) {
        const std::size_t k00 = spec.index(i, j), k01 = spec.index(i, j + 1);
        const std::size_t k10 = spec.index(i + 1, j), k11 = spec.index(i + 1, j + 1);
        const double m00 = minell[k00], m01 = minell[k01], m10 = minell[k10], m11 = minell[k11];
        double area, cx, cy;
        const double x0 = spec.lo[0] + i * h0, y0 = spec.lo[1] + j * h1;
        if (std::min(std::min(m00, m01), std::min(m10, m11)) >= 0.0) {
          area = h0 * h1;
          cx = x0 + 0.5 * h0;
          cy = y0 + 0.5 * h1;
        } else {
          // Sutherland-Hodgman clip of the cell against every facet half-plane.
          std::vector<Vec2> polyv = {{x0, y0}, {x0 + h0, y0}, {x0 + h0, y0 + h1}, {x0, y0 + h1}};
          for (const auto& f : facets) {
            if (polyv.empty()) break;
            std::vector<Vec2> out;
            out.reserve(polyv.size() + 2);
            for (std::size_t a = 0; a < polyv.size(); ++a) {
              const Vec2& p = polyv[a];
              const Vec2& q = polyv[(a + 1) % polyv.size()];
              const double fp = dot(2, f.normal, p) + f.offset;
              const double fq = dot(2, f.normal, q) + f.offset;
              if (fp >= 0.0) out.push_back(p);
              if ((fp >= 0.0) != (fq >= 0.0)) {
                const double t = fp / (fp - fq);
                out.push_back({p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])});
              }
            }
            polyv = std::move(out);
          }
          if (polyv.size() < 3) continue;
          double a2 = 0.0, sx = 0.0, sy = 0.0;
          for (std::size_t a = 0; a < polyv.size(); ++a) {
            const Vec2& p = polyv[a];
            const Vec2& q = polyv[(a + 1) % polyv.size()];
            const double w = p[0] * q[1] - q[0] * p[1];
            a2 += w;
            sx += (p[0] + q[0]) * w;
            sy += (p[1] + q[1]) * w;
          }
          area = 0.5 * std::fabs(a2);
          if (area <= 1e-14 * h0 * h1) continue;
          cx = sx / (3.0 * a2);
          cy = sy / (3.0 * a2);
        }
        const double s = (cx - x0) / h0, t = (cy - y0) / h1;
        const std::size_t ks[4] = {k00, k01, k10, k11};
        double bw[4] = {(1 - s) * (1 - t), (1 - s) * t, s * (1 - t), s * t};
        const double ms[4] = {m00, m01, m10, m11};
        bool ok[4];
        int n_allowed = 0;
        for (int a = 0; a < 4; ++a) {
          ok[a] = ms[a] >= -tol;
          if (ok[a]) ++n_allowed;
        }
        if (n_allowed == 4) {
          for (int a = 0; a < 4; ++a) weight[ks[a]] += area * bw[a];
          continue;
        }
        if (n_allowed == 3) {
          // Deposit mass and centroid exactly onto the three closure corners
          // (barycentric weights); boundary facets cut cells along corner
          // diagonals here, so the clipped region lies in that triangle.
          int idx[3], p = 0;
          for (int a = 0; a < 4; ++a)
            if (ok[a]) idx[p++] = a;
          const double us[4] = {0.0, 0.0, 1.0, 1.0};  // cell-local corner coords
          const double vs[4] = {0.0, 1.0, 0.0, 1.0};
          const double u0 = us[idx[0]], v0 = vs[idx[0]];
          const double a11 = us[idx[1]] - u0, a21 = vs[idx[1]] - v0;
          const double a12 = us[idx[2]] - u0, a22 = vs[idx[2]] - v0;
          const double det = a11 * a22 - a12 * a21;
          const double l1 = ((s - u0) * a22 - (t - v0) * a12) / det;
          const double l2 = (-(s - u0) * a21 + (t - v0) * a11) / det;
          const double l0 = 1.0 - l1 - l2;
          if (l0 >= -1e-12 && l1 >= -1e-12 && l2 >= -1e-12) {
            const double lam[3] = {std::max(0.0, l0), std::max(0.0, l1), std::max(0.0, l2)};
            const double lsum = lam[0] + lam[1] + lam[2];
            for (int a = 0; a < 3; ++a) weight[ks[idx[a]]] += area * lam[a] / lsum;
            continue;
          }
        }
        double allowed = 0.0;
        for (int a = 0; a < 4; ++a)
          if (ok[a]) allowed += bw[a];
        if (allowed > 0.0) {
          for (int a = 0; a < 4; ++a)
            if (ok[a]) weight[ks[a]] += area * bw[a] / allowed;
        } else {
          int best = 0;
          for (int a = 1; a < 4; ++a)
            if (ms[a] > ms[best]) best = a;
          weight[ks[best]] += area;
        }
      }
    }
  }
};

// 8-point Gauss-Legendre rule on [0, 1].
struct GaussRule {
  static constexpr int kPoints = 8;
  static const double* nodes() {
    static const double x[kPoints] = {
        0.019855071751231884, 0.10166676129318664, 0.2372337950418355, 0.40828267875217510,
        0.59171732124782490,  0.7627662049581645,  0.89833323870681336, 0.98014492824876812};
    return x;
  }
  static const double* weights() {
    static const double w[kPoints] = {
        0.050614268145188130, 0.11119051722668724, 0.15685332293894364, 0.18134189168918099,
        0.18134189168918099,  0.15685332293894364, 0.11119051722668724, 0.050614268145188130};
    return w;
  }
};

struct QuadPoint {
  Vec2 y;
  double w;
};

// Panel breakpoints on [0, 1] refined geometrically toward both endpoints:
// composite Gauss on such meshes integrates endpoint singularities (powers,
// logs) to near machine accuracy.
inline std::vector<double> graded_breaks(int panels_per_half) {
  std::vector<double> b;
  b.reserve(2 * panels_per_half + 1);
  b.push_back(0.0);
  for (int m = panels_per_half - 1; m >= 0; --m) b.push_back(0.5 * std::pow(0.5, m));
  for (int m = 1; m < panels_per_half; ++m) b.push_back(1.0 - 0.5 * std::pow(0.5, m));
  b.push_back(1.0);
  return b;
}

// Quadrature along facet i with the lattice measure, panels graded toward the
// endpoints so log-type corner singularities still integrate cleanly.
inline std::vector<QuadPoint> facet_quadrature(const Polytope& P, int i, int panels_per_half = 24) {
  std::vector<QuadPoint> pts;
  if (P.n() == 1) {
    pts.push_back({P.facet_vertices(i)[0], P.facet_measure(i)});
    return pts;
  }
  const Vec2 A = P.facet_vertices(i)[0];
  const Vec2 B = P.facet_vertices(i)[1];
  const double measure = P.facet_measure(i);
  const std::vector<double> breaks = graded_breaks(panels_per_half);
  for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
    const double a = breaks[p], len = breaks[p + 1] - breaks[p];
    for (int q = 0; q < GaussRule::kPoints; ++q) {
      const double t = a + len * GaussRule::nodes()[q];
      pts.push_back({{A[0] + t * (B[0] - A[0]), A[1] + t * (B[1] - A[1])},
                     measure * len * GaussRule::weights()[q]});
    }
  }
  return pts;
}

// Panelized Gauss rule on [a, b] with panels graded toward both endpoints;
// integrates endpoint singularities like t^(beta-1), beta > 0, accurately.
inline std::vector<QuadPoint> graded_interval_quadrature(double a, double b, int panels_per_half = 40) {
  const std::vector<double> breaks = graded_breaks(panels_per_half);
  std::vector<QuadPoint> pts;
  pts.reserve((breaks.size() - 1) * GaussRule::kPoints);
  for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
    const double t0 = breaks[p], len = breaks[p + 1] - breaks[p];
    for (int q = 0; q < GaussRule::kPoints; ++q) {
      const double t = t0 + len * GaussRule::nodes()[q];
      pts.push_back({{a + t * (b - a), 0.0}, (b - a) * len * GaussRule::weights()[q]});
    }
  }
  return pts;
}

}  // namespace kfl
