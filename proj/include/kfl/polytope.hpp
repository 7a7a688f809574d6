#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kfl/errors.hpp"
#include "kfl/vec.hpp"

namespace kfl {

// Facet {y : <normal, y> + offset >= 0} with a primitive integer inward normal.
struct Facet {
  IVec2 normal{0, 0};
  double offset = 0.0;
};

// Compact Delzant polytope in dimension 1 or 2.  Construction enumerates the
// vertices, rejects unbounded / empty / redundant inputs, and verifies the
// unimodularity of every vertex cone.
class Polytope {
public:
  static Polytope build(int n, std::vector<Facet> facets) {
    Polytope p;
    p.n_ = n;
    p.facets_ = std::move(facets);
    if (n != 1 && n != 2) fail(ErrorCode::ParameterOutOfRange, "dimension must be 1 or 2");
    if (p.facets_.size() < static_cast<std::size_t>(n + 1))
      fail(ErrorCode::DegeneratePolytope, "needs at least n+1 facets");
    for (const auto& f : p.facets_) {
      long long g = (n == 1) ? std::llabs(f.normal[0]) : gcd_ll(f.normal[0], f.normal[1]);
      if (g == 0) fail(ErrorCode::NotDelzant, "zero facet normal");
      if (g != 1) fail(ErrorCode::NotDelzant, "facet normal is not primitive");
    }
    p.check_bounded();
    if (n == 1) p.finish_1d();
    else p.finish_2d();
    return p;
  }

  int n() const { return n_; }
  const std::vector<Facet>& facets() const { return facets_; }
  const std::vector<Vec2>& vertices() const { return vertices_; }
  double volume() const { return volume_; }
  const Vec2& barycenter() const { return barycenter_; }
  // Lattice measure of facet i (euclidean length divided by |normal|).
  double facet_measure(int i) const { return facet_measure_[i]; }
  double boundary_measure() const {
    double s = 0.0;
    for (double m : facet_measure_) s += m;
    return s;
  }
  bool fano_flag() const {
    for (const auto& f : facets_)
      if (std::fabs(f.offset - 1.0) > 1e-12) return false;
    return true;
  }

  double ell(int i, const Vec2& y) const { return dot(n_, facets_[i].normal, y) + facets_[i].offset; }

  double min_ell(const Vec2& y) const {
    double m = ell(0, y);
    for (std::size_t i = 1; i < facets_.size(); ++i) m = std::min(m, ell(i, y));
    return m;
  }

  bool contains(const Vec2& y, double tol = 0.0) const { return min_ell(y) >= -tol; }

  void bounding_box(Vec2& lo, Vec2& hi) const {
    lo = hi = vertices_[0];
    for (const auto& v : vertices_) {
      for (int d = 0; d < n_; ++d) {
        lo[d] = std::min(lo[d], v[d]);
        hi[d] = std::max(hi[d], v[d]);
      }
    }
  }

  // Endpoints of facet i (two vertices for n=2, one point for n=1).
  const std::vector<Vec2>& facet_vertices(int i) const { return facet_verts_[i]; }

  nlohmann::json to_json() const {
    nlohmann::json fs = nlohmann::json::array();
    for (const auto& f : facets_) {
      nlohmann::json jf;
      jf["l"] = n_ == 1 ? nlohmann::json::array({f.normal[0]})
                        : nlohmann::json::array({f.normal[0], f.normal[1]});
      jf["c"] = f.offset;
      fs.push_back(jf);
    }
    return nlohmann::json{{"n", n_}, {"facets", fs}};
  }

  static Polytope from_json(const nlohmann::json& j) {
    if (!j.contains("n") || !j.contains("facets")) fail(ErrorCode::IOError, "polytope JSON needs n and facets");
    const int n = j.at("n").get<int>();
    std::vector<Facet> fs;
    for (const auto& jf : j.at("facets")) {
      Facet f;
      const auto& l = jf.at("l");
      if (static_cast<int>(l.size()) != n) fail(ErrorCode::IOError, "facet normal has wrong dimension");
      f.normal[0] = l.at(0).get<long long>();
      if (n > 1) f.normal[1] = l.at(1).get<long long>();
      f.offset = jf.at("c").get<double>();
      fs.push_back(f);
    }
    return build(n, std::move(fs));
  }

  // FNV-1a over the canonical facet description; stable identity for files.
  std::string hash() const {
    uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const void* data, std::size_t len) {
      const unsigned char* b = static_cast<const unsigned char*>(data);
      for (std::size_t i = 0; i < len; ++i) {
        h ^= b[i];
        h *= 1099511628211ULL;
      }
    };
    int32_t nn = n_;
    mix(&nn, sizeof nn);
    for (const auto& f : facets_) {
      int64_t l0 = f.normal[0], l1 = f.normal[1];
      mix(&l0, sizeof l0);
      mix(&l1, sizeof l1);
      mix(&f.offset, sizeof f.offset);
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
  }

private:
  void check_bounded() const {
    if (n_ == 1) {
      bool plus = false, minus = false;
      for (const auto& f : facets_) (f.normal[0] > 0 ? plus : minus) = true;
      if (!plus || !minus) fail(ErrorCode::UnboundedPolytope, "interval needs facets on both sides");
      return;
    }
    // Bounded iff the recession cone {d : <l_i,d> >= 0 for all i} is {0},
    // i.e. the normals do not all fit in a closed half-plane.
    std::vector<double> angles;
    for (const auto& f : facets_)
      angles.push_back(std::atan2(static_cast<double>(f.normal[1]), static_cast<double>(f.normal[0])));
    std::sort(angles.begin(), angles.end());
    double max_gap = angles.front() + 6.283185307179586 - angles.back();
    for (std::size_t i = 1; i < angles.size(); ++i) max_gap = std::max(max_gap, angles[i] - angles[i - 1]);
    if (max_gap >= 3.14159265358979309)
      fail(ErrorCode::UnboundedPolytope, "facet normals lie in a half-plane");
  }

  void finish_1d() {
    double lo = -1e300, hi = 1e300;
    for (const auto& f : facets_) {
      if (f.normal[0] > 0) lo = std::max(lo, -f.offset);
      else hi = std::min(hi, f.offset);
    }
    if (hi - lo <= 1e-12) fail(ErrorCode::DegeneratePolytope, "empty interval");
    if (facets_.size() != 2)
      fail(ErrorCode::DegeneratePolytope, "redundant facet in dimension 1");
    vertices_ = {{lo, 0.0}, {hi, 0.0}};
    volume_ = hi - lo;
    barycenter_ = {0.5 * (lo + hi), 0.0};
    facet_measure_.assign(2, 1.0);
    facet_verts_.resize(2);
    for (std::size_t i = 0; i < 2; ++i)
      facet_verts_[i] = {facets_[i].normal[0] > 0 ? vertices_[0] : vertices_[1]};
  }

  void finish_2d() {
    const std::size_t m = facets_.size();
    const double scale = [&] {
      double s = 1.0;
      for (const auto& f : facets_) s = std::max(s, std::fabs(f.offset));
      return s;
    }();
    std::vector<Vec2> verts;
    std::vector<std::array<int, 2>> vert_facets;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) {
        const auto& a = facets_[i].normal;
        const auto& b = facets_[j].normal;
        const double det = static_cast<double>(a[0]) * b[1] - static_cast<double>(a[1]) * b[0];
        if (det == 0.0) continue;
        const Vec2 y = {(-facets_[i].offset * b[1] + facets_[j].offset * a[1]) / det,
                        (-facets_[j].offset * a[0] + facets_[i].offset * b[0]) / det};
        if (!contains(y, 1e-9 * scale)) continue;
        bool dup = false;
        for (const auto& v : verts)
          if (std::fabs(v[0] - y[0]) + std::fabs(v[1] - y[1]) < 1e-9 * scale) dup = true;
        if (dup) continue;
        verts.push_back(y);
        vert_facets.push_back({static_cast<int>(i), static_cast<int>(j)});
      }
    }
    if (verts.size() < 3) fail(ErrorCode::DegeneratePolytope, "fewer than three vertices");

    // CCW order around the centroid.
    Vec2 c{0, 0};
    for (const auto& v : verts) c = add(c, v);
    c = scale_point(c, 1.0 / verts.size());
    std::vector<std::size_t> order(verts.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return std::atan2(verts[a][1] - c[1], verts[a][0] - c[0]) <
             std::atan2(verts[b][1] - c[1], verts[b][0] - c[0]);
    });
    vertices_.clear();
    std::vector<std::array<int, 2>> vfs;
    for (std::size_t k : order) {
      vertices_.push_back(verts[k]);
      vfs.push_back(vert_facets[k]);
    }

    // Shoelace area and centroid.
    double area2 = 0.0, cx = 0.0, cy = 0.0;
    for (std::size_t k = 0; k < vertices_.size(); ++k) {
      const auto& p = vertices_[k];
      const auto& q = vertices_[(k + 1) % vertices_.size()];
      const double w = p[0] * q[1] - q[0] * p[1];
      area2 += w;
      cx += (p[0] + q[0]) * w;
      cy += (p[1] + q[1]) * w;
    }
    volume_ = 0.5 * std::fabs(area2);
    if (volume_ <= 1e-12 * scale * scale) fail(ErrorCode::DegeneratePolytope, "zero area");
    barycenter_ = {cx / (3.0 * area2), cy / (3.0 * area2)};

    // Each facet should carry exactly two vertices; otherwise it is redundant.
    facet_verts_.assign(m, {});
    facet_measure_.assign(m, 0.0);
    for (std::size_t k = 0; k < vertices_.size(); ++k)
      for (int f : vfs[k]) facet_verts_[f].push_back(vertices_[k]);
    for (std::size_t i = 0; i < m; ++i) {
      if (facet_verts_[i].size() != 2)
        fail(ErrorCode::DegeneratePolytope, "redundant or degenerate facet " + std::to_string(i));
      const Vec2 d = sub(facet_verts_[i][1], facet_verts_[i][0]);
      const double ln = std::hypot(static_cast<double>(facets_[i].normal[0]),
                                   static_cast<double>(facets_[i].normal[1]));
      facet_measure_[i] = std::hypot(d[0], d[1]) / ln;
    }

    // Delzant condition: the two facet normals at each vertex form a lattice basis.
    for (std::size_t k = 0; k < vertices_.size(); ++k) {
      const auto& a = facets_[vfs[k][0]].normal;
      const auto& b = facets_[vfs[k][1]].normal;
      const long long det = a[0] * b[1] - a[1] * b[0];
      if (det != 1 && det != -1)
        fail(ErrorCode::NotDelzant, "vertex cone determinant " + std::to_string(det));
    }
  }

  static Vec2 scale_point(const Vec2& a, double t) { return {a[0] * t, a[1] * t}; }

  int n_ = 0;
  std::vector<Facet> facets_;
  std::vector<Vec2> vertices_;
  std::vector<std::vector<Vec2>> facet_verts_;
  std::vector<double> facet_measure_;
  double volume_ = 0.0;
  Vec2 barycenter_{0, 0};
};

}  // namespace kfl
