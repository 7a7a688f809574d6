#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "kfl/errors.hpp"

namespace kfl {

// The lab supports fibre dimensions n = 1 and n = 2.  Points, normals and
// gradients are stored in fixed arrays of length 2 with the active dimension
// carried by the surrounding object; unused components stay zero.
using Vec2 = std::array<double, 2>;
using IVec2 = std::array<long long, 2>;

inline double dot(int n, const Vec2& a, const Vec2& b) {
  double s = a[0] * b[0];
  if (n > 1) s += a[1] * b[1];
  return s;
}

inline double dot(int n, const IVec2& a, const Vec2& b) {
  double s = static_cast<double>(a[0]) * b[0];
  if (n > 1) s += static_cast<double>(a[1]) * b[1];
  return s;
}

inline Vec2 add(const Vec2& a, const Vec2& b) { return {a[0] + b[0], a[1] + b[1]}; }
inline Vec2 sub(const Vec2& a, const Vec2& b) { return {a[0] - b[0], a[1] - b[1]}; }
inline Vec2 scale(const Vec2& a, double t) { return {a[0] * t, a[1] * t}; }
inline double norm2(int n, const Vec2& a) { return std::sqrt(dot(n, a, a)); }
inline double norm_inf(int n, const Vec2& a) {
  double m = std::fabs(a[0]);
  if (n > 1) m = std::max(m, std::fabs(a[1]));
  return m;
}

// Symmetric 2x2 matrix (degenerates to the scalar a11 when n = 1).
struct Sym2 {
  double a11 = 0.0, a12 = 0.0, a22 = 0.0;

  double det(int n) const { return n == 1 ? a11 : a11 * a22 - a12 * a12; }

  Vec2 solve(int n, const Vec2& r) const {
    if (n == 1) {
      if (a11 == 0.0) fail(ErrorCode::DegenerateHessian, "singular 1x1 system");
      return {r[0] / a11, 0.0};
    }
    const double d = det(2);
    if (d == 0.0) fail(ErrorCode::DegenerateHessian, "singular 2x2 system");
    return {(a22 * r[0] - a12 * r[1]) / d, (a11 * r[1] - a12 * r[0]) / d};
  }

  Vec2 apply(int n, const Vec2& v) const {
    if (n == 1) return {a11 * v[0], 0.0};
    return {a11 * v[0] + a12 * v[1], a12 * v[0] + a22 * v[1]};
  }

  Sym2 plus(const Sym2& o) const { return {a11 + o.a11, a12 + o.a12, a22 + o.a22}; }
};

// Mixed determinant normalized so mixed_det(A,A) = det(A).
inline double mixed_det(int n, const Sym2& a, const Sym2& b) {
  if (n == 1) return a.a11;  // unused for n = 1 beyond the trivial case
  return 0.5 * (a.a11 * b.a22 + a.a22 * b.a11) - a.a12 * b.a12;
}

inline long long gcd_ll(long long a, long long b) {
  a = a < 0 ? -a : a;
  b = b < 0 ? -b : b;
  while (b) {
    const long long t = a % b;
    a = b;
    b = t;
  }
  return a;
}

}  // namespace kfl
