#pragma once

#include <cmath>
#include <stdexcept>

namespace botlc {

/// Planar vector with double components. All library state is built from
/// these; operations are value-semantic and allocation-free.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2() = default;
  constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  constexpr Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
  constexpr bool operator==(const Vec2&) const = default;
};

constexpr Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
constexpr Vec2 operator*(Vec2 v, double s) { return s * v; }
constexpr Vec2 operator/(Vec2 v, double s) { return {v.x / s, v.y / s}; }

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }

/// Scalar (z-component) cross product; positive when b is counterclockwise
/// of a.
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }
constexpr double norm_sq(Vec2 v) { return v.x * v.x + v.y * v.y; }

inline bool is_finite(Vec2 v) { return std::isfinite(v.x) && std::isfinite(v.y); }

/// Symmetric 2x2 matrix stored as its three distinct entries. Used for the
/// regressor matrix, whose dynamics preserve symmetry entrywise, so storing
/// only the upper triangle keeps it symmetric by construction.
struct Mat2Sym {
  double xx = 0.0;
  double xy = 0.0;
  double yy = 0.0;

  constexpr Mat2Sym operator+(Mat2Sym o) const { return {xx + o.xx, xy + o.xy, yy + o.yy}; }
  constexpr Mat2Sym operator-(Mat2Sym o) const { return {xx - o.xx, xy - o.xy, yy - o.yy}; }
  constexpr bool operator==(const Mat2Sym&) const = default;

  constexpr Vec2 operator*(Vec2 v) const { return {xx * v.x + xy * v.y, xy * v.x + yy * v.y}; }

  constexpr double trace() const { return xx + yy; }
  constexpr double det() const { return xx * yy - xy * xy; }
};

constexpr Mat2Sym operator*(double s, Mat2Sym m) { return {s * m.xx, s * m.xy, s * m.yy}; }

/// Outer product v v^T (always symmetric).
constexpr Mat2Sym outer(Vec2 v) { return {v.x * v.x, v.x * v.y, v.y * v.y}; }

/// Smallest singular value of a symmetric 2x2 matrix. For the (numerically
/// near-)PSD matrices this library produces it equals the smallest
/// eigenvalue; the absolute value guards against roundoff pushing a zero
/// eigenvalue slightly negative.
inline double sigma_min(const Mat2Sym& m) {
  const double tr = m.trace();
  const double disc = std::sqrt(std::max(0.0, tr * tr - 4.0 * m.det()));
  return std::fabs((tr - disc) / 2.0);
}

/// Largest singular value, same conventions as sigma_min().
inline double sigma_max(const Mat2Sym& m) {
  const double tr = m.trace();
  const double disc = std::sqrt(std::max(0.0, tr * tr - 4.0 * m.det()));
  return std::fabs((tr + disc) / 2.0);
}

/// Solves m z = r by the adjugate formula. Caller is responsible for
/// checking conditioning (see reconstruct_xi); this just divides by det.
inline Vec2 solve(const Mat2Sym& m, Vec2 r) {
  const double d = m.det();
  return {(m.yy * r.x - m.xy * r.y) / d, (-m.xy * r.x + m.xx * r.y) / d};
}

inline bool is_finite(const Mat2Sym& m) {
  return std::isfinite(m.xx) && std::isfinite(m.xy) && std::isfinite(m.yy);
}

}  // namespace botlc
