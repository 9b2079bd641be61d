// SPDX-License-Identifier: Apache-2.0

#ifndef EGMD_GEOMETRY_HPP
#define EGMD_GEOMETRY_HPP

#include <array>
#include <cmath>

namespace egmd
{

struct Vec2
{
  double x = 0.0;
  double y = 0.0;

  Vec2 &operator+=(const Vec2 &o)
  {
    x += o.x;
    y += o.y;
    return *this;
  }
  Vec2 &operator-=(const Vec2 &o)
  {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  Vec2 &operator*=(double s)
  {
    x *= s;
    y *= s;
    return *this;
  }
};

using Point2 = Vec2;

inline Vec2 operator+(Vec2 a, const Vec2 &b) { return a += b; }
inline Vec2 operator-(Vec2 a, const Vec2 &b) { return a -= b; }
inline Vec2 operator*(double s, Vec2 a) { return a *= s; }
inline Vec2 operator*(Vec2 a, double s) { return a *= s; }
inline Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
inline double dot(const Vec2 &a, const Vec2 &b) { return a.x * b.x + a.y * b.y; }
inline double norm(const Vec2 &a) { return std::hypot(a.x, a.y); }

// Row-major 2x2 tensor.
struct Mat2
{
  double xx = 0.0, xy = 0.0, yx = 0.0, yy = 0.0;

  static Mat2 identity(double s = 1.0) { return {s, 0.0, 0.0, s}; }
  static Mat2 diag(double a, double b) { return {a, 0.0, 0.0, b}; }

  Vec2 operator*(const Vec2 &v) const { return {xx * v.x + xy * v.y, yx * v.x + yy * v.y}; }
  Mat2 operator*(const Mat2 &o) const
  {
    return {xx * o.xx + xy * o.yx, xx * o.xy + xy * o.yy, yx * o.xx + yy * o.yx,
            yx * o.xy + yy * o.yy};
  }
  Mat2 &operator*=(double s)
  {
    xx *= s;
    xy *= s;
    yx *= s;
    yy *= s;
    return *this;
  }
  Mat2 &operator+=(const Mat2 &o)
  {
    xx += o.xx;
    xy += o.xy;
    yx += o.yx;
    yy += o.yy;
    return *this;
  }
  Mat2 transposed() const { return {xx, yx, xy, yy}; }
};

inline Mat2 operator*(double s, Mat2 m) { return m *= s; }
inline Mat2 operator+(Mat2 a, const Mat2 &b) { return a += b; }

// n^T A n
inline double directional(const Mat2 &a, const Vec2 &n) { return dot(n, a * n); }

// Boundary sides of the rectangular domain, also used as local face indices of a cell.
enum class Side : int
{
  West = 0,
  East = 1,
  South = 2,
  North = 3
};

inline constexpr std::array<Side, 4> kAllSides = {Side::West, Side::East, Side::South,
                                                  Side::North};

inline Vec2 outward_normal(Side s)
{
  switch (s)
  {
    case Side::West:
      return {-1.0, 0.0};
    case Side::East:
      return {1.0, 0.0};
    case Side::South:
      return {0.0, -1.0};
    case Side::North:
      return {0.0, 1.0};
  }
  return {};
}

inline Side opposite(Side s)
{
  switch (s)
  {
    case Side::West:
      return Side::East;
    case Side::East:
      return Side::West;
    case Side::South:
      return Side::North;
    case Side::North:
      return Side::South;
  }
  return s;
}

struct BBox
{
  double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
  double diameter() const { return std::hypot(width(), height()); }
  Point2 center() const { return {0.5 * (x0 + x1), 0.5 * (y0 + y1)}; }
  bool contains(const Point2 &p, double tol = 0.0) const
  {
    return p.x >= x0 - tol && p.x <= x1 + tol && p.y >= y0 - tol && p.y <= y1 + tol;
  }
  // Reference coordinates in [0,1]^2.
  Point2 to_reference(const Point2 &p) const
  {
    return {(p.x - x0) / width(), (p.y - y0) / height()};
  }
  Point2 to_physical(const Point2 &r) const
  {
    return {x0 + r.x * width(), y0 + r.y * height()};
  }
};

using Domain = BBox;

}  // namespace egmd

#endif  // EGMD_GEOMETRY_HPP
