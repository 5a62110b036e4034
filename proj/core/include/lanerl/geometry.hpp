#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

namespace lanerl::geom {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double cross(Vec2 o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
  double norm2() const { return x * x + y * y; }
  Vec2 normalized() const {
    double n = norm();
    return n > 0.0 ? Vec2{x / n, y / n} : Vec2{0.0, 0.0};
  }
  /// Left-hand normal.
  Vec2 normal() const { return {-y, x}; }
  Vec2 rotated(double angle) const {
    double c = std::cos(angle), s = std::sin(angle);
    return {c * x - s * y, s * x + c * y};
  }
};

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  if (a > kPi) a -= 2.0 * kPi;
  return a;
}

/// Absolute angular difference in [0, pi].
inline double angle_diff(double a, double b) {
  return std::fabs(wrap_angle(a - b));
}

/// Closest point on segment [a, b] to p, and the segment parameter t in [0, 1].
struct SegmentHit {
  Vec2 point;
  double t = 0.0;
  double dist = 0.0;
};

inline SegmentHit closest_on_segment(Vec2 p, Vec2 a, Vec2 b) {
  Vec2 ab = b - a;
  double len2 = ab.norm2();
  double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  Vec2 q = a + ab * t;
  return {q, t, (p - q).norm()};
}

/// True when segments [a, b] and [c, d] intersect (proper or touching).
bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d);

/// Open polyline with cached cumulative arc length.
class Polyline {
 public:
  Polyline() = default;
  explicit Polyline(std::vector<Vec2> pts);

  const std::vector<Vec2>& points() const { return pts_; }
  std::size_t size() const { return pts_.size(); }
  double length() const { return cum_.empty() ? 0.0 : cum_.back(); }
  bool empty() const { return pts_.size() < 2; }

  /// Nearest point on the polyline: returns distance, arc-length position s,
  /// and the local tangent heading at the projection.
  struct Projection {
    double dist = 0.0;
    double s = 0.0;        // arc length at the projection
    Vec2 point;
    double heading = 0.0;  // tangent direction at the projection
    std::size_t segment = 0;
  };
  Projection project(Vec2 p) const;

  /// Point at arc length s (clamped to [0, length]).
  Vec2 at(double s) const;
  double heading_at(double s) const;

  /// Polyline offset laterally by d (positive = left of travel direction).
  /// Vertex normals are averaged between adjacent segments; adequate for the
  /// gentle curvatures of lane geometry.
  Polyline offset(double d) const;

  /// True when segment [a, b] crosses any segment of this polyline.
  bool crossed_by(Vec2 a, Vec2 b) const;

  /// Axis-aligned bounds (for cheap prefilters).
  struct Bounds {
    Vec2 lo, hi;
  };
  Bounds bounds() const { return bounds_; }

  /// Simplicity check: no two non-adjacent segments intersect.
  bool is_simple() const;

 private:
  std::vector<Vec2> pts_;
  std::vector<double> cum_;
  Bounds bounds_{};
};

/// Oriented rectangle (vehicle and obstacle footprints).
struct Obb {
  Vec2 center;
  double heading = 0.0;
  double length = 0.0;  // extent along heading
  double width = 0.0;   // extent across heading

  std::array<Vec2, 4> corners() const;
};

/// Separating-axis overlap test for two oriented rectangles.
bool obb_overlap(const Obb& a, const Obb& b);

/// Distance from a point to an oriented rectangle (0 when inside).
double obb_distance(const Obb& box, Vec2 p);

}  // namespace lanerl::geom
