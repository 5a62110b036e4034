#include "lanerl/geometry.hpp"

#include <algorithm>
#include <array>
#include <limits>

namespace lanerl::geom {

namespace {

int orientation(Vec2 a, Vec2 b, Vec2 c) {
  double v = (b - a).cross(c - a);
  if (v > 0.0) return 1;
  if (v < 0.0) return -1;
  return 0;
}

bool on_segment(Vec2 a, Vec2 b, Vec2 p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
         std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
}

}  // namespace

bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  int o1 = orientation(a, b, c);
  int o2 = orientation(a, b, d);
  int o3 = orientation(c, d, a);
  int o4 = orientation(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(a, b, c)) return true;
  if (o2 == 0 && on_segment(a, b, d)) return true;
  if (o3 == 0 && on_segment(c, d, a)) return true;
  if (o4 == 0 && on_segment(c, d, b)) return true;
  return false;
}

Polyline::Polyline(std::vector<Vec2> pts) : pts_(std::move(pts)) {
  cum_.resize(pts_.size(), 0.0);
  for (std::size_t i = 1; i < pts_.size(); ++i) {
    cum_[i] = cum_[i - 1] + (pts_[i] - pts_[i - 1]).norm();
  }
  if (!pts_.empty()) {
    bounds_.lo = bounds_.hi = pts_[0];
    for (const Vec2& p : pts_) {
      bounds_.lo.x = std::min(bounds_.lo.x, p.x);
      bounds_.lo.y = std::min(bounds_.lo.y, p.y);
      bounds_.hi.x = std::max(bounds_.hi.x, p.x);
      bounds_.hi.y = std::max(bounds_.hi.y, p.y);
    }
  }
}

Polyline::Projection Polyline::project(Vec2 p) const {
  Projection best;
  best.dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < pts_.size(); ++i) {
    SegmentHit hit = closest_on_segment(p, pts_[i], pts_[i + 1]);
    if (hit.dist < best.dist) {
      Vec2 dir = pts_[i + 1] - pts_[i];
      best.dist = hit.dist;
      best.point = hit.point;
      best.s = cum_[i] + hit.t * (cum_[i + 1] - cum_[i]);
      best.heading = std::atan2(dir.y, dir.x);
      best.segment = i;
    }
  }
  return best;
}

Vec2 Polyline::at(double s) const {
  if (pts_.empty()) return {};
  if (pts_.size() == 1 || s <= 0.0) return pts_.front();
  if (s >= length()) return pts_.back();
  auto it = std::upper_bound(cum_.begin(), cum_.end(), s);
  std::size_t i = static_cast<std::size_t>(it - cum_.begin()) - 1;
  double seg = cum_[i + 1] - cum_[i];
  double t = seg > 0.0 ? (s - cum_[i]) / seg : 0.0;
  return pts_[i] + (pts_[i + 1] - pts_[i]) * t;
}

double Polyline::heading_at(double s) const {
  if (pts_.size() < 2) return 0.0;
  s = std::clamp(s, 0.0, length());
  std::size_t i;
  if (s >= length()) {
    i = pts_.size() - 2;
  } else {
    auto it = std::upper_bound(cum_.begin(), cum_.end(), s);
    i = static_cast<std::size_t>(it - cum_.begin());
    i = i > 0 ? i - 1 : 0;
    if (i + 1 >= pts_.size()) i = pts_.size() - 2;
  }
  Vec2 dir = pts_[i + 1] - pts_[i];
  return std::atan2(dir.y, dir.x);
}

Polyline Polyline::offset(double d) const {
  std::vector<Vec2> out;
  out.reserve(pts_.size());
  for (std::size_t i = 0; i < pts_.size(); ++i) {
    Vec2 n;
    if (i == 0) {
      n = (pts_[1] - pts_[0]).normalized().normal();
    } else if (i + 1 == pts_.size()) {
      n = (pts_[i] - pts_[i - 1]).normalized().normal();
    } else {
      Vec2 n0 = (pts_[i] - pts_[i - 1]).normalized().normal();
      Vec2 n1 = (pts_[i + 1] - pts_[i]).normalized().normal();
      n = (n0 + n1).normalized();
      // Miter correction keeps the offset distance at sharp vertices.
      double cos_half = n.dot(n1);
      if (cos_half > 0.1) n = n * (1.0 / cos_half);
    }
    out.push_back(pts_[i] + n * d);
  }
  return Polyline(std::move(out));
}

bool Polyline::crossed_by(Vec2 a, Vec2 b) const {
  double lo_x = std::min(a.x, b.x), hi_x = std::max(a.x, b.x);
  double lo_y = std::min(a.y, b.y), hi_y = std::max(a.y, b.y);
  for (std::size_t i = 0; i + 1 < pts_.size(); ++i) {
    const Vec2& c = pts_[i];
    const Vec2& d = pts_[i + 1];
    if (std::max(c.x, d.x) < lo_x || std::min(c.x, d.x) > hi_x ||
        std::max(c.y, d.y) < lo_y || std::min(c.y, d.y) > hi_y) {
      continue;
    }
    if (segments_intersect(a, b, c, d)) return true;
  }
  return false;
}

bool Polyline::is_simple() const {
  for (std::size_t i = 0; i + 1 < pts_.size(); ++i) {
    for (std::size_t j = i + 2; j + 1 < pts_.size(); ++j) {
      if (i == 0 && j + 2 == pts_.size() && pts_.front().x == pts_.back().x &&
          pts_.front().y == pts_.back().y) {
        continue;  // closed loops may touch at the shared endpoint
      }
      if (segments_intersect(pts_[i], pts_[i + 1], pts_[j], pts_[j + 1])) return false;
    }
  }
  return true;
}

std::array<Vec2, 4> Obb::corners() const {
  Vec2 fwd = Vec2{std::cos(heading), std::sin(heading)} * (0.5 * length);
  Vec2 side = Vec2{-std::sin(heading), std::cos(heading)} * (0.5 * width);
  return {center + fwd + side, center + fwd - side, center - fwd - side, center - fwd + side};
}

bool obb_overlap(const Obb& a, const Obb& b) {
  auto ca = a.corners();
  auto cb = b.corners();
  // Candidate separating axes: the two edge normals of each box.
  std::array<Vec2, 4> axes = {
      Vec2{std::cos(a.heading), std::sin(a.heading)},
      Vec2{-std::sin(a.heading), std::cos(a.heading)},
      Vec2{std::cos(b.heading), std::sin(b.heading)},
      Vec2{-std::sin(b.heading), std::cos(b.heading)},
  };
  for (const Vec2& axis : axes) {
    double amin = std::numeric_limits<double>::infinity(), amax = -amin;
    double bmin = amin, bmax = amax;
    for (const Vec2& p : ca) {
      double v = p.dot(axis);
      amin = std::min(amin, v);
      amax = std::max(amax, v);
    }
    for (const Vec2& p : cb) {
      double v = p.dot(axis);
      bmin = std::min(bmin, v);
      bmax = std::max(bmax, v);
    }
    if (amax < bmin || bmax < amin) return false;
  }
  return true;
}

double obb_distance(const Obb& box, Vec2 p) {
  Vec2 rel = p - box.center;
  Vec2 local{rel.dot({std::cos(box.heading), std::sin(box.heading)}),
             rel.dot({-std::sin(box.heading), std::cos(box.heading)})};
  double dx = std::max(std::fabs(local.x) - 0.5 * box.length, 0.0);
  double dy = std::max(std::fabs(local.y) - 0.5 * box.width, 0.0);
  return std::hypot(dx, dy);
}

}  // namespace lanerl::geom
