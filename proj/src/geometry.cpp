#include "cfplan/geometry.hpp"

#include <algorithm>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace cfplan {

namespace {

constexpr double kBoundaryTolerance = 1e-9;

bool on_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const Vec2 ap = p - a;
  const double len = ab.norm();
  if (len < kBoundaryTolerance) {
    return ap.norm() <= kBoundaryTolerance;
  }
  if (std::abs(ab.cross(ap)) / len > kBoundaryTolerance) {
    return false;
  }
  const double u = ab.dot(ap) / (len * len);
  return u >= -kBoundaryTolerance / len && u <= 1.0 + kBoundaryTolerance / len;
}

int orientation(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double v = (b - a).cross(c - a);
  if (std::abs(v) < 1e-12) {
    return 0;
  }
  return v > 0 ? 1 : -1;
}

bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  const int o1 = orientation(p1, p2, q1);
  const int o2 = orientation(p1, p2, q2);
  const int o3 = orientation(q1, q2, p1);
  const int o4 = orientation(q1, q2, p2);
  if (o1 != o2 && o3 != o4) {
    return true;
  }
  return (o1 == 0 && on_segment(q1, p1, p2)) || (o2 == 0 && on_segment(q2, p1, p2)) ||
         (o3 == 0 && on_segment(p1, q1, q2)) || (o4 == 0 && on_segment(p2, q1, q2));
}

}  // namespace

double wrap_angle(double angle) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  angle = std::fmod(angle + std::numbers::pi, kTwoPi);
  if (angle < 0.0) {
    angle += kTwoPi;
  }
  return angle - std::numbers::pi;
}

std::array<Vec2, 4> OrientedBox::corners() const {
  const Vec2 along = unit_from_heading(heading) * (0.5 * length);
  const Vec2 across = left_normal(heading) * (0.5 * width);
  return {center + along + across, center - along + across, center - along - across,
          center + along - across};
}

bool overlaps(const OrientedBox& a, const OrientedBox& b) {
  const Vec2 d = b.center - a.center;
  const std::array<Vec2, 4> axes = {unit_from_heading(a.heading), left_normal(a.heading),
                                    unit_from_heading(b.heading), left_normal(b.heading)};
  const Vec2 a_u = axes[0], a_v = axes[1], b_u = axes[2], b_v = axes[3];
  for (const Vec2& axis : axes) {
    const double ra = 0.5 * a.length * std::abs(a_u.dot(axis)) + 0.5 * a.width * std::abs(a_v.dot(axis));
    const double rb = 0.5 * b.length * std::abs(b_u.dot(axis)) + 0.5 * b.width * std::abs(b_v.dot(axis));
    if (std::abs(d.dot(axis)) > ra + rb) {
      return false;
    }
  }
  return true;
}

bool point_in_polygon(const Vec2& p, std::span<const Vec2> polygon) {
  const std::size_t n = polygon.size();
  if (n < 3) {
    return false;
  }
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = polygon[i];
    const Vec2& b = polygon[j];
    if (on_segment(p, a, b)) {
      return true;
    }
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x_cross) {
        inside = !inside;
      }
    }
  }
  return inside;
}

bool point_in_any(const Vec2& p, std::span<const Polygon> polygons) {
  return std::any_of(polygons.begin(), polygons.end(),
                     [&](const Polygon& poly) { return point_in_polygon(p, poly); });
}

bool is_simple_polygon(std::span<const Vec2> polygon) {
  const std::size_t n = polygon.size();
  if (n < 3) {
    return false;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a1 = polygon[i];
    const Vec2& a2 = polygon[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      // adjacent edges share a vertex
      if (j == i + 1 || (i == 0 && j == n - 1)) {
        continue;
      }
      if (segments_intersect(a1, a2, polygon[j], polygon[(j + 1) % n])) {
        return false;
      }
    }
  }
  return true;
}

Polyline::Polyline(std::vector<Vec2> points) : points_(std::move(points)) {
  if (points_.size() < 2) {
    throw std::invalid_argument("polyline needs at least two points");
  }
  arc_.resize(points_.size());
  arc_[0] = 0.0;
  for (std::size_t i = 1; i < points_.size(); ++i) {
    const double seg = (points_[i] - points_[i - 1]).norm();
    if (seg <= 0.0) {
      throw std::invalid_argument("polyline has repeated points");
    }
    arc_[i] = arc_[i - 1] + seg;
  }
}

std::size_t Polyline::segment_for(double s) const {
  const auto it = std::upper_bound(arc_.begin(), arc_.end(), s);
  const auto idx = static_cast<std::size_t>(std::distance(arc_.begin(), it));
  return std::clamp<std::size_t>(idx == 0 ? 0 : idx - 1, 0, points_.size() - 2);
}

Vec2 Polyline::point_at(double s) const {
  const std::size_t i = segment_for(s);
  const Vec2 dir = points_[i + 1] - points_[i];
  const double seg = arc_[i + 1] - arc_[i];
  return points_[i] + dir * ((s - arc_[i]) / seg);
}

double Polyline::heading_at(double s) const {
  const std::size_t i = segment_for(s);
  const Vec2 dir = points_[i + 1] - points_[i];
  return std::atan2(dir.y, dir.x);
}

PolylineProjection Polyline::project(const Vec2& p) const {
  PolylineProjection best;
  double best_dist = std::numeric_limits<double>::infinity();
  const std::size_t last = points_.size() - 2;
  for (std::size_t i = 0; i <= last; ++i) {
    const Vec2 a = points_[i];
    const Vec2 ab = points_[i + 1] - a;
    const double seg = arc_[i + 1] - arc_[i];
    double u = ab.dot(p - a) / (seg * seg);
    if (i != 0) {
      u = std::max(u, 0.0);
    }
    if (i != last) {
      u = std::min(u, 1.0);
    }
    const Vec2 foot = a + ab * u;
    const double dist = (p - foot).norm();
    if (dist < best_dist) {
      best_dist = dist;
      best.s = arc_[i] + u * seg;
      best.heading = std::atan2(ab.y, ab.x);
      best.lateral = (ab * (1.0 / seg)).cross(p - foot);
    }
  }
  return best;
}

}  // namespace cfplan
