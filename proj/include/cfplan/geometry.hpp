#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

namespace cfplan {

struct Vec2 {
  double x{0.0};
  double y{0.0};

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  bool operator==(const Vec2&) const = default;

  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double cross(const Vec2& o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
};

inline Vec2 unit_from_heading(double heading) { return {std::cos(heading), std::sin(heading)}; }

// Left-hand normal of a heading (positive lateral direction).
inline Vec2 left_normal(double heading) { return {-std::sin(heading), std::cos(heading)}; }

// Result in [-pi, pi).
double wrap_angle(double angle);

struct Footprint {
  double length{4.5};
  double width{1.9};
  bool operator==(const Footprint&) const = default;
};

// Rectangle centered at `center` whose long axis points along `heading`.
struct OrientedBox {
  Vec2 center;
  double heading{0.0};
  double length{0.0};
  double width{0.0};

  std::array<Vec2, 4> corners() const;
  double circumradius() const { return 0.5 * std::hypot(length, width); }
};

// Separating-axis test. Touching boxes count as overlapping.
bool overlaps(const OrientedBox& a, const OrientedBox& b);

using Polygon = std::vector<Vec2>;

// Even-odd containment; points on an edge (within 1e-9 m) count as inside.
bool point_in_polygon(const Vec2& p, std::span<const Vec2> polygon);
bool point_in_any(const Vec2& p, std::span<const Polygon> polygons);
bool is_simple_polygon(std::span<const Vec2> polygon);

struct PolylineProjection {
  double s{0.0};        // arc length of the foot point
  double lateral{0.0};  // signed offset, positive to the left
  double heading{0.0};  // tangent heading at the foot point
};

// Piecewise-linear path with cumulative arc length. Queries beyond either end
// extrapolate along the first or last segment.
class Polyline {
 public:
  Polyline() = default;
  explicit Polyline(std::vector<Vec2> points);

  std::span<const Vec2> points() const { return points_; }
  std::span<const double> arc_lengths() const { return arc_; }
  double length() const { return arc_.empty() ? 0.0 : arc_.back(); }

  Vec2 point_at(double s) const;
  double heading_at(double s) const;
  PolylineProjection project(const Vec2& p) const;

  bool operator==(const Polyline& o) const { return points_ == o.points_; }

 private:
  std::size_t segment_for(double s) const;

  std::vector<Vec2> points_;
  std::vector<double> arc_;
};

}  // namespace cfplan
