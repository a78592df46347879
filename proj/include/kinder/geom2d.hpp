#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

namespace kinder::geom {

inline constexpr double kPi = std::numbers::pi;

/// Default erosion tolerance: resting contact within this distance is not a
/// collision.
inline constexpr double kDefaultTol = 1e-6;

/// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

/// Signed shortest angular difference b - a, in (-pi, pi].
inline double angle_diff(double a, double b) { return wrap_angle(b - a); }

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
  friend bool operator==(const Vec2&, const Vec2&) = default;

  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double cross(Vec2 o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
  Vec2 normalized() const {
    const double n = norm();
    return n > 0.0 ? Vec2{x / n, y / n} : Vec2{1.0, 0.0};
  }
  Vec2 perp() const { return {-y, x}; }
};

inline Vec2 unit(double theta) { return {std::cos(theta), std::sin(theta)}; }

/// Planar rigid transform. theta is kept in (-pi, pi].
struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  static Pose2 identity() { return {}; }

  Vec2 position() const { return {x, y}; }
  Vec2 rotate(Vec2 v) const {
    const double c = std::cos(theta), s = std::sin(theta);
    return {c * v.x - s * v.y, s * v.x + c * v.y};
  }
  Vec2 unrotate(Vec2 v) const {
    const double c = std::cos(theta), s = std::sin(theta);
    return {c * v.x + s * v.y, -s * v.x + c * v.y};
  }
  /// Local point to world.
  Vec2 apply(Vec2 local) const { return position() + rotate(local); }
  /// World point to local.
  Vec2 to_local(Vec2 world) const { return unrotate(world - position()); }

  friend bool operator==(const Pose2&, const Pose2&) = default;
};

/// p composed with q (q expressed in p's frame).
Pose2 transform(const Pose2& p, const Pose2& q);
Pose2 inverse(const Pose2& p);

struct Circle {
  double radius = 0.0;
  friend bool operator==(const Circle&, const Circle&) = default;
};

/// Axis-aligned in its local frame; half_w along local x.
struct Rect {
  double half_w = 0.0;
  double half_h = 0.0;
  friend bool operator==(const Rect&, const Rect&) = default;
};

using ConvexShape = std::variant<Circle, Rect>;

struct CompoundPart {
  ConvexShape shape;
  Pose2 local;
  friend bool operator==(const CompoundPart&, const CompoundPart&) = default;
};

/// Union of convex parts (one level deep).
struct Compound {
  std::vector<CompoundPart> parts;
  friend bool operator==(const Compound&, const Compound&) = default;
};

using Shape2 = std::variant<Circle, Rect, Compound>;

struct PlacedShape {
  Shape2 shape;
  Pose2 pose;
};

struct PlacedConvex {
  ConvexShape shape;
  Pose2 pose;
};

struct Aabb {
  double min_x, min_y, max_x, max_y;
  bool overlaps(const Aabb& o, double margin = 0.0) const {
    return min_x - margin <= o.max_x && o.min_x - margin <= max_x &&
           min_y - margin <= o.max_y && o.min_y - margin <= max_y;
  }
};

/// Convex parts of a placed shape, in world frame.
std::vector<PlacedConvex> convex_parts(const PlacedShape& s);

std::array<Vec2, 4> corners(const Rect& r, const Pose2& pose);

Aabb aabb(const PlacedConvex& s);
Aabb aabb(const PlacedShape& s);

/// True when world point p lies in the shape dilated by `slack`.
bool contains_point(const PlacedConvex& s, Vec2 p, double slack = 0.0);
bool contains_point(const PlacedShape& s, Vec2 p, double slack = 0.0);

/// Strict overlap of the tol-eroded shapes. Symmetric; touching is not a
/// collision.
bool collides(const PlacedConvex& a, const PlacedConvex& b, double tol = kDefaultTol);
bool collides(const PlacedShape& a, const PlacedShape& b, double tol = kDefaultTol);

/// Euclidean separation; 0 when the shapes touch or overlap.
double distance(const PlacedConvex& a, const PlacedConvex& b);
double distance(const PlacedShape& a, const PlacedShape& b);

/// True iff every point of `inner` lies in `outer` (within `slack`). A compound
/// outer is treated part-wise: each inner part must fit in a single outer part.
bool contains(const PlacedShape& outer, const PlacedShape& inner, double slack = 1e-9);

/// Minimum-norm translation of `b` that separates it from `a`; nullopt when
/// they do not collide at tol 0. Ties go to the smallest angle from +x.
std::optional<Vec2> min_translation(const PlacedShape& a, const PlacedShape& b);

/// All colliding pairs (i < j), sorted. The OpenMP path gives the same
/// result as the serial one.
std::vector<std::pair<std::size_t, std::size_t>> collision_pairs(const std::vector<PlacedShape>& shapes,
                                                                 double tol = kDefaultTol, bool parallel = true);

/// For each query, whether it collides with any obstacle.
std::vector<bool> collides_any(const std::vector<PlacedShape>& queries, const std::vector<PlacedShape>& obstacles,
                               double tol = kDefaultTol, bool parallel = true);

inline PlacedShape translated(PlacedShape s, Vec2 d) {
  s.pose.x += d.x;
  s.pose.y += d.y;
  return s;
}

}  // namespace kinder::geom
