#include "kinder/geom2d.hpp"

#include <algorithm>
#include <limits>

namespace kinder::geom {

double wrap_angle(double a) {
  double r = std::remainder(a, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

Pose2 transform(const Pose2& p, const Pose2& q) {
  const Vec2 t = p.apply(q.position());
  return {t.x, t.y, wrap_angle(p.theta + q.theta)};
}

Pose2 inverse(const Pose2& p) {
  const Vec2 t = p.unrotate(-p.position());
  return {t.x, t.y, wrap_angle(-p.theta)};
}

std::vector<PlacedConvex> convex_parts(const PlacedShape& s) {
  std::vector<PlacedConvex> out;
  std::visit(
      [&](const auto& shape) {
        using T = std::decay_t<decltype(shape)>;
        if constexpr (std::is_same_v<T, Compound>) {
          out.reserve(shape.parts.size());
          for (const auto& part : shape.parts) out.push_back({part.shape, transform(s.pose, part.local)});
        } else {
          out.push_back({shape, s.pose});
        }
      },
      s.shape);
  return out;
}

std::array<Vec2, 4> corners(const Rect& r, const Pose2& pose) {
  return {pose.apply({-r.half_w, -r.half_h}), pose.apply({r.half_w, -r.half_h}),
          pose.apply({r.half_w, r.half_h}), pose.apply({-r.half_w, r.half_h})};
}

Aabb aabb(const PlacedConvex& s) {
  if (const auto* c = std::get_if<Circle>(&s.shape)) {
    return {s.pose.x - c->radius, s.pose.y - c->radius, s.pose.x + c->radius, s.pose.y + c->radius};
  }
  const auto& r = std::get<Rect>(s.shape);
  const double c = std::abs(std::cos(s.pose.theta)), sn = std::abs(std::sin(s.pose.theta));
  const double ex = c * r.half_w + sn * r.half_h;
  const double ey = sn * r.half_w + c * r.half_h;
  return {s.pose.x - ex, s.pose.y - ey, s.pose.x + ex, s.pose.y + ey};
}

Aabb aabb(const PlacedShape& s) {
  Aabb box{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
           -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& part : convex_parts(s)) {
    const Aabb b = aabb(part);
    box = {std::min(box.min_x, b.min_x), std::min(box.min_y, b.min_y), std::max(box.max_x, b.max_x),
           std::max(box.max_y, b.max_y)};
  }
  return box;
}

namespace {

// Closest point of a rect (in its local frame) to a local point.
Vec2 clamp_local(const Rect& r, Vec2 q) {
  return {std::clamp(q.x, -r.half_w, r.half_w), std::clamp(q.y, -r.half_h, r.half_h)};
}

double point_rect_distance(const Rect& r, const Pose2& pose, Vec2 p) {
  const Vec2 q = pose.to_local(p);
  return (q - clamp_local(r, q)).norm();
}

struct Interval {
  double lo, hi;
};

Interval project(const PlacedConvex& s, Vec2 axis) {
  const double c = s.pose.position().dot(axis);
  if (const auto* circ = std::get_if<Circle>(&s.shape)) return {c - circ->radius, c + circ->radius};
  const auto& r = std::get<Rect>(s.shape);
  const Vec2 ux = unit(s.pose.theta);
  const double ext = r.half_w * std::abs(ux.dot(axis)) + r.half_h * std::abs(ux.perp().dot(axis));
  return {c - ext, c + ext};
}

// Shrinks a convex shape by tol; nullopt when nothing is left.
std::optional<PlacedConvex> erode(const PlacedConvex& s, double tol) {
  if (tol == 0.0) return s;
  if (const auto* c = std::get_if<Circle>(&s.shape)) {
    if (c->radius - tol <= 0.0) return std::nullopt;
    return PlacedConvex{Circle{c->radius - tol}, s.pose};
  }
  const auto& r = std::get<Rect>(s.shape);
  if (r.half_w - tol <= 0.0 || r.half_h - tol <= 0.0) return std::nullopt;
  return PlacedConvex{Rect{r.half_w - tol, r.half_h - tol}, s.pose};
}

// SAT on the four rect axes; strict says whether touching counts as overlap.
bool rects_overlap(const Rect& ra, const Pose2& pa, const Rect& rb, const Pose2& pb, bool strict) {
  const Vec2 d = pb.position() - pa.position();
  const Vec2 axes[4] = {unit(pa.theta), unit(pa.theta).perp(), unit(pb.theta), unit(pb.theta).perp()};
  const Vec2 ua = unit(pa.theta), ub = unit(pb.theta);
  for (const Vec2& n : axes) {
    const double ext_a = ra.half_w * std::abs(ua.dot(n)) + ra.half_h * std::abs(ua.perp().dot(n));
    const double ext_b = rb.half_w * std::abs(ub.dot(n)) + rb.half_h * std::abs(ub.perp().dot(n));
    const double gap = std::abs(d.dot(n)) - (ext_a + ext_b);
    if (strict ? gap >= 0.0 : gap > 0.0) return false;
  }
  return true;
}

bool collides_exact(const PlacedConvex& a, const PlacedConvex& b) {
  const auto* ca = std::get_if<Circle>(&a.shape);
  const auto* cb = std::get_if<Circle>(&b.shape);
  if (ca && cb) {
    const double rs = ca->radius + cb->radius;
    const Vec2 d = b.pose.position() - a.pose.position();
    return d.dot(d) < rs * rs;
  }
  if (ca || cb) {
    const PlacedConvex& circ = ca ? a : b;
    const PlacedConvex& rect = ca ? b : a;
    const double radius = std::get<Circle>(circ.shape).radius;
    const auto& r = std::get<Rect>(rect.shape);
    const Vec2 q = rect.pose.to_local(circ.pose.position());
    const Vec2 d = q - clamp_local(r, q);
    return d.dot(d) < radius * radius;
  }
  return rects_overlap(std::get<Rect>(a.shape), a.pose, std::get<Rect>(b.shape), b.pose, true);
}

bool convex_contains(const PlacedConvex& outer, const PlacedConvex& inner, double slack) {
  if (const auto* ri = std::get_if<Rect>(&inner.shape)) {
    for (const Vec2& p : corners(*ri, inner.pose)) {
      if (!contains_point(outer, p, slack)) return false;
    }
    return true;
  }
  const double r = std::get<Circle>(inner.shape).radius;
  if (const auto* co = std::get_if<Circle>(&outer.shape)) {
    return (inner.pose.position() - outer.pose.position()).norm() + r <= co->radius + slack;
  }
  const auto& ro = std::get<Rect>(outer.shape);
  const Vec2 q = outer.pose.to_local(inner.pose.position());
  return std::abs(q.x) + r <= ro.half_w + slack && std::abs(q.y) + r <= ro.half_h + slack;
}

// Candidate separating axes for a colliding convex pair.
void append_axes(const PlacedConvex& a, const PlacedConvex& b, std::vector<Vec2>& axes) {
  for (const PlacedConvex* s : {&a, &b}) {
    if (std::holds_alternative<Rect>(s->shape)) {
      axes.push_back(unit(s->pose.theta));
      axes.push_back(unit(s->pose.theta).perp());
    }
  }
  const auto* ca = std::get_if<Circle>(&a.shape);
  const auto* cb = std::get_if<Circle>(&b.shape);
  if (ca && cb) {
    axes.push_back((b.pose.position() - a.pose.position()).normalized());
  } else if (ca || cb) {
    const PlacedConvex& circ = ca ? a : b;
    const PlacedConvex& rect = ca ? b : a;
    const Vec2 c = circ.pose.position();
    Vec2 best{};
    double best_d = std::numeric_limits<double>::infinity();
    for (const Vec2& v : corners(std::get<Rect>(rect.shape), rect.pose)) {
      const double d = (v - c).norm();
      if (d < best_d) {
        best_d = d;
        best = v;
      }
    }
    if (best_d > 1e-12) axes.push_back((best - c).normalized());
  }
}

}  // namespace

bool contains_point(const PlacedConvex& s, Vec2 p, double slack) {
  if (const auto* c = std::get_if<Circle>(&s.shape)) {
    return (p - s.pose.position()).norm() <= c->radius + slack;
  }
  const auto& r = std::get<Rect>(s.shape);
  const Vec2 q = s.pose.to_local(p);
  return std::abs(q.x) <= r.half_w + slack && std::abs(q.y) <= r.half_h + slack;
}

bool contains_point(const PlacedShape& s, Vec2 p, double slack) {
  for (const auto& part : convex_parts(s)) {
    if (contains_point(part, p, slack)) return true;
  }
  return false;
}

bool collides(const PlacedConvex& a, const PlacedConvex& b, double tol) {
  if (!aabb(a).overlaps(aabb(b))) return false;
  const auto ea = erode(a, tol);
  const auto eb = erode(b, tol);
  if (!ea || !eb) return false;
  return collides_exact(*ea, *eb);
}

bool collides(const PlacedShape& a, const PlacedShape& b, double tol) {
  const auto pa = convex_parts(a);
  const auto pb = convex_parts(b);
  for (const auto& x : pa) {
    for (const auto& y : pb) {
      if (collides(x, y, tol)) return true;
    }
  }
  return false;
}

double distance(const PlacedConvex& a, const PlacedConvex& b) {
  const auto* ca = std::get_if<Circle>(&a.shape);
  const auto* cb = std::get_if<Circle>(&b.shape);
  if (ca && cb) {
    return std::max(0.0, (b.pose.position() - a.pose.position()).norm() - ca->radius - cb->radius);
  }
  if (ca || cb) {
    const PlacedConvex& circ = ca ? a : b;
    const PlacedConvex& rect = ca ? b : a;
    const double d = point_rect_distance(std::get<Rect>(rect.shape), rect.pose, circ.pose.position());
    return std::max(0.0, d - std::get<Circle>(circ.shape).radius);
  }
  const auto& ra = std::get<Rect>(a.shape);
  const auto& rb = std::get<Rect>(b.shape);
  if (rects_overlap(ra, a.pose, rb, b.pose, false)) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (const Vec2& p : corners(ra, a.pose)) best = std::min(best, point_rect_distance(rb, b.pose, p));
  for (const Vec2& p : corners(rb, b.pose)) best = std::min(best, point_rect_distance(ra, a.pose, p));
  return best;
}

double distance(const PlacedShape& a, const PlacedShape& b) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& x : convex_parts(a)) {
    for (const auto& y : convex_parts(b)) best = std::min(best, distance(x, y));
  }
  return best;
}

bool contains(const PlacedShape& outer, const PlacedShape& inner, double slack) {
  const auto outer_parts = convex_parts(outer);
  for (const auto& ip : convex_parts(inner)) {
    const bool fits = std::any_of(outer_parts.begin(), outer_parts.end(),
                                  [&](const PlacedConvex& op) { return convex_contains(op, ip, slack); });
    if (!fits) return false;
  }
  return true;
}

std::optional<Vec2> min_translation(const PlacedShape& a, const PlacedShape& b) {
  const auto pa = convex_parts(a);
  const auto pb = convex_parts(b);

  std::vector<Vec2> axes;
  for (const auto& x : pa) {
    for (const auto& y : pb) {
      if (collides(x, y, 0.0)) append_axes(x, y, axes);
    }
  }
  if (axes.empty()) return std::nullopt;

  constexpr double kSettle = 1e-12;
  auto required_push = [&](Vec2 dir) -> std::optional<double> {
    double t = 0.0;
    for (int iter = 0; iter < 16; ++iter) {
      double need = 0.0;
      for (const auto& x : pa) {
        for (auto y : pb) {
          y.pose.x += t * dir.x;
          y.pose.y += t * dir.y;
          if (!collides(x, y, kSettle)) continue;
          need = std::max(need, project(x, dir).hi - project(y, dir).lo);
        }
      }
      if (need <= 0.0) return t;
      t += need;
    }
    return std::nullopt;
  };

  auto angle_from_x = [](Vec2 d) { return std::acos(std::clamp(d.x, -1.0, 1.0)); };

  std::optional<Vec2> best;
  double best_t = std::numeric_limits<double>::infinity();
  for (const Vec2& axis : axes) {
    for (const Vec2 dir : {axis, -axis}) {
      const auto t = required_push(dir);
      if (!t) continue;
      bool take = false;
      if (*t < best_t - 1e-12) {
        take = true;
      } else if (*t <= best_t + 1e-12 && best) {
        const Vec2 cur = best->normalized();
        const double a_new = angle_from_x(dir), a_cur = angle_from_x(cur);
        take = a_new < a_cur - 1e-12 || (std::abs(a_new - a_cur) <= 1e-12 && dir.y > cur.y);
      }
      if (take) {
        best_t = *t;
        best = *t * dir;
      }
    }
  }
  return best;
}

std::vector<std::pair<std::size_t, std::size_t>> collision_pairs(const std::vector<PlacedShape>& shapes, double tol,
                                                                 bool parallel) {
  const auto n = static_cast<std::ptrdiff_t>(shapes.size());
  std::vector<Aabb> boxes(shapes.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) boxes[i] = aabb(shapes[i]);
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> rows(shapes.size());
#pragma omp parallel for schedule(dynamic, 8) if (parallel)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    for (std::ptrdiff_t j = i + 1; j < n; ++j) {
      if (!boxes[i].overlaps(boxes[j])) continue;
      if (collides(shapes[i], shapes[j], tol)) rows[i].emplace_back(i, j);
    }
  }
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (auto& r : rows) out.insert(out.end(), r.begin(), r.end());
  return out;
}

std::vector<bool> collides_any(const std::vector<PlacedShape>& queries, const std::vector<PlacedShape>& obstacles,
                               double tol, bool parallel) {
  const auto n = static_cast<std::ptrdiff_t>(queries.size());
  std::vector<char> hit(queries.size(), 0);
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    for (const auto& o : obstacles) {
      if (collides(queries[i], o, tol)) {
        hit[i] = 1;
        break;
      }
    }
  }
  return {hit.begin(), hit.end()};
}

}  // namespace kinder::geom
