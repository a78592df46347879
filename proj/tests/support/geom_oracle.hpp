#pragma once

// Scanline point-sampling oracle. Rows are sampled at a fixed pitch; along a
// row the inside set of a convex part is an exact interval, which stands in
// for infinitely fine sampling in x. Deliberately shares no math with
// kinder::geom beyond the plain data structs.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "kinder/geom2d.hpp"

namespace oracle {

struct Part {
  bool circle = false;
  double a = 0, b = 0;  // radius, or half extents
  double x = 0, y = 0, th = 0;
};

inline std::vector<Part> parts_of(const kinder::geom::PlacedShape& s) {
  using namespace kinder::geom;
  std::vector<Part> out;
  auto push = [&](const ConvexShape& c, double x, double y, double th) {
    if (const auto* ci = std::get_if<Circle>(&c)) {
      out.push_back({true, ci->radius, 0, x, y, th});
    } else {
      const auto& r = std::get<Rect>(c);
      out.push_back({false, r.half_w, r.half_h, x, y, th});
    }
  };
  const double c = std::cos(s.pose.theta), sn = std::sin(s.pose.theta);
  if (const auto* comp = std::get_if<Compound>(&s.shape)) {
    for (const auto& p : comp->parts) {
      push(p.shape, s.pose.x + c * p.local.x - sn * p.local.y, s.pose.y + sn * p.local.x + c * p.local.y,
           s.pose.theta + p.local.theta);
    }
  } else if (const auto* ci = std::get_if<Circle>(&s.shape)) {
    push(*ci, s.pose.x, s.pose.y, s.pose.theta);
  } else {
    push(std::get<Rect>(s.shape), s.pose.x, s.pose.y, s.pose.theta);
  }
  return out;
}

using Interval = std::pair<double, double>;

// Row interval of a part offset by d (d < 0 erodes, d > 0 dilates; rect
// dilation is by a square, a superset of the true offset).
inline std::optional<Interval> row(const Part& p, double y, double d) {
  if (p.circle) {
    const double r = p.a + d;
    if (r <= 0) return std::nullopt;
    const double dy = y - p.y;
    if (std::abs(dy) >= r) return std::nullopt;
    const double h = std::sqrt(r * r - dy * dy);
    return Interval{p.x - h, p.x + h};
  }
  const double hw = p.a + d, hh = p.b + d;
  if (hw <= 0 || hh <= 0) return std::nullopt;
  // Local coords along the line x(t) = t, y fixed: u = c(t-x0)+s(y-y0), v = -s(t-x0)+c(y-y0).
  const double c = std::cos(p.th), s = std::sin(p.th);
  double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
  auto clip = [&](double slope, double icpt, double half) {
    // |slope*(t - x0) + icpt| < half
    if (std::abs(slope) < 1e-15) {
      if (std::abs(icpt) >= half) hi = lo - 1;
      return;
    }
    double t1 = (-half - icpt) / slope + p.x, t2 = (half - icpt) / slope + p.x;
    if (t1 > t2) std::swap(t1, t2);
    lo = std::max(lo, t1);
    hi = std::min(hi, t2);
  };
  clip(c, s * (y - p.y), hw);
  clip(-s, c * (y - p.y), hh);
  if (!(lo < hi)) return std::nullopt;
  return Interval{lo, hi};
}

inline double min_y(const Part& p, double d) {
  if (p.circle) return p.y - p.a - d;
  const double e = std::abs(std::sin(p.th)) * (p.a + d) + std::abs(std::cos(p.th)) * (p.b + d);
  return p.y - e;
}
inline double max_y(const Part& p, double d) { return 2 * p.y - min_y(p, d); }

inline bool intervals_meet(const Interval& a, const Interval& b) { return std::max(a.first, b.first) < std::min(a.second, b.second); }

// True iff some sampled row has a point inside both offset shapes.
inline bool overlap(const std::vector<Part>& A, const std::vector<Part>& B, double d, double pitch) {
  for (const auto& pa : A) {
    for (const auto& pb : B) {
      const double y0 = std::max(min_y(pa, d), min_y(pb, d)), y1 = std::min(max_y(pa, d), max_y(pb, d));
      if (y0 > y1) continue;
      for (double y = std::floor(y0 / pitch) * pitch; y <= y1; y += pitch) {
        const auto ia = row(pa, y, d), ib = row(pb, y, d);
        if (ia && ib && intervals_meet(*ia, *ib)) return true;
      }
    }
  }
  return false;
}

enum class Verdict { Yes, No, Band };

inline Verdict overlap_verdict(const kinder::geom::PlacedShape& a, const kinder::geom::PlacedShape& b, double pitch) {
  const auto A = parts_of(a), B = parts_of(b);
  const double band = 2 * pitch;
  if (overlap(A, B, -band, pitch)) return Verdict::Yes;
  if (!overlap(A, B, band, pitch)) return Verdict::No;
  return Verdict::Band;
}

// Convex outer and inner only.
inline Verdict contains_verdict(const kinder::geom::PlacedShape& outer, const kinder::geom::PlacedShape& inner,
                                double pitch) {
  const Part o = parts_of(outer).at(0), in = parts_of(inner).at(0);
  const double band = 2 * pitch;
  auto inside = [&](double din, double dout) {
    for (double y = std::floor(min_y(in, din) / pitch) * pitch; y <= max_y(in, din); y += pitch) {
      const auto ii = row(in, y, din);
      if (!ii) continue;
      const auto io = row(o, y, dout);
      if (!io || ii->first < io->first || ii->second > io->second) return false;
    }
    return true;
  };
  if (inside(band, -band)) return Verdict::Yes;
  if (!inside(-band, band)) return Verdict::No;
  return Verdict::Band;
}

inline kinder::geom::PlacedShape shifted(kinder::geom::PlacedShape s, double dx, double dy) {
  s.pose.x += dx;
  s.pose.y += dy;
  return s;
}

// Smallest push of b along unit direction (ux, uy) after which the eroded
// shapes no longer overlap, by bisection. A lower bound on the exact value;
// with `dilate` the shapes are grown instead, giving an upper bound.
inline double separation_along(const kinder::geom::PlacedShape& a, const kinder::geom::PlacedShape& b, double ux,
                               double uy, double pitch, double hi = 20.0, bool dilate = false) {
  const auto A = parts_of(a);
  const double band = dilate ? -2 * pitch : 2 * pitch;
  double lo = 0.0;
  for (int i = 0; i < 40 && hi - lo > pitch / 4; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (overlap(A, parts_of(shifted(b, mid * ux, mid * uy)), -band, pitch)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

}  // namespace oracle
