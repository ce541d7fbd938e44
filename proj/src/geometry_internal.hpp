#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "fragseg/geometry.hpp"

namespace fragseg::detail {

// Sign of the cross product (b - a) x (c - a). Exact for coordinates on a modest dyadic grid.
inline int orient(const Point& a, const Point& b, const Point& c) {
  const double v = (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
  return (v > 0) - (v < 0);
}

// p is collinear with [a, b]; true if p lies within its bounding box.
inline bool within_box(const Point& a, const Point& b, const Point& p) {
  return std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) && std::min(a.y(), b.y()) <= p.y() &&
         p.y() <= std::max(a.y(), b.y());
}

inline bool on_segment(const Point& a, const Point& b, const Point& p) {
  return orient(a, b, p) == 0 && within_box(a, b, p);
}

struct Segment {
  Point a, b;
  int ring = 0;
  int index = 0;  // index of `a` within its ring
  double min_x() const { return std::min(a.x(), b.x()); }
  double max_x() const { return std::max(a.x(), b.x()); }
};

enum class Contact {
  none,
  proper,   // interiors cross at a single point
  touch,    // single shared point involving at least one endpoint
  overlap,  // collinear with a shared piece of positive length
};

inline Contact classify(const Point& p1, const Point& p2, const Point& q1, const Point& q2) {
  const int o1 = orient(p1, p2, q1), o2 = orient(p1, p2, q2);
  const int o3 = orient(q1, q2, p1), o4 = orient(q1, q2, p2);
  if (o1 == 0 && o2 == 0) {
    // Collinear: project on the dominant axis.
    const bool use_x = std::abs(p2.x() - p1.x()) + std::abs(q2.x() - q1.x()) >=
                       std::abs(p2.y() - p1.y()) + std::abs(q2.y() - q1.y());
    auto key = [&](const Point& p) { return use_x ? p.x() : p.y(); };
    const double lo = std::max(std::min(key(p1), key(p2)), std::min(key(q1), key(q2)));
    const double hi = std::min(std::max(key(p1), key(p2)), std::max(key(q1), key(q2)));
    if (lo < hi) return Contact::overlap;
    if (lo == hi) return Contact::touch;
    return Contact::none;
  }
  if (o1 * o2 > 0 || o3 * o4 > 0) return Contact::none;
  if (o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0) return Contact::proper;
  return Contact::touch;
}

// Intersection point of two non-parallel lines.
inline Point line_intersection(const Point& p1, const Point& p2, const Point& q1, const Point& q2) {
  const Point r = p2 - p1, s = q2 - q1;
  const double denom = r.x() * s.y() - r.y() * s.x();
  const double t = ((q1.x() - p1.x()) * s.y() - (q1.y() - p1.y()) * s.x()) / denom;
  return p1 + t * r;
}

// Calls f(i, j) for every pair of segments with overlapping x-ranges (i before j in sorted order).
template <typename F>
void sweep_pairs(std::vector<Segment>& segs, F&& f) {
  std::sort(segs.begin(), segs.end(), [](const Segment& s, const Segment& t) { return s.min_x() < t.min_x(); });
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const double hi = segs[i].max_x();
    for (std::size_t j = i + 1; j < segs.size() && segs[j].min_x() <= hi; ++j) {
      if (!f(segs[i], segs[j])) return;
    }
  }
}

}  // namespace fragseg::detail
