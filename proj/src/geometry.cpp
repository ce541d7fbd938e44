#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "fragseg/errors.hpp"
#include "fragseg/geometry.hpp"
#include "geometry_internal.hpp"

namespace fragseg {

using detail::classify;
using detail::Contact;
using detail::Segment;

double signed_area(const Ring& ring) {
  const std::size_t n = ring.size();
  if (n < 3) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = ring[i];
    const Point& b = ring[(i + 1) % n];
    s += a.x() * b.y() - b.x() * a.y();
  }
  return 0.5 * s;
}

double ring_perimeter(const Ring& ring) {
  double s = 0.0;
  for (std::size_t i = 0; i < ring.size(); ++i) s += (ring[(i + 1) % ring.size()] - ring[i]).norm();
  return s;
}

double polygon_area(const PolygonWithHoles& p) {
  double a = std::abs(signed_area(p.shell));
  for (const auto& h : p.holes) a -= std::abs(signed_area(h));
  return a;
}

BoundingBox2i pixel_bounds(const PolygonWithHoles& p) {
  if (p.shell.empty()) return {};
  double x0 = std::numeric_limits<double>::infinity(), y0 = x0, x1 = -x0, y1 = -x0;
  for (const auto& q : p.shell) {
    x0 = std::min(x0, q.x());
    y0 = std::min(y0, q.y());
    x1 = std::max(x1, q.x());
    y1 = std::max(y1, q.y());
  }
  return {static_cast<int>(std::floor(x0)), static_cast<int>(std::floor(y0)), static_cast<int>(std::ceil(x1)),
          static_cast<int>(std::ceil(y1))};
}

PolygonWithHoles normalize_orientation(PolygonWithHoles p) {
  if (signed_area(p.shell) < 0) std::reverse(p.shell.begin(), p.shell.end());
  for (auto& h : p.holes)
    if (signed_area(h) > 0) std::reverse(h.begin(), h.end());
  return p;
}

Ring remove_duplicate_points(const Ring& ring) {
  Ring out;
  out.reserve(ring.size());
  for (const auto& q : ring)
    if (out.empty() || out.back() != q) out.push_back(q);
  while (out.size() > 1 && out.front() == out.back()) out.pop_back();
  return out;
}

const char* to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::self_intersection: return "self_intersection";
    case ViolationKind::hole_outside_shell: return "hole_outside_shell";
    case ViolationKind::overlapping_holes: return "overlapping_holes";
    case ViolationKind::bad_orientation: return "bad_orientation";
    case ViolationKind::degenerate_ring: return "degenerate_ring";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------

namespace {

bool ring_degenerate(const Ring& ring, Point& where) {
  if (ring.empty()) {
    where = Point::Zero();
    return true;
  }
  where = ring.front();
  for (std::size_t i = 0; i < ring.size(); ++i) {
    if (ring[i] == ring[(i + 1) % ring.size()]) {
      where = ring[i];
      return true;
    }
  }
  if (ring.size() < 3) return true;
  // Zero area only counts when every point is collinear; a bowtie is a self-intersection.
  for (std::size_t i = 2; i < ring.size(); ++i)
    if (detail::orient(ring[0], ring[1], ring[i]) != 0) return false;
  return true;
}

bool on_ring_boundary(const Ring& ring, const Point& p) {
  for (std::size_t i = 0; i < ring.size(); ++i)
    if (detail::on_segment(ring[i], ring[(i + 1) % ring.size()], p)) return true;
  return false;
}

// A point of `inner` that is not on the boundary of `outer` (vertex, else edge midpoint).
std::optional<Point> probe_point(const Ring& inner, const Ring& outer) {
  for (const auto& q : inner)
    if (!on_ring_boundary(outer, q)) return q;
  for (std::size_t i = 0; i < inner.size(); ++i) {
    const Point m = 0.5 * (inner[i] + inner[(i + 1) % inner.size()]);
    if (!on_ring_boundary(outer, m)) return m;
  }
  return std::nullopt;
}

struct RingBox {
  double x0, y0, x1, y1;
  bool inside(const RingBox& o) const { return x0 >= o.x0 && y0 >= o.y0 && x1 <= o.x1 && y1 <= o.y1; }
};

RingBox ring_box(const Ring& r) {
  RingBox b{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
            -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& q : r) {
    b.x0 = std::min(b.x0, q.x());
    b.y0 = std::min(b.y0, q.y());
    b.x1 = std::max(b.x1, q.x());
    b.y1 = std::max(b.y1, q.y());
  }
  return b;
}

}  // namespace

std::vector<Violation> validate(const PolygonWithHoles& p) {
  std::vector<Violation> out;
  Point where;
  if (ring_degenerate(p.shell, where)) {
    out.push_back({ViolationKind::degenerate_ring, where});
    return out;
  }

  // rings[0] = shell, rings[k] = holes[k - 1]; degenerate holes are reported and skipped.
  std::vector<const Ring*> rings{&p.shell};
  for (const auto& h : p.holes) {
    if (ring_degenerate(h, where))
      out.push_back({ViolationKind::degenerate_ring, where});
    else
      rings.push_back(&h);
  }

  if (signed_area(p.shell) < 0) out.push_back({ViolationKind::bad_orientation, p.shell.front()});
  for (std::size_t k = 1; k < rings.size(); ++k)
    if (signed_area(*rings[k]) > 0) out.push_back({ViolationKind::bad_orientation, rings[k]->front()});

  std::vector<Segment> segs;
  for (std::size_t k = 0; k < rings.size(); ++k) {
    const Ring& r = *rings[k];
    for (std::size_t i = 0; i < r.size(); ++i)
      segs.push_back({r[i], r[(i + 1) % r.size()], static_cast<int>(k), static_cast<int>(i)});
  }

  // crossed[k] marks rings already known to cross another ring.
  std::vector<char> crossed(rings.size(), 0);
  std::vector<std::pair<int, int>> crossing_pairs;
  detail::sweep_pairs(segs, [&](const Segment& s, const Segment& t) {
    if (std::max(s.a.y(), s.b.y()) < std::min(t.a.y(), t.b.y()) ||
        std::max(t.a.y(), t.b.y()) < std::min(s.a.y(), s.b.y()))
      return true;
    const Contact c = classify(s.a, s.b, t.a, t.b);
    if (c == Contact::none) return true;
    if (s.ring == t.ring) {
      const int n = static_cast<int>(rings[static_cast<std::size_t>(s.ring)]->size());
      const bool adjacent = (s.index + 1) % n == t.index || (t.index + 1) % n == s.index;
      if (adjacent && c != Contact::overlap) return true;
      Point loc = s.a;
      if (c == Contact::proper) loc = detail::line_intersection(s.a, s.b, t.a, t.b);
      else if (detail::on_segment(s.a, s.b, t.a)) loc = t.a;
      else if (detail::on_segment(s.a, s.b, t.b)) loc = t.b;
      else if (detail::on_segment(t.a, t.b, s.b)) loc = s.b;
      out.push_back({ViolationKind::self_intersection, loc});
      return true;
    }
    if (c == Contact::touch) return true;
    const Point loc = c == Contact::proper ? detail::line_intersection(s.a, s.b, t.a, t.b) : t.a;
    const int lo = std::min(s.ring, t.ring), hi = std::max(s.ring, t.ring);
    out.push_back({lo == 0 ? ViolationKind::hole_outside_shell : ViolationKind::overlapping_holes, loc});
    crossed[static_cast<std::size_t>(hi)] = 1;
    if (lo != 0) crossed[static_cast<std::size_t>(lo)] = 1;
    crossing_pairs.emplace_back(lo, hi);
    return true;
  });

  std::vector<RingBox> boxes;
  for (const Ring* r : rings) boxes.push_back(ring_box(*r));
  for (std::size_t k = 1; k < rings.size(); ++k) {
    if (crossed[k]) continue;
    const auto probe = probe_point(*rings[k], p.shell);
    if (probe && !ring_contains(p.shell, *probe)) out.push_back({ViolationKind::hole_outside_shell, *probe});
  }
  for (std::size_t i = 1; i < rings.size(); ++i) {
    for (std::size_t j = 1; j < rings.size(); ++j) {
      if (i == j || !boxes[i].inside(boxes[j])) continue;
      const auto pair = std::make_pair(static_cast<int>(std::min(i, j)), static_cast<int>(std::max(i, j)));
      if (std::find(crossing_pairs.begin(), crossing_pairs.end(), pair) != crossing_pairs.end()) continue;
      const auto probe = probe_point(*rings[i], *rings[j]);
      // A probe of nullopt means every vertex and edge midpoint lies on the other ring: identical rings.
      if (!probe || ring_contains(*rings[j], *probe))
        out.push_back({ViolationKind::overlapping_holes, probe.value_or(rings[i]->front())});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

bool ring_contains(const Ring& ring, const Point& pt) {
  bool inside = false;
  const std::size_t n = ring.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point& a = ring[i];
    const Point& b = ring[j];
    if ((a.y() > pt.y()) != (b.y() > pt.y())) {
      const double x = a.x() + (pt.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
      if (pt.x() < x) inside = !inside;
    }
  }
  return inside;
}

bool contains(const PolygonWithHoles& p, const Point& pt) {
  bool inside = ring_contains(p.shell, pt);
  for (const auto& h : p.holes)
    if (ring_contains(h, pt)) inside = !inside;
  return inside;
}

namespace {

// Even-odd scanline fill of `p` shifted by (-ox, -oy) into `out`, OR-ing pixels.
void rasterize_into(const PolygonWithHoles& p, int ox, int oy, Mask& out) {
  const Index h = out.rows(), w = out.cols();
  if (h == 0 || w == 0) return;
  std::vector<std::vector<double>> xs(static_cast<std::size_t>(h));
  auto add_ring = [&](const Ring& r) {
    const std::size_t n = r.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Point a = r[i] - Point(ox, oy);
      const Point b = r[(i + 1) % n] - Point(ox, oy);
      if (a.y() == b.y()) continue;
      const double ylo = std::min(a.y(), b.y()), yhi = std::max(a.y(), b.y());
      // Rows whose centre y + 0.5 lies in [ylo, yhi).
      const Index r0 = std::max<Index>(0, static_cast<Index>(std::ceil(ylo - 0.5)));
      const Index r1 = std::min<Index>(h, static_cast<Index>(std::ceil(yhi - 0.5)));
      const double inv = (b.x() - a.x()) / (b.y() - a.y());
      for (Index y = r0; y < r1; ++y) xs[static_cast<std::size_t>(y)].push_back(a.x() + (y + 0.5 - a.y()) * inv);
    }
  };
  add_ring(p.shell);
  for (const auto& hole : p.holes) add_ring(hole);

  for (Index y = 0; y < h; ++y) {
    auto& row = xs[static_cast<std::size_t>(y)];
    std::sort(row.begin(), row.end());
    for (std::size_t k = 0; k + 1 < row.size(); k += 2) {
      // Pixels whose centre x + 0.5 lies in [row[k], row[k+1]).
      const Index x0 = std::max<Index>(0, static_cast<Index>(std::ceil(row[k] - 0.5)));
      const Index x1 = std::min<Index>(w, static_cast<Index>(std::ceil(row[k + 1] - 0.5)));
      if (x1 > x0) out.row(y).segment(x0, x1 - x0).setConstant(true);
    }
  }
}

}  // namespace

Mask rasterize(const PolygonWithHoles& p, Index width, Index height) {
  if (width < 0 || height < 0) throw NegativeDimension("rasterize: negative raster size");
  Mask m = Mask::Zero(height, width);
  rasterize_into(p, 0, 0, m);
  return m;
}

Mask rasterize(std::span<const PolygonWithHoles> polys, Index width, Index height) {
  if (width < 0 || height < 0) throw NegativeDimension("rasterize: negative raster size");
  Mask m = Mask::Zero(height, width);
  for (const auto& p : polys) rasterize_into(p, 0, 0, m);
  return m;
}

Mask rasterize_local(const PolygonWithHoles& p, BoundingBox2i& box) {
  box = pixel_bounds(p);
  Mask m = Mask::Zero(std::max(0, box.height()), std::max(0, box.width()));
  rasterize_into(p, box.x0, box.y0, m);
  return m;
}

}  // namespace fragseg
