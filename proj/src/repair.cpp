#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>
#include <vector>

#include "fragseg/errors.hpp"
#include "fragseg/geometry.hpp"
#include "geometry_internal.hpp"

namespace fragseg {

namespace {

using detail::Contact;
using detail::Segment;

constexpr double kGrid = 1048576.0;  // 2^20

struct Key {
  std::int64_t x, y;
  auto operator<=>(const Key&) const = default;
};

Key key_of(const Point& p) { return {std::llround(p.x() * kGrid), std::llround(p.y() * kGrid)}; }
Point point_of(const Key& k) { return {static_cast<double>(k.x) / kGrid, static_cast<double>(k.y) / kGrid}; }

// Splits every segment at all intersection points with other segments.
std::vector<std::pair<Key, Key>> node_segments(std::vector<Segment> segs) {
  std::vector<std::vector<Point>> cuts(segs.size());
  for (std::size_t i = 0; i < segs.size(); ++i) segs[i].index = static_cast<int>(i);
  detail::sweep_pairs(segs, [&](const Segment& s, const Segment& t) {
    if (std::max(s.a.y(), s.b.y()) < std::min(t.a.y(), t.b.y()) ||
        std::max(t.a.y(), t.b.y()) < std::min(s.a.y(), s.b.y()))
      return true;
    const Contact c = detail::classify(s.a, s.b, t.a, t.b);
    auto& cs = cuts[static_cast<std::size_t>(s.index)];
    auto& ct = cuts[static_cast<std::size_t>(t.index)];
    if (c == Contact::proper) {
      const Point p = detail::line_intersection(s.a, s.b, t.a, t.b);
      cs.push_back(p);
      ct.push_back(p);
    } else if (c == Contact::touch || c == Contact::overlap) {
      for (const Point& q : {t.a, t.b})
        if (detail::on_segment(s.a, s.b, q)) cs.push_back(q);
      for (const Point& q : {s.a, s.b})
        if (detail::on_segment(t.a, t.b, q)) ct.push_back(q);
    }
    return true;
  });

  std::vector<Segment> by_index(segs.size());
  for (const auto& s : segs) by_index[static_cast<std::size_t>(s.index)] = s;

  std::vector<std::pair<Key, Key>> edges;
  for (std::size_t i = 0; i < by_index.size(); ++i) {
    const Segment& s = by_index[i];
    auto& pts = cuts[i];
    pts.push_back(s.a);
    pts.push_back(s.b);
    const Point d = s.b - s.a;
    std::sort(pts.begin(), pts.end(), [&](const Point& p, const Point& q) { return (p - s.a).dot(d) < (q - s.a).dot(d); });
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
      const Key ka = key_of(pts[k]), kb = key_of(pts[k + 1]);
      if (ka != kb) edges.emplace_back(ka, kb);
    }
  }
  return edges;
}

// Crossing parity of a ray from `m` against `edges` (excluding `self`): +x ray if `horizontal_ray`, else +y ray.
bool odd_crossings(const std::vector<std::pair<Point, Point>>& edges, std::size_t self, const Point& m,
                   bool horizontal_ray) {
  bool odd = false;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (i == self) continue;
    const Point& a = edges[i].first;
    const Point& b = edges[i].second;
    if (horizontal_ray) {
      if ((a.y() > m.y()) != (b.y() > m.y())) {
        const double x = a.x() + (m.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
        if (x > m.x()) odd = !odd;
      }
    } else {
      if ((a.x() > m.x()) != (b.x() > m.x())) {
        const double y = a.y() + (m.x() - a.x()) * (b.y() - a.y()) / (b.x() - a.x());
        if (y > m.y()) odd = !odd;
      }
    }
  }
  return odd;
}

}  // namespace

std::vector<PolygonWithHoles> repair(const PolygonWithHoles& input) {
  PolygonWithHoles p;
  p.shell = remove_duplicate_points(input.shell);
  for (const auto& h : input.holes) p.holes.push_back(remove_duplicate_points(h));

  auto violations = validate(p);
  if (violations.empty()) return {p};
  if (std::all_of(violations.begin(), violations.end(),
                  [](const Violation& v) { return v.kind == ViolationKind::bad_orientation; }))
    return {normalize_orientation(p)};

  std::vector<Segment> segs;
  auto add_ring = [&](const Ring& r) {
    for (std::size_t i = 0; i < r.size(); ++i) segs.push_back({r[i], r[(i + 1) % r.size()], 0, 0});
  };
  add_ring(p.shell);
  for (const auto& h : p.holes) add_ring(h);

  // Even-odd: edges covered an even number of times cancel.
  std::map<std::pair<Key, Key>, int> multiplicity;
  for (auto [a, b] : node_segments(std::move(segs))) {
    if (b < a) std::swap(a, b);
    ++multiplicity[{a, b}];
  }
  std::vector<std::pair<Key, Key>> kept;
  for (const auto& [e, n] : multiplicity)
    if (n % 2 == 1) kept.push_back(e);
  if (kept.empty()) throw UnrepairableGeometry("repair: polygon has no area");

  // Orient every edge so the interior lies on its left (positive-area side).
  std::vector<std::pair<Point, Point>> geom;
  for (const auto& [a, b] : kept) geom.emplace_back(point_of(a), point_of(b));
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const Point a = geom[i].first, b = geom[i].second;
    const Point m = 0.5 * (a + b);
    const bool horizontal = a.y() == b.y();
    const bool beyond_inside = odd_crossings(geom, i, m, !horizontal);
    // The left normal of a->b is (-dy, dx); compare with the ray direction.
    const Point d = b - a;
    const double left_along_ray = horizontal ? d.x() : -d.y();
    if ((left_along_ray > 0) != beyond_inside) std::swap(kept[i].first, kept[i].second);
  }

  // Outgoing edges per vertex, walked by sharpest left turn.
  std::map<Key, std::vector<std::size_t>> out_edges;
  for (std::size_t i = 0; i < kept.size(); ++i) out_edges[kept[i].first].push_back(i);
  std::vector<char> used(kept.size(), 0);
  auto angle = [&](std::size_t e) {
    const Point d = point_of(kept[e].second) - point_of(kept[e].first);
    return std::atan2(d.y(), d.x());
  };

  std::vector<Ring> loops;
  for (std::size_t start = 0; start < kept.size(); ++start) {
    if (used[start]) continue;
    std::vector<Key> walk;
    std::size_t e = start;
    while (!used[e]) {
      used[e] = 1;
      walk.push_back(kept[e].first);
      const Key v = kept[e].second;
      const double back = angle(e) + M_PI;
      std::size_t best = e;
      double best_turn = 10.0;
      for (std::size_t cand : out_edges[v]) {
        if (used[cand]) continue;
        double cw = back - angle(cand);  // clockwise sweep from the reversed incoming edge
        while (cw <= 1e-12) cw += 2 * M_PI;
        while (cw > 2 * M_PI + 1e-12) cw -= 2 * M_PI;
        if (cw < best_turn) {
          best_turn = cw;
          best = cand;
        }
      }
      if (best == e) break;
      e = best;
    }
    // Split the closed walk into simple loops at repeated vertices.
    std::vector<Key> stack;
    std::map<Key, std::size_t> pos;
    for (const Key& k : walk) {
      auto it = pos.find(k);
      if (it != pos.end()) {
        Ring loop;
        for (std::size_t j = it->second; j < stack.size(); ++j) {
          loop.push_back(point_of(stack[j]));
          pos.erase(stack[j]);
        }
        stack.resize(it->second);
        loops.push_back(std::move(loop));
      }
      pos[k] = stack.size();
      stack.push_back(k);
    }
    Ring rest;
    for (const Key& k : stack) rest.push_back(point_of(k));
    loops.push_back(std::move(rest));
  }

  // The sharpest-left walk lists vertices in the math (y-up) sense, where the
  // interior is on the left; positive loops are shells and negative loops holes.
  std::vector<PolygonWithHoles> shells;
  std::vector<Ring> holes;
  for (auto& loop : loops) {
    const double a = signed_area(loop);
    if (loop.size() < 3 || a == 0.0) continue;
    if (a > 0)
      shells.push_back({std::move(loop), {}});
    else
      holes.push_back(std::move(loop));
  }
  if (shells.empty()) throw UnrepairableGeometry("repair: polygon has no area");

  for (auto& h : holes) {
    const Point probe = 0.5 * (h[0] + h[1]);
    PolygonWithHoles* owner = nullptr;
    double owner_area = 0;
    for (auto& s : shells) {
      const double a = signed_area(s.shell);
      if (ring_contains(s.shell, probe) && (!owner || a < owner_area)) {
        owner = &s;
        owner_area = a;
      }
    }
    if (owner) owner->holes.push_back(std::move(h));
  }
  std::stable_sort(shells.begin(), shells.end(), [](const PolygonWithHoles& a, const PolygonWithHoles& b) {
    return polygon_area(a) > polygon_area(b);
  });
  return shells;
}

}  // namespace fragseg
