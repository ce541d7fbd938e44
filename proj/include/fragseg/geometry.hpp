#pragma once

#include <Eigen/Core>

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fragseg/image.hpp"

namespace fragseg {

using Point = Eigen::Vector2d;

/// Implicitly closed ring: the first point is not repeated in storage.
/// Coordinates are pixel-corner (crack) coordinates: pixel (x, y) covers [x, x+1) x [y, y+1).
using Ring = std::vector<Point>;

/// Shell has positive signed area (counter-clockwise in the x-right/y-up convention);
/// holes have negative signed area.
struct PolygonWithHoles {
  Ring shell;
  std::vector<Ring> holes;

  bool operator==(const PolygonWithHoles&) const = default;
};

struct BoundingBox2i {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // half-open pixel range [x0, x1) x [y0, y1)
  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  bool empty() const { return x1 <= x0 || y1 <= y0; }
};

/// Shoelace signed area; positive for counter-clockwise rings.
double signed_area(const Ring& ring);
double ring_perimeter(const Ring& ring);

/// |area(shell)| - sum |area(holes)|.
double polygon_area(const PolygonWithHoles& p);

/// Smallest pixel box containing every pixel whose centre may fall inside `p`.
BoundingBox2i pixel_bounds(const PolygonWithHoles& p);

/// Reverses rings as needed so the shell is positive and holes negative.
PolygonWithHoles normalize_orientation(PolygonWithHoles p);

/// Removes consecutive duplicate points (including the wrap-around pair).
Ring remove_duplicate_points(const Ring& ring);

// ---------------------------------------------------------------------------
// Validity

enum class ViolationKind {
  self_intersection,
  hole_outside_shell,
  overlapping_holes,
  bad_orientation,
  degenerate_ring,
};

const char* to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  Point location;
};

/// Empty iff `p` is a valid polygon: simple rings, holes inside the shell,
/// holes pairwise interior-disjoint (point touches allowed) and oriented as documented.
std::vector<Violation> validate(const PolygonWithHoles& p);

/// Rebuilds `p` as valid polygons covering exactly its even-odd area.
/// Throws UnrepairableGeometry if no area remains.
std::vector<PolygonWithHoles> repair(const PolygonWithHoles& p);

// ---------------------------------------------------------------------------
// Rasterisation (even-odd, pixel-centre sampling at (x + 0.5, y + 0.5))

Mask rasterize(const PolygonWithHoles& p, Index width, Index height);
Mask rasterize(std::span<const PolygonWithHoles> polys, Index width, Index height);

/// Rasterises into the polygon's own pixel bounds; `box` receives the bounds used.
Mask rasterize_local(const PolygonWithHoles& p, BoundingBox2i& box);

/// Even-odd containment of `pt` with respect to all rings of `p`.
bool contains(const PolygonWithHoles& p, const Point& pt);
bool ring_contains(const Ring& ring, const Point& pt);

// ---------------------------------------------------------------------------
// Contours

struct ContourNode {
  Ring ring;
  int depth = 0;  // 0 = outermost foreground border
  std::vector<ContourNode> children;
};

/// Border following over 8-connected foreground / 4-connected background.
/// Roots are the outer borders of foreground components not enclosed by any other
/// component, in raster order of their topmost-leftmost pixel.
std::vector<ContourNode> trace_contours(const Mask& m);

/// Depth-even nodes become shells, their depth-odd children holes; islands inside
/// holes become independent polygons.
std::vector<PolygonWithHoles> forest_to_polygons(const std::vector<ContourNode>& forest);

// ---------------------------------------------------------------------------
// WKT

std::string to_wkt(const PolygonWithHoles& p);

/// Parses POLYGON or MULTIPOLYGON text. Throws WktParseError with a character offset.
std::vector<PolygonWithHoles> from_wkt(std::string_view text);

/// Parses text that must contain exactly one polygon.
PolygonWithHoles polygon_from_wkt(std::string_view text);

}  // namespace fragseg
