#include <cstdint>
#include <functional>
#include <vector>

#include "fragseg/geometry.hpp"

namespace fragseg {

namespace {

struct Component {
  bool foreground = false;
  Index first_y = 0, first_x = 0;  // first pixel in raster order (padded coordinates)
  int parent = -1;
  std::vector<int> children;
};

// Labels every pixel of the padded canvas: foreground 8-connected, background 4-connected.
// Component 0 is the background touching the padding border.
Image<std::int32_t> label_all(const Mask& padded, std::vector<Component>& comps) {
  const Index h = padded.rows(), w = padded.cols();
  Image<std::int32_t> labels = Image<std::int32_t>::Constant(h, w, -1);
  std::vector<std::pair<Index, Index>> stack;
  for (Index y = 0; y < h; ++y) {
    for (Index x = 0; x < w; ++x) {
      if (labels(y, x) >= 0) continue;
      const bool fg = padded(y, x);
      const auto id = static_cast<std::int32_t>(comps.size());
      Component c;
      c.foreground = fg;
      c.first_y = y;
      c.first_x = x;
      if (id > 0) c.parent = labels(y, x - 1);
      comps.push_back(c);
      labels(y, x) = id;
      stack.emplace_back(y, x);
      while (!stack.empty()) {
        const auto [cy, cx] = stack.back();
        stack.pop_back();
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if ((dx == 0 && dy == 0) || (!fg && dx != 0 && dy != 0)) continue;
            const Index ny = cy + dy, nx = cx + dx;
            if (ny < 0 || nx < 0 || ny >= h || nx >= w) continue;
            if (labels(ny, nx) < 0 && padded(ny, nx) == fg) {
              labels(ny, nx) = id;
              stack.emplace_back(ny, nx);
            }
          }
        }
      }
    }
  }
  return labels;
}

// Crack-boundary walk with component `id` kept on the right-hand side of travel.
Ring trace_border(const Image<std::int32_t>& labels, std::int32_t id, bool eight_connected, Index y0, Index x0) {
  using V = Eigen::Matrix<Index, 2, 1>;  // (x, y)
  auto is_x = [&](const V& p) { return labels(p.y(), p.x()) == id; };
  const V up(0, -1);
  const V start(x0, y0 + 1);
  V v = start, d = up;
  Ring ring;
  for (;;) {
    v += d;
    const V r(-d.y(), d.x());
    const V ar = v + (d + r - V(1, 1)) / 2;
    const V al = v + (d - r - V(1, 1)) / 2;
    const bool in_ar = is_x(ar), in_al = is_x(al);
    const V left(d.y(), -d.x());
    V nd;
    if (in_ar && in_al) nd = left;
    else if (in_ar) nd = d;
    else if (in_al) nd = eight_connected ? left : r;
    else nd = r;
    if (nd != d) ring.emplace_back(static_cast<double>(v.x() - 1), static_cast<double>(v.y() - 1));
    if (v == start && nd == up) break;
    d = nd;
  }
  return ring;
}

}  // namespace

std::vector<ContourNode> trace_contours(const Mask& m) {
  Mask padded = Mask::Zero(m.rows() + 2, m.cols() + 2);
  padded.block(1, 1, m.rows(), m.cols()) = m;
  std::vector<Component> comps;
  const Image<std::int32_t> labels = label_all(padded, comps);
  for (std::size_t i = 1; i < comps.size(); ++i)
    comps[static_cast<std::size_t>(comps[i].parent)].children.push_back(static_cast<int>(i));

  std::function<ContourNode(int, int)> build = [&](int id, int depth) {
    const Component& c = comps[static_cast<std::size_t>(id)];
    ContourNode node;
    node.depth = depth;
    node.ring = trace_border(labels, id, c.foreground, c.first_y, c.first_x);
    for (int child : c.children) node.children.push_back(build(child, depth + 1));
    return node;
  };

  std::vector<ContourNode> forest;
  for (int child : comps.front().children) forest.push_back(build(child, 0));
  return forest;
}

namespace {

void collect(const ContourNode& shell_node, std::vector<PolygonWithHoles>& out) {
  PolygonWithHoles p;
  p.shell = shell_node.ring;
  for (const auto& hole : shell_node.children) p.holes.emplace_back(hole.ring.rbegin(), hole.ring.rend());
  out.push_back(std::move(p));
  for (const auto& hole : shell_node.children)
    for (const auto& island : hole.children) collect(island, out);
}

}  // namespace

std::vector<PolygonWithHoles> forest_to_polygons(const std::vector<ContourNode>& forest) {
  std::vector<PolygonWithHoles> out;
  for (const auto& root : forest) collect(root, out);
  return out;
}

}  // namespace fragseg
