#include "fragseg/maskops.hpp"

#include <algorithm>
#include <cmath>

#include "fragseg/corpus.hpp"

namespace fragseg {

ThresholdValue dynamic_threshold_value(const RasterGray8& img, ThresholdParams p) {
  if (int{p.dark_cap} + p.buffer > 255) throw Error("threshold params: dark_cap + buffer exceeds 255");
  std::int64_t sum = 0, count = 0;
  const auto* px = img.data();
  for (Index i = 0; i < img.size(); ++i) {
    if (px[i] < p.dark_cap) {
      sum += px[i];
      ++count;
    }
  }
  if (count == 0) return {static_cast<std::uint8_t>(p.dark_cap + p.buffer), true};
  const std::int64_t mean = (2 * sum + count) / (2 * count);  // round half up
  return {static_cast<std::uint8_t>(std::min<std::int64_t>(255, mean + p.buffer)), false};
}

Mask threshold_mask(const RasterGray8& img, std::uint8_t t) { return img > t; }

Mask hsv_in_range(const RasterHSV& img, const HsvRange& r) {
  Mask m = Mask::Constant(img.height(), img.width(), true);
  for (int c = 0; c < 3; ++c) m = m && (img.planes[c] >= r.lo[c]) && (img.planes[c] <= r.hi[c]);
  return m;
}

// ---------------------------------------------------------------------------

StructuringElement StructuringElement::for_ppi(double ppi, int reference_size) {
  const double scaled = reference_size * ppi / kReferencePpi;
  int size = static_cast<int>(std::lround(scaled));
  if (size % 2 == 0) size += (scaled >= size) ? 1 : -1;
  size = std::max(size, 1);
  return {size, size};
}

std::vector<int> StructuringElement::row_half_widths() const {
  if (width <= 0 || height <= 0 || width % 2 == 0 || height % 2 == 0)
    throw Error("structuring element sides must be odd and positive");
  const int ry = height / 2;
  const double a = width / 2, b = height / 2;
  std::vector<int> hw(static_cast<std::size_t>(height));
  for (int dy = -ry; dy <= ry; ++dy) {
    const double t = b == 0 ? 0.0 : static_cast<double>(dy) / b;
    hw[static_cast<std::size_t>(dy + ry)] = static_cast<int>(std::floor(a * std::sqrt(std::max(0.0, 1 - t * t)) + 0.5));
  }
  return hw;
}

Mask StructuringElement::footprint() const {
  const auto hw = row_half_widths();
  Mask m = Mask::Zero(height, width);
  const int cx = width / 2;
  for (int r = 0; r < height; ++r) m.row(r).segment(cx - hw[r], 2 * hw[r] + 1).setConstant(true);
  return m;
}

// ---------------------------------------------------------------------------

ComponentLabels label_components(const Mask& m, int connectivity) {
  ComponentLabels out;
  const Index h = m.rows(), w = m.cols();
  out.labels = Image<std::int32_t>::Zero(h, w);
  out.sizes.push_back(0);
  std::vector<std::pair<Index, Index>> stack;
  for (Index y = 0; y < h; ++y) {
    for (Index x = 0; x < w; ++x) {
      if (!m(y, x) || out.labels(y, x) != 0) continue;
      const std::int32_t label = ++out.count;
      std::int64_t size = 0;
      out.labels(y, x) = label;
      stack.emplace_back(y, x);
      while (!stack.empty()) {
        const auto [cy, cx] = stack.back();
        stack.pop_back();
        ++size;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if ((dx == 0 && dy == 0) || (connectivity == 4 && dx != 0 && dy != 0)) continue;
            const Index ny = cy + dy, nx = cx + dx;
            if (ny < 0 || nx < 0 || ny >= h || nx >= w) continue;
            if (m(ny, nx) && out.labels(ny, nx) == 0) {
              out.labels(ny, nx) = label;
              stack.emplace_back(ny, nx);
            }
          }
        }
      }
      out.sizes.push_back(size);
    }
  }
  return out;
}

Mask remove_small_components(const Mask& m, std::int64_t min_area) {
  if (min_area < 0) throw Error("remove_small_components: min_area must be non-negative");
  if (min_area <= 1) return m;
  const ComponentLabels cl = label_components(m, 8);
  std::vector<char> keep(cl.sizes.size(), 0);
  for (std::size_t k = 1; k < cl.sizes.size(); ++k) keep[k] = cl.sizes[k] >= min_area;
  return cl.labels.unaryExpr([&](std::int32_t l) { return l != 0 && keep[static_cast<std::size_t>(l)] != 0; });
}

// ---------------------------------------------------------------------------

namespace {

// Row-decomposed morphology: the ellipse is a stack of centred horizontal runs, so
// each output pixel checks one run per footprint row via row prefix counts.
Mask morph(const Mask& m, const StructuringElement& se, bool dilation) {
  const auto hw = se.row_half_widths();
  const int ry = se.height / 2;
  const Index h = m.rows(), w = m.cols();

  Image<std::int32_t> prefix(h, w + 1);
  for (Index y = 0; y < h; ++y) {
    prefix(y, 0) = 0;
    for (Index x = 0; x < w; ++x) prefix(y, x + 1) = prefix(y, x) + (m(y, x) ? 1 : 0);
  }

  Mask out(h, w);
  for (Index y = 0; y < h; ++y) {
    for (Index x = 0; x < w; ++x) {
      bool v = !dilation;
      for (int dy = -ry; dy <= ry; ++dy) {
        const int k = hw[static_cast<std::size_t>(dy + ry)];
        const Index sy = y + dy;
        const Index x0 = x - k, x1 = x + k + 1;
        if (sy < 0 || sy >= h || x0 < 0 || x1 > w) {
          // Part of the run lies outside: background there.
          if (!dilation) {
            v = false;
            break;
          }
          if (sy < 0 || sy >= h) continue;
        }
        const Index cx0 = std::max<Index>(x0, 0), cx1 = std::min<Index>(x1, w);
        const std::int32_t count = prefix(sy, cx1) - prefix(sy, cx0);
        if (dilation && count > 0) {
          v = true;
          break;
        }
        if (!dilation && count != cx1 - cx0) {
          v = false;
          break;
        }
      }
      out(y, x) = v;
    }
  }
  return out;
}

}  // namespace

Mask dilate(const Mask& m, const StructuringElement& se) { return morph(m, se, true); }

Mask erode(const Mask& m, const StructuringElement& se) { return morph(m, se, false); }

Mask morph_close(const Mask& m, const StructuringElement& se) {
  const Index px = se.width / 2, py = se.height / 2;
  Mask padded = Mask::Zero(m.rows() + 2 * py, m.cols() + 2 * px);
  padded.block(py, px, m.rows(), m.cols()) = m;
  const Mask closed = erode(dilate(padded, se), se);
  return closed.block(py, px, m.rows(), m.cols());
}

// ---------------------------------------------------------------------------

Mask mask_union(const Mask& a, const Mask& b) {
  require_same_dims(a, b, "mask_union");
  return a || b;
}

Mask mask_intersect(const Mask& a, const Mask& b) {
  require_same_dims(a, b, "mask_intersect");
  return a && b;
}

Mask mask_subtract(const Mask& a, const Mask& b) {
  require_same_dims(a, b, "mask_subtract");
  return a && !b;
}

Mask complement(const Mask& a) { return !a; }

Mask side_backing_mask(const RasterRGB& color, const HsvRange& range, const StructuringElement& se,
                       std::int64_t min_area) {
  return morph_close(remove_small_components(hsv_in_range(rgb_to_hsv(color), range), min_area), se);
}

Mask backing_mask(const RasterRGB& recto_color, const RasterRGB& verso_color_aligned, const HsvRange& range,
                  const StructuringElement& se, std::int64_t min_area) {
  require_same_dims(recto_color, verso_color_aligned, "backing_mask");
  return mask_intersect(side_backing_mask(recto_color, range, se, min_area),
                        side_backing_mask(verso_color_aligned, range, se, min_area));
}

}  // namespace fragseg
