#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "fragseg/image.hpp"

namespace fragseg {

struct ThresholdParams {
  std::uint8_t dark_cap = 50;  // pixels strictly below this are "very dark"
  std::uint8_t buffer = 10;
};

struct ThresholdValue {
  std::uint8_t value = 0;
  bool fallback = false;  // no pixel below dark_cap; value = dark_cap + buffer
};

/// round(mean of pixels < dark_cap) + buffer.
ThresholdValue dynamic_threshold_value(const RasterGray8& img, ThresholdParams p = {});

/// Foreground iff pixel > t.
Mask threshold_mask(const RasterGray8& img, std::uint8_t t);

/// Inclusive channel-wise HSV box.
struct HsvRange {
  std::array<std::uint8_t, 3> lo{0, 0, 100};
  std::array<std::uint8_t, 3> hi{255, 20, 200};
};

Mask hsv_in_range(const RasterHSV& img, const HsvRange& r);

/// Discrete filled ellipse on an odd-sized grid.
struct StructuringElement {
  int width = 21;
  int height = 21;

  /// Default 21x21 footprint scaled by ppi / 1215 and rounded to the nearest odd size.
  static StructuringElement for_ppi(double ppi, int reference_size = 21);

  /// Half-width of the footprint row at vertical offset dy (|dy| <= height / 2).
  std::vector<int> row_half_widths() const;
  Mask footprint() const;
};

// 8-connected component labels: 0 = background, 1..count in raster order of first pixel.
struct ComponentLabels {
  Image<std::int32_t> labels;
  std::vector<std::int64_t> sizes;  // sizes[k] for label k (sizes[0] unused)
  int count = 0;
};

ComponentLabels label_components(const Mask& m, int connectivity = 8);

/// Drops 8-connected components with fewer than min_area pixels.
Mask remove_small_components(const Mask& m, std::int64_t min_area);

// Binary morphology on an unbounded background canvas.
Mask dilate(const Mask& m, const StructuringElement& se);
Mask erode(const Mask& m, const StructuringElement& se);
/// Dilation then erosion, computed on a canvas padded by the element's radius so
/// the result always contains `m`.
Mask morph_close(const Mask& m, const StructuringElement& se);

Mask mask_union(const Mask& a, const Mask& b);
Mask mask_intersect(const Mask& a, const Mask& b);
Mask mask_subtract(const Mask& a, const Mask& b);
Mask complement(const Mask& a);

/// Per side: in-range, prune small components, close; then intersect the two sides.
Mask side_backing_mask(const RasterRGB& color, const HsvRange& range, const StructuringElement& se,
                       std::int64_t min_area);
Mask backing_mask(const RasterRGB& recto_color, const RasterRGB& verso_color_aligned, const HsvRange& range,
                  const StructuringElement& se, std::int64_t min_area);

}  // namespace fragseg
