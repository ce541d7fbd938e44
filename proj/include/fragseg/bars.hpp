#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fragseg/image.hpp"

namespace fragseg {

/// Axis-aligned bar or label box, top-left origin, in image pixels.
struct BoundingBox {
  int x = 0, y = 0, w = 0, h = 0;
  double score = 1.0;
  std::string label = "bar";

  bool operator==(const BoundingBox&) const = default;
};

/// Boxes per side; they apply to both the colour and the IR image of that side.
struct BarSet {
  std::vector<BoundingBox> recto;
  std::vector<BoundingBox> verso;

  bool operator==(const BarSet&) const = default;
};

/// `{"recto":[{"x":..,"y":..,"w":..,"h":..,"score":..}],"verso":[...]}`.
BarSet parse_bar_boxes(std::string_view json_text);
BarSet load_bar_boxes(const std::filesystem::path& file);
std::string bar_boxes_to_json(const BarSet& bars);
void save_bar_boxes(const BarSet& bars, const std::filesystem::path& file);

/// Default safety margin: 10 px at the reference density, scaled linearly with ppi.
int default_bar_pad(double ppi);

/// Union of the boxes grown by `pad` on every side, clipped to the image.
Mask bars_to_mask(std::span<const BoundingBox> boxes, Index width, Index height, int pad);

RasterGray8 mask_out(const RasterGray8& img, const Mask& mask, std::uint8_t fill = 0);
RasterRGB mask_out(const RasterRGB& img, const Mask& mask, std::array<std::uint8_t, 3> fill = {0, 0, 0});

}  // namespace fragseg
