#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>

#include "fragseg/errors.hpp"

namespace fragseg {

// Rasters are row-major arrays indexed (y, x): rows() is the height, cols() the width.
template <typename Scalar>
using Image = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using RasterGray8 = Image<std::uint8_t>;
using Mask = Image<bool>;
using Index = Eigen::Index;

/// Three co-registered 8-bit planes. `Tag` keeps RGB and HSV rasters apart at compile time.
template <typename Tag>
struct Raster3 {
  std::array<RasterGray8, 3> planes;

  Raster3() = default;
  Raster3(Index width, Index height) {
    for (auto& p : planes) p = RasterGray8::Zero(height, width);
  }

  Index width() const { return planes[0].cols(); }
  Index height() const { return planes[0].rows(); }
  Index cols() const { return width(); }
  Index rows() const { return height(); }
  bool empty() const { return planes[0].size() == 0; }

  std::array<std::uint8_t, 3> at(Index y, Index x) const {
    return {planes[0](y, x), planes[1](y, x), planes[2](y, x)};
  }
  void set(Index y, Index x, const std::array<std::uint8_t, 3>& px) {
    planes[0](y, x) = px[0];
    planes[1](y, x) = px[1];
    planes[2](y, x) = px[2];
  }

  bool operator==(const Raster3& o) const {
    for (int c = 0; c < 3; ++c) {
      if (planes[c].rows() != o.planes[c].rows() || planes[c].cols() != o.planes[c].cols()) return false;
      if ((planes[c] != o.planes[c]).any()) return false;
    }
    return true;
  }
};

struct RgbTag {};
struct HsvTag {};
using RasterRGB = Raster3<RgbTag>;
using RasterHSV = Raster3<HsvTag>;

template <typename A, typename B>
bool same_dims(const A& a, const B& b) {
  return a.rows() == b.rows() && a.cols() == b.cols();
}

template <typename A, typename B>
void require_same_dims(const A& a, const B& b, const char* what) {
  if (!same_dims(a, b)) throw DimensionMismatch(std::string(what) + ": raster dimensions differ");
}

/// Pixel (x, y) <- source (width - 1 - x, y). Works on any dense raster or mask.
template <typename Derived>
Image<typename Derived::Scalar> flip_horizontal(const Eigen::DenseBase<Derived>& img) {
  return img.rowwise().reverse();
}

template <typename Tag>
Raster3<Tag> flip_horizontal(const Raster3<Tag>& img) {
  Raster3<Tag> out;
  for (int c = 0; c < 3; ++c) out.planes[c] = flip_horizontal(img.planes[c]);
  return out;
}

}  // namespace fragseg
