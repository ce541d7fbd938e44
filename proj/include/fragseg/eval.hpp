#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fragseg/geometry.hpp"
#include "fragseg/image.hpp"

namespace fragseg {

struct Confusion {
  std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::int64_t total() const { return tp + fp + fn + tn; }
  bool operator==(const Confusion&) const = default;
};

struct SegMetrics {
  double iou = 0, precision = 0, recall = 0, f1 = 0, accuracy = 0;
  bool operator==(const SegMetrics&) const = default;
};

/// Throws DimensionMismatch.
Confusion confusion(const Mask& pred, const Mask& gt);

/// A 0/0 ratio is 1 when prediction and ground truth are both empty, else 0.
SegMetrics metrics(const Confusion& c);

/// Field-wise mean. Throws EmptyList.
SegMetrics aggregate(std::span<const SegMetrics> items);

struct ImageReport {
  std::string id;
  Confusion confusion;
  SegMetrics metrics;
};

/// Header `id,iou,precision,recall,f1,accuracy`, one row per image, then `MEAN`. Throws EmptyList.
std::string report_csv(std::span<const ImageReport> rows);
void write_report_csv(std::span<const ImageReport> rows, const std::filesystem::path& out);
std::string report_json(std::span<const ImageReport> rows);

/// Rasterises both polygon sets on a width x height canvas and compares them.
ImageReport evaluate_polygons(const std::string& id, std::span<const PolygonWithHoles> pred,
                              std::span<const PolygonWithHoles> gt, Index width, Index height);

}  // namespace fragseg
