#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fragseg/bars.hpp"
#include "fragseg/corpus.hpp"
#include "fragseg/geometry.hpp"
#include "fragseg/maskops.hpp"
#include "fragseg/register.hpp"

namespace fragseg {

/// Pixel-denominated fields left unset resolve to their reference value scaled to the set's PPI.
struct PipelineConfig {
  ThresholdParams threshold;
  HsvRange hsv;
  std::optional<StructuringElement> closing_se;   // 21x21 at reference PPI
  std::optional<std::int64_t> pre_close_min_area;  // 100 px at reference PPI
  std::optional<double> final_min_area;            // 1000 px^2 at reference PPI
  std::optional<int> bar_pad;                      // 10 px at reference PPI
  double ratio = 0.80;
  std::vector<int> tolerances = default_tolerances();
  std::vector<std::string> extractors = default_extractors();
  int min_inliers = 10;
  std::uint64_t seed = 0;
  int max_features = 4000;
  int ransac_iters = 2000;
  double min_overlap_fraction = 0.0;
  bool keep_masks = false;
};

struct ResolvedParams {
  StructuringElement closing_se;
  std::int64_t pre_close_min_area = 100;
  double final_min_area = 1000;
  int bar_pad = 10;
};

ResolvedParams resolve_params(const PipelineConfig& cfg, double ppi);
SweepOptions sweep_options(const PipelineConfig& cfg);

enum class Flag { threshold_fallback, low_inliers, empty_output, repair_applied };
const char* to_string(Flag f);

struct StepMasks {
  Mask recto_threshold;
  Mask verso_threshold_aligned;
  Mask fragment;  // union of the two threshold masks
  Mask backing;
  Mask subtracted;
};

struct SegmentationResult {
  std::vector<PolygonWithHoles> polygons;  // recto frame, descending area
  AlignmentResult alignment;
  ThresholdValue recto_threshold, verso_threshold;
  std::vector<Flag> flags;
  std::size_t traced = 0, after_overlap = 0, after_area = 0;
  Index width = 0, height = 0;
  std::optional<StepMasks> masks;

  bool has(Flag f) const;
};

SegmentationResult segment_fragment(const FragmentImageSet& set, const BarSet& bars, const PipelineConfig& cfg);

/// Keeps polygons that cover at least one pixel of each mask (and at least
/// `min_fraction` of their own pixels, when positive).
std::vector<PolygonWithHoles> overlap_filter(std::vector<PolygonWithHoles> polys, const Mask& recto_mask,
                                             const Mask& verso_mask_aligned, double min_fraction = 0.0);

/// Keeps polygons whose area is at least `min_area`.
std::vector<PolygonWithHoles> area_filter(std::vector<PolygonWithHoles> polys, double min_area);

struct ExtractedFragment {
  RasterRGB color;
  RasterGray8 alpha;  // 255 inside the polygon, 0 outside
};

/// Crops to the polygon's pixel bounds; pixels outside the polygon become 0.
/// Throws OutOfBounds if the bounds leave the image.
ExtractedFragment extract_fragment(const RasterRGB& img, const PolygonWithHoles& p);
RasterGray8 extract_fragment(const RasterGray8& img, const PolygonWithHoles& p);

/// Recto colour with each polygon's boundary pixels painted.
RasterRGB draw_overlay(const RasterRGB& img, const std::vector<PolygonWithHoles>& polys,
                       std::array<std::uint8_t, 3> color = {255, 0, 0});

std::string alignment_json(const AlignmentResult& a);
std::string sweep_csv(const AlignmentResult& a);

/// Writes WKT, extracted PNGs, overlay, alignment.json, sweep.csv and log.json under
/// `out_dir`. Returns the written paths.
std::vector<std::filesystem::path> emit_outputs(const SegmentationResult& result, const FragmentImageSet& set,
                                                const std::filesystem::path& out_dir);

}  // namespace fragseg
