#include "fragseg/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "fragseg/io.hpp"

namespace fragseg {

namespace {

double ppi_ratio(double ppi) { return ppi / kReferencePpi; }

void add_flag(std::vector<Flag>& flags, Flag f) {
  if (std::find(flags.begin(), flags.end(), f) == flags.end()) flags.push_back(f);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream f(path, std::ios::binary);
  f << text;
  f.close();
  if (!f) throw IoError("cannot write " + path.string());
}

}  // namespace

ResolvedParams resolve_params(const PipelineConfig& cfg, double ppi) {
  if (!(ppi > 0)) throw Error("ppi must be positive");
  const double r = ppi_ratio(ppi);
  ResolvedParams p;
  p.closing_se = cfg.closing_se.value_or(StructuringElement::for_ppi(ppi));
  p.pre_close_min_area = cfg.pre_close_min_area.value_or(std::llround(100.0 * r * r));
  p.final_min_area = cfg.final_min_area.value_or(1000.0 * r * r);
  p.bar_pad = cfg.bar_pad.value_or(default_bar_pad(ppi));
  return p;
}

SweepOptions sweep_options(const PipelineConfig& cfg) {
  SweepOptions o;
  o.extractors = cfg.extractors;
  o.tolerances = cfg.tolerances;
  o.ratio = cfg.ratio;
  o.min_inliers = cfg.min_inliers;
  o.max_features = cfg.max_features;
  o.ransac_iters = cfg.ransac_iters;
  o.seed = cfg.seed;
  return o;
}

const char* to_string(Flag f) {
  switch (f) {
    case Flag::threshold_fallback: return "threshold_fallback";
    case Flag::low_inliers: return "low_inliers";
    case Flag::empty_output: return "empty_output";
    case Flag::repair_applied: return "repair_applied";
  }
  return "unknown";
}

bool SegmentationResult::has(Flag f) const { return std::find(flags.begin(), flags.end(), f) != flags.end(); }

// ---------------------------------------------------------------------------

SegmentationResult segment_fragment(const FragmentImageSet& set, const BarSet& bars, const PipelineConfig& cfg) {
  check_image_set(set);
  const ResolvedParams rp = resolve_params(cfg, set.ppi);
  const Index w = set.recto_ir.cols(), h = set.recto_ir.rows();
  const Index vw = set.verso_ir.cols(), vh = set.verso_ir.rows();

  SegmentationResult res;
  res.width = w;
  res.height = h;

  // 1. Mask the calibration bars on each side (boxes are in each side's own frame).
  const Mask recto_bars = bars_to_mask(bars.recto, w, h, rp.bar_pad);
  const Mask verso_bars = bars_to_mask(bars.verso, vw, vh, rp.bar_pad);
  const RasterGray8 recto_ir = mask_out(set.recto_ir, recto_bars);
  const RasterRGB recto_color = mask_out(set.recto_color, recto_bars);
  const RasterGray8 verso_ir = flip_horizontal(mask_out(set.verso_ir, verso_bars));
  const RasterRGB verso_color = flip_horizontal(mask_out(set.verso_color, verso_bars));

  // 2. Align the flipped verso to the recto on the IR images.
  res.alignment = sweep_alignment(recto_ir, verso_ir, sweep_options(cfg));
  const AffineTransform& t = res.alignment.transform;
  if (res.alignment.inlier_count < 2 * cfg.min_inliers) add_flag(res.flags, Flag::low_inliers);

  // 3. Dynamic thresholds; the verso mask is carried into the recto frame.
  res.recto_threshold = dynamic_threshold_value(recto_ir, cfg.threshold);
  res.verso_threshold = dynamic_threshold_value(verso_ir, cfg.threshold);
  if (res.recto_threshold.fallback || res.verso_threshold.fallback) add_flag(res.flags, Flag::threshold_fallback);
  Mask recto_thr = threshold_mask(recto_ir, res.recto_threshold.value);
  Mask verso_thr = warp(threshold_mask(verso_ir, res.verso_threshold.value), t, w, h);

  // 4. Maximal fragment mask.
  Mask fragment = mask_union(recto_thr, verso_thr);

  // 5. Backing substrate seen on both sides.
  Mask backing = backing_mask(recto_color, warp(verso_color, t, w, h), cfg.hsv, rp.closing_se, rp.pre_close_min_area);

  // 6. Remove the substrate.
  Mask subtracted = mask_subtract(fragment, backing);

  // 7. Vectorise and repair.
  std::vector<PolygonWithHoles> polys;
  for (auto& p : forest_to_polygons(trace_contours(subtracted))) {
    if (validate(p).empty()) {
      polys.push_back(std::move(p));
      continue;
    }
    add_flag(res.flags, Flag::repair_applied);
    try {
      for (auto& q : repair(p)) polys.push_back(std::move(q));
    } catch (const UnrepairableGeometry&) {
    }
  }
  res.traced = polys.size();

  // 8-9. Filters.
  polys = overlap_filter(std::move(polys), recto_thr, verso_thr, cfg.min_overlap_fraction);
  res.after_overlap = polys.size();
  polys = area_filter(std::move(polys), rp.final_min_area);
  res.after_area = polys.size();

  std::stable_sort(polys.begin(), polys.end(), [](const PolygonWithHoles& a, const PolygonWithHoles& b) {
    return polygon_area(a) > polygon_area(b);
  });
  res.polygons = std::move(polys);
  if (res.polygons.empty()) add_flag(res.flags, Flag::empty_output);

  if (cfg.keep_masks) {
    res.masks = StepMasks{std::move(recto_thr), std::move(verso_thr), std::move(fragment), std::move(backing),
                          std::move(subtracted)};
  }
  return res;
}

std::vector<PolygonWithHoles> overlap_filter(std::vector<PolygonWithHoles> polys, const Mask& recto_mask,
                                             const Mask& verso_mask_aligned, double min_fraction) {
  require_same_dims(recto_mask, verso_mask_aligned, "overlap_filter");
  const Index w = recto_mask.cols(), h = recto_mask.rows();
  std::vector<PolygonWithHoles> kept;
  for (auto& p : polys) {
    BoundingBox2i box;
    const Mask local = rasterize_local(p, box);
    // Clip the local raster to the mask extent.
    const int x0 = std::max(box.x0, 0), y0 = std::max(box.y0, 0);
    const int x1 = std::min<int>(box.x1, static_cast<int>(w)), y1 = std::min<int>(box.y1, static_cast<int>(h));
    if (x1 <= x0 || y1 <= y0) continue;
    const auto inside = local.block(y0 - box.y0, x0 - box.x0, y1 - y0, x1 - x0);
    const auto recto = recto_mask.block(y0, x0, y1 - y0, x1 - x0);
    const auto verso = verso_mask_aligned.block(y0, x0, y1 - y0, x1 - x0);
    const Index na = (inside && recto).count();
    const Index nb = (inside && verso).count();
    const double need = std::max(1.0, min_fraction * static_cast<double>(local.count()));
    if (static_cast<double>(na) >= need && static_cast<double>(nb) >= need) kept.push_back(std::move(p));
  }
  return kept;
}

std::vector<PolygonWithHoles> area_filter(std::vector<PolygonWithHoles> polys, double min_area) {
  if (min_area < 0) throw Error("area_filter: min_area must be non-negative");
  std::vector<PolygonWithHoles> kept;
  for (auto& p : polys)
    if (polygon_area(p) >= min_area) kept.push_back(std::move(p));
  return kept;
}

// ---------------------------------------------------------------------------

namespace {

BoundingBox2i checked_bounds(const PolygonWithHoles& p, Index w, Index h) {
  const BoundingBox2i box = pixel_bounds(p);
  if (box.empty() || box.x0 < 0 || box.y0 < 0 || box.x1 > w || box.y1 > h)
    throw OutOfBounds("polygon bounds leave the image");
  return box;
}

}  // namespace

ExtractedFragment extract_fragment(const RasterRGB& img, const PolygonWithHoles& p) {
  const BoundingBox2i box = checked_bounds(p, img.width(), img.height());
  BoundingBox2i local_box;
  const Mask inside = rasterize_local(p, local_box);
  ExtractedFragment out;
  for (int c = 0; c < 3; ++c) {
    const RasterGray8 crop = img.planes[c].block(box.y0, box.x0, box.height(), box.width());
    out.color.planes[c] = inside.select(crop, RasterGray8::Zero(crop.rows(), crop.cols()));
  }
  out.alpha = inside.cast<std::uint8_t>() * std::uint8_t{255};
  return out;
}

RasterGray8 extract_fragment(const RasterGray8& img, const PolygonWithHoles& p) {
  const BoundingBox2i box = checked_bounds(p, img.cols(), img.rows());
  BoundingBox2i local_box;
  const Mask inside = rasterize_local(p, local_box);
  const RasterGray8 crop = img.block(box.y0, box.x0, box.height(), box.width());
  return inside.select(crop, RasterGray8::Zero(crop.rows(), crop.cols()));
}

RasterRGB draw_overlay(const RasterRGB& img, const std::vector<PolygonWithHoles>& polys,
                       std::array<std::uint8_t, 3> color) {
  RasterRGB out = img;
  const Index w = img.width(), h = img.height();
  for (const auto& p : polys) {
    BoundingBox2i box;
    const Mask m = rasterize_local(p, box);
    for (Index y = 0; y < m.rows(); ++y) {
      for (Index x = 0; x < m.cols(); ++x) {
        if (!m(y, x)) continue;
        const bool edge = y == 0 || x == 0 || y + 1 == m.rows() || x + 1 == m.cols() || !m(y - 1, x) ||
                          !m(y + 1, x) || !m(y, x - 1) || !m(y, x + 1);
        const Index gy = y + box.y0, gx = x + box.x0;
        if (edge && gy >= 0 && gx >= 0 && gy < h && gx < w) out.set(gy, gx, color);
      }
    }
  }
  return out;
}

std::string alignment_json(const AlignmentResult& a) {
  const auto& t = a.transform;
  nlohmann::ordered_json j;
  j["matrix"] = {{t(0, 0), t(0, 1), t(0, 2)}, {t(1, 0), t(1, 1), t(1, 2)}};
  j["inliers"] = a.inlier_count;
  j["extractor"] = a.extractor;
  j["tolerance"] = a.tolerance;
  return j.dump(2) + "\n";
}

std::string sweep_csv(const AlignmentResult& a) {
  std::string out = "extractor,tolerance,inliers,matches,eligible\n";
  for (const auto& e : a.table) {
    out += e.extractor + "," + std::to_string(e.tolerance) + "," + std::to_string(e.inliers) + "," +
           std::to_string(e.total_matches) + "," + (e.eligible ? "1" : "0") + "\n";
  }
  return out;
}

std::vector<std::filesystem::path> emit_outputs(const SegmentationResult& result, const FragmentImageSet& set,
                                                const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  std::vector<std::filesystem::path> manifest;
  const std::string id = set.id();
  for (std::size_t k = 0; k < result.polygons.size(); ++k) {
    const auto& p = result.polygons[k];
    const std::string stem = id + "_" + std::to_string(k + 1);
    write_text(out_dir / (stem + ".wkt"), to_wkt(p) + "\n");
    manifest.push_back(out_dir / (stem + ".wkt"));
    const ExtractedFragment frag = extract_fragment(set.recto_color, p);
    io::write_png(out_dir / (stem + ".png"), frag.color, frag.alpha);
    manifest.push_back(out_dir / (stem + ".png"));
  }

  io::write_png(out_dir / (id + "_overlay.png"), draw_overlay(set.recto_color, result.polygons));
  manifest.push_back(out_dir / (id + "_overlay.png"));
  write_text(out_dir / "alignment.json", alignment_json(result.alignment));
  manifest.push_back(out_dir / "alignment.json");
  write_text(out_dir / "sweep.csv", sweep_csv(result.alignment));
  manifest.push_back(out_dir / "sweep.csv");

  nlohmann::ordered_json log;
  log["set"] = id;
  log["flags"] = nlohmann::json::array();
  for (Flag f : result.flags) log["flags"].push_back(to_string(f));
  log["width"] = result.width;
  log["height"] = result.height;
  log["polygons"] = result.polygons.size();
  log["threshold"] = {{"recto", result.recto_threshold.value}, {"verso", result.verso_threshold.value}};
  log["counts"] = {{"traced", result.traced}, {"after_overlap", result.after_overlap}, {"after_area", result.after_area}};
  log["alignment"] = {{"extractor", result.alignment.extractor},
                      {"tolerance", result.alignment.tolerance},
                      {"inliers", result.alignment.inlier_count}};
  write_text(out_dir / "log.json", log.dump(2) + "\n");
  manifest.push_back(out_dir / "log.json");
  return manifest;
}

}  // namespace fragseg
