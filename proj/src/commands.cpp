#include "fragseg/commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "fragseg/config.hpp"
#include "fragseg/eval.hpp"
#include "fragseg/io.hpp"
#include "fragseg/pipeline.hpp"
#include "fragseg/synth.hpp"

namespace fragseg::cli {

namespace fs = std::filesystem;

std::uint64_t set_seed(std::uint64_t global_seed, const std::string& set_id) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](unsigned char b) {
    h ^= b;
    h *= 0x100000001b3ULL;
  };
  for (int i = 0; i < 8; ++i) mix(static_cast<unsigned char>(global_seed >> (8 * i)));
  for (char c : set_id) mix(static_cast<unsigned char>(c));
  return h;
}

int resolve_jobs(int requested) {
  if (const char* env = std::getenv("FRAGSEG_JOBS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  return std::max(1, requested);
}

namespace {

std::string read_text(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw MissingFile("cannot open " + p.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
  std::error_code ec;
  if (p.has_parent_path()) fs::create_directories(p.parent_path(), ec);
  std::ofstream f(p, std::ios::binary);
  f << text;
  f.close();
  if (!f) throw IoError("cannot write " + p.string());
}

std::vector<PolygonWithHoles> read_wkt_files(const std::vector<fs::path>& paths) {
  std::vector<PolygonWithHoles> out;
  for (const auto& p : paths) {
    try {
      for (auto& poly : from_wkt(read_text(p))) out.push_back(std::move(poly));
    } catch (const WktParseError& e) {
      throw WktParseError(e.what(), e.offset(), p.string());
    }
  }
  return out;
}

std::vector<fs::path> wkt_files_in(const fs::path& dir) {
  std::vector<fs::path> files;
  if (!fs::is_directory(dir)) return files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".wkt") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace

int run_segment(SegmentArgs args) {
  PipelineConfig base;
  if (args.config) base = load_config(*args.config);
  if (args.seed) base.seed = *args.seed;

  std::vector<std::string> sets = args.sets.empty() ? list_image_sets(args.root) : args.sets;
  if (sets.empty()) {
    std::cerr << "segment: no image sets under " << args.root << "\n";
    return 1;
  }
  const int jobs = std::min<int>(resolve_jobs(args.jobs), static_cast<int>(sets.size()));

  std::atomic<std::size_t> next{0};
  std::atomic<int> failures{0};
  std::mutex out_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < sets.size(); i = next++) {
      const std::string& id = sets[i];
      const auto t0 = std::chrono::steady_clock::now();
      std::string line;
      try {
        const FragmentImageSet set = load_image_set(args.root, id);
        const BarSet bars = load_bar_boxes(args.boxes / (id + ".json"));
        PipelineConfig cfg = base;
        cfg.seed = set_seed(base.seed, id);
        const SegmentationResult res = segment_fragment(set, bars, cfg);
        emit_outputs(res, set, args.out / id);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::ostringstream ss;
        ss << id << " polygons=" << res.polygons.size() << " inliers=" << res.alignment.inlier_count
           << " extractor=" << res.alignment.extractor << " tolerance=" << res.alignment.tolerance;
        for (Flag f : res.flags) ss << " " << to_string(f);
        ss << " seconds=" << secs << "\n";
        line = ss.str();
      } catch (const std::exception& e) {
        ++failures;
        line = id + " FAILED: " + e.what() + "\n";
        nlohmann::ordered_json log;
        log["set"] = id;
        log["error"] = e.what();
        try {
          write_text(args.out / id / "log.json", log.dump(2) + "\n");
        } catch (const std::exception&) {
        }
      }
      std::lock_guard lock(out_mutex);
      std::cout << line << std::flush;
    }
  };
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return failures == 0 ? 0 : 1;
}

int run_align(const AlignArgs& args) {
  PipelineConfig cfg;
  if (args.config) cfg = load_config(*args.config);
  FragmentImageSet set = load_image_set(args.root, args.set);
  RasterGray8 recto = set.recto_ir, verso = set.verso_ir;
  if (args.boxes) {
    const fs::path file = fs::is_directory(*args.boxes) ? *args.boxes / (args.set + ".json") : *args.boxes;
    const BarSet bars = load_bar_boxes(file);
    const int pad = resolve_params(cfg, set.ppi).bar_pad;
    recto = mask_out(recto, bars_to_mask(bars.recto, recto.cols(), recto.rows(), pad));
    verso = mask_out(verso, bars_to_mask(bars.verso, verso.cols(), verso.rows(), pad));
  }
  const AlignmentResult a = sweep_alignment(recto, flip_horizontal(verso), sweep_options(cfg));
  if (args.out)
    write_text(*args.out, alignment_json(a));
  else
    std::cout << alignment_json(a);
  if (args.table) write_text(*args.table, sweep_csv(a));
  return 0;
}

int run_overlay(const OverlayArgs& args) {
  std::vector<fs::path> files;
  for (const auto& p : args.wkt) {
    if (fs::is_directory(p)) {
      for (auto& f : wkt_files_in(p)) files.push_back(f);
    } else {
      files.push_back(p);
    }
  }
  const RasterRGB img = io::read_rgb(args.image);
  io::write_png(args.out, draw_overlay(img, read_wkt_files(files)));
  return 0;
}

namespace {

std::optional<std::pair<Index, Index>> dims_from_log(const fs::path& log) {
  if (!fs::exists(log)) return std::nullopt;
  try {
    const auto j = nlohmann::json::parse(read_text(log));
    if (j.contains("width") && j.contains("height")) return std::make_pair(j["width"].get<Index>(), j["height"].get<Index>());
  } catch (const nlohmann::json::exception&) {
  }
  return std::nullopt;
}

std::pair<Index, Index> dims_from_image(const fs::path& gt_root, const std::string& id) {
  const auto paths = find_image_set(gt_root, id);
  const RasterGray8 img = io::read_gray8(paths.recto_color);
  return {img.cols(), img.rows()};
}

}  // namespace

int run_eval(const EvalArgs& args) {
  // Evaluated ids: every ground-truth set; predictions missing for a set count as empty.
  std::vector<std::string> ids;
  for (const auto& e : fs::directory_iterator(args.gt)) {
    if (!e.is_directory()) continue;
    if (!wkt_files_in(e.path() / "gt").empty()) ids.push_back(e.path().filename().string());
  }
  std::sort(ids.begin(), ids.end());
  if (ids.empty()) {
    std::cerr << "eval: no ground truth under " << args.gt << "\n";
    return 1;
  }

  std::vector<ImageReport> rows;
  for (const auto& id : ids) {
    const fs::path pred_dir = args.pred / id;
    const auto pred = read_wkt_files(wkt_files_in(pred_dir));
    const auto gt = read_wkt_files(wkt_files_in(args.gt / id / "gt"));
    const auto dims = dims_from_log(pred_dir / "log.json").value_or(dims_from_image(args.gt, id));
    rows.push_back(evaluate_polygons(id, pred, gt, dims.first, dims.second));
  }
  write_report_csv(rows, args.out);
  if (args.json) write_text(*args.json, report_json(rows));
  std::cout << report_csv(rows);
  return 0;
}

int run_synth(const SynthArgs& args) {
  const fs::path boxes = args.boxes.value_or(args.out.parent_path() / "boxes");
  SynthParams p;
  p.size = args.size;
  p.fragments = args.fragments;
  p.seed = args.seed;
  for (int i = 0; i < args.count; ++i) {
    const SyntheticSet s = generate_synthetic_set(p, i);
    write_synthetic_set(s, args.out, boxes);
    std::cout << s.images.id() << "\n";
  }
  return 0;
}

}  // namespace fragseg::cli
