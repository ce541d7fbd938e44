// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: fragseg_acceptance [workdir] [--only name]...

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fragseg/bars.hpp"
#include "fragseg/eval.hpp"
#include "fragseg/geometry.hpp"
#include "fragseg/maskops.hpp"
#include "fragseg/pipeline.hpp"
#include "fragseg/register.hpp"
#include "fragseg/synth.hpp"

namespace fs = std::filesystem;
using namespace fragseg;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream ss;
  ss.setf(std::ios::fixed);
  ss.precision(digits);
  ss << v;
  return ss.str();
}

std::string capture(const std::string& cmd, int& status) {
  std::string out;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) {
    status = -1;
    return out;
  }
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) out += buf;
  const int raw = pclose(pipe);
  status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) parts.push_back(cur);
  return parts;
}

Mask random_mask(std::mt19937_64& rng, Index w, Index h, double density) {
  std::bernoulli_distribution on(density);
  Mask m(h, w);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = on(rng);
  return m;
}

bool equal(const Mask& a, const Mask& b) { return same_dims(a, b) && (a == b).all(); }

// ---------------------------------------------------------------------------

Outcome synthetic_end_to_end(const fs::path& work) {
  const fs::path sets = work / "sets", boxes = work / "boxes", out = work / "out", report = work / "report.csv";
  fs::remove_all(work);
  fs::create_directories(work);
  const std::string cli = FRAGSEG_CLI;
  int status = 0;
  capture(cli + " synth --out " + sets.string() + " --boxes " + boxes.string() + " --count 20 --size 2000 --seed 0",
          status);
  if (status != 0) return {false, "synth exited with " + std::to_string(status)};
  const std::string seg =
      capture(cli + " segment --jobs 1 --root " + sets.string() + " --boxes " + boxes.string() + " --out " +
                  out.string(),
              status);
  if (status != 0) return {false, "segment exited with " + std::to_string(status) + ": " + seg};
  double max_secs = 0;
  int timed = 0;
  for (const auto& line : split(seg, '\n')) {
    const auto pos = line.find("seconds=");
    if (pos == std::string::npos) continue;
    max_secs = std::max(max_secs, std::stod(line.substr(pos + 8)));
    ++timed;
  }
  capture(cli + " eval --pred " + out.string() + " --gt " + sets.string() + " --out " + report.string(), status);
  if (status != 0) return {false, "eval exited with " + std::to_string(status)};
  std::ifstream in(report);
  std::string line, mean;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.rfind("MEAN,", 0) == 0) {
      mean = line;
    } else if (line.rfind("id,", 0) != 0 && !line.empty()) {
      ++rows;
    }
  }
  const auto f = split(mean, ',');
  if (f.size() != 6) return {false, "no MEAN row in report"};
  const double iou = std::stod(f[1]), precision = std::stod(f[2]), recall = std::stod(f[3]);
  const bool pass = rows >= 20 && timed == rows && iou >= 0.97 && precision >= 0.97 && recall >= 0.97 &&
                    max_secs <= 60.0;
  return {pass, "sets=" + std::to_string(rows) + " iou=" + fmt(iou) + " precision=" + fmt(precision) +
                    " recall=" + fmt(recall) + " max_seconds=" + fmt(max_secs, 2) + " (need >=0.97, <=60s)"};
}

// ---------------------------------------------------------------------------

struct AlignmentTrial {
  AffineTransform truth, estimate;
  double mean_error = 0;
};

std::vector<AlignmentTrial> alignment_trials(std::uint64_t seed) {
  std::vector<AlignmentTrial> trials;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(0, 2000), angle(-3.0, 3.0), scale(0.98, 1.02), shift(-40, 40);
  std::uniform_int_distribution<int> count(20, 200);
  std::normal_distribution<double> noise(0, 0.5);
  for (int t = 0; t < 50; ++t) {
    const double a = angle(rng) * M_PI / 180, s = scale(rng);
    AffineTransform truth;
    truth << s * std::cos(a), -s * std::sin(a), shift(rng), s * std::sin(a), s * std::cos(a), shift(rng);
    const int n_true = count(rng);
    const int n_out = static_cast<int>(std::lround(n_true * 3.0 / 7.0));  // 30% of all pairs
    Eigen::Matrix2Xd src(2, n_true + n_out), dst(2, n_true + n_out);
    for (int i = 0; i < n_true + n_out; ++i) {
      src.col(i) << coord(rng), coord(rng);
      if (i < n_true) {
        dst.col(i) = truth.leftCols<2>() * src.col(i) + truth.col(2) + Eigen::Vector2d(noise(rng), noise(rng));
      } else {
        dst.col(i) << coord(rng), coord(rng);
      }
    }
    AlignmentTrial trial;
    trial.truth = truth;
    trial.estimate = ransac_affine(src, dst, 3.0, seed + static_cast<std::uint64_t>(t)).transform;
    double err = 0;
    for (int i = 0; i < n_true; ++i) {
      const Eigen::Vector2d p = src.col(i);
      const Eigen::Vector2d e = trial.estimate.leftCols<2>() * p + trial.estimate.col(2);
      const Eigen::Vector2d g = truth.leftCols<2>() * p + truth.col(2);
      err += (e - g).norm();
    }
    trial.mean_error = err / n_true;
    trials.push_back(trial);
  }
  return trials;
}

Outcome alignment_recovery() {
  const auto first = alignment_trials(2024);
  const auto second = alignment_trials(2024);
  int good = 0;
  double worst = 0;
  bool identical = first.size() == second.size();
  for (std::size_t i = 0; i < first.size(); ++i) {
    good += first[i].mean_error <= 0.5;
    worst = std::max(worst, first[i].mean_error);
    identical = identical && (first[i].estimate.array() == second[i].estimate.array()).all();
  }
  return {good >= 49 && identical, "trials_within_0.5px=" + std::to_string(good) + "/50 worst_mean_error=" +
                                       fmt(worst) + " bit_identical=" + (identical ? "yes" : "no")};
}

// ---------------------------------------------------------------------------

Outcome sweep_contract() {
  SynthParams p;
  p.size = 1000;
  p.seed = 99;
  const SyntheticSet s = generate_synthetic_set(p, 0);
  const int pad = default_bar_pad(s.images.ppi);
  const RasterGray8 recto =
      mask_out(s.images.recto_ir, bars_to_mask(s.bars.recto, s.images.recto_ir.cols(), s.images.recto_ir.rows(), pad));
  const RasterGray8 verso = flip_horizontal(
      mask_out(s.images.verso_ir, bars_to_mask(s.bars.verso, s.images.verso_ir.cols(), s.images.verso_ir.rows(), pad)));
  SweepOptions opts;
  opts.seed = 7;
  const AlignmentResult r = sweep_alignment(recto, verso, opts);

  std::vector<int> grid;
  for (int t = 21; t >= 5; t -= 2) grid.push_back(t);
  std::vector<std::string> problems;
  if (opts.tolerances != grid) problems.push_back("tolerance grid");
  if (r.table.size() != opts.extractors.size() * grid.size()) problems.push_back("table size");

  // Recompute every combination from scratch.
  std::size_t row = 0;
  const SweepEntry* best = nullptr;
  for (const auto& name : opts.extractors) {
    const MatchedPoints mp = match_images(recto, verso, name, opts);
    for (int tol : grid) {
      if (row >= r.table.size()) break;
      const SweepEntry& e = r.table[row++];
      int inliers = 0;
      bool eligible = false;
      if (mp.recto.cols() >= 3) {
        const RansacResult rr = ransac_affine(mp.verso, mp.recto, tol, opts.seed, opts.ransac_iters);
        inliers = rr.inlier_count;
        const double det = std::abs(determinant(rr.transform));
        eligible = det >= opts.min_abs_det && det <= opts.max_abs_det;
      }
      if (e.extractor != name || e.tolerance != tol || e.inliers != inliers || e.eligible != eligible ||
          e.total_matches != mp.recto.cols()) {
        problems.push_back(name + "/" + std::to_string(tol));
      }
      if (eligible && (!best || inliers > best->inliers || (inliers == best->inliers && tol < best->tolerance)))
        best = &e;
    }
  }
  if (!best || best->extractor != r.extractor || best->tolerance != r.tolerance || best->inliers != r.inlier_count)
    problems.push_back("winner");
  for (const auto& e : r.table)
    if (e.eligible && e.inliers > r.inlier_count) problems.push_back("not maximal");
  const auto csv_lines = split(sweep_csv(r), '\n');
  if (csv_lines.size() != r.table.size() + 1) problems.push_back("csv rows");

  std::string detail = "combinations=" + std::to_string(r.table.size()) + " winner=" + r.extractor + "/" +
                       std::to_string(r.tolerance) + " inliers=" + std::to_string(r.inlier_count);
  for (const auto& pr : problems) detail += " mismatch:" + pr;
  return {problems.empty(), detail};
}

// ---------------------------------------------------------------------------

Outcome threshold_oracle() {
  std::mt19937_64 rng(5);
  int failures = 0, fallbacks = 0;
  for (int i = 0; i < 100; ++i) {
    const int w = 1 + static_cast<int>(rng() % 200), h = 1 + static_cast<int>(rng() % 200);
    const int lo = i % 5 == 0 ? 50 : 0;  // every fifth image has no dark pixel
    std::uniform_int_distribution<int> v(lo, 255);
    RasterGray8 img(h, w);
    long sum = 0, n = 0;
    for (Index k = 0; k < img.size(); ++k) {
      const int px = v(rng);
      img.data()[k] = static_cast<std::uint8_t>(px);
      if (px < 50) {
        sum += px;
        ++n;
      }
    }
    const int want = n == 0 ? 60 : static_cast<int>(std::floor(static_cast<double>(sum) / n + 0.5)) + 10;
    const ThresholdValue got = dynamic_threshold_value(img);
    fallbacks += got.fallback;
    if (got.value != want || got.fallback != (n == 0)) ++failures;
  }
  return {failures == 0 && fallbacks > 0,
          "images=100 mismatches=" + std::to_string(failures) + " fallback_cases=" + std::to_string(fallbacks)};
}

// ---------------------------------------------------------------------------

Mask flood_fill_filter(const Mask& m, long min_area) {
  const Index h = m.rows(), w = m.cols();
  Mask out = Mask::Zero(h, w), seen = Mask::Zero(h, w);
  for (Index y = 0; y < h; ++y)
    for (Index x = 0; x < w; ++x) {
      if (!m(y, x) || seen(y, x)) continue;
      std::vector<std::pair<Index, Index>> comp;
      std::deque<std::pair<Index, Index>> queue{{y, x}};
      seen(y, x) = true;
      while (!queue.empty()) {
        const auto [cy, cx] = queue.front();
        queue.pop_front();
        comp.push_back({cy, cx});
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const Index ny = cy + dy, nx = cx + dx;
            if (ny < 0 || nx < 0 || ny >= h || nx >= w || !m(ny, nx) || seen(ny, nx)) continue;
            seen(ny, nx) = true;
            queue.push_back({ny, nx});
          }
      }
      if (static_cast<long>(comp.size()) >= min_area)
        for (const auto& [cy, cx] : comp) out(cy, cx) = true;
    }
  return out;
}

Outcome mask_properties() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> density(0.02, 0.9);
  int laws = 0, idempotence = 0, superset = 0, components = 0;
  for (int i = 0; i < 1000; ++i) {
    const Mask a = random_mask(rng, 64, 64, density(rng)), b = random_mask(rng, 64, 64, density(rng)),
               c = random_mask(rng, 64, 64, density(rng));
    const Mask empty = Mask::Zero(64, 64);
    const bool ok = equal(mask_union(a, b), mask_union(b, a)) && equal(mask_intersect(a, b), mask_intersect(b, a)) &&
                    equal(mask_union(a, mask_union(b, c)), mask_union(mask_union(a, b), c)) &&
                    equal(mask_intersect(a, mask_union(b, c)), mask_union(mask_intersect(a, b), mask_intersect(a, c))) &&
                    equal(complement(mask_union(a, b)), mask_intersect(complement(a), complement(b))) &&
                    equal(complement(mask_intersect(a, b)), mask_union(complement(a), complement(b))) &&
                    equal(mask_subtract(a, b), mask_intersect(a, complement(b))) &&
                    equal(mask_union(mask_subtract(a, b), mask_intersect(a, b)), a) &&
                    equal(mask_union(a, empty), a) && equal(mask_intersect(a, empty), empty) &&
                    equal(mask_subtract(a, empty), a) && equal(mask_subtract(a, a), empty);
    laws += !ok;

    // Sparse masks so the closing does real work instead of saturating.
    const Mask sparse = random_mask(rng, 64, 64, density(rng) * 0.1);
    const int side = 2 * static_cast<int>(rng() % 11) + 1;
    const StructuringElement se = i % 4 == 0 ? StructuringElement{} : StructuringElement{side, 2 * static_cast<int>(rng() % 11) + 1};
    const Mask closed = morph_close(sparse, se);
    idempotence += !equal(morph_close(closed, se), closed);
    superset += !(closed || !sparse).all();

    const long min_area = 1 + static_cast<long>(rng() % 30);
    const Mask cm = random_mask(rng, 64, 64, density(rng) * 0.6);
    components += !equal(remove_small_components(cm, min_area), flood_fill_filter(cm, min_area));
  }
  return {laws + idempotence + superset + components == 0,
          "cases=1000 failures: algebra=" + std::to_string(laws) + " close_idempotence=" + std::to_string(idempotence) +
              " close_superset=" + std::to_string(superset) + " component_oracle=" + std::to_string(components)};
}

// ---------------------------------------------------------------------------

Outcome geometry_round_trips() {
  std::mt19937_64 rng(31);
  double worst_iou = 1.0;
  int rect_failures = 0, wkt_failures = 0;
  for (int i = 0; i < 200; ++i) {
    const Index w = 32 + static_cast<Index>(rng() % 97), h = 32 + static_cast<Index>(rng() % 97);
    Mask m = Mask::Zero(h, w);
    const int blocks = 1 + static_cast<int>(rng() % 12);
    for (int k = 0; k < blocks; ++k) {
      const Index bw = 1 + static_cast<Index>(rng() % (w / 2)), bh = 1 + static_cast<Index>(rng() % (h / 2));
      const Index x = static_cast<Index>(rng() % static_cast<std::uint64_t>(w - bw + 1));
      const Index y = static_cast<Index>(rng() % static_cast<std::uint64_t>(h - bh + 1));
      m.block(y, x, bh, bw).setConstant(k % 3 != 2);  // some blocks cut holes
    }
    const auto polys = forest_to_polygons(trace_contours(m));
    const Mask back = rasterize(std::span<const PolygonWithHoles>(polys), w, h);
    worst_iou = std::min(worst_iou, metrics(confusion(back, m)).iou);

    // WKT: text -> polygon -> text is exact on canonical output, and so is polygon -> text -> polygon.
    for (const auto& p : polys) {
      const std::string text = to_wkt(p);
      const PolygonWithHoles q = polygon_from_wkt(text);
      if (!(q == p) || to_wkt(q) != text) ++wkt_failures;
    }

    // Single axis-aligned rectangle.
    Mask r = Mask::Zero(h, w);
    const Index rw = 1 + static_cast<Index>(rng() % static_cast<std::uint64_t>(w)),
                rh = 1 + static_cast<Index>(rng() % static_cast<std::uint64_t>(h));
    const Index rx = static_cast<Index>(rng() % static_cast<std::uint64_t>(w - rw + 1)),
                ry = static_cast<Index>(rng() % static_cast<std::uint64_t>(h - rh + 1));
    r.block(ry, rx, rh, rw).setConstant(true);
    const auto rp = forest_to_polygons(trace_contours(r));
    const double x0 = static_cast<double>(rx), y0 = static_cast<double>(ry);
    const double x1 = x0 + static_cast<double>(rw), y1 = y0 + static_cast<double>(rh);
    const PolygonWithHoles want{{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}, {}};
    bool ok = rp.size() == 1 && equal(rasterize(rp[0], w, h), r) && polygon_area(rp[0]) == static_cast<double>(rw * rh);
    if (ok) {
      // Same four corners, any starting vertex.
      const auto& ring = rp[0].shell;
      ok = ring.size() == 4;
      for (std::size_t s = 0; ok && s < 4; ++s)
        ok = std::find(ring.begin(), ring.end(), want.shell[s]) != ring.end();
    }
    rect_failures += !ok;
  }

  // Bowtie repair on a 64x64 canvas, literal and scaled.
  int bowtie_failures = 0;
  for (double scale : {1.0, 10.0, 31.0}) {
    PolygonWithHoles bow{{{0, 0}, {2, 2}, {2, 0}, {0, 2}}, {}};
    for (auto& pt : bow.shell) pt = pt * scale + Point(1, 1);
    const auto fixed = repair(bow);
    bool ok = fixed.size() == 2;
    for (const auto& q : fixed) ok = ok && validate(q).empty();
    ok = ok && equal(rasterize(std::span<const PolygonWithHoles>(fixed), 64, 64), rasterize(bow, 64, 64));
    bowtie_failures += !ok;
  }
  const bool pass = worst_iou >= 0.99 && rect_failures == 0 && wkt_failures == 0 && bowtie_failures == 0;
  return {pass, "masks=200 worst_iou=" + fmt(worst_iou, 6) + " rectangle_failures=" + std::to_string(rect_failures) +
                    " wkt_failures=" + std::to_string(wkt_failures) + " bowtie_failures=" + std::to_string(bowtie_failures)};
}

// ---------------------------------------------------------------------------

Outcome metrics_oracle() {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> density(0.0, 1.0);
  int count_failures = 0, real_failures = 0, chain_failures = 0;
  double worst = 0;
  for (int i = 0; i < 500; ++i) {
    const Index w = 1 + static_cast<Index>(rng() % 80), h = 1 + static_cast<Index>(rng() % 80);
    const Mask pred = random_mask(rng, w, h, i % 50 == 0 ? 0.0 : density(rng));
    const Mask gt = random_mask(rng, w, h, i % 100 == 0 ? 0.0 : density(rng));
    std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (Index y = 0; y < h; ++y)
      for (Index x = 0; x < w; ++x) {
        const bool p = pred(y, x), g = gt(y, x);
        tp += p && g;
        fp += p && !g;
        fn += !p && g;
        tn += !p && !g;
      }
    const Confusion c = confusion(pred, gt);
    if (c.tp != tp || c.fp != fp || c.fn != fn || c.tn != tn) ++count_failures;
    const bool blank = tp + fp + fn == 0;
    auto ratio = [&](double num, double den) { return den == 0 ? (blank ? 1.0 : 0.0) : num / den; };
    const double iou = ratio(tp, tp + fp + fn), precision = ratio(tp, tp + fp), recall = ratio(tp, tp + fn);
    const double f1 = ratio(2.0 * tp, 2.0 * tp + fp + fn), accuracy = static_cast<double>(tp + tn) / (w * h);
    const SegMetrics m = metrics(c);
    const double diff = std::max({std::abs(m.iou - iou), std::abs(m.precision - precision), std::abs(m.recall - recall),
                                  std::abs(m.f1 - f1), std::abs(m.accuracy - accuracy)});
    worst = std::max(worst, diff);
    if (diff > 1e-12) ++real_failures;
    if (!(m.iou <= m.precision && m.iou <= m.recall && m.iou <= m.f1)) ++chain_failures;
  }
  return {count_failures + real_failures + chain_failures == 0,
          "pairs=500 count_mismatches=" + std::to_string(count_failures) + " max_metric_diff=" + fmt(worst, 15) +
              " chain_violations=" + std::to_string(chain_failures)};
}

// ---------------------------------------------------------------------------

Outcome filter_boundaries() {
  const double min_area = resolve_params(PipelineConfig{}, kReferencePpi).final_min_area;
  auto area_rect = [](double area) { return PolygonWithHoles{{{0, 0}, {area / 10, 0}, {area / 10, 10}, {0, 10}}, {}}; };
  const auto small = area_filter({area_rect(999.5)}, min_area);
  const auto exact = area_filter({area_rect(1000.0)}, min_area);
  MatchPair at, above;
  at.d1 = 0.80;
  at.d2 = 1.0;
  above.d1 = 0.8001;
  above.d2 = 1.0;
  const double ratio = PipelineConfig{}.ratio;
  const bool keep_at = ratio_filter(std::vector{at}, ratio).size() == 1;
  const bool drop_above = ratio_filter(std::vector{above}, ratio).empty();
  const bool pass = small.empty() && exact.size() == 1 && keep_at && drop_above;
  return {pass, std::string("area 999.5 ") + (small.empty() ? "dropped" : "kept") + ", area 1000 " +
                    (exact.size() == 1 ? "kept" : "dropped") + ", ratio 0.80 " + (keep_at ? "kept" : "dropped") +
                    ", ratio 0.8001 " + (drop_above ? "dropped" : "kept")};
}

}  // namespace

int main(int argc, char** argv) {
  fs::path work = fs::temp_directory_path() / "fragseg_acceptance";
  std::vector<std::string> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--only" && i + 1 < argc) {
      only.push_back(argv[++i]);
    } else {
      work = arg;
    }
  }

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"synthetic_end_to_end", [&] { return synthetic_end_to_end(work); }},
      {"alignment_recovery", alignment_recovery},
      {"sweep_contract", sweep_contract},
      {"threshold_oracle", threshold_oracle},
      {"mask_properties", mask_properties},
      {"geometry_round_trips", geometry_round_trips},
      {"metrics_oracle", metrics_oracle},
      {"filter_boundaries", filter_boundaries},
  };

  int failed = 0;
  for (const auto& [name, check] : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << " [" << fmt(secs, 1) << "s]"
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
