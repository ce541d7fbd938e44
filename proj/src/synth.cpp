#include "fragseg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

#include "fragseg/io.hpp"

namespace fragseg {

namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

std::uint8_t clamp_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

Ring star_ring(Rng& rng, const Point& c, const std::vector<double>& angles, const std::vector<double>& radii) {
  Ring r;
  for (std::size_t i = 0; i < angles.size(); ++i) {
    const Point q(std::round(c.x() + radii[i] * std::cos(angles[i])), std::round(c.y() + radii[i] * std::sin(angles[i])));
    if (r.empty() || r.back() != q) r.push_back(q);
  }
  (void)rng;
  return remove_duplicate_points(r);
}

std::vector<double> star_angles(Rng& rng, int n) {
  const double phase = uniform(rng, 0, 2 * M_PI);
  std::vector<double> a(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) a[static_cast<std::size_t>(i)] = phase + 2 * M_PI * (i + uniform(rng, -0.3, 0.3)) / n;
  return a;
}

// Smooth noise in [-1, 1]: random lattice values at `spacing`, bilinearly interpolated.
Image<float> value_noise(Rng& rng, Index w, Index h, int spacing) {
  const Index gw = w / spacing + 2, gh = h / spacing + 2;
  Image<float> grid(gh, gw);
  for (Index i = 0; i < grid.size(); ++i) grid.data()[i] = static_cast<float>(uniform(rng, -1, 1));
  Image<float> out(h, w);
  for (Index y = 0; y < h; ++y) {
    const double gy = static_cast<double>(y) / spacing;
    const Index y0 = static_cast<Index>(gy);
    const float ay = static_cast<float>(gy - y0);
    for (Index x = 0; x < w; ++x) {
      const double gx = static_cast<double>(x) / spacing;
      const Index x0 = static_cast<Index>(gx);
      const float ax = static_cast<float>(gx - x0);
      out(y, x) = (1 - ay) * ((1 - ax) * grid(y0, x0) + ax * grid(y0, x0 + 1)) +
                  ay * ((1 - ax) * grid(y0 + 1, x0) + ax * grid(y0 + 1, x0 + 1));
    }
  }
  return out;
}

struct Scene {
  RasterRGB color;
  RasterGray8 ir;
  Mask coverage;
};

struct Layout {
  std::vector<PolygonWithHoles> fragments;
  PolygonWithHoles substrate;
};

Layout make_layout(Rng& rng, const SynthParams& p) {
  const double k = p.size / 2000.0;
  const Point centre(p.size / 2.0 + uniform(rng, -0.03, 0.03) * p.size,
                     p.size / 2.0 + uniform(rng, -0.03, 0.03) * p.size);
  Layout lay;
  std::vector<Point> frag_centres;
  std::vector<double> frag_radii;
  if (p.fragments <= 1) {
    frag_centres.push_back(centre);
    frag_radii.push_back(uniform(rng, 0.20, 0.28) * p.size);
  } else {
    const double phase = uniform(rng, 0, 2 * M_PI);
    const double ring = 0.21 * p.size;
    for (int j = 0; j < p.fragments; ++j) {
      const double phi = phase + 2 * M_PI * j / p.fragments;
      frag_centres.push_back(centre + ring * Point(std::cos(phi), std::sin(phi)));
      frag_radii.push_back(uniform(rng, 0.09, 0.11) * p.size);
    }
  }

  for (std::size_t f = 0; f < frag_centres.size(); ++f) {
    const double radius = frag_radii[f];
    const int n = uniform_int(rng, 28, 44);
    const auto angles = star_angles(rng, n);
    std::vector<double> radii;
    for (int i = 0; i < n; ++i) radii.push_back(radius * uniform(rng, 0.82, 1.0));
    PolygonWithHoles frag{star_ring(rng, frag_centres[f], angles, radii), {}};

    if (p.fragments <= 1) {
      std::vector<double> outer;
      for (int i = 0; i < n; ++i) outer.push_back(radii[static_cast<std::size_t>(i)] + uniform(rng, 25, 70) * k);
      lay.substrate.shell = star_ring(rng, centre, angles, outer);
    }

    // Holes well inside the fragment, apart from each other.
    const int holes = uniform_int(rng, 1, 3);
    const bool small = p.fragments > 1;
    std::vector<std::pair<Point, double>> placed;
    for (int attempt = 0; attempt < 200 && static_cast<int>(placed.size()) < holes; ++attempt) {
      const double rho = (small ? uniform(rng, 12, 25) : uniform(rng, 15, 40)) * k;
      const double dist = uniform(rng, 0, (small ? 0.35 : 0.45) * radius);
      const double phi = uniform(rng, 0, 2 * M_PI);
      const Point c = frag_centres[f] + dist * Point(std::cos(phi), std::sin(phi));
      const bool clear = std::all_of(placed.begin(), placed.end(), [&](const auto& h) {
        return (h.first - c).norm() > h.second + rho + 20 * k;
      });
      if (!clear) continue;
      placed.emplace_back(c, rho);
      const int hn = uniform_int(rng, 10, 16);
      const auto ha = star_angles(rng, hn);
      std::vector<double> hr;
      for (int i = 0; i < hn; ++i) hr.push_back(rho * uniform(rng, 0.7, 1.0));
      Ring hole = star_ring(rng, c, ha, hr);
      std::reverse(hole.begin(), hole.end());
      frag.holes.push_back(std::move(hole));
    }
    lay.fragments.push_back(std::move(frag));
  }

  if (p.fragments > 1) {
    const int n = uniform_int(rng, 36, 52);
    const auto angles = star_angles(rng, n);
    std::vector<double> radii;
    for (int i = 0; i < n; ++i) radii.push_back(0.21 * p.size + 0.11 * p.size + uniform(rng, 25, 70) * k);
    lay.substrate.shell = star_ring(rng, centre, angles, radii);
  }
  return lay;
}

// Renders one side in the recto frame. `ink` darkens strokes (recto only).
Scene render_side(const SynthParams& p, const Layout& lay, const Image<float>& tex_fine, const Image<float>& tex_coarse,
                  const Image<float>& sub_tex, const std::vector<double>& frag_ir_base,
                  const std::array<double, 3>& frag_rgb, const Mask* ink) {
  const Index s = p.size;
  const double k = p.size / 2000.0;
  const int weave = std::max(3, static_cast<int>(std::lround(6 * k)));
  const Mask substrate = rasterize(lay.substrate, s, s);
  std::vector<Mask> frags;
  for (const auto& f : lay.fragments) frags.push_back(rasterize(f, s, s));

  Scene sc{RasterRGB(s, s), RasterGray8::Zero(s, s), substrate};
  for (Index y = 0; y < s; ++y) {
    for (Index x = 0; x < s; ++x) {
      int which = -1;
      for (std::size_t f = 0; f < frags.size(); ++f)
        if (frags[f](y, x)) which = static_cast<int>(f);
      if (which >= 0) {
        sc.coverage(y, x) = true;
        const double t = 1.0 + 0.15 * tex_fine(y, x) + 0.12 * tex_coarse(y, x);
        if (ink && (*ink)(y, x)) {
          sc.color.set(y, x, {45, 35, 30});
          sc.ir(y, x) = 70;
        } else {
          sc.color.set(y, x, {clamp_byte(frag_rgb[0] * t), clamp_byte(frag_rgb[1] * t), clamp_byte(frag_rgb[2] * t)});
          sc.ir(y, x) = clamp_byte(frag_ir_base[static_cast<std::size_t>(which)] * (1.0 + 0.22 * tex_fine(y, x) +
                                                                                     0.18 * tex_coarse(y, x)));
        }
      } else if (substrate(y, x)) {
        // Small holes where the threads cross.
        const bool gap = y % weave == 0 && x % weave < 2;
        const double t = (1.0 + 0.07 * sub_tex(y, x)) * (gap ? 0.55 : 1.0);
        sc.color.set(y, x, {clamp_byte(160 * t), clamp_byte(158 * t), clamp_byte(152 * t)});
        sc.ir(y, x) = clamp_byte((gap ? 120.0 : 175.0) * (1.0 + 0.07 * sub_tex(y, x)));
      }
    }
  }
  return sc;
}

Mask ink_strokes(Rng& rng, const Layout& lay, Index s, double k) {
  Mask ink = Mask::Zero(s, s);
  for (const auto& f : lay.fragments) {
    BoundingBox2i box = pixel_bounds(f);
    const int strokes = uniform_int(rng, 40, 80);
    for (int i = 0; i < strokes; ++i) {
      const Point a(uniform(rng, box.x0, box.x1), uniform(rng, box.y0, box.y1));
      const double len = uniform(rng, 20, 60) * k, ang = uniform(rng, -0.5, 0.5);
      const Point b = a + len * Point(std::cos(ang), std::sin(ang));
      const double half = uniform(rng, 1.5, 2.5) * k;
      const Index x0 = std::max<Index>(0, static_cast<Index>(std::min(a.x(), b.x()) - half - 1));
      const Index x1 = std::min<Index>(s - 1, static_cast<Index>(std::max(a.x(), b.x()) + half + 1));
      const Index y0 = std::max<Index>(0, static_cast<Index>(std::min(a.y(), b.y()) - half - 1));
      const Index y1 = std::min<Index>(s - 1, static_cast<Index>(std::max(a.y(), b.y()) + half + 1));
      const Point d = b - a;
      for (Index y = y0; y <= y1; ++y) {
        for (Index x = x0; x <= x1; ++x) {
          const Point q(x + 0.5, y + 0.5);
          const double t = std::clamp((q - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
          if ((q - (a + t * d)).norm() <= half && contains(f, q)) ink(y, x) = true;
        }
      }
    }
  }
  return ink;
}

// Dark felt N(15, 5) outside the covered area, plus bright specks.
void add_felt(Rng& rng, Scene& sc, double k) {
  std::normal_distribution<double> felt(15.0, 5.0);
  const Index s = sc.ir.rows();
  for (Index y = 0; y < s; ++y) {
    for (Index x = 0; x < s; ++x) {
      if (sc.coverage(y, x)) continue;
      sc.color.set(y, x, {clamp_byte(felt(rng)), clamp_byte(felt(rng)), clamp_byte(felt(rng))});
      sc.ir(y, x) = clamp_byte(felt(rng));
    }
  }
  const int specks = static_cast<int>(300 * k * k);
  for (int i = 0; i < specks; ++i) {
    const Index cx = uniform_int(rng, 0, static_cast<int>(s - 1)), cy = uniform_int(rng, 0, static_cast<int>(s - 1));
    if (sc.coverage(cy, cx)) continue;
    const int r = uniform_int(rng, 1, 3);
    const std::uint8_t v = clamp_byte(uniform(rng, 120, 255));
    for (Index y = std::max<Index>(0, cy - r); y <= std::min<Index>(s - 1, cy + r); ++y)
      for (Index x = std::max<Index>(0, cx - r); x <= std::min<Index>(s - 1, cx + r); ++x)
        if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r && !sc.coverage(y, x)) {
          sc.color.set(y, x, {v, v, v});
          sc.ir(y, x) = v;
        }
  }
}

BoundingBox2i coverage_bounds(const Mask& m) {
  BoundingBox2i b{static_cast<int>(m.cols()), static_cast<int>(m.rows()), 0, 0};
  for (Index y = 0; y < m.rows(); ++y)
    for (Index x = 0; x < m.cols(); ++x)
      if (m(y, x)) {
        b.x0 = std::min<int>(b.x0, static_cast<int>(x));
        b.y0 = std::min<int>(b.y0, static_cast<int>(y));
        b.x1 = std::max<int>(b.x1, static_cast<int>(x) + 1);
        b.y1 = std::max<int>(b.y1, static_cast<int>(y) + 1);
      }
  return b;
}

// Places 2-3 calibration bars in the felt band around `occupied` and draws them.
std::vector<BoundingBox> add_bars(Rng& rng, Scene& sc, const BoundingBox2i& occupied, double k) {
  const int s = static_cast<int>(sc.ir.rows());
  const int gap = static_cast<int>(30 * k), edge = static_cast<int>(10 * k);
  const int want = uniform_int(rng, 2, 3);
  std::vector<BoundingBox> boxes;
  for (int attempt = 0; attempt < 500 && static_cast<int>(boxes.size()) < want; ++attempt) {
    const int side = uniform_int(rng, 0, 3);
    const int length = static_cast<int>(uniform(rng, 0.15, 0.25) * s);
    const int thick = static_cast<int>(uniform(rng, 0.03, 0.045) * s);
    int lo = 0, hi = 0;  // admissible range of the across-band coordinate
    switch (side) {
      case 0: lo = edge; hi = occupied.y0 - gap - thick; break;
      case 1: lo = occupied.y1 + gap; hi = s - edge - thick; break;
      case 2: lo = edge; hi = occupied.x0 - gap - thick; break;
      default: lo = occupied.x1 + gap; hi = s - edge - thick; break;
    }
    if (hi < lo || s - 2 * edge - length < 0) continue;
    const int across = uniform_int(rng, lo, hi);
    const int along = uniform_int(rng, edge, s - edge - length);
    BoundingBox b;
    if (side < 2) b = {along, across, length, thick};
    else b = {across, along, thick, length};
    const bool clear = std::none_of(boxes.begin(), boxes.end(), [&](const BoundingBox& o) {
      return b.x < o.x + o.w + gap && o.x < b.x + b.w + gap && b.y < o.y + o.h + gap && o.y < b.y + b.h + gap;
    });
    if (!clear) continue;
    boxes.push_back(b);

    const bool striped = uniform_int(rng, 0, 1) == 1;
    const int patches = 6;
    std::vector<std::array<std::uint8_t, 3>> colors;
    std::vector<std::uint8_t> irs;
    for (int i = 0; i < patches; ++i) {
      colors.push_back({clamp_byte(uniform(rng, 0, 255)), clamp_byte(uniform(rng, 0, 255)), clamp_byte(uniform(rng, 0, 255))});
      irs.push_back(clamp_byte(uniform(rng, 80, 235)));
    }
    const int stripe = std::max(4, static_cast<int>(12 * k));
    for (int y = b.y; y < b.y + b.h; ++y) {
      for (int x = b.x; x < b.x + b.w; ++x) {
        const int u = side < 2 ? x - b.x : y - b.y;  // position along the bar
        if (striped) {
          const bool light = (u / stripe) % 2 == 0;
          const std::uint8_t v = light ? 235 : 20;
          sc.color.set(y, x, {v, v, v});
          sc.ir(y, x) = v;
        } else {
          const int i = std::min(patches - 1, u * patches / std::max(1, side < 2 ? b.w : b.h));
          sc.color.set(y, x, colors[static_cast<std::size_t>(i)]);
          sc.ir(y, x) = irs[static_cast<std::size_t>(i)];
        }
      }
    }
  }
  return boxes;
}

}  // namespace

Ring random_star_ring(std::uint64_t seed, const Point& center, double radius, int vertices, double min_radius_fraction) {
  Rng rng(seed);
  const auto angles = star_angles(rng, vertices);
  std::vector<double> radii;
  for (int i = 0; i < vertices; ++i) radii.push_back(radius * uniform(rng, min_radius_fraction, 1.0));
  return star_ring(rng, center, angles, radii);
}

SyntheticSet generate_synthetic_set(const SynthParams& p, int index) {
  if (p.size < 200) throw Error("synthetic sets need size >= 200");
  Rng rng(p.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(index) * 0xD1B54A32D192ED03ULL + 1);
  const double k = p.size / 2000.0;
  const Index s = p.size;

  const Layout lay = make_layout(rng, p);
  const Image<float> tex_fine = value_noise(rng, s, s, std::max(2, static_cast<int>(8 * k)));
  const Image<float> tex_coarse = value_noise(rng, s, s, std::max(4, static_cast<int>(32 * k)));
  const Image<float> sub_tex = value_noise(rng, s, s, std::max(4, static_cast<int>(16 * k)));
  std::vector<double> ir_recto, ir_verso;
  for (std::size_t f = 0; f < lay.fragments.size(); ++f) {
    ir_recto.push_back(uniform(rng, 100, 200));
    ir_verso.push_back(std::clamp(ir_recto.back() + uniform(rng, -15, 15), 100.0, 200.0));
  }
  const Mask ink = ink_strokes(rng, lay, s, k);

  Scene recto = render_side(p, lay, tex_fine, tex_coarse, sub_tex, ir_recto, {150, 112, 72}, &ink);
  Scene verso_scene = render_side(p, lay, tex_fine, tex_coarse, sub_tex, ir_verso, {142, 108, 70}, nullptr);

  // A maps flipped-verso coordinates to recto coordinates.
  const double theta = uniform(rng, -3, 3) * M_PI / 180.0;
  const double scale = uniform(rng, 0.98, 1.02);
  const double tr = uniform(rng, 0, 40), tphi = uniform(rng, 0, 2 * M_PI);
  const Eigen::Vector2d c = Eigen::Vector2d::Constant((s - 1) / 2.0);
  Eigen::Matrix2d lin;
  lin << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  lin *= scale;
  AffineTransform a;
  a.leftCols<2>() = lin;
  a.col(2) = c - lin * c + tr * Eigen::Vector2d(std::cos(tphi), std::sin(tphi));

  const AffineTransform a_inv = invert_affine(a);
  Scene verso{flip_horizontal(warp(verso_scene.color, a_inv, s, s)), flip_horizontal(warp(verso_scene.ir, a_inv, s, s)),
              flip_horizontal(warp(verso_scene.coverage, a_inv, s, s))};

  add_felt(rng, recto, k);
  add_felt(rng, verso, k);
  BarSet bars;
  bars.recto = add_bars(rng, recto, coverage_bounds(recto.coverage), k);
  bars.verso = add_bars(rng, verso, coverage_bounds(verso.coverage), k);

  SyntheticSet out;
  out.images.plate_id = "synth" + std::to_string(index);
  out.images.fragment_id = "1";
  out.images.recto_color = std::move(recto.color);
  out.images.recto_ir = std::move(recto.ir);
  out.images.verso_color = std::move(verso.color);
  out.images.verso_ir = std::move(verso.ir);
  out.images.ppi = p.ppi;
  out.bars = std::move(bars);
  out.truth = lay.fragments;
  out.verso_to_recto = a;
  return out;
}

void write_synthetic_set(const SyntheticSet& s, const std::filesystem::path& root,
                         const std::filesystem::path& boxes_dir) {
  const std::string id = s.images.id();
  const auto dir = root / id;
  io::write_png(dir / "recto_color.png", s.images.recto_color);
  io::write_png(dir / "recto_ir.png", s.images.recto_ir);
  io::write_png(dir / "verso_color.png", s.images.verso_color);
  io::write_png(dir / "verso_ir.png", s.images.verso_ir);
  std::filesystem::create_directories(dir / "gt");
  for (std::size_t k = 0; k < s.truth.size(); ++k) {
    std::ofstream f(dir / "gt" / (id + "_" + std::to_string(k + 1) + ".wkt"));
    f << to_wkt(s.truth[k]) << "\n";
    if (!f) throw IoError("cannot write ground truth for " + id);
  }
  const auto& t = s.verso_to_recto;
  nlohmann::ordered_json j;
  j["id"] = id;
  j["width"] = s.images.recto_ir.cols();
  j["height"] = s.images.recto_ir.rows();
  j["ppi"] = s.images.ppi;
  j["fragments"] = s.truth.size();
  j["verso_to_recto"] = {{t(0, 0), t(0, 1), t(0, 2)}, {t(1, 0), t(1, 1), t(1, 2)}};
  std::ofstream f(dir / "truth.json");
  f << j.dump(2) << "\n";
  if (!f) throw IoError("cannot write truth for " + id);
  std::filesystem::create_directories(boxes_dir);
  save_bar_boxes(s.bars, boxes_dir / (id + ".json"));
}

}  // namespace fragseg
