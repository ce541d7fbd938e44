#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "fragseg/features.hpp"
#include "fragseg/register.hpp"

namespace fragseg {
namespace {

constexpr int kPatchRadius = 15;
constexpr int kPatternRadius = 13;
constexpr int kDescriptorBits = 256;

// Bresenham circle of radius 3 used by FAST, clockwise from 12 o'clock.
constexpr std::array<std::array<int, 2>, 16> kCircle = {{{0, -3}, {1, -3}, {2, -2}, {3, -1},
                                                          {3, 0},  {3, 1},  {2, 2},  {1, 3},
                                                          {0, 3},  {-1, 3}, {-2, 2}, {-3, 1},
                                                          {-3, 0}, {-3, -1}, {-2, -2}, {-1, -3}}};

struct TestPair {
  int x1, y1, x2, y2;
};

// Fixed pseudo-random sampling pattern; triangular distribution concentrates tests
// near the keypoint.
const std::vector<TestPair>& pattern() {
  static const std::vector<TestPair> pairs = [] {
    std::vector<TestPair> out;
    std::mt19937 rng(0x0b5e1f);
    auto coord = [&] {
      return static_cast<int>(rng() % (kPatternRadius + 1)) + static_cast<int>(rng() % (kPatternRadius + 1)) -
             kPatternRadius;
    };
    while (static_cast<int>(out.size()) < kDescriptorBits) {
      TestPair p{coord(), coord(), coord(), coord()};
      if (p.x1 * p.x1 + p.y1 * p.y1 > kPatternRadius * kPatternRadius) continue;
      if (p.x2 * p.x2 + p.y2 * p.y2 > kPatternRadius * kPatternRadius) continue;
      if (p.x1 == p.x2 && p.y1 == p.y2) continue;
      out.push_back(p);
    }
    return out;
  }();
  return pairs;
}

// Half-widths of the circular patch rows used by the intensity centroid.
const std::array<int, kPatchRadius + 1>& patch_umax() {
  static const std::array<int, kPatchRadius + 1> umax = [] {
    std::array<int, kPatchRadius + 1> u{};
    for (int v = 0; v <= kPatchRadius; ++v)
      u[v] = static_cast<int>(std::floor(std::sqrt(double(kPatchRadius * kPatchRadius - v * v)) + 0.5));
    return u;
  }();
  return umax;
}

// Score 0 means "not a corner".
int fast_score(const RasterGray8& img, Index x, Index y, int threshold) {
  const int c = img(y, x);
  auto at = [&](int k) { return static_cast<int>(img(y + kCircle[k][1], x + kCircle[k][0])); };

  int bright_compass = 0, dark_compass = 0;
  for (int k : {0, 4, 8, 12}) {
    const int v = at(k);
    bright_compass += v > c + threshold;
    dark_compass += v < c - threshold;
  }
  if (bright_compass < 2 && dark_compass < 2) return 0;

  std::array<int, 16> cls{};
  int bright_sum = 0, dark_sum = 0;
  for (int k = 0; k < 16; ++k) {
    const int v = at(k);
    if (v > c + threshold) {
      cls[k] = 1;
      bright_sum += v - c - threshold;
    } else if (v < c - threshold) {
      cls[k] = -1;
      dark_sum += c - v - threshold;
    }
  }
  for (int sign : {1, -1}) {
    int run = 0;
    for (int k = 0; k < 16 + 9; ++k) {
      run = cls[k % 16] == sign ? run + 1 : 0;
      if (run >= 9) return std::max(bright_sum, dark_sum);
    }
  }
  return 0;
}

float harris_response(const RasterGray8& img, Index x, Index y) {
  constexpr int half = 3;
  double a = 0, b = 0, c = 0;
  for (Index yy = y - half; yy <= y + half; ++yy) {
    for (Index xx = x - half; xx <= x + half; ++xx) {
      auto p = [&](Index dy, Index dx) { return static_cast<double>(img(yy + dy, xx + dx)); };
      const double ix = (p(-1, 1) + 2 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2 * p(0, -1) + p(1, -1));
      const double iy = (p(1, -1) + 2 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2 * p(-1, 0) + p(-1, 1));
      a += ix * ix;
      b += iy * iy;
      c += ix * iy;
    }
  }
  const double scale = 1.0 / (4.0 * 255.0 * 7 * 7);
  a *= scale * scale;
  b *= scale * scale;
  c *= scale * scale;
  return static_cast<float>(a * b - c * c - 0.04 * (a + b) * (a + b));
}

double intensity_centroid_angle(const RasterGray8& img, Index x, Index y) {
  const auto& umax = patch_umax();
  long m01 = 0, m10 = 0;
  for (int u = -kPatchRadius; u <= kPatchRadius; ++u) m10 += u * long{img(y, x + u)};
  for (int v = 1; v <= kPatchRadius; ++v) {
    long vsum = 0;
    for (int u = -umax[v]; u <= umax[v]; ++u) {
      const long below = img(y + v, x + u), above = img(y - v, x + u);
      vsum += below - above;
      m10 += u * (below + above);
    }
    m01 += v * vsum;
  }
  return std::atan2(static_cast<double>(m01), static_cast<double>(m10));
}

Image<float> gaussian_blur(const RasterGray8& img) {
  constexpr int half = 3;
  constexpr double sigma = 2.0;
  std::array<float, 2 * half + 1> k{};
  double sum = 0;
  for (int i = -half; i <= half; ++i) sum += k[i + half] = static_cast<float>(std::exp(-(i * i) / (2 * sigma * sigma)));
  for (auto& v : k) v = static_cast<float>(v / sum);

  const Index h = img.rows(), w = img.cols();
  const Image<float> src = img.cast<float>();
  Image<float> tmp(h, w), out(h, w);
  auto clampi = [](Index v, Index n) { return std::clamp<Index>(v, 0, n - 1); };
  for (Index y = 0; y < h; ++y)
    for (Index x = 0; x < w; ++x) {
      float acc = 0;
      for (int i = -half; i <= half; ++i) acc += k[i + half] * src(y, clampi(x + i, w));
      tmp(y, x) = acc;
    }
  for (Index y = 0; y < h; ++y)
    for (Index x = 0; x < w; ++x) {
      float acc = 0;
      for (int i = -half; i <= half; ++i) acc += k[i + half] * tmp(clampi(y + i, h), x);
      out(y, x) = acc;
    }
  return out;
}

struct LevelCorner {
  Index x, y;
  float harris;
};

std::vector<LevelCorner> detect_level(const RasterGray8& img, int threshold, int margin) {
  const Index h = img.rows(), w = img.cols();
  std::vector<LevelCorner> out;
  if (h <= 2 * margin || w <= 2 * margin) return out;

  Image<int> score = Image<int>::Zero(h, w);
  for (Index y = margin; y < h - margin; ++y)
    for (Index x = margin; x < w - margin; ++x) score(y, x) = fast_score(img, x, y, threshold);

  for (Index y = margin; y < h - margin; ++y) {
    for (Index x = margin; x < w - margin; ++x) {
      const int s = score(y, x);
      if (s == 0) continue;
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const int o = score(y + dy, x + dx);
          // Strict against earlier neighbours, non-strict against later ones.
          if (o > s || (o == s && (dy < 0 || (dy == 0 && dx < 0)))) {
            is_max = false;
            break;
          }
        }
      if (is_max) out.push_back({x, y, harris_response(img, x, y)});
    }
  }
  return out;
}

}  // namespace

Features orb_detect_and_describe(const RasterGray8& img, int max_features, const OrbParams& params) {
  Features result;
  result.descriptors.metric = Metric::Hamming;
  constexpr int bytes = kDescriptorBits / 8;
  if (img.size() == 0 || max_features <= 0) {
    result.descriptors.binary.resize(0, bytes);
    return result;
  }

  // Per-level budget decays geometrically with the scale factor.
  const double inv = 1.0 / params.scale_factor;
  std::vector<int> budget(params.levels);
  double per_level = max_features * (1 - inv) / (1 - std::pow(inv, params.levels));
  int assigned = 0;
  for (int l = 0; l < params.levels - 1; ++l) {
    budget[l] = static_cast<int>(std::lround(per_level));
    assigned += budget[l];
    per_level *= inv;
  }
  budget[params.levels - 1] = std::max(0, max_features - assigned);

  struct Described {
    Keypoint kp;
    std::array<std::uint8_t, bytes> desc;
  };
  std::vector<Described> all;
  const auto& pairs = pattern();

  RasterGray8 level = img;
  for (int l = 0; l < params.levels; ++l) {
    const double scale = std::pow(params.scale_factor, l);
    if (l > 0) {
      const Index w = static_cast<Index>(std::lround(img.cols() / scale));
      const Index h = static_cast<Index>(std::lround(img.rows() / scale));
      if (w <= 2 * params.edge_margin || h <= 2 * params.edge_margin) break;
      level = resize(level, w, h);
    }
    auto corners = detect_level(level, params.fast_threshold, params.edge_margin);
    std::sort(corners.begin(), corners.end(), [](const LevelCorner& a, const LevelCorner& b) {
      if (a.harris != b.harris) return a.harris > b.harris;
      if (a.y != b.y) return a.y < b.y;
      return a.x < b.x;
    });
    if (static_cast<int>(corners.size()) > budget[l]) corners.resize(budget[l]);
    if (corners.empty()) continue;

    const Image<float> smooth = gaussian_blur(level);
    for (const auto& c : corners) {
      Described d{};
      const double angle = intensity_centroid_angle(level, c.x, c.y);
      const double ca = std::cos(angle), sa = std::sin(angle);
      for (int bit = 0; bit < kDescriptorBits; ++bit) {
        const auto& p = pairs[bit];
        auto sample = [&](int px, int py) {
          const Index rx = static_cast<Index>(std::lround(ca * px - sa * py));
          const Index ry = static_cast<Index>(std::lround(sa * px + ca * py));
          return smooth(c.y + ry, c.x + rx);
        };
        if (sample(p.x1, p.y1) < sample(p.x2, p.y2)) d.desc[bit / 8] |= static_cast<std::uint8_t>(1u << (bit % 8));
      }
      d.kp.x = (c.x + 0.5) * scale - 0.5;
      d.kp.y = (c.y + 0.5) * scale - 0.5;
      d.kp.scale = scale;
      d.kp.orientation = angle;
      d.kp.response = c.harris;
      all.push_back(d);
    }
  }

  result.keypoints.reserve(all.size());
  result.descriptors.binary.resize(static_cast<Index>(all.size()), bytes);
  for (std::size_t i = 0; i < all.size(); ++i) {
    result.keypoints.push_back(all[i].kp);
    for (int b = 0; b < bytes; ++b) result.descriptors.binary(static_cast<Index>(i), b) = all[i].desc[b];
  }
  return result;
}

}  // namespace fragseg
