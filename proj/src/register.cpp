#include "fragseg/register.hpp"

#include <Eigen/Dense>

#include <bit>
#include <cstring>
#include <random>

namespace fragseg {

AffineTransform invert_affine(const AffineTransform& t) {
  const double det = determinant(t);
  if (det == 0 || !std::isfinite(det)) throw SingularTransform("affine transform is not invertible");
  Eigen::Matrix2d inv_lin = t.leftCols<2>().inverse();
  AffineTransform out;
  out.leftCols<2>() = inv_lin;
  out.col(2) = -inv_lin * t.col(2);
  return out;
}

AffineTransform compose_affine(const AffineTransform& a, const AffineTransform& b) {
  AffineTransform out;
  out.leftCols<2>() = a.leftCols<2>() * b.leftCols<2>();
  out.col(2) = a.leftCols<2>() * b.col(2) + a.col(2);
  return out;
}

// ---------------------------------------------------------------------------
// Matching

namespace {

void keep_two_smallest(double d, int j, double& d1, int& j1, double& d2) {
  if (d < d1) {
    d2 = d1;
    d1 = d;
    j1 = j;
  } else if (d < d2) {
    d2 = d;
  }
}

std::vector<MatchPair> match_hamming(const Image<std::uint8_t>& a, const Image<std::uint8_t>& b) {
  const Index len = a.cols();
  const Index words = (len + 7) / 8;
  auto pack = [&](const Image<std::uint8_t>& m) {
    std::vector<std::uint64_t> out(static_cast<std::size_t>(m.rows() * words), 0);
    for (Index r = 0; r < m.rows(); ++r) std::memcpy(&out[static_cast<std::size_t>(r * words)], m.row(r).data(), len);
    return out;
  };
  const auto pa = pack(a), pb = pack(b);
  std::vector<MatchPair> out;
  out.reserve(static_cast<std::size_t>(a.rows()));
  for (Index i = 0; i < a.rows(); ++i) {
    const std::uint64_t* ra = &pa[static_cast<std::size_t>(i * words)];
    double d1 = std::numeric_limits<double>::infinity(), d2 = d1;
    int j1 = 0;
    for (Index j = 0; j < b.rows(); ++j) {
      const std::uint64_t* rb = &pb[static_cast<std::size_t>(j * words)];
      int d = 0;
      for (Index w = 0; w < words; ++w) d += std::popcount(ra[w] ^ rb[w]);
      keep_two_smallest(d, static_cast<int>(j), d1, j1, d2);
    }
    out.push_back({static_cast<int>(i), j1, d1, d2});
  }
  return out;
}

template <typename Mat>
std::vector<MatchPair> match_l2(const Mat& a, const Mat& b) {
  std::vector<MatchPair> out;
  out.reserve(static_cast<std::size_t>(a.rows()));
  Eigen::VectorXf dist(b.rows());
  for (Index i = 0; i < a.rows(); ++i) {
    dist = (b.rowwise() - a.row(i)).rowwise().squaredNorm();
    double d1 = std::numeric_limits<double>::infinity(), d2 = d1;
    int j1 = 0;
    for (Index j = 0; j < b.rows(); ++j) keep_two_smallest(dist[j], static_cast<int>(j), d1, j1, d2);
    out.push_back({static_cast<int>(i), j1, std::sqrt(d1), std::sqrt(d2)});
  }
  return out;
}

}  // namespace

std::vector<MatchPair> match_two_nn(const Descriptors& a, const Descriptors& b) {
  if (a.metric != b.metric) throw MetricMismatch("descriptor metrics differ");
  if (a.size() == 0 || b.size() == 0) throw EmptySet("cannot match an empty descriptor set");
  if (a.length() != b.length()) throw MetricMismatch("descriptor lengths differ");
  return a.metric == Metric::Hamming ? match_hamming(a.binary, b.binary) : match_l2(a.real, b.real);
}

std::vector<MatchPair> ratio_filter(std::span<const MatchPair> matches, double ratio) {
  std::vector<MatchPair> out;
  for (const auto& m : matches) {
    double q;
    if (m.d2 == 0) {
      q = m.d1 == 0 ? 0.0 : std::numeric_limits<double>::infinity();
    } else {
      q = m.d1 / m.d2;  // d2 = +inf gives 0
    }
    if (q <= ratio) out.push_back(m);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Robust estimation

namespace {

double cross(const Eigen::Vector2d& u, const Eigen::Vector2d& v) { return u.x() * v.y() - u.y() * v.x(); }

bool nearly_collinear(const Eigen::Vector2d& p, const Eigen::Vector2d& q, const Eigen::Vector2d& r) {
  const Eigen::Vector2d u = q - p, v = r - p;
  const double c = std::abs(cross(u, v));
  return c <= 1e-9 * (u.norm() * v.norm()) || c == 0;
}

bool all_collinear(const Eigen::Matrix2Xd& pts) {
  const Index n = pts.cols();
  Index far = 0;
  double best = 0;
  for (Index i = 1; i < n; ++i) {
    const double d = (pts.col(i) - pts.col(0)).squaredNorm();
    if (d > best) {
      best = d;
      far = i;
    }
  }
  if (best == 0) return true;
  const Eigen::Vector2d dir = pts.col(far) - pts.col(0);
  const double len = std::sqrt(best);
  for (Index i = 1; i < n; ++i) {
    if (std::abs(cross(dir, pts.col(i) - pts.col(0))) / len > 1e-9 * len) return false;
  }
  return true;
}

// Exact solve for three pairs; false if the source triangle is degenerate.
bool solve_minimal(const Eigen::Matrix<double, 2, 3>& a, const Eigen::Matrix<double, 2, 3>& b, AffineTransform& t) {
  Eigen::Matrix3d m;
  m.topRows<2>() = a;
  m.row(2).setOnes();
  Eigen::FullPivLU<Eigen::Matrix3d> lu(m);
  if (!lu.isInvertible()) return false;
  t = b * lu.inverse();
  return t.allFinite();
}

int count_inliers(const AffineTransform& t, const Eigen::Matrix2Xd& a, const Eigen::Matrix2Xd& b, double tol2) {
  const Eigen::Matrix2Xd proj = apply_affine(t, a);
  return static_cast<int>(((proj - b).colwise().squaredNorm().array() <= tol2).count());
}

}  // namespace

AffineTransform fit_affine(const Eigen::Matrix2Xd& a, const Eigen::Matrix2Xd& b) {
  if (a.cols() != b.cols()) throw Error("fit_affine: point counts differ");
  if (a.cols() < 3) throw TooFewMatches("affine fit needs at least 3 pairs");
  if (all_collinear(a)) throw DegenerateInput("affine fit: source points are collinear");

  // Centre for conditioning, then solve [x y 1] * [row]^T = target per output row.
  const Eigen::Vector2d ca = a.rowwise().mean(), cb = b.rowwise().mean();
  Eigen::MatrixX3d design(a.cols(), 3);
  design.leftCols<2>() = (a.colwise() - ca).transpose();
  design.col(2).setOnes();
  const Eigen::MatrixX2d target = (b.colwise() - cb).transpose();
  Eigen::ColPivHouseholderQR<Eigen::MatrixX3d> qr(design);
  if (qr.rank() < 3) throw DegenerateInput("affine fit: rank-deficient system");
  const Eigen::Matrix<double, 3, 2> sol = qr.solve(target);

  AffineTransform t;
  t.leftCols<2>() = sol.topRows<2>().transpose();
  t.col(2) = cb + sol.row(2).transpose() - t.leftCols<2>() * ca;
  return t;
}

std::vector<bool> inlier_flags(const AffineTransform& t, const Eigen::Matrix2Xd& a, const Eigen::Matrix2Xd& b,
                               double tolerance) {
  const Eigen::VectorXd err2 = (apply_affine(t, a) - b).colwise().squaredNorm().transpose();
  std::vector<bool> flags(static_cast<std::size_t>(a.cols()));
  for (Index i = 0; i < a.cols(); ++i) flags[static_cast<std::size_t>(i)] = err2[i] <= tolerance * tolerance;
  return flags;
}

RansacResult ransac_affine(const Eigen::Matrix2Xd& a, const Eigen::Matrix2Xd& b, double tolerance,
                           std::uint64_t seed, int max_iters) {
  if (a.cols() != b.cols()) throw Error("ransac_affine: point counts differ");
  if (!(tolerance > 0)) throw Error("ransac_affine: tolerance must be positive");
  const Index n = a.cols();
  if (n < 3) throw TooFewMatches("RANSAC needs at least 3 matched pairs");
  if (all_collinear(a)) throw DegenerateInput("RANSAC: all source points are collinear");

  const double tol2 = tolerance * tolerance;
  std::mt19937_64 rng(seed);
  const auto un = static_cast<std::uint64_t>(n);

  AffineTransform best_t = identity_affine();
  int best_count = -1;
  for (int it = 0; it < max_iters; ++it) {
    const Index i = static_cast<Index>(rng() % un);
    Index j = static_cast<Index>(rng() % un);
    Index k = static_cast<Index>(rng() % un);
    if (i == j || i == k || j == k) continue;
    if (nearly_collinear(a.col(i), a.col(j), a.col(k))) continue;
    Eigen::Matrix<double, 2, 3> sa, sb;
    sa << a.col(i), a.col(j), a.col(k);
    sb << b.col(i), b.col(j), b.col(k);
    AffineTransform t;
    if (!solve_minimal(sa, sb, t)) continue;
    const int count = count_inliers(t, a, b, tol2);
    if (count > best_count) {
      best_count = count;
      best_t = t;
    }
  }
  if (best_count < 0) throw DegenerateInput("RANSAC: no non-degenerate minimal sample found");

  RansacResult result;
  std::vector<bool> consensus = inlier_flags(best_t, a, b, tolerance);
  AffineTransform t = best_t;
  int count = best_count;
  // Refit on the consensus set; repeat while the consensus keeps growing.
  for (int round = 0; round < 10; ++round) {
    Eigen::Matrix2Xd sa(2, count), sb(2, count);
    for (Index i = 0, c = 0; i < n; ++i) {
      if (!consensus[static_cast<std::size_t>(i)]) continue;
      sa.col(c) = a.col(i);
      sb.col(c) = b.col(i);
      ++c;
    }
    AffineTransform refit;
    try {
      refit = fit_affine(sa, sb);
    } catch (const Error&) {
      break;
    }
    auto flags = inlier_flags(refit, a, b, tolerance);
    const int refit_count = static_cast<int>(std::count(flags.begin(), flags.end(), true));
    const bool first = round == 0;
    if (!first && refit_count <= count) break;
    t = refit;
    consensus = std::move(flags);
    count = refit_count;
    if (count < 3) break;
  }
  result.transform = t;
  result.inliers = inlier_flags(t, a, b, tolerance);
  result.inlier_count = static_cast<int>(std::count(result.inliers.begin(), result.inliers.end(), true));
  return result;
}

// ---------------------------------------------------------------------------
// Resize

namespace {

// Area-overlap weights of source samples for each destination sample along one axis.
struct AxisWeights {
  std::vector<Index> first;
  std::vector<std::vector<float>> w;
};

AxisWeights axis_weights(Index src, Index dst) {
  AxisWeights out;
  const double scale = static_cast<double>(src) / static_cast<double>(dst);
  out.first.resize(static_cast<std::size_t>(dst));
  out.w.resize(static_cast<std::size_t>(dst));
  for (Index d = 0; d < dst; ++d) {
    double lo = d * scale, hi = (d + 1) * scale;
    if (scale < 1) {
      // Upsampling: fall back to linear interpolation around the destination centre.
      const double c = (d + 0.5) * scale - 0.5;
      const double f = std::floor(c);
      const Index i0 = std::clamp<Index>(static_cast<Index>(f), 0, src - 1);
      const Index i1 = std::clamp<Index>(i0 + 1, 0, src - 1);
      const float a = static_cast<float>(std::clamp(c - f, 0.0, 1.0));
      out.first[d] = i0;
      out.w[d] = i1 == i0 ? std::vector<float>{1.0f} : std::vector<float>{1 - a, a};
      continue;
    }
    const Index i0 = static_cast<Index>(std::floor(lo));
    const Index i1 = std::min<Index>(src, static_cast<Index>(std::ceil(hi)));
    out.first[d] = i0;
    for (Index i = i0; i < i1; ++i) {
      const double overlap = std::min<double>(hi, i + 1) - std::max<double>(lo, i);
      out.w[d].push_back(static_cast<float>(overlap / scale));
    }
  }
  return out;
}

}  // namespace

RasterGray8 resize(const RasterGray8& img, Index out_width, Index out_height) {
  if (out_width == img.cols() && out_height == img.rows()) return img;
  const AxisWeights wx = axis_weights(img.cols(), out_width);
  const AxisWeights wy = axis_weights(img.rows(), out_height);
  Image<float> tmp(img.rows(), out_width);
  for (Index y = 0; y < img.rows(); ++y)
    for (Index x = 0; x < out_width; ++x) {
      float acc = 0;
      const auto& w = wx.w[x];
      for (std::size_t k = 0; k < w.size(); ++k) acc += w[k] * img(y, wx.first[x] + static_cast<Index>(k));
      tmp(y, x) = acc;
    }
  RasterGray8 out(out_height, out_width);
  for (Index y = 0; y < out_height; ++y) {
    const auto& w = wy.w[y];
    for (Index x = 0; x < out_width; ++x) {
      float acc = 0;
      for (std::size_t k = 0; k < w.size(); ++k) acc += w[k] * tmp(wy.first[y] + static_cast<Index>(k), x);
      out(y, x) = static_cast<std::uint8_t>(std::clamp(std::lround(acc), 0L, 255L));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sweep

std::vector<int> default_tolerances() {
  std::vector<int> out;
  for (int t = 21; t >= 5; t -= 2) out.push_back(t);
  return out;
}

MatchedPoints match_images(const RasterGray8& recto, const RasterGray8& verso_flipped, const std::string& extractor,
                           const SweepOptions& opts) {
  MatchedPoints mp;
  const Index longest = std::max({recto.rows(), recto.cols(), verso_flipped.rows(), verso_flipped.cols()});
  mp.working_scale = longest > opts.max_working_side ? static_cast<double>(opts.max_working_side) / longest : 1.0;
  auto working = [&](const RasterGray8& img) {
    if (mp.working_scale == 1.0) return img;
    return resize(img, std::max<Index>(1, std::lround(img.cols() * mp.working_scale)),
                  std::max<Index>(1, std::lround(img.rows() * mp.working_scale)));
  };
  const Features fr = detect_and_describe(working(recto), extractor, opts.max_features);
  const Features fv = detect_and_describe(working(verso_flipped), extractor, opts.max_features);
  mp.recto.resize(2, 0);
  mp.verso.resize(2, 0);
  if (fr.keypoints.empty() || fv.keypoints.empty()) return mp;

  const auto matches = ratio_filter(match_two_nn(fr.descriptors, fv.descriptors), opts.ratio);
  mp.recto.resize(2, static_cast<Index>(matches.size()));
  mp.verso.resize(2, static_cast<Index>(matches.size()));
  for (std::size_t i = 0; i < matches.size(); ++i) {
    const auto& kr = fr.keypoints[static_cast<std::size_t>(matches[i].index_a)];
    const auto& kv = fv.keypoints[static_cast<std::size_t>(matches[i].index_b)];
    mp.recto.col(static_cast<Index>(i)) << kr.x, kr.y;
    mp.verso.col(static_cast<Index>(i)) << kv.x, kv.y;
  }
  return mp;
}

const SweepEntry* select_best(std::span<const SweepEntry> table, const std::vector<std::string>& extractors) {
  auto rank = [&](const std::string& name) {
    return std::find(extractors.begin(), extractors.end(), name) - extractors.begin();
  };
  const SweepEntry* best = nullptr;
  for (const auto& e : table) {
    if (!e.eligible) continue;
    if (!best || e.inliers > best->inliers ||
        (e.inliers == best->inliers &&
         (e.tolerance < best->tolerance ||
          (e.tolerance == best->tolerance && rank(e.extractor) < rank(best->extractor))))) {
      best = &e;
    }
  }
  return best;
}

AlignmentResult sweep_alignment(const RasterGray8& recto, const RasterGray8& verso_flipped, const SweepOptions& opts) {
  if (opts.extractors.empty()) throw Error("sweep_alignment: no extractors given");
  AlignmentResult result;
  for (const auto& name : opts.extractors) {
    const MatchedPoints mp = match_images(recto, verso_flipped, name, opts);
    const int total = static_cast<int>(mp.recto.cols());
    for (int tol : opts.tolerances) {
      SweepEntry e;
      e.extractor = name;
      e.tolerance = tol;
      e.total_matches = total;
      if (total >= 3) {
        try {
          const RansacResult r = ransac_affine(mp.verso, mp.recto, tol, opts.seed, opts.ransac_iters);
          // Conjugate the working-resolution estimate back to full resolution.
          // Working coordinates are p_w = s p + c with c = (s - 1) / 2 (pixel-centre resize).
          AffineTransform t = r.transform;
          const double s = mp.working_scale;
          const Eigen::Vector2d c = Eigen::Vector2d::Constant(0.5 * (s - 1.0));
          t.col(2) = (r.transform.col(2) + (r.transform.leftCols<2>() - Eigen::Matrix2d::Identity()) * c) / s;
          const double det = std::abs(determinant(t));
          e.inliers = r.inlier_count;
          e.transform = t;
          e.eligible = det >= opts.min_abs_det && det <= opts.max_abs_det;
        } catch (const DegenerateInput&) {
        }
      }
      result.table.push_back(e);
    }
  }
  const SweepEntry* best = select_best(result.table, opts.extractors);
  if (!best || best->inliers < opts.min_inliers) {
    throw AlignmentFailed("no extractor/tolerance combination reached " + std::to_string(opts.min_inliers) +
                          " inliers");
  }
  result.transform = best->transform;
  result.inlier_count = best->inliers;
  result.extractor = best->extractor;
  result.tolerance = best->tolerance;
  result.total_matches = best->total_matches;
  return result;
}

}  // namespace fragseg
