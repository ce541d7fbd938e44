#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "fragseg/features.hpp"
#include "fragseg/image.hpp"

namespace fragseg {

/// [[a, b, tx], [c, d, ty]] : (x, y) -> (a x + b y + tx, c x + d y + ty).
using AffineTransform = Eigen::Matrix<double, 2, 3>;

inline AffineTransform identity_affine() { return AffineTransform::Identity(); }

inline double determinant(const AffineTransform& t) { return t(0, 0) * t(1, 1) - t(0, 1) * t(1, 0); }

template <typename Derived>
Eigen::Matrix<double, 2, Derived::ColsAtCompileTime> apply_affine(const AffineTransform& t,
                                                                 const Eigen::MatrixBase<Derived>& pts) {
  return (t.leftCols<2>() * pts).colwise() + t.col(2);
}

/// Throws SingularTransform when the linear part is not invertible.
AffineTransform invert_affine(const AffineTransform& t);

/// a ∘ b : first b, then a.
AffineTransform compose_affine(const AffineTransform& a, const AffineTransform& b);

// ---------------------------------------------------------------------------
// Matching

struct MatchPair {
  int index_a = 0;
  int index_b = 0;
  double d1 = 0;  // best distance
  double d2 = std::numeric_limits<double>::infinity();  // second best (+inf if b has one row)
};

/// For every row of `a`, its two nearest rows of `b`. Throws MetricMismatch / EmptySet.
std::vector<MatchPair> match_two_nn(const Descriptors& a, const Descriptors& b);

/// Keeps pairs with d1 / d2 <= ratio; 0/0 counts as 0.
std::vector<MatchPair> ratio_filter(std::span<const MatchPair> matches, double ratio = 0.80);

// ---------------------------------------------------------------------------
// Robust estimation

struct RansacResult {
  AffineTransform transform = identity_affine();
  std::vector<bool> inliers;
  int inlier_count = 0;
};

/// Least-squares affine map taking `a` onto `b` (columns are points).
/// Throws TooFewMatches (< 3) or DegenerateInput (all points collinear).
AffineTransform fit_affine(const Eigen::Matrix2Xd& a, const Eigen::Matrix2Xd& b);

/// Minimal samples of three non-collinear pairs for a fixed number of iterations,
/// then a least-squares refit on the largest consensus set. A pair is an inlier iff
/// |T(a) - b| <= tolerance for the returned T.
RansacResult ransac_affine(const Eigen::Matrix2Xd& a, const Eigen::Matrix2Xd& b, double tolerance,
                           std::uint64_t seed, int max_iters = 2000);

std::vector<bool> inlier_flags(const AffineTransform& t, const Eigen::Matrix2Xd& a, const Eigen::Matrix2Xd& b,
                               double tolerance);

// ---------------------------------------------------------------------------
// Extractor x tolerance sweep

std::vector<int> default_tolerances();  // 21, 19, ..., 5

struct SweepOptions {
  std::vector<std::string> extractors = default_extractors();
  std::vector<int> tolerances = default_tolerances();
  double ratio = 0.80;
  int min_inliers = 10;
  int max_features = 4000;
  int ransac_iters = 2000;
  int max_working_side = 2400;
  double min_abs_det = 0.5;
  double max_abs_det = 2.0;
  std::uint64_t seed = 0;
};

struct SweepEntry {
  std::string extractor;
  int tolerance = 0;
  int inliers = 0;
  int total_matches = 0;
  bool eligible = false;  // transform exists and passes the determinant bound
  AffineTransform transform = identity_affine();
};

struct AlignmentResult {
  AffineTransform transform = identity_affine();  // flipped-verso -> recto, full resolution
  int inlier_count = 0;
  std::string extractor;
  int tolerance = 0;
  int total_matches = 0;
  std::vector<SweepEntry> table;  // every (extractor, tolerance) combination, in sweep order
};

/// Matched keypoint coordinates after the ratio test, at working resolution.
struct MatchedPoints {
  Eigen::Matrix2Xd recto, verso;
  double working_scale = 1.0;  // working = full * working_scale
};

MatchedPoints match_images(const RasterGray8& recto, const RasterGray8& verso_flipped, const std::string& extractor,
                           const SweepOptions& opts);

/// Aligns the (already flipped) verso to the recto. Returns the combination with most
/// inliers; ties go to the smaller tolerance, then to the earlier extractor.
/// Throws AlignmentFailed when no combination reaches `min_inliers`.
AlignmentResult sweep_alignment(const RasterGray8& recto, const RasterGray8& verso_flipped,
                                const SweepOptions& opts = {});

/// Picks the winner from a filled table (exposed for exhaustive re-checks).
const SweepEntry* select_best(std::span<const SweepEntry> table, const std::vector<std::string>& extractors);

// ---------------------------------------------------------------------------
// Warping: out(p) = src(T^-1 p); bilinear for intensities, nearest for masks,
// samples outside the source read as 0 / background.

namespace detail {

inline AffineTransform checked_inverse(const AffineTransform& t) { return invert_affine(t); }

template <typename Scalar>
Scalar sample_bilinear(const Image<Scalar>& src, double x, double y) {
  const double fx = std::floor(x), fy = std::floor(y);
  const Index x0 = static_cast<Index>(fx), y0 = static_cast<Index>(fy);
  const double ax = x - fx, ay = y - fy;
  auto at = [&](Index yy, Index xx) -> double {
    if (xx < 0 || yy < 0 || xx >= src.cols() || yy >= src.rows()) return 0.0;
    return static_cast<double>(src(yy, xx));
  };
  double v = at(y0, x0);
  if (ax != 0 || ay != 0) {
    v = (1 - ay) * ((1 - ax) * at(y0, x0) + ax * at(y0, x0 + 1)) +
        ay * ((1 - ax) * at(y0 + 1, x0) + ax * at(y0 + 1, x0 + 1));
  }
  if constexpr (std::is_integral_v<Scalar>) {
    return static_cast<Scalar>(std::clamp(std::lround(v), long{std::numeric_limits<Scalar>::min()},
                                          long{std::numeric_limits<Scalar>::max()}));
  } else {
    return static_cast<Scalar>(v);
  }
}

}  // namespace detail

template <typename Scalar>
Image<Scalar> warp(const Image<Scalar>& src, const AffineTransform& t, Index out_width, Index out_height) {
  const AffineTransform inv = detail::checked_inverse(t);
  Image<Scalar> out(out_height, out_width);
  for (Index y = 0; y < out_height; ++y) {
    // Source position moves linearly along a row.
    double sx = inv(0, 1) * y + inv(0, 2);
    double sy = inv(1, 1) * y + inv(1, 2);
    for (Index x = 0; x < out_width; ++x) {
      const double px = sx + inv(0, 0) * x;
      const double py = sy + inv(1, 0) * x;
      if constexpr (std::is_same_v<Scalar, bool>) {
        const long ix = std::lround(px), iy = std::lround(py);
        out(y, x) = ix >= 0 && iy >= 0 && ix < src.cols() && iy < src.rows() && src(iy, ix);
      } else {
        out(y, x) = detail::sample_bilinear(src, px, py);
      }
    }
  }
  return out;
}

template <typename Tag>
Raster3<Tag> warp(const Raster3<Tag>& src, const AffineTransform& t, Index out_width, Index out_height) {
  Raster3<Tag> out;
  for (int c = 0; c < 3; ++c) out.planes[c] = warp(src.planes[c], t, out_width, out_height);
  return out;
}

/// Area-averaging resize by an arbitrary factor (used for working-resolution matching).
RasterGray8 resize(const RasterGray8& img, Index out_width, Index out_height);

}  // namespace fragseg
