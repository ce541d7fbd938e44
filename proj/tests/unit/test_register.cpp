#include <gtest/gtest.h>

#include <random>

#include "fragseg/features.hpp"
#include "fragseg/register.hpp"
#include "fragseg/synth.hpp"
#include "test_support.hpp"

using namespace fragseg;
using fragseg::testing::count;

namespace {

Descriptors real_descriptors(const std::vector<std::vector<float>>& rows) {
  Descriptors d;
  d.metric = Metric::L2;
  d.real.resize(static_cast<Index>(rows.size()), static_cast<Index>(rows.empty() ? 0 : rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) d.real(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return d;
}

MatchPair pair(double d1, double d2) {
  MatchPair m;
  m.d1 = d1;
  m.d2 = d2;
  return m;
}

AffineTransform sample_transform() {
  AffineTransform t;
  const double a = 0.03;
  t << 1.01 * std::cos(a), -std::sin(a), 12.5, std::sin(a), 0.99 * std::cos(a), -7.25;
  return t;
}

double max_abs_diff(const AffineTransform& a, const AffineTransform& b) { return (a - b).cwiseAbs().maxCoeff(); }

const SyntheticSet& small_set() {
  static const SyntheticSet s = [] {
    SynthParams p;
    p.size = 600;
    p.seed = 5;
    return generate_synthetic_set(p, 0);
  }();
  return s;
}

}  // namespace

TEST(Affine, InverseAndCompose) {
  const AffineTransform t = sample_transform();
  const AffineTransform i = invert_affine(t);
  EXPECT_LT(max_abs_diff(compose_affine(t, i), identity_affine()), 1e-12);
  EXPECT_LT(max_abs_diff(compose_affine(i, t), identity_affine()), 1e-12);
  AffineTransform singular;
  singular << 1, 2, 0, 2, 4, 0;
  EXPECT_THROW(invert_affine(singular), SingularTransform);
}

TEST(Features, ConstantImageHasNoKeypoints) {
  const RasterGray8 flat = RasterGray8::Constant(128, 128, 90);
  for (const auto& name : default_extractors()) EXPECT_TRUE(detect_and_describe(flat, name, 500).keypoints.empty());
}

TEST(Features, UnknownExtractorThrows) {
  EXPECT_THROW(detect_and_describe(RasterGray8::Zero(32, 32), "none", 10), UnknownExtractor);
  EXPECT_FALSE(ExtractorRegistry::instance().contains("none"));
  EXPECT_TRUE(ExtractorRegistry::instance().contains("orb"));
}

TEST(Features, DefaultExtractorsEndWithNativeOrb) {
  const auto names = default_extractors();
  ASSERT_FALSE(names.empty());
  EXPECT_EQ(names.back(), "orb");
}

TEST(Features, DeterministicAndBounded) {
  const RasterGray8& img = small_set().images.recto_ir;
  for (const auto& name : default_extractors()) {
    const Features a = detect_and_describe(img, name, 300);
    const Features b = detect_and_describe(img, name, 300);
    ASSERT_EQ(a.keypoints.size(), b.keypoints.size()) << name;
    EXPECT_LE(a.keypoints.size(), 300u) << name;
    EXPECT_EQ(a.descriptors.size(), static_cast<Index>(a.keypoints.size())) << name;
    for (std::size_t i = 0; i < a.keypoints.size(); ++i) {
      EXPECT_EQ(a.keypoints[i].x, b.keypoints[i].x);
      EXPECT_EQ(a.keypoints[i].y, b.keypoints[i].y);
    }
  }
}

TEST(Features, TranslatedCornerKeepsItsDescriptor) {
  // b is a shifted 7 px to the right.
  const RasterGray8& src = small_set().images.recto_ir;
  const RasterGray8 a = src.block(150, 150, 300, 300);
  const RasterGray8 b = src.block(150, 143, 300, 300);
  const Features fa = orb_detect_and_describe(a, 500);
  const Features fb = orb_detect_and_describe(b, 500);
  ASSERT_FALSE(fa.keypoints.empty());
  int checked = 0, good = 0;
  for (std::size_t i = 0; i < fa.keypoints.size(); ++i) {
    const auto& ka = fa.keypoints[i];
    if (ka.scale != 1.0) continue;
    for (std::size_t j = 0; j < fb.keypoints.size(); ++j) {
      const auto& kb = fb.keypoints[j];
      if (kb.scale != 1.0 || std::abs(kb.x - ka.x - 7) > 0.01 || std::abs(kb.y - ka.y) > 0.01) continue;
      ++checked;
      int bits = 0;
      for (Index k = 0; k < fa.descriptors.length(); ++k)
        bits += __builtin_popcount(fa.descriptors.binary(static_cast<Index>(i), k) ^ fb.descriptors.binary(static_cast<Index>(j), k));
      good += bits <= 16;
    }
  }
  ASSERT_GT(checked, 10);
  EXPECT_GE(good, checked * 9 / 10);
}

TEST(Matching, SingleCandidateHasInfiniteSecondDistance) {
  const auto a = real_descriptors({{0, 0}, {1, 1}});
  const auto b = real_descriptors({{3, 4}});
  const auto m = match_two_nn(a, b);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_TRUE(std::isinf(m[0].d2));
  EXPECT_DOUBLE_EQ(m[0].d1, 5.0);
  EXPECT_EQ(ratio_filter(m).size(), 2u);
}

TEST(Matching, ExactMatchHasZeroDistance) {
  const auto m = match_two_nn(real_descriptors({{1, 2}}), real_descriptors({{4, 6}, {1, 2}}));
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].index_b, 1);
  EXPECT_DOUBLE_EQ(m[0].d1, 0.0);
  EXPECT_DOUBLE_EQ(m[0].d2, 5.0);
}

TEST(Matching, Errors) {
  Descriptors bin;
  bin.binary = Image<std::uint8_t>::Zero(2, 32);
  EXPECT_THROW(match_two_nn(bin, real_descriptors({{1, 2}})), MetricMismatch);
  Descriptors empty_bin;
  empty_bin.binary.resize(0, 32);
  EXPECT_THROW(match_two_nn(bin, empty_bin), EmptySet);
  EXPECT_THROW(match_two_nn(real_descriptors({{1, 2}}), real_descriptors({{1, 2, 3}})), MetricMismatch);
}

TEST(Matching, HammingMatchesBruteForce) {
  std::mt19937_64 rng(9);
  Descriptors a, b;
  a.binary.resize(200, 32);
  b.binary.resize(150, 32);
  for (Index i = 0; i < a.binary.size(); ++i) a.binary.data()[i] = static_cast<std::uint8_t>(rng());
  for (Index i = 0; i < b.binary.size(); ++i) b.binary.data()[i] = static_cast<std::uint8_t>(rng());
  const auto matches = match_two_nn(a, b);
  ASSERT_EQ(matches.size(), 200u);
  for (Index i = 0; i < 200; ++i) {
    std::vector<int> d;
    for (Index j = 0; j < 150; ++j) {
      int bits = 0;
      for (Index k = 0; k < 32; ++k) bits += __builtin_popcount(a.binary(i, k) ^ b.binary(j, k));
      d.push_back(bits);
    }
    std::vector<int> sorted = d;
    std::sort(sorted.begin(), sorted.end());
    const auto& m = matches[static_cast<std::size_t>(i)];
    EXPECT_EQ(m.index_a, i);
    EXPECT_EQ(m.d1, sorted[0]);
    EXPECT_EQ(m.d2, sorted[1]);
    EXPECT_EQ(d[static_cast<std::size_t>(m.index_b)], sorted[0]);
  }
}

TEST(Matching, L2MatchesBruteForce) {
  std::mt19937_64 rng(10);
  std::normal_distribution<float> n(0, 1);
  std::vector<std::vector<float>> ra(200, std::vector<float>(16)), rb(120, std::vector<float>(16));
  for (auto& r : ra)
    for (auto& v : r) v = n(rng);
  for (auto& r : rb)
    for (auto& v : r) v = n(rng);
  const auto matches = match_two_nn(real_descriptors(ra), real_descriptors(rb));
  for (std::size_t i = 0; i < ra.size(); ++i) {
    std::vector<double> d;
    for (const auto& r : rb) {
      double s = 0;
      for (std::size_t k = 0; k < 16; ++k) s += (double(ra[i][k]) - r[k]) * (double(ra[i][k]) - r[k]);
      d.push_back(std::sqrt(s));
    }
    std::vector<double> sorted = d;
    std::sort(sorted.begin(), sorted.end());
    EXPECT_NEAR(matches[i].d1, sorted[0], 1e-4);
    EXPECT_NEAR(matches[i].d2, sorted[1], 1e-4);
  }
}

TEST(RatioFilter, BoundaryIsInclusive) {
  EXPECT_EQ(ratio_filter(std::vector{pair(0.5, 1.0)}).size(), 1u);
  EXPECT_EQ(ratio_filter(std::vector{pair(0.9, 1.0)}).size(), 0u);
  EXPECT_EQ(ratio_filter(std::vector{pair(0.8, 1.0)}).size(), 1u);
  EXPECT_EQ(ratio_filter(std::vector{pair(0.8001, 1.0)}).size(), 0u);
  EXPECT_EQ(ratio_filter(std::vector{pair(0, 0)}).size(), 1u);
  EXPECT_EQ(ratio_filter(std::vector{pair(1, 0)}).size(), 0u);
  EXPECT_EQ(ratio_filter(std::vector{pair(80, 100)}).size(), 1u);
}

TEST(FitAffine, ErrorsAndExactFit) {
  Eigen::Matrix2Xd a(2, 2), b(2, 2);
  a << 0, 1, 0, 1;
  b = a;
  EXPECT_THROW(fit_affine(a, b), TooFewMatches);
  Eigen::Matrix2Xd line(2, 4);
  line << 0, 1, 2, 3, 0, 1, 2, 3;
  EXPECT_THROW(fit_affine(line, line), DegenerateInput);
  Eigen::Matrix2Xd tri(2, 3);
  tri << 0, 10, 0, 0, 0, 10;
  const AffineTransform t = sample_transform();
  EXPECT_LT(max_abs_diff(fit_affine(tri, apply_affine(t, tri)), t), 1e-12);
}

TEST(Ransac, ExactDataRecoversTransform) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0, 500);
  Eigen::Matrix2Xd a(2, 20);
  for (Index i = 0; i < 20; ++i) a.col(i) << u(rng), u(rng);
  const AffineTransform t = sample_transform();
  const RansacResult r = ransac_affine(a, apply_affine(t, a), 3, 1);
  EXPECT_LT(max_abs_diff(r.transform, t), 1e-6);
  EXPECT_EQ(r.inlier_count, 20);
}

TEST(Ransac, OutliersAreRejected) {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> u(0, 500);
  Eigen::Matrix2Xd a(2, 29), b(2, 29);
  const AffineTransform t = sample_transform();
  for (Index i = 0; i < 29; ++i) {
    a.col(i) << u(rng), u(rng);
    if (i < 20) {
      b.col(i) = apply_affine(t, Eigen::Vector2d(a.col(i)));
    } else {
      b.col(i) << u(rng), u(rng);
    }
  }
  const RansacResult r = ransac_affine(a, b, 3, 2);
  for (Index i = 0; i < 20; ++i) {
    EXPECT_TRUE(r.inliers[static_cast<std::size_t>(i)]);
    EXPECT_LE((apply_affine(r.transform, Eigen::Vector2d(a.col(i))) - b.col(i)).norm(), 3.0);
  }
  // The reported flags agree with the returned transform.
  EXPECT_EQ(r.inliers, inlier_flags(r.transform, a, b, 3));
}

TEST(Ransac, TooFewPairs) {
  Eigen::Matrix2Xd a(2, 2);
  a << 0, 1, 0, 1;
  EXPECT_THROW(ransac_affine(a, a, 3, 0), TooFewMatches);
}

TEST(Ransac, SameSeedSameResult) {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> u(0, 300);
  Eigen::Matrix2Xd a(2, 60), b(2, 60);
  for (Index i = 0; i < 60; ++i) {
    a.col(i) << u(rng), u(rng);
    b.col(i) = i % 3 ? Eigen::Vector2d(apply_affine(sample_transform(), Eigen::Vector2d(a.col(i)))) : Eigen::Vector2d(u(rng), u(rng));
  }
  const RansacResult r1 = ransac_affine(a, b, 2, 77);
  const RansacResult r2 = ransac_affine(a, b, 2, 77);
  EXPECT_TRUE((r1.transform.array() == r2.transform.array()).all());
  EXPECT_EQ(r1.inliers, r2.inliers);
}

TEST(Sweep, DefaultTolerances) {
  EXPECT_EQ(default_tolerances(), (std::vector<int>{21, 19, 17, 15, 13, 11, 9, 7, 5}));
}

TEST(Sweep, SelectBestPrefersInliersThenSmallerToleranceThenEarlierExtractor) {
  std::vector<SweepEntry> table;
  auto add = [&](std::string name, int tol, int inliers, bool eligible = true) {
    SweepEntry e;
    e.extractor = std::move(name);
    e.tolerance = tol;
    e.inliers = inliers;
    e.eligible = eligible;
    table.push_back(e);
  };
  add("a", 21, 50);
  add("a", 19, 50);
  add("b", 19, 50);
  add("b", 5, 99, false);
  const std::vector<std::string> names{"a", "b"};
  const SweepEntry* best = select_best(table, names);
  ASSERT_NE(best, nullptr);
  EXPECT_EQ(best->extractor, "a");
  EXPECT_EQ(best->tolerance, 19);
  add("b", 21, 51);
  EXPECT_EQ(select_best(table, names)->extractor, "b");
  EXPECT_EQ(select_best(std::span<const SweepEntry>{}, names), nullptr);
}

TEST(Sweep, RecoversSyntheticTransform) {
  const SyntheticSet& s = small_set();
  const RasterGray8 verso = flip_horizontal(s.images.verso_ir);
  const AlignmentResult r = sweep_alignment(s.images.recto_ir, verso);
  EXPECT_EQ(r.table.size(), default_extractors().size() * 9);
  double err = 0;
  int n = 0;
  for (int y = 50; y < 600; y += 100)
    for (int x = 50; x < 600; x += 100) {
      const Eigen::Vector2d p(x, y);
      err += (apply_affine(r.transform, p) - apply_affine(s.verso_to_recto, p)).norm();
      ++n;
    }
  EXPECT_LE(err / n, 1.0);
  // The winner is the best row of its own table.
  for (const auto& e : r.table)
    if (e.eligible) EXPECT_LE(e.inliers, r.inlier_count);
}

TEST(Sweep, IdenticalImagesGiveIdentity) {
  const RasterGray8& img = small_set().images.recto_ir;
  SweepOptions opts;
  opts.extractors = {"orb"};
  const AlignmentResult r = sweep_alignment(img, img, opts);
  EXPECT_LE(max_abs_diff(r.transform, identity_affine()), 1e-3);
  EXPECT_EQ(r.inlier_count, r.total_matches);
}

TEST(Sweep, UnrelatedNoiseFails) {
  std::mt19937_64 rng(40);
  RasterGray8 a(300, 300), b(300, 300);
  for (Index i = 0; i < a.size(); ++i) a.data()[i] = static_cast<std::uint8_t>(rng());
  for (Index i = 0; i < b.size(); ++i) b.data()[i] = static_cast<std::uint8_t>(rng());
  EXPECT_THROW(sweep_alignment(a, b), AlignmentFailed);
}

TEST(Warp, IdentityIsExact) {
  std::mt19937_64 rng(41);
  RasterGray8 img(20, 30);
  for (Index i = 0; i < img.size(); ++i) img.data()[i] = static_cast<std::uint8_t>(rng());
  EXPECT_TRUE((warp(img, identity_affine(), 30, 20) == img).all());
  const Mask m = fragseg::testing::random_mask(rng, 30, 20, 0.5);
  EXPECT_TRUE(fragseg::testing::equal(warp(m, identity_affine(), 30, 20), m));
}

TEST(Warp, TranslationShiftsMask) {
  Mask m = Mask::Zero(10, 20);
  m.block(2, 3, 4, 5).setConstant(true);
  m(9, 19) = true;
  AffineTransform t = identity_affine();
  t(0, 2) = 5;
  const Mask w = warp(m, t, 20, 10);
  EXPECT_TRUE(w.block(2, 8, 4, 5).all());
  EXPECT_EQ(count(w), 20);  // the corner pixel leaves the canvas
}

TEST(Warp, BilinearMidpoint) {
  RasterGray8 img(1, 2);
  img << 10, 20;
  AffineTransform t = identity_affine();
  t(0, 2) = -0.5;
  const RasterGray8 w = warp(img, t, 2, 1);
  EXPECT_EQ(w(0, 0), 15);
  EXPECT_EQ(w(0, 1), 10);  // half of the sample lies outside and reads as 0
}

TEST(Warp, SingularThrows) {
  AffineTransform t = AffineTransform::Zero();
  EXPECT_THROW(warp(Mask(Mask::Zero(4, 4)), t, 4, 4), SingularTransform);
}

TEST(Resize, PreservesConstantAndMean) {
  const RasterGray8 flat = RasterGray8::Constant(30, 40, 77);
  const RasterGray8 r = resize(flat, 17, 13);
  EXPECT_EQ(r.cols(), 17);
  EXPECT_EQ(r.rows(), 13);
  EXPECT_TRUE((r == 77).all());
}
