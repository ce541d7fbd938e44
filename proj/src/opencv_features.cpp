// SIFT / KAZE / AKAZE plugins for the extractor registry, backed by OpenCV.
#include <algorithm>
#include <numbers>

#include <opencv2/core.hpp>
#include <opencv2/features2d.hpp>

#include "fragseg/features.hpp"

namespace fragseg::detail {
namespace {

Features run_opencv(const cv::Ptr<cv::Feature2D>& algo, const RasterGray8& img, int max_features) {
  // RasterGray8 is contiguous row-major; wrap without copying.
  const cv::Mat view(static_cast<int>(img.rows()), static_cast<int>(img.cols()), CV_8UC1,
                     const_cast<std::uint8_t*>(img.data()));
  std::vector<cv::KeyPoint> kps;
  algo->detect(view, kps);

  // Detection may run in parallel; impose a total order before truncating.
  std::sort(kps.begin(), kps.end(), [](const cv::KeyPoint& a, const cv::KeyPoint& b) {
    if (a.response != b.response) return a.response > b.response;
    if (a.pt.y != b.pt.y) return a.pt.y < b.pt.y;
    if (a.pt.x != b.pt.x) return a.pt.x < b.pt.x;
    if (a.size != b.size) return a.size < b.size;
    return a.angle < b.angle;
  });
  if (max_features >= 0 && static_cast<int>(kps.size()) > max_features) kps.resize(max_features);

  cv::Mat desc;
  if (!kps.empty()) algo->compute(view, kps, desc);

  Features out;
  const bool binary = desc.empty() ? algo->defaultNorm() == cv::NORM_HAMMING : desc.depth() == CV_8U;
  out.descriptors.metric = binary ? Metric::Hamming : Metric::L2;
  const Index n = static_cast<Index>(kps.size());
  const Index len = desc.empty() ? 0 : desc.cols;
  if (binary) {
    out.descriptors.binary.resize(n, len);
  } else {
    out.descriptors.real.resize(n, len);
  }
  for (Index i = 0; i < n; ++i) {
    const auto& k = kps[static_cast<std::size_t>(i)];
    out.keypoints.push_back({k.pt.x, k.pt.y, k.size, k.angle * std::numbers::pi / 180.0, k.response});
    for (Index j = 0; j < len; ++j) {
      if (binary) {
        out.descriptors.binary(i, j) = desc.at<std::uint8_t>(static_cast<int>(i), static_cast<int>(j));
      } else {
        out.descriptors.real(i, j) = desc.at<float>(static_cast<int>(i), static_cast<int>(j));
      }
    }
  }
  return out;
}

}  // namespace

void register_opencv_extractors(ExtractorRegistry& registry) {
  registry.add("sift", [](const RasterGray8& img, int max_features) {
    return run_opencv(cv::SIFT::create(), img, max_features);
  });
  registry.add("kaze", [](const RasterGray8& img, int max_features) {
    return run_opencv(cv::KAZE::create(), img, max_features);
  });
  registry.add("akaze", [](const RasterGray8& img, int max_features) {
    return run_opencv(cv::AKAZE::create(), img, max_features);
  });
}

}  // namespace fragseg::detail
