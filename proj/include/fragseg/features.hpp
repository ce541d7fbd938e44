#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "fragseg/image.hpp"

namespace fragseg {

struct Keypoint {
  double x = 0, y = 0;      // level-0 pixel coordinates
  double scale = 1;         // pyramid scale of the detection level
  double orientation = 0;   // radians
  float response = 0;
};

enum class Metric { L2, Hamming };

/// One row per keypoint. Binary descriptors are packed bytes, real ones floats.
struct Descriptors {
  Metric metric = Metric::Hamming;
  Image<std::uint8_t> binary;
  Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> real;

  Index size() const { return metric == Metric::Hamming ? binary.rows() : real.rows(); }
  Index length() const { return metric == Metric::Hamming ? binary.cols() : real.cols(); }
};

struct Features {
  std::vector<Keypoint> keypoints;
  Descriptors descriptors;
};

using ExtractorFn = std::function<Features(const RasterGray8& img, int max_features)>;

/// Name -> extractor. "orb" is built in; "sift", "kaze" and "akaze" are registered
/// when the OpenCV feature module is available.
class ExtractorRegistry {
 public:
  static ExtractorRegistry& instance();

  void add(std::string name, ExtractorFn fn);
  bool contains(std::string_view name) const;
  std::vector<std::string> names() const;
  const ExtractorFn& get(std::string_view name) const;

 private:
  ExtractorRegistry();
  std::map<std::string, ExtractorFn, std::less<>> extractors_;
};

/// Deterministic for a fixed image and extractor. Throws UnknownExtractor.
Features detect_and_describe(const RasterGray8& img, std::string_view extractor, int max_features);

/// SIFT first when available, then the native ORB.
std::vector<std::string> default_extractors();

struct OrbParams {
  int levels = 4;
  double scale_factor = 1.2;
  int fast_threshold = 20;
  int edge_margin = 19;
};

/// Oriented FAST-9 corners ranked by Harris response, 256-bit rotated BRIEF descriptors.
Features orb_detect_and_describe(const RasterGray8& img, int max_features, const OrbParams& params = {});

namespace detail {
void register_opencv_extractors(ExtractorRegistry& registry);
}

}  // namespace fragseg
