#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fragseg/geometry.hpp"
#include "fragseg/image.hpp"

namespace fragseg {

/// Resolution of the reference image collection; every pixel-denominated default
/// is expressed at this density.
inline constexpr double kReferencePpi = 1215.0;

struct FragmentImageSet {
  std::string plate_id;
  std::string fragment_id;
  RasterRGB recto_color;
  RasterGray8 recto_ir;
  RasterRGB verso_color;
  RasterGray8 verso_ir;
  double ppi = kReferencePpi;

  std::string id() const { return plate_id + "_" + fragment_id; }
};

struct ImageSetPaths {
  std::filesystem::path recto_color, recto_ir, verso_color, verso_ir;
};

/// Checks that each side's colour and IR rasters share dimensions.
void check_image_set(const FragmentImageSet& set);

FragmentImageSet load_image_set(const ImageSetPaths& paths, std::optional<double> ppi = std::nullopt);

/// `<root>/<set_id>/{recto,verso}_{color,ir}.(png|tif|tiff)`.
ImageSetPaths find_image_set(const std::filesystem::path& root, const std::string& set_id);
FragmentImageSet load_image_set(const std::filesystem::path& root, const std::string& set_id,
                                std::optional<double> ppi = std::nullopt);

/// Sub-directories of `root` holding a recto colour image, sorted by name.
std::vector<std::string> list_image_sets(const std::filesystem::path& root);

/// "1095_2" -> {"1095", "2"}; ids without '_' yield an empty fragment id.
std::pair<std::string, std::string> split_set_id(const std::string& set_id);

/// Rec. 601 luma, rounded half up.
RasterGray8 to_grayscale(const RasterRGB& img);

/// Hexcone HSV with hue scaled so a full turn spans 256 values (wrapping).
RasterHSV rgb_to_hsv(const RasterRGB& img);
std::array<std::uint8_t, 3> rgb_to_hsv(std::uint8_t r, std::uint8_t g, std::uint8_t b);

/// Every *.wkt in `dir`, sorted by file name. Missing or empty directory -> empty list.
std::vector<PolygonWithHoles> load_wkt_ground_truth(const std::filesystem::path& dir);
/// `<root>/<set_id>/gt/*.wkt`.
std::vector<PolygonWithHoles> load_wkt_ground_truth(const std::filesystem::path& root,
                                                    const std::string& set_id);

struct DatasetSplit {
  std::vector<std::string> train, validation, test;
};

struct SplitSizes {
  std::size_t train = 100, validation = 20, test = 19;
};

/// Assigns whole groups (manuscripts) to train, validation and test in a seeded order
/// so that no group straddles two lists. Sizes are targets; a group is never split.
DatasetSplit split_by_group(const std::vector<std::string>& ids,
                            const std::function<std::string(const std::string&)>& group_of,
                            SplitSizes sizes = {}, std::uint64_t seed = 0);

}  // namespace fragseg
