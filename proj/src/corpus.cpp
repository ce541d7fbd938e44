#include "fragseg/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "fragseg/io.hpp"

namespace fs = std::filesystem;

namespace fragseg {

void check_image_set(const FragmentImageSet& set) {
  if (!(set.ppi > 0)) throw Error("ppi must be positive");
  if (!same_dims(set.recto_color, set.recto_ir))
    throw DimensionMismatch("recto colour and recto IR dimensions differ");
  if (!same_dims(set.verso_color, set.verso_ir))
    throw DimensionMismatch("verso colour and verso IR dimensions differ");
}

FragmentImageSet load_image_set(const ImageSetPaths& paths, std::optional<double> ppi) {
  for (const auto* p : {&paths.recto_color, &paths.recto_ir, &paths.verso_color, &paths.verso_ir}) {
    if (!fs::exists(*p)) throw MissingFile("missing image: " + p->string());
  }
  FragmentImageSet set;
  set.recto_color = io::read_rgb(paths.recto_color);
  set.recto_ir = io::read_gray8(paths.recto_ir);
  set.verso_color = io::read_rgb(paths.verso_color);
  set.verso_ir = io::read_gray8(paths.verso_ir);
  set.ppi = ppi.value_or(kReferencePpi);
  check_image_set(set);
  return set;
}

namespace {

fs::path find_with_extension(const fs::path& dir, const std::string& stem) {
  for (const char* ext : {".png", ".tif", ".tiff", ".PNG", ".TIF", ".TIFF"}) {
    fs::path p = dir / (stem + ext);
    if (fs::exists(p)) return p;
  }
  return dir / (stem + ".png");
}

}  // namespace

std::pair<std::string, std::string> split_set_id(const std::string& set_id) {
  const auto pos = set_id.find('_');
  if (pos == std::string::npos) return {set_id, {}};
  return {set_id.substr(0, pos), set_id.substr(pos + 1)};
}

ImageSetPaths find_image_set(const fs::path& root, const std::string& set_id) {
  const fs::path dir = root / set_id;
  return {find_with_extension(dir, "recto_color"), find_with_extension(dir, "recto_ir"),
          find_with_extension(dir, "verso_color"), find_with_extension(dir, "verso_ir")};
}

FragmentImageSet load_image_set(const fs::path& root, const std::string& set_id, std::optional<double> ppi) {
  FragmentImageSet set = load_image_set(find_image_set(root, set_id), ppi);
  std::tie(set.plate_id, set.fragment_id) = split_set_id(set_id);
  return set;
}

std::vector<std::string> list_image_sets(const fs::path& root) {
  std::vector<std::string> ids;
  if (!fs::is_directory(root)) return ids;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_directory()) continue;
    const std::string name = entry.path().filename().string();
    if (fs::exists(find_with_extension(entry.path(), "recto_color"))) ids.push_back(name);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::array<std::uint8_t, 3> rgb_to_hsv(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const int mx = std::max({r, g, b});
  const int mn = std::min({r, g, b});
  const int delta = mx - mn;
  if (mx == 0) return {0, 0, 0};
  const int s = (2 * 255 * delta + mx) / (2 * mx);
  if (delta == 0) return {0, static_cast<std::uint8_t>(s), static_cast<std::uint8_t>(mx)};

  // Hue as a fraction of a turn: (sector * delta + diff) / (6 * delta).
  int num;
  if (mx == r) {
    num = static_cast<int>(g) - b;
    if (num < 0) num += 6 * delta;
  } else if (mx == g) {
    num = 2 * delta + (static_cast<int>(b) - r);
  } else {
    num = 4 * delta + (static_cast<int>(r) - g);
  }
  const long n = 256L * num;
  const long d = 6L * delta;
  const long h = ((2 * n + d) / (2 * d)) % 256;
  return {static_cast<std::uint8_t>(h), static_cast<std::uint8_t>(s), static_cast<std::uint8_t>(mx)};
}

RasterHSV rgb_to_hsv(const RasterRGB& img) {
  RasterHSV out(img.width(), img.height());
  const Index n = img.planes[0].size();
  const auto* r = img.planes[0].data();
  const auto* g = img.planes[1].data();
  const auto* b = img.planes[2].data();
  auto* h = out.planes[0].data();
  auto* s = out.planes[1].data();
  auto* v = out.planes[2].data();
  for (Index i = 0; i < n; ++i) {
    const auto hsv = rgb_to_hsv(r[i], g[i], b[i]);
    h[i] = hsv[0];
    s[i] = hsv[1];
    v[i] = hsv[2];
  }
  return out;
}

RasterGray8 to_grayscale(const RasterRGB& img) {
  const auto wide = [](const RasterGray8& p) { return p.cast<std::int32_t>(); };
  Image<std::int32_t> acc = 299 * wide(img.planes[0]) + 587 * wide(img.planes[1]) + 114 * wide(img.planes[2]) + 500;
  return (acc / 1000).min(255).cast<std::uint8_t>();
}

std::vector<PolygonWithHoles> load_wkt_ground_truth(const fs::path& dir) {
  std::vector<PolygonWithHoles> out;
  if (!fs::is_directory(dir)) return out;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".wkt") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot read " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
      for (auto& p : from_wkt(ss.str())) out.push_back(std::move(p));
    } catch (const WktParseError& e) {
      throw WktParseError(e.what(), e.offset(), file.filename().string());
    }
  }
  return out;
}

std::vector<PolygonWithHoles> load_wkt_ground_truth(const fs::path& root, const std::string& set_id) {
  return load_wkt_ground_truth(root / set_id / "gt");
}

DatasetSplit split_by_group(const std::vector<std::string>& ids,
                            const std::function<std::string(const std::string&)>& group_of,
                            SplitSizes sizes, std::uint64_t seed) {
  std::map<std::string, std::vector<std::string>> groups;
  for (const auto& id : ids) groups[group_of(id)].push_back(id);

  std::vector<const std::vector<std::string>*> order;
  for (const auto& [key, members] : groups) order.push_back(&members);
  std::mt19937_64 rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);

  DatasetSplit split;
  for (const auto* members : order) {
    auto* target = &split.test;
    if (split.train.size() < sizes.train) {
      target = &split.train;
    } else if (split.validation.size() < sizes.validation) {
      target = &split.validation;
    }
    target->insert(target->end(), members->begin(), members->end());
  }
  return split;
}

}  // namespace fragseg
