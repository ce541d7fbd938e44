#include "fragseg/bars.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "fragseg/corpus.hpp"

namespace fragseg {
namespace {

using nlohmann::json;

int clamp_to_int(const json& v, const char* key) {
  if (!v.is_number()) throw JsonParseError(std::string("box field '") + key + "' is not a number");
  const double d = v.get<double>();
  constexpr double lo = std::numeric_limits<int>::min() / 2;
  constexpr double hi = std::numeric_limits<int>::max() / 2;
  return static_cast<int>(std::clamp(std::round(d), lo, hi));
}

std::vector<BoundingBox> parse_side(const json& doc, const char* side) {
  std::vector<BoundingBox> out;
  if (!doc.contains(side)) return out;
  const json& arr = doc.at(side);
  if (!arr.is_array()) throw JsonParseError(std::string("'") + side + "' must be an array");
  for (const json& item : arr) {
    if (!item.is_object()) throw JsonParseError("box entry must be an object");
    BoundingBox b;
    for (const char* key : {"x", "y", "w", "h"}) {
      if (!item.contains(key)) throw JsonParseError(std::string("box is missing '") + key + "'");
    }
    b.x = clamp_to_int(item.at("x"), "x");
    b.y = clamp_to_int(item.at("y"), "y");
    b.w = clamp_to_int(item.at("w"), "w");
    b.h = clamp_to_int(item.at("h"), "h");
    if (b.w < 0 || b.h < 0) throw NegativeDimension("box has negative width or height");
    if (item.contains("score")) {
      if (!item.at("score").is_number()) throw JsonParseError("box score is not a number");
      b.score = std::clamp(item.at("score").get<double>(), 0.0, 1.0);
    }
    if (item.contains("label")) {
      if (!item.at("label").is_string() || item.at("label").get<std::string>() != "bar")
        throw JsonParseError("unsupported box label (only \"bar\")");
    }
    out.push_back(b);
  }
  return out;
}

json side_to_json(const std::vector<BoundingBox>& boxes) {
  json arr = json::array();
  for (const auto& b : boxes) arr.push_back({{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}, {"score", b.score}});
  return arr;
}

}  // namespace

BarSet parse_bar_boxes(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw JsonParseError(std::string("bar boxes: ") + e.what());
  }
  if (!doc.is_object()) throw JsonParseError("bar boxes: top level must be an object");
  return {parse_side(doc, "recto"), parse_side(doc, "verso")};
}

BarSet load_bar_boxes(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw MissingFile("cannot open bar boxes: " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_bar_boxes(ss.str());
}

std::string bar_boxes_to_json(const BarSet& bars) {
  json doc = {{"recto", side_to_json(bars.recto)}, {"verso", side_to_json(bars.verso)}};
  return doc.dump();
}

void save_bar_boxes(const BarSet& bars, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw IoError("cannot write " + file.string());
  out << bar_boxes_to_json(bars) << '\n';
}

int default_bar_pad(double ppi) { return static_cast<int>(std::lround(10.0 * ppi / kReferencePpi)); }

Mask bars_to_mask(std::span<const BoundingBox> boxes, Index width, Index height, int pad) {
  if (pad < 0) throw Error("bars_to_mask: pad must be non-negative");
  Mask m = Mask::Zero(height, width);
  for (const auto& b : boxes) {
    const Index x0 = std::clamp<Index>(Index{b.x} - pad, 0, width);
    const Index y0 = std::clamp<Index>(Index{b.y} - pad, 0, height);
    const Index x1 = std::clamp<Index>(Index{b.x} + b.w + pad, 0, width);
    const Index y1 = std::clamp<Index>(Index{b.y} + b.h + pad, 0, height);
    if (x1 > x0 && y1 > y0) m.block(y0, x0, y1 - y0, x1 - x0).setConstant(true);
  }
  return m;
}

RasterGray8 mask_out(const RasterGray8& img, const Mask& mask, std::uint8_t fill) {
  require_same_dims(img, mask, "mask_out");
  return mask.select(RasterGray8::Constant(img.rows(), img.cols(), fill), img);
}

RasterRGB mask_out(const RasterRGB& img, const Mask& mask, std::array<std::uint8_t, 3> fill) {
  require_same_dims(img, mask, "mask_out");
  RasterRGB out;
  for (int c = 0; c < 3; ++c) out.planes[c] = mask_out(img.planes[c], mask, fill[c]);
  return out;
}

}  // namespace fragseg
