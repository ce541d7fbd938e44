#include "fragseg/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fragseg {

namespace {

using nlohmann::json;

std::uint8_t byte_of(const json& v, const char* what) {
  const auto n = v.get<long long>();
  if (n < 0 || n > 255) throw JsonParseError(std::string(what) + " must lie in [0, 255]");
  return static_cast<std::uint8_t>(n);
}

std::array<std::uint8_t, 3> triple_of(const json& v, const char* what) {
  if (!v.is_array() || v.size() != 3) throw JsonParseError(std::string(what) + " must be a 3-element array");
  return {byte_of(v[0], what), byte_of(v[1], what), byte_of(v[2], what)};
}

}  // namespace

PipelineConfig parse_config(std::string_view json_text, PipelineConfig cfg) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw JsonParseError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw JsonParseError("config: top level must be an object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "threshold") {
        if (v.contains("dark_cap")) cfg.threshold.dark_cap = byte_of(v["dark_cap"], "threshold.dark_cap");
        if (v.contains("buffer")) cfg.threshold.buffer = byte_of(v["buffer"], "threshold.buffer");
      } else if (key == "hsv") {
        if (v.contains("lo")) cfg.hsv.lo = triple_of(v["lo"], "hsv.lo");
        if (v.contains("hi")) cfg.hsv.hi = triple_of(v["hi"], "hsv.hi");
      } else if (key == "closing_se") {
        StructuringElement se{v.at("width").get<int>(), v.at("height").get<int>()};
        se.row_half_widths();  // validates odd positive sides
        cfg.closing_se = se;
      } else if (key == "pre_close_min_area") {
        cfg.pre_close_min_area = v.get<std::int64_t>();
      } else if (key == "final_min_area") {
        cfg.final_min_area = v.get<double>();
      } else if (key == "bar_pad") {
        cfg.bar_pad = v.get<int>();
      } else if (key == "ratio") {
        cfg.ratio = v.get<double>();
      } else if (key == "tolerances") {
        cfg.tolerances = v.get<std::vector<int>>();
      } else if (key == "extractors") {
        cfg.extractors = v.get<std::vector<std::string>>();
      } else if (key == "min_inliers") {
        cfg.min_inliers = v.get<int>();
      } else if (key == "seed") {
        cfg.seed = v.get<std::uint64_t>();
      } else if (key == "max_features") {
        cfg.max_features = v.get<int>();
      } else if (key == "ransac_iters") {
        cfg.ransac_iters = v.get<int>();
      } else if (key == "min_overlap_fraction") {
        cfg.min_overlap_fraction = v.get<double>();
      } else {
        throw JsonParseError("config: unknown key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw JsonParseError(std::string("config: ") + e.what());
  } catch (const fragseg::Error& e) {
    if (dynamic_cast<const JsonParseError*>(&e)) throw;
    throw JsonParseError(std::string("config: ") + e.what());
  }
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& file, PipelineConfig base) {
  std::ifstream f(file, std::ios::binary);
  if (!f) throw MissingFile("cannot open " + file.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string config_to_json(const PipelineConfig& cfg, double ppi) {
  const ResolvedParams rp = resolve_params(cfg, ppi);
  nlohmann::ordered_json j;
  j["threshold"] = {{"dark_cap", cfg.threshold.dark_cap}, {"buffer", cfg.threshold.buffer}};
  j["hsv"] = {{"lo", cfg.hsv.lo}, {"hi", cfg.hsv.hi}};
  j["closing_se"] = {{"width", rp.closing_se.width}, {"height", rp.closing_se.height}};
  j["pre_close_min_area"] = rp.pre_close_min_area;
  j["final_min_area"] = rp.final_min_area;
  j["bar_pad"] = rp.bar_pad;
  j["ratio"] = cfg.ratio;
  j["tolerances"] = cfg.tolerances;
  j["extractors"] = cfg.extractors;
  j["min_inliers"] = cfg.min_inliers;
  j["seed"] = cfg.seed;
  j["max_features"] = cfg.max_features;
  j["ransac_iters"] = cfg.ransac_iters;
  j["min_overlap_fraction"] = cfg.min_overlap_fraction;
  return j.dump(2) + "\n";
}

}  // namespace fragseg
