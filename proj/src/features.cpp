#include "fragseg/features.hpp"

namespace fragseg {

ExtractorRegistry::ExtractorRegistry() {
  add("orb", [](const RasterGray8& img, int max_features) { return orb_detect_and_describe(img, max_features); });
  detail::register_opencv_extractors(*this);
}

ExtractorRegistry& ExtractorRegistry::instance() {
  static ExtractorRegistry registry;
  return registry;
}

void ExtractorRegistry::add(std::string name, ExtractorFn fn) { extractors_[std::move(name)] = std::move(fn); }

bool ExtractorRegistry::contains(std::string_view name) const { return extractors_.find(name) != extractors_.end(); }

std::vector<std::string> ExtractorRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, fn] : extractors_) out.push_back(name);
  return out;
}

const ExtractorFn& ExtractorRegistry::get(std::string_view name) const {
  const auto it = extractors_.find(name);
  if (it == extractors_.end()) throw UnknownExtractor("unknown feature extractor: " + std::string(name));
  return it->second;
}

Features detect_and_describe(const RasterGray8& img, std::string_view extractor, int max_features) {
  const auto& fn = ExtractorRegistry::instance().get(extractor);
  if (img.size() == 0) throw Error("detect_and_describe: empty image");
  Features f = fn(img, max_features);
  if (static_cast<Index>(f.keypoints.size()) != f.descriptors.size())
    throw Error("extractor returned mismatched keypoint/descriptor counts");
  return f;
}

std::vector<std::string> default_extractors() {
  std::vector<std::string> out;
  if (ExtractorRegistry::instance().contains("sift")) out.emplace_back("sift");
  out.emplace_back("orb");
  return out;
}

}  // namespace fragseg
