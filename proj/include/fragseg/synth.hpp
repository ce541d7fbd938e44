#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fragseg/bars.hpp"
#include "fragseg/corpus.hpp"
#include "fragseg/geometry.hpp"
#include "fragseg/register.hpp"

namespace fragseg {

struct SynthParams {
  int size = 2000;      // square image side
  int fragments = 1;    // 1, or several fragments sharing one substrate
  std::uint64_t seed = 0;
  double ppi = kReferencePpi;
};

/// One recto/verso set with its ground truth.
struct SyntheticSet {
  FragmentImageSet images;
  BarSet bars;                               // each side in its own (unflipped) image frame
  std::vector<PolygonWithHoles> truth;       // recto frame
  AffineTransform verso_to_recto;            // flipped verso -> recto
};

/// Set `index` of the corpus drawn from `p.seed`; ids are "synth<index>_1".
SyntheticSet generate_synthetic_set(const SynthParams& p, int index);

/// Writes `<root>/<id>/{recto,verso}_{color,ir}.png`, `<root>/<id>/gt/<id>_<k>.wkt`,
/// `<root>/<id>/truth.json` and `<boxes_dir>/<id>.json`.
void write_synthetic_set(const SyntheticSet& s, const std::filesystem::path& root,
                         const std::filesystem::path& boxes_dir);

/// Random star-shaped polygon with integer vertices around `center`.
Ring random_star_ring(std::uint64_t seed, const Point& center, double radius, int vertices,
                      double min_radius_fraction = 0.82);

}  // namespace fragseg
