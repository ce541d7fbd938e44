#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace fragseg::cli {

struct SegmentArgs {
  std::filesystem::path root, boxes, out;
  std::optional<std::filesystem::path> config;
  int jobs = 1;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sets;  // empty: every set under root
};

struct AlignArgs {
  std::filesystem::path root;
  std::string set;
  std::optional<std::filesystem::path> boxes, config, out, table;
};

struct OverlayArgs {
  std::filesystem::path image;
  std::vector<std::filesystem::path> wkt;  // files or directories of *.wkt
  std::filesystem::path out;
};

struct EvalArgs {
  std::filesystem::path pred, gt, out;
  std::optional<std::filesystem::path> json;
};

struct SynthArgs {
  std::filesystem::path out;
  std::optional<std::filesystem::path> boxes;  // default: <out>/../boxes
  int count = 20;
  int size = 2000;
  int fragments = 1;
  std::uint64_t seed = 0;
};

/// Each returns a process exit code; failures are reported on stderr.
int run_segment(SegmentArgs args);
int run_align(const AlignArgs& args);
int run_overlay(const OverlayArgs& args);
int run_eval(const EvalArgs& args);
int run_synth(const SynthArgs& args);

/// FNV-1a over the global seed bytes (little endian) followed by the set id.
std::uint64_t set_seed(std::uint64_t global_seed, const std::string& set_id);

/// Worker count: FRAGSEG_JOBS when set to a positive integer, else `requested` (at least 1).
int resolve_jobs(int requested);

}  // namespace fragseg::cli
