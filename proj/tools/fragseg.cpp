#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fragseg/commands.hpp"
#include "fragseg/errors.hpp"

int main(int argc, char** argv) {
  using namespace fragseg::cli;
  CLI::App app{"Segment manuscript fragments from recto/verso colour and infrared images."};
  app.require_subcommand(1);

  SegmentArgs seg;
  std::string seg_config;
  std::uint64_t seg_seed = 0;
  auto* segment = app.add_subcommand("segment", "Run the segmentation pipeline on every image set under --root");
  segment->add_option("--root", seg.root, "Directory of image sets")->required();
  segment->add_option("--boxes", seg.boxes, "Directory of <set>.json bar boxes")->required();
  segment->add_option("--out", seg.out, "Output directory")->required();
  auto* seg_config_opt = segment->add_option("--config", seg_config, "Pipeline config JSON");
  segment->add_option("--jobs", seg.jobs, "Parallel workers (FRAGSEG_JOBS overrides)");
  auto* seg_seed_opt = segment->add_option("--seed", seg_seed, "Global seed");
  segment->add_option("--set", seg.sets, "Restrict to these set ids");

  AlignArgs al;
  std::string al_boxes, al_config, al_out, al_table;
  auto* align = app.add_subcommand("align", "Align the flipped verso IR image to the recto");
  align->add_option("--root", al.root, "Directory of image sets")->required();
  align->add_option("--set", al.set, "Set id")->required();
  auto* al_boxes_opt = align->add_option("--boxes", al_boxes, "Bar boxes JSON file or directory");
  auto* al_config_opt = align->add_option("--config", al_config, "Pipeline config JSON");
  auto* al_out_opt = align->add_option("--out", al_out, "Alignment JSON (default: stdout)");
  auto* al_table_opt = align->add_option("--table", al_table, "Per-combination inlier CSV");

  OverlayArgs ov;
  auto* overlay = app.add_subcommand("overlay", "Draw WKT polygons over an image");
  overlay->add_option("--image", ov.image, "Colour image")->required();
  overlay->add_option("--wkt", ov.wkt, "WKT files or directories")->required();
  overlay->add_option("--out", ov.out, "Output PNG")->required();

  EvalArgs ev;
  std::string ev_json;
  auto* eval = app.add_subcommand("eval", "Pixel metrics of predicted polygons against ground truth");
  eval->add_option("--pred", ev.pred, "Segmentation output directory")->required();
  eval->add_option("--gt", ev.gt, "Image-set root holding <set>/gt/*.wkt")->required();
  eval->add_option("--out", ev.out, "Report CSV")->required();
  auto* ev_json_opt = eval->add_option("--json", ev_json, "Also write the report as JSON");

  SynthArgs sy;
  std::string sy_boxes;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus with ground truth");
  synth->add_option("--out", sy.out, "Corpus root")->required();
  auto* sy_boxes_opt = synth->add_option("--boxes", sy_boxes, "Bar boxes directory (default: sibling 'boxes')");
  synth->add_option("--count", sy.count, "Number of sets")->check(CLI::PositiveNumber);
  synth->add_option("--size", sy.size, "Image side in pixels")->check(CLI::Range(200, 20000));
  synth->add_option("--fragments", sy.fragments, "Fragments per set")->check(CLI::Range(1, 3));
  synth->add_option("--seed", sy.seed, "Seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (segment->parsed()) {
      if (*seg_config_opt) seg.config = seg_config;
      if (*seg_seed_opt) seg.seed = seg_seed;
      return run_segment(seg);
    }
    if (align->parsed()) {
      if (*al_boxes_opt) al.boxes = al_boxes;
      if (*al_config_opt) al.config = al_config;
      if (*al_out_opt) al.out = al_out;
      if (*al_table_opt) al.table = al_table;
      return run_align(al);
    }
    if (overlay->parsed()) return run_overlay(ov);
    if (eval->parsed()) {
      if (*ev_json_opt) ev.json = ev_json;
      return run_eval(ev);
    }
    if (synth->parsed()) {
      if (*sy_boxes_opt) sy.boxes = sy_boxes;
      return run_synth(sy);
    }
  } catch (const fragseg::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
