#include "fragseg/eval.hpp"

#include <cstdio>
#include <fstream>

#include <json.hpp>

namespace fragseg {

Confusion confusion(const Mask& pred, const Mask& gt) {
  require_same_dims(pred, gt, "confusion");
  Confusion c;
  c.tp = (pred && gt).count();
  c.fp = (pred && !gt).count();
  c.fn = (!pred && gt).count();
  c.tn = static_cast<std::int64_t>(pred.size()) - c.tp - c.fp - c.fn;
  return c;
}

SegMetrics metrics(const Confusion& c) {
  const bool both_empty = c.tp + c.fp + c.fn == 0;
  auto ratio = [&](std::int64_t num, std::int64_t den) {
    if (den == 0) return both_empty ? 1.0 : 0.0;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  SegMetrics m;
  m.iou = ratio(c.tp, c.tp + c.fp + c.fn);
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.recall = ratio(c.tp, c.tp + c.fn);
  const double pr = m.precision + m.recall;
  m.f1 = pr == 0 ? (both_empty ? 1.0 : 0.0) : 2 * m.precision * m.recall / pr;
  m.accuracy = c.total() == 0 ? 1.0 : static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  return m;
}

SegMetrics aggregate(std::span<const SegMetrics> items) {
  if (items.empty()) throw EmptyList("aggregate: no metrics");
  SegMetrics s;
  for (const auto& m : items) {
    s.iou += m.iou;
    s.precision += m.precision;
    s.recall += m.recall;
    s.f1 += m.f1;
    s.accuracy += m.accuracy;
  }
  const double n = static_cast<double>(items.size());
  return {s.iou / n, s.precision / n, s.recall / n, s.f1 / n, s.accuracy / n};
}

namespace {

std::string row(const std::string& id, const SegMetrics& m) {
  char buf[128];
  std::snprintf(buf, sizeof buf, ",%.4f,%.4f,%.4f,%.4f,%.4f\n", m.iou, m.precision, m.recall, m.f1, m.accuracy);
  return id + buf;
}

std::vector<SegMetrics> all_metrics(std::span<const ImageReport> rows) {
  std::vector<SegMetrics> ms;
  for (const auto& r : rows) ms.push_back(r.metrics);
  return ms;
}

}  // namespace

std::string report_csv(std::span<const ImageReport> rows) {
  const SegMetrics mean = aggregate(all_metrics(rows));
  std::string out = "id,iou,precision,recall,f1,accuracy\n";
  for (const auto& r : rows) out += row(r.id, r.metrics);
  out += row("MEAN", mean);
  return out;
}

void write_report_csv(std::span<const ImageReport> rows, const std::filesystem::path& out) {
  const std::string text = report_csv(rows);
  std::error_code ec;
  if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path(), ec);
  std::ofstream f(out, std::ios::binary);
  f << text;
  f.close();
  if (!f) throw IoError("cannot write " + out.string());
}

std::string report_json(std::span<const ImageReport> rows) {
  auto metrics_json = [](const SegMetrics& m) {
    return nlohmann::ordered_json{{"iou", m.iou},
                                  {"precision", m.precision},
                                  {"recall", m.recall},
                                  {"f1", m.f1},
                                  {"accuracy", m.accuracy}};
  };
  nlohmann::ordered_json j;
  j["images"] = nlohmann::json::array();
  for (const auto& r : rows) {
    auto item = metrics_json(r.metrics);
    item["id"] = r.id;
    item["tp"] = r.confusion.tp;
    item["fp"] = r.confusion.fp;
    item["fn"] = r.confusion.fn;
    item["tn"] = r.confusion.tn;
    j["images"].push_back(item);
  }
  j["mean"] = metrics_json(aggregate(all_metrics(rows)));
  return j.dump(2) + "\n";
}

ImageReport evaluate_polygons(const std::string& id, std::span<const PolygonWithHoles> pred,
                              std::span<const PolygonWithHoles> gt, Index width, Index height) {
  ImageReport r;
  r.id = id;
  r.confusion = confusion(rasterize(pred, width, height), rasterize(gt, width, height));
  r.metrics = metrics(r.confusion);
  return r;
}

}  // namespace fragseg
