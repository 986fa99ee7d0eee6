#include "aos/eval.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace aos {
namespace {

// Stable confidence-descending order of indices.
std::vector<std::size_t> by_confidence(std::span<const Detection> dets) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].confidence > dets[b].confidence;
  });
  return order;
}

}  // namespace

void EvalConfig::validate() const {
  if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) {
    throw std::invalid_argument("eval: iou_threshold must lie in (0, 1)");
  }
  if (!(confidence_floor > 0.0 && confidence_floor < 1.0)) {
    throw std::invalid_argument("eval: confidence_floor must lie in (0, 1)");
  }
  if (!(nms_threshold > 0.0 && nms_threshold <= 1.0)) {
    throw std::invalid_argument("eval: nms_threshold must lie in (0, 1]");
  }
  if (border_margin < 0) {
    throw std::invalid_argument("eval: border_margin must be non-negative");
  }
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double iw = std::min(a.xmax, b.xmax) - std::max(a.xmin, b.xmin);
  const double ih = std::min(a.ymax, b.ymax) - std::max(a.ymin, b.ymin);
  if (iw <= 0.0 || ih <= 0.0) {
    return 0.0;
  }
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

std::vector<Detection> nms(std::span<const Detection> dets, double iou_thr) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (dets[a].confidence != dets[b].confidence) {
      return dets[a].confidence > dets[b].confidence;
    }
    return dets[a].bbox.area() < dets[b].bbox.area();
  });
  std::vector<Detection> kept;
  for (std::size_t i : order) {
    const bool clear = std::all_of(kept.begin(), kept.end(), [&](const Detection& k) {
      return iou(k.bbox, dets[i].bbox) < iou_thr;
    });
    if (clear) {
      kept.push_back(dets[i]);
    }
  }
  return kept;
}

std::vector<Detection> merge_dual_pass(std::span<const Detection> plain,
                                       std::span<const Detection> ahe, double iou_thr) {
  std::vector<Detection> all(plain.begin(), plain.end());
  all.insert(all.end(), ahe.begin(), ahe.end());
  return nms(all, iou_thr);
}

std::vector<Detection> border_filter(std::span<const Detection> dets, double margin, int width,
                                     int height) {
  if (margin < 0.0) {
    throw std::invalid_argument("border_filter: margin must be non-negative");
  }
  std::vector<Detection> kept;
  for (const auto& d : dets) {
    const Vec2 c = d.bbox.center();
    if (c.x() >= margin && c.y() >= margin && width - c.x() >= margin &&
        height - c.y() >= margin) {
      kept.push_back(d);
    }
  }
  return kept;
}

std::vector<Detection> confidence_filter(std::span<const Detection> dets, double floor) {
  std::vector<Detection> kept;
  std::copy_if(dets.begin(), dets.end(), std::back_inserter(kept),
               [&](const Detection& d) { return d.confidence >= floor; });
  return kept;
}

MatchResult match_detections(std::span<const Detection> dets, std::span<const BoundingBox> gts,
                             double iou_thr) {
  MatchResult r;
  r.true_positive.assign(dets.size(), false);
  std::vector<bool> taken(gts.size(), false);
  for (std::size_t i : by_confidence(dets)) {
    double best = -1.0;
    std::size_t best_gt = gts.size();
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g]) {
        continue;
      }
      const double v = iou(dets[i].bbox, gts[g]);
      if (v >= iou_thr && v > best) {
        best = v;
        best_gt = g;
      }
    }
    if (best_gt < gts.size()) {
      taken[best_gt] = true;
      r.true_positive[i] = true;
      ++r.tp;
    } else {
      ++r.fp;
    }
  }
  return r;
}

double envelope_ap(std::span<const PrPoint> curve) {
  std::vector<double> rec{0.0};
  std::vector<double> prec{0.0};
  for (const auto& p : curve) {
    rec.push_back(p.recall);
    prec.push_back(p.precision);
  }
  rec.push_back(1.0);
  prec.push_back(0.0);
  for (std::size_t i = prec.size() - 1; i > 0; --i) {
    prec[i - 1] = std::max(prec[i - 1], prec[i]);
  }
  double ap = 0.0;
  for (std::size_t i = 0; i + 1 < rec.size(); ++i) {
    if (rec[i + 1] != rec[i]) {
      ap += (rec[i + 1] - rec[i]) * prec[i + 1];
    }
  }
  return ap;
}

ApResult average_precision(std::span<const EvalImage> images, double iou_thr) {
  struct Ranked {
    double confidence;
    bool tp;
  };
  std::vector<Ranked> ranked;
  ApResult r;
  for (const auto& img : images) {
    const auto m = match_detections(img.dets, img.gts, iou_thr);
    for (std::size_t i = 0; i < img.dets.size(); ++i) {
      ranked.push_back({img.dets[i].confidence, m.true_positive[i]});
    }
    r.gt += static_cast<int>(img.gts.size());
    r.tp += m.tp;
    r.fp += m.fp;
  }
  if (r.gt == 0) {
    return r;
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const Ranked& a, const Ranked& b) { return a.confidence > b.confidence; });
  int tp = 0;
  int fp = 0;
  for (const auto& d : ranked) {
    (d.tp ? tp : fp) += 1;
    r.curve.push_back({static_cast<double>(tp) / r.gt, static_cast<double>(tp) / (tp + fp)});
  }
  r.ap = envelope_ap(r.curve);
  return r;
}

std::vector<Detection> prepare_detections(const EvalImage& image, const EvalConfig& cfg) {
  auto filter = [&](std::span<const Detection> dets) {
    const auto confident = confidence_filter(dets, cfg.confidence_floor);
    return border_filter(confident, cfg.border_margin, image.width, image.height);
  };
  auto plain = filter(image.dets);
  if (!image.ahe_dets) {
    return plain;
  }
  const auto ahe = filter(*image.ahe_dets);
  return merge_dual_pass(plain, ahe, cfg.nms_threshold);
}

EvalReport scene_report(std::span<const SceneEval> scenes, const EvalConfig& cfg, EvalMode mode) {
  cfg.validate();
  EvalReport report;
  report.mode = mode;
  std::vector<EvalImage> pooled;
  double scene_ap_sum = 0.0;
  int scene_ap_count = 0;

  for (const auto& scene : scenes) {
    std::vector<EvalImage> prepared;
    prepared.reserve(scene.images.size());
    for (const auto& img : scene.images) {
      EvalImage p;
      p.id = img.id;
      p.width = img.width;
      p.height = img.height;
      p.dets = prepare_detections(img, cfg);
      p.gts = img.gts;
      prepared.push_back(std::move(p));
    }

    SceneRow row;
    row.id = scene.id;
    if (mode == EvalMode::kIntegral || prepared.empty()) {
      const ApResult ap = average_precision(prepared, cfg.iou_threshold);
      row.gt = ap.gt;
      row.tp = ap.tp;
      row.fp = ap.fp;
      row.ap = ap.ap;
    } else {
      double ap_sum = 0.0;
      int ap_count = 0;
      for (const auto& img : prepared) {
        const ApResult ap = average_precision(std::span(&img, 1), cfg.iou_threshold);
        row.gt += ap.gt;
        row.tp += ap.tp;
        row.fp += ap.fp;
        if (ap.ap) {
          ap_sum += *ap.ap;
          ++ap_count;
        }
      }
      const double n = static_cast<double>(prepared.size());
      row.gt /= n;
      row.tp /= n;
      row.fp /= n;
      if (ap_count > 0) {
        row.ap = ap_sum / ap_count;
      }
    }
    if (row.ap) {
      scene_ap_sum += *row.ap;
      ++scene_ap_count;
    }
    report.aggregate.gt += row.gt;
    report.aggregate.tp += row.tp;
    report.aggregate.fp += row.fp;
    report.scenes.push_back(std::move(row));
    for (auto& p : prepared) {
      pooled.push_back(std::move(p));
    }
  }

  report.aggregate.id = "all";
  const ApResult all = average_precision(pooled, cfg.iou_threshold);
  report.aggregate.ap = all.ap;
  report.pr_curve = all.curve;
  report.precision = (all.tp + all.fp) > 0 ? static_cast<double>(all.tp) / (all.tp + all.fp) : 0.0;
  report.recall = all.gt > 0 ? static_cast<double>(all.tp) / all.gt : 0.0;
  if (scene_ap_count > 0) {
    report.mean_scene_ap = scene_ap_sum / scene_ap_count;
  }
  return report;
}

}  // namespace aos
