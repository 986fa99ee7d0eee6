#include "aos/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <stdexcept>

#include "aos/error.hpp"
#include "aos/hash.hpp"
#include "aos/report.hpp"
#include "aos/serialize.hpp"
#include "json_reader.hpp"

#ifndef AOS_VERSION
#define AOS_VERSION "unknown"
#endif

namespace aos {
namespace {

using detail::json;
using detail::Reader;

std::string view_id(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "view_%04zu", k);
  return buf;
}

struct Passes {
  std::vector<Detection> dets;
  std::optional<std::vector<Detection>> ahe_dets;
};

// Detection on one HDR image according to the configured AHE mode.
Passes detect_passes(const HdrImage& img, const Mask* mask, const RunConfig& cfg,
                     const std::string& id, GrayImage* plain_out = nullptr,
                     GrayImage* ahe_out = nullptr) {
  Passes p;
  GrayImage plain;
  GrayImage equalized;
  if (cfg.detect_ahe != AheMode::kOn) {
    plain = tone_map(img, mask);
    p.dets = detect_blobs(plain, cfg.detector, id);
  }
  if (cfg.detect_ahe != AheMode::kOff) {
    equalized = tone_map(ahe(img, 512, mask), mask);
    auto dets = detect_blobs(equalized, cfg.detector, id);
    if (cfg.detect_ahe == AheMode::kOn) {
      p.dets = std::move(dets);
    } else {
      p.ahe_dets = std::move(dets);
    }
  }
  if (plain_out) *plain_out = std::move(plain);
  if (ahe_out) *ahe_out = std::move(equalized);
  return p;
}

void simulate_stage(SceneRun& run, const NamedScene& named, std::size_t index,
                    const RunConfig& cfg) {
  SceneSpec spec = named.spec;
  spec.rng_seed = scene_seed(cfg.rng_seed, named.spec.rng_seed, index);
  run.name = named.name;
  run.scene = build_scene(spec);
  const auto poses = plan_grid_scan(cfg.scan.aperture, cfg.scan.along_spacing,
                                    cfg.scan.line_spacing, spec.ground_altitude + cfg.scan.altitude);
  run.capture = capture_scene(run.scene, poses, cfg.camera.intrinsics(), {true, cfg.threads});
}

void integrate_stage(SceneRun& run, const RunConfig& cfg) {
  run.camera = virtual_camera_at_center(run.capture, 0.0);
  const VirtualCamera coarse{
      run.camera.pose,
      fov_to_intrinsics(cfg.camera.fov_deg, cfg.focus_resolution, cfg.focus_resolution)};
  run.focus = optimize_focal_plane(run.capture, cfg.focus, coarse, {cfg.threads});
  run.integral = integrate(run.capture, run.focus, run.camera, {cfg.threads});
}

void detect_stage(SceneRun& run, const RunConfig& cfg) {
  const Plane label_plane = resolve_plane(run.focus, run.camera);
  const auto& labels = run.scene.labels();

  const Mask mask = valid_mask(run.integral);
  GrayImage ahe_8bit;
  Passes passes = detect_passes(run.integral.image, &mask, cfg, run.name, &run.integral_8bit,
                                &ahe_8bit);
  if (cfg.detect_ahe != AheMode::kOff) {
    run.integral_ahe_8bit = std::move(ahe_8bit);
  }
  run.integral_labels = project_labels(labels, run.camera, label_plane).boxes;
  EvalImage integral_img{run.name, run.integral.image.width, run.integral.image.height,
                         std::move(passes.dets), std::move(passes.ahe_dets), {}};
  for (const auto& b : run.integral_labels) {
    integral_img.gts.push_back(b.box);
  }
  run.integral_eval = {run.name, {std::move(integral_img)}};

  run.single_eval = {run.name, {}};
  run.single_labels.clear();
  const auto& views = run.capture.views;
  const auto& intr = run.capture.intrinsics;
  for (std::size_t k = 0; k < views.size(); k += static_cast<std::size_t>(cfg.single_stride)) {
    const std::string id = view_id(k);
    Passes p = detect_passes(views[k].image, nullptr, cfg, id);
    auto boxes = project_labels(labels, {views[k].pose, intr}, label_plane).boxes;
    EvalImage img{id, intr.width, intr.height, std::move(p.dets), std::move(p.ahe_dets), {}};
    for (const auto& b : boxes) {
      img.gts.push_back(b.box);
    }
    run.single_eval.images.push_back(std::move(img));
    run.single_labels.push_back(std::move(boxes));
  }
}

AheMode ahe_from(const Reader& r, const json& v, const std::string& path) {
  try {
    return parse_ahe_mode(r.string(v, path));
  } catch (const std::invalid_argument& e) {
    r.fail(path, e.what());
  }
}

}  // namespace

void ScanSpec::validate() const {
  if (!(aperture > 0.0 && along_spacing > 0.0 && line_spacing > 0.0 && altitude > 0.0)) {
    throw std::invalid_argument("scan: aperture, spacings and altitude must be positive");
  }
}

AheMode parse_ahe_mode(const std::string& s) {
  if (s == "off") return AheMode::kOff;
  if (s == "on") return AheMode::kOn;
  if (s == "both") return AheMode::kBoth;
  throw std::invalid_argument("ahe mode must be one of off, on, both (got '" + s + "')");
}

std::string to_string(AheMode mode) {
  switch (mode) {
    case AheMode::kOff: return "off";
    case AheMode::kOn: return "on";
    case AheMode::kBoth: return "both";
  }
  return "off";
}

void RunConfig::validate() const {
  if (scenes.empty()) {
    throw std::invalid_argument("run config: no scenes");
  }
  for (const auto& s : scenes) {
    s.spec.validate();
  }
  scan.validate();
  fov_to_intrinsics(camera.fov_deg, camera.width, camera.height).validate();
  focus.validate();
  if (focus_resolution < 8) {
    throw std::invalid_argument("run config: focus resolution must be at least 8");
  }
  if (augment.rotations < 1) {
    throw std::invalid_argument("run config: augment rotations must be >= 1");
  }
  detector.validate();
  eval.validate();
  if (single_stride < 1) {
    throw std::invalid_argument("run config: single_stride must be >= 1");
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  const Reader r(path);
  const json doc = r.parse(read_text(path));
  if (!doc.is_object()) {
    r.fail("<document>", "expected an object");
  }
  RunConfig cfg;
  const auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");

  std::vector<std::pair<json, std::string>> entries;
  if (const json* one = r.optional(doc, "", "scene")) {
    entries.emplace_back(*one, "scene");
  }
  if (const json* many = r.optional(doc, "", "scenes")) {
    r.array(*many, "scenes");
    for (std::size_t i = 0; i < many->size(); ++i) {
      entries.emplace_back((*many)[i], Reader::index("scenes", i));
    }
  }
  if (entries.empty()) {
    r.fail("scenes", "missing; give \"scene\" or \"scenes\"");
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& [entry, at] = entries[i];
    NamedScene named;
    if (entry.is_string()) {
      const auto file = base / entry.get<std::string>();
      if (!std::filesystem::exists(file)) {
        r.fail(at, "scene file " + file.string() + " does not exist");
      }
      named.spec = read_scene_spec(file);
      named.name = file.stem().string();
    } else {
      named.spec = detail::scene_spec_from(r, entry, at);
      char buf[32];
      std::snprintf(buf, sizeof buf, "S%zu", i + 1);
      named.name = buf;
      if (const json* n = r.optional(entry, at, "name")) {
        named.name = r.string(*n, at + ".name");
      }
    }
    cfg.scenes.push_back(std::move(named));
  }
  for (std::size_t i = 0; i < cfg.scenes.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (cfg.scenes[i].name == cfg.scenes[j].name) {
        r.fail(entries[i].second, "duplicate scene name '" + cfg.scenes[i].name + "'");
      }
    }
  }

  if (const json* scan = r.optional(doc, "", "scan")) {
    auto& s = cfg.scan;
    s.aperture = r.number_or(*scan, "scan", "aperture", s.aperture);
    s.along_spacing = r.number_or(*scan, "scan", "along_spacing", s.along_spacing);
    s.line_spacing = r.number_or(*scan, "scan", "line_spacing", s.line_spacing);
    s.altitude = r.number_or(*scan, "scan", "altitude", s.altitude);
  }
  if (const json* cam = r.optional(doc, "", "camera")) {
    auto& c = cfg.camera;
    c.fov_deg = r.number_or(*cam, "camera", "fov_deg", c.fov_deg);
    if (const json* w = r.optional(*cam, "camera", "width")) c.width = r.integer(*w, "camera.width");
    if (const json* h = r.optional(*cam, "camera", "height")) c.height = r.integer(*h, "camera.height");
  }
  if (const json* focus = r.optional(doc, "", "focus")) {
    auto& f = cfg.focus;
    f.dz_min = r.number_or(*focus, "focus", "dz_min", f.dz_min);
    f.dz_max = r.number_or(*focus, "focus", "dz_max", f.dz_max);
    f.dz_step = r.number_or(*focus, "focus", "dz_step", f.dz_step);
    f.tilt_range = r.number_or(*focus, "focus", "tilt_range", f.tilt_range);
    f.tilt_step = r.number_or(*focus, "focus", "tilt_step", f.tilt_step);
    if (const json* res = r.optional(*focus, "focus", "resolution")) {
      cfg.focus_resolution = r.integer(*res, "focus.resolution");
    }
  }
  if (const json* aug = r.optional(doc, "", "augment")) {
    if (const json* e = r.optional(*aug, "augment", "enabled")) {
      if (!e->is_boolean()) r.fail("augment.enabled", "expected a boolean");
      cfg.augment.enabled = e->get<bool>();
    }
    if (const json* a = r.optional(*aug, "augment", "ahe")) {
      cfg.augment.ahe = ahe_from(r, *a, "augment.ahe");
    }
    if (const json* n = r.optional(*aug, "augment", "rotations")) {
      cfg.augment.rotations = r.integer(*n, "augment.rotations");
    }
  }
  if (const json* det = r.optional(doc, "", "detector")) {
    auto& d = cfg.detector;
    d.threshold_percentile = r.number_or(*det, "detector", "threshold_percentile", d.threshold_percentile);
    if (const json* v = r.optional(*det, "detector", "min_area")) d.min_area = r.integer(*v, "detector.min_area");
    if (const json* v = r.optional(*det, "detector", "max_area")) d.max_area = r.integer(*v, "detector.max_area");
    if (const json* v = r.optional(*det, "detector", "ahe")) cfg.detect_ahe = ahe_from(r, *v, "detector.ahe");
  }
  if (const json* ev = r.optional(doc, "", "eval")) {
    auto& e = cfg.eval;
    e.iou_threshold = r.number_or(*ev, "eval", "iou_threshold", e.iou_threshold);
    e.confidence_floor = r.number_or(*ev, "eval", "confidence_floor", e.confidence_floor);
    e.nms_threshold = r.number_or(*ev, "eval", "nms_threshold", e.nms_threshold);
    if (const json* v = r.optional(*ev, "eval", "median_box_size")) {
      e.median_box_size = r.integer(*v, "eval.median_box_size");
      e.border_margin = EvalConfig::derived_margin(e.median_box_size, e.iou_threshold);
    }
    if (const json* v = r.optional(*ev, "eval", "border_margin")) {
      e.border_margin = r.integer(*v, "eval.border_margin");
    }
  }
  if (const json* v = r.optional(doc, "", "single_stride")) cfg.single_stride = r.integer(*v, "single_stride");
  if (const json* v = r.optional(doc, "", "rng_seed")) cfg.rng_seed = r.unsigned_integer(*v, "rng_seed");
  if (const json* v = r.optional(doc, "", "output_root")) cfg.output_root = r.string(*v, "output_root");
  if (const json* v = r.optional(doc, "", "threads")) cfg.threads = r.integer(*v, "threads");
  if (const json* v = r.optional(doc, "", "write_captures")) {
    if (!v->is_boolean()) r.fail("write_captures", "expected a boolean");
    cfg.write_captures = v->get<bool>();
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    r.fail("<document>", e.what());
  }
  return cfg;
}

std::uint64_t scene_seed(std::uint64_t run_seed, std::uint64_t spec_seed, std::size_t index) {
  return hash_combine(hash_combine(run_seed, spec_seed), index);
}

SceneRun run_scene(const NamedScene& scene, std::size_t index, const RunConfig& cfg) {
  SceneRun run;
  simulate_stage(run, scene, index, cfg);
  integrate_stage(run, cfg);
  detect_stage(run, cfg);
  return run;
}

std::string format_comparison(const EvalReport& integral, const EvalReport& single) {
  std::string out = format_report_text(integral, "Integral images (integrate, then detect)");
  out += "\n";
  out += format_report_text(single, "Single images (detect, then average)");
  char buf[160];
  const double a = integral.aggregate.ap.value_or(0.0) * 100.0;
  const double b = single.mean_scene_ap.value_or(0.0) * 100.0;
  std::snprintf(buf, sizeof buf, "\nintegral pooled AP %.1f vs single mean AP %.1f (gap %+.1f)\n", a,
                b, a - b);
  return out + buf;
}

PipelineResult run_pipeline(const RunConfig& cfg) {
  namespace fs = std::filesystem;
  using clock = std::chrono::steady_clock;

  PipelineResult result;
  const fs::path root = cfg.output_root;
  result.manifest = root / "manifest.json";

  json manifest;
  manifest["version"] = AOS_VERSION;
  manifest["rng_seed"] = cfg.rng_seed;
  manifest["threads"] = cfg.threads;
  manifest["scenes"] = json::array();
  for (std::size_t i = 0; i < cfg.scenes.size(); ++i) {
    manifest["scenes"].push_back(
        {{"name", cfg.scenes[i].name},
         {"seed", scene_seed(cfg.rng_seed, cfg.scenes[i].spec.rng_seed, i)}});
  }
  manifest["stages"] = json::array();
  std::map<std::string, std::string> hashes;
  std::vector<fs::path> pending;

  auto record = [&](const std::vector<fs::path>& files) {
    pending.insert(pending.end(), files.begin(), files.end());
  };
  auto flush_hashes = [&] {
    for (const auto& f : pending) {
      hashes[fs::relative(f, root).generic_string()] = sha256_file(f);
    }
    pending.clear();
  };
  auto write_manifest = [&](const std::string& status) {
    flush_hashes();
    manifest["status"] = status;
    manifest["files"] = json::object();
    for (const auto& [name, digest] : hashes) {
      manifest["files"][name] = digest;
    }
    write_text(result.manifest, manifest.dump(2) + "\n");
  };
  auto text_file = [&](const fs::path& p, const std::string& text) {
    write_text(p, text);
    record({p});
  };

  std::vector<SceneRun> runs(cfg.scenes.size());
  auto stage = [&](const std::string& name, const std::function<void()>& body) {
    const auto t0 = clock::now();
    try {
      body();
      flush_hashes();
    } catch (const std::exception& e) {
      const double secs = std::chrono::duration<double>(clock::now() - t0).count();
      manifest["stages"].push_back({{"name", name}, {"seconds", secs}, {"status", "failed"}});
      manifest["error"] = name + ": " + e.what();
      result.status = 1;
      result.error = manifest["error"];
      try {
        pending.clear();
        write_manifest("failed");
      } catch (...) {
        // The manifest is best effort once a stage has failed.
      }
      return false;
    }
    const double secs = std::chrono::duration<double>(clock::now() - t0).count();
    manifest["stages"].push_back({{"name", name}, {"seconds", secs}, {"status", "ok"}});
    return true;
  };

  if (!stage("setup", [&] {
        cfg.validate();
        for (const char* sub : {"captures", "integrals", "augmented", "detections", "reports"}) {
          fs::create_directories(root / sub);
        }
      })) {
    return result;
  }

  if (!stage("simulate", [&] {
        for (std::size_t i = 0; i < cfg.scenes.size(); ++i) {
          simulate_stage(runs[i], cfg.scenes[i], i, cfg);
          const fs::path dir = root / "captures" / runs[i].name;
          SceneSpec resolved = runs[i].scene.spec();
          write_scene_spec(dir / "scene.json", resolved);
          write_labels3d(dir / "labels3d.json", runs[i].scene.labels());
          record({dir / "scene.json", dir / "labels3d.json"});
          if (cfg.write_captures) {
            record(write_capture(dir, runs[i].capture));
          }
        }
      })) {
    return result;
  }

  if (!stage("integrate", [&] {
        for (auto& run : runs) {
          integrate_stage(run, cfg);
          const fs::path stem = root / "integrals" / run.name;
          record(write_integral(stem, run.integral));
          write_focal_plane(stem.string() + ".focus.json", run.focus);
          record({stem.string() + ".focus.json"});
        }
      })) {
    return result;
  }

  if (cfg.augment.enabled &&
      !stage("augment", [&] {
        for (std::size_t i = 0; i < runs.size(); ++i) {
          auto& run = runs[i];
          std::mt19937_64 rng(hash_combine(scene_seed(cfg.rng_seed, cfg.scenes[i].spec.rng_seed, i),
                                           0x617567ULL));
          auto set = generate_augmentation_set(cfg.augment.rotations, rng);
          if (cfg.augment.ahe == AheMode::kBoth) {
            set = with_ahe_duals(set);
          } else {
            for (auto& p : set) p.ahe = cfg.augment.ahe == AheMode::kOn;
          }
          const fs::path dir = root / "augmented" / run.name;
          augment_integral(run.capture, run.scene.labels(), run.focus, set,
                           [&](AugmentedImage&& item) {
                             const fs::path img = dir / (item.stem + ".pgm");
                             const fs::path lab = dir / (item.stem + ".jsonl");
                             fs::create_directories(dir);
                             write_pgm(img, item.image);
                             write_label_boxes(lab, item.labels);
                             record({img, lab});
                           },
                           {cfg.threads});
        }
      })) {
    return result;
  }

  if (!stage("detect", [&] {
        for (auto& run : runs) {
          detect_stage(run, cfg);
          const fs::path ints = root / "integrals";
          write_pgm(ints / (run.name + ".pgm"), run.integral_8bit);
          record({ints / (run.name + ".pgm")});
          if (run.integral_ahe_8bit) {
            write_pgm(ints / (run.name + ".ahe.pgm"), *run.integral_ahe_8bit);
            record({ints / (run.name + ".ahe.pgm")});
          }
          const fs::path det = root / "detections";
          const fs::path int_labels = det / "gt" / "integral" / (run.name + ".jsonl");
          write_label_boxes(int_labels, run.integral_labels);
          record({int_labels});

          const auto& img = run.integral_eval.images.front();
          const fs::path int_dets = det / "integral" / (run.name + ".jsonl");
          write_detections(int_dets, img.dets);
          record({int_dets});
          if (img.ahe_dets) {
            const fs::path p = det / "integral_ahe" / (run.name + ".jsonl");
            write_detections(p, *img.ahe_dets);
            record({p});
          }
          for (std::size_t k = 0; k < run.single_eval.images.size(); ++k) {
            const auto& s = run.single_eval.images[k];
            const fs::path lab = det / "gt" / "single" / run.name / (s.id + ".jsonl");
            write_label_boxes(lab, run.single_labels[k]);
            const fs::path p = det / "single" / run.name / (s.id + ".jsonl");
            write_detections(p, s.dets);
            record({lab, p});
            if (s.ahe_dets) {
              const fs::path q = det / "single_ahe" / run.name / (s.id + ".jsonl");
              write_detections(q, *s.ahe_dets);
              record({q});
            }
          }
        }
      })) {
    return result;
  }

  if (!stage("evaluate", [&] {
        std::vector<SceneEval> integral;
        std::vector<SceneEval> single;
        for (const auto& run : runs) {
          integral.push_back(run.integral_eval);
          single.push_back(run.single_eval);
        }
        result.integral_report = scene_report(integral, cfg.eval, EvalMode::kIntegral);
        result.single_report = scene_report(single, cfg.eval, EvalMode::kSingle);
        const fs::path rep = root / "reports";
        text_file(rep / "integral.txt", format_report_text(*result.integral_report));
        text_file(rep / "integral.csv", format_report_csv(*result.integral_report));
        text_file(rep / "integral_pr.csv", format_pr_csv(result.integral_report->pr_curve));
        text_file(rep / "single.txt", format_report_text(*result.single_report));
        text_file(rep / "single.csv", format_report_csv(*result.single_report));
        text_file(rep / "single_pr.csv", format_pr_csv(result.single_report->pr_curve));
        text_file(rep / "comparison.txt",
                  format_comparison(*result.integral_report, *result.single_report));
      })) {
    return result;
  }

  write_manifest("ok");
  return result;
}

}  // namespace aos
