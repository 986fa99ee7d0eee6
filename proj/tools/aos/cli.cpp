#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aos/augment.hpp"
#include "aos/detector.hpp"
#include "aos/error.hpp"
#include "aos/eval.hpp"
#include "aos/pipeline.hpp"
#include "aos/report.hpp"
#include "aos/serialize.hpp"

namespace aos::cli {
namespace {

namespace fs = std::filesystem;

std::vector<fs::path> sorted_entries(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<fs::path> files_with_extension(const fs::path& dir, const std::string& ext) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ext) {
      out.push_back(e.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct Context {
  std::ostream& out;
  std::ostream& err;
  int threads = 0;
};

// --- simulate ---------------------------------------------------------------

struct SimulateArgs {
  std::string scene;
  std::string out;
  ScanSpec scan;
  CameraSpec camera;
  std::optional<std::uint64_t> seed;
  bool no_normalize = false;
};

int simulate(const SimulateArgs& a, Context& ctx) {
  SceneSpec spec = read_scene_spec(a.scene);
  if (a.seed) {
    spec.rng_seed = *a.seed;
  }
  a.scan.validate();
  const Scene scene = build_scene(spec);
  const auto poses = plan_grid_scan(a.scan.aperture, a.scan.along_spacing, a.scan.line_spacing,
                                    spec.ground_altitude + a.scan.altitude);
  const auto capture =
      capture_scene(scene, poses, a.camera.intrinsics(), {!a.no_normalize, ctx.threads});
  write_capture(a.out, capture);
  write_scene_spec(fs::path(a.out) / "scene.json", spec);
  write_labels3d(fs::path(a.out) / "labels3d.json", scene.labels());
  ctx.out << "wrote " << capture.views.size() << " views and " << scene.occluders().size()
          << " occluders to " << a.out << "\n";
  return kOk;
}

// --- integrate / stack ------------------------------------------------------

struct IntegrateArgs {
  std::string capture;
  std::string out;
  FocalPlane plane;
  std::string plane_file;
  double up_angle = 0.0;
  std::string pgm;
  bool ahe = false;
};

int integrate_cmd(const IntegrateArgs& a, Context& ctx) {
  const auto capture = read_capture(a.capture);
  const FocalPlane plane = a.plane_file.empty() ? a.plane : read_focal_plane(a.plane_file);
  const VirtualCamera cam = virtual_camera_at_center(capture, a.up_angle);
  const IntegralImage img = integrate(capture, plane, cam, {ctx.threads});
  fs::path stem = a.out;
  if (stem.extension() == ".pfm") {
    stem.replace_extension();
  }
  write_integral(stem, img);
  if (!a.pgm.empty()) {
    const Mask mask = valid_mask(img);
    write_pgm(a.pgm, a.ahe ? tone_map(ahe(img.image, 512, &mask), &mask) : tone_map(img.image, &mask));
  }
  ctx.out << "integrated " << capture.views.size() << " views; " << img.valid_count() << " of "
          << img.image.size() << " pixels valid\n";
  return kOk;
}

struct StackArgs {
  std::string capture;
  std::string out;
  double dz_min = -1.0;
  double dz_max = 1.0;
  double dz_step = 0.5;
  double up_angle = 0.0;
};

int stack_cmd(const StackArgs& a, Context& ctx) {
  if (!(a.dz_step > 0.0) || a.dz_max < a.dz_min) {
    throw std::invalid_argument("stack: need dz-step > 0 and dz-max >= dz-min");
  }
  const auto capture = read_capture(a.capture);
  const VirtualCamera cam = virtual_camera_at_center(capture, a.up_angle);
  std::vector<FocalPlane> planes;
  const int n = static_cast<int>(std::floor((a.dz_max - a.dz_min) / a.dz_step + 1e-9));
  for (int i = 0; i <= n; ++i) {
    planes.push_back({a.dz_min + i * a.dz_step, 0.0, 0.0});
  }
  const auto stack = focal_stack(capture, planes, cam, {ctx.threads});
  for (std::size_t i = 0; i < stack.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "slice_%03zu", i);
    write_integral(fs::path(a.out) / name, stack[i]);
    ctx.out << name << " dz=" << planes[i].altitude_offset
            << " sharpness=" << sharpness(stack[i]) << "\n";
  }
  return kOk;
}

// --- optimize-focus ---------------------------------------------------------

struct FocusArgs {
  std::string capture;
  std::string out;
  FocusSearch search;
  int resolution = 256;
};

int optimize_focus(const FocusArgs& a, Context& ctx) {
  const auto capture = read_capture(a.capture);
  VirtualCamera cam = virtual_camera_at_center(capture, 0.0);
  cam.intrinsics = fov_to_intrinsics(cam.intrinsics.fov_deg(), a.resolution, a.resolution);
  const FocalPlane plane = optimize_focal_plane(capture, a.search, cam, {ctx.threads});
  if (!a.out.empty()) {
    write_focal_plane(a.out, plane);
  }
  ctx.out << "altitude_offset " << plane.altitude_offset << " tilt_x " << plane.tilt_x_deg
          << " tilt_y " << plane.tilt_y_deg << "\n";
  return kOk;
}

// --- augment ----------------------------------------------------------------

struct AugmentArgs {
  std::string mode;
  std::string ahe = "both";
  std::string out;
  std::string capture;
  std::string labels;
  std::string plane_file;
  int rotations = 10;
  std::uint64_t seed = 0;
  double occlusion = 0.0;
};

int augment_cmd(const AugmentArgs& a, Context& ctx) {
  const AheMode mode = parse_ahe_mode(a.ahe);
  const auto capture = read_capture(a.capture);
  const auto labels = read_labels3d(a.labels);
  const FocalPlane base = a.plane_file.empty() ? FocalPlane{} : read_focal_plane(a.plane_file);
  std::size_t count = 0;
  std::size_t warnings = 0;
  const AugmentSink sink = [&](AugmentedImage&& item) {
    write_pgm(fs::path(a.out) / (item.stem + ".pgm"), item.image);
    write_label_boxes(fs::path(a.out) / (item.stem + ".jsonl"), item.labels);
    for (const auto& w : item.warnings) {
      ctx.err << item.stem << ": " << w << "\n";
    }
    warnings += item.warnings.size();
    ++count;
  };
  fs::create_directories(a.out);
  if (a.mode == "integral") {
    std::mt19937_64 rng(a.seed);
    auto set = generate_augmentation_set(a.rotations, rng);
    if (mode == AheMode::kBoth) {
      set = with_ahe_duals(set);
    } else {
      for (auto& p : set) p.ahe = mode == AheMode::kOn;
    }
    augment_integral(capture, labels, base, set, sink, {ctx.threads});
  } else {
    SingleAugmentOptions opts;
    opts.rotations = a.rotations;
    opts.plain = mode != AheMode::kOn;
    opts.ahe = mode != AheMode::kOff;
    opts.occlusion_density = a.occlusion;
    const Plane plane = resolve_plane(base, virtual_camera_at_center(capture, 0.0));
    augment_single(capture, labels, plane, a.seed, opts, sink);
  }
  ctx.out << "wrote " << count << " augmented images to " << a.out << "\n";
  return kOk;
}

// --- detect -----------------------------------------------------------------

struct DetectArgs {
  std::string input;
  std::string out;
  DetectorConfig cfg;
};

int detect_cmd(const DetectArgs& a, Context& ctx) {
  std::size_t total = 0;
  auto run_one = [&](const fs::path& img, const fs::path& dst, const std::string& id) {
    const auto dets = detect_blobs(read_pgm(img), a.cfg, id);
    write_detections(dst, dets);
    total += dets.size();
  };
  if (fs::is_directory(a.input)) {
    const auto files = files_with_extension(a.input, ".pgm");
    for (const auto& f : files) {
      fs::path rel = fs::relative(f, a.input);
      rel.replace_extension(".jsonl");
      run_one(f, fs::path(a.out) / rel, fs::path(rel).replace_extension().generic_string());
    }
    ctx.out << total << " detections in " << files.size() << " images\n";
  } else {
    run_one(a.input, a.out, fs::path(a.input).stem().string());
    ctx.out << total << " detections\n";
  }
  return kOk;
}

// --- evaluate ---------------------------------------------------------------

struct EvaluateArgs {
  std::string dets;
  std::string labels;
  std::string merge_ahe;
  std::string mode = "integral";
  std::string pr_out;
  std::string csv;
  EvalConfig cfg;
  int width = 512;
  int height = 512;
};

int evaluate_cmd(const EvaluateArgs& a, Context& ctx) {
  const EvalMode mode = a.mode == "single" ? EvalMode::kSingle : EvalMode::kIntegral;
  auto load_image = [&](const fs::path& rel) {
    EvalImage img;
    img.id = fs::path(rel).replace_extension().generic_string();
    img.width = a.width;
    img.height = a.height;
    for (const auto& b : read_label_boxes(fs::path(a.labels) / rel)) {
      img.gts.push_back(b.box);
    }
    const fs::path det = fs::path(a.dets) / rel;
    if (fs::exists(det)) {
      img.dets = read_detections(det);
    }
    if (!a.merge_ahe.empty()) {
      const fs::path ahe = fs::path(a.merge_ahe) / rel;
      img.ahe_dets = fs::exists(ahe) ? read_detections(ahe) : std::vector<Detection>{};
    }
    return img;
  };
  std::vector<SceneEval> scenes;
  for (const auto& entry : sorted_entries(a.labels)) {
    if (fs::is_directory(entry)) {
      SceneEval scene{entry.filename().string(), {}};
      for (const auto& f : sorted_entries(entry)) {
        if (f.extension() == ".jsonl") {
          scene.images.push_back(load_image(fs::relative(f, a.labels)));
        }
      }
      scenes.push_back(std::move(scene));
    } else if (entry.extension() == ".jsonl") {
      scenes.push_back({entry.stem().string(), {load_image(entry.filename())}});
    }
  }
  if (scenes.empty()) {
    throw IoError(a.labels, "no label files (*.jsonl) found");
  }
  const EvalReport report = scene_report(scenes, a.cfg, mode);
  ctx.out << format_report_text(report);
  if (!a.csv.empty()) {
    write_text(a.csv, format_report_csv(report));
  }
  if (!a.pr_out.empty()) {
    write_text(a.pr_out, format_pr_csv(report.pr_curve));
  }
  return kOk;
}

// --- compare ----------------------------------------------------------------

struct CompareArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

int compare_cmd(const CompareArgs& a, Context& ctx) {
  RunConfig cfg = load_run_config(a.config);
  if (!a.out.empty()) {
    cfg.output_root = a.out;
  }
  if (a.seed) {
    cfg.rng_seed = *a.seed;
  }
  if (ctx.threads > 0) {
    cfg.threads = ctx.threads;
  }
  const PipelineResult result = run_pipeline(cfg);
  if (result.status != 0) {
    ctx.err << "aos: " << result.error << "\n";
    return kStageFailure;
  }
  ctx.out << format_comparison(*result.integral_report, *result.single_report);
  return kOk;
}

// "<aperture>x<aperture>:<along>x<line>", e.g. 30x30:1x3.
void parse_scan(const std::string& text, ScanSpec& scan) {
  double ax = 0.0;
  double ay = 0.0;
  double along = 0.0;
  double line = 0.0;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%lfx%lf:%lfx%lf%c", &ax, &ay, &along, &line, &tail) != 4) {
    throw CLI::ValidationError("--scan", "expected AxA:SxS, got '" + text + "'");
  }
  if (ax != ay) {
    throw CLI::ValidationError("--scan", "only square apertures are supported");
  }
  scan.aperture = ax;
  scan.along_spacing = along;
  scan.line_spacing = line;
}

void add_scan_options(CLI::App* cmd, ScanSpec& scan, CameraSpec& cam) {
  cmd->add_option_function<std::string>("--scan", [&scan](const std::string& v) { parse_scan(v, scan); },
                                        "aperture and spacings as AxA:SxS (m)");
  cmd->add_option("--aperture", scan.aperture, "synthetic aperture side (m)")->capture_default_str();
  cmd->add_option("--along", scan.along_spacing, "pose spacing along a line (m)")->capture_default_str();
  cmd->add_option("--line", scan.line_spacing, "spacing between lines (m)")->capture_default_str();
  cmd->add_option("--altitude,--alt", scan.altitude, "flight altitude above ground (m)")->capture_default_str();
  cmd->add_option("--fov", cam.fov_deg, "horizontal field of view (deg)")->capture_default_str();
  cmd->add_option("--width", cam.width, "image width (px)")->capture_default_str();
  cmd->add_option("--height", cam.height, "image height (px)")->capture_default_str();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Synthetic-aperture integral imaging and occluded person detection", "aos"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", AOS_VERSION);
  Context ctx{out, err};
  app.add_option("--threads", ctx.threads, "cap on worker threads (0: all cores)")
      ->check(CLI::NonNegativeNumber);

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "render a scene into a light-field capture");
  c_sim->add_option("--scene,--spec", sim.scene, "scene spec JSON")->required()->check(CLI::ExistingFile);
  c_sim->add_option("-o,--out", sim.out, "capture directory")->required();
  c_sim->add_option("--seed", sim.seed, "override the scene's rng_seed");
  c_sim->add_flag("--no-normalize", sim.no_normalize, "keep raw per-view means");
  add_scan_options(c_sim, sim.scan, sim.camera);

  IntegrateArgs integ;
  auto* c_int = app.add_subcommand("integrate", "integral image on one focal plane");
  c_int->add_option("--capture", integ.capture, "capture directory")->required()->check(CLI::ExistingDirectory);
  c_int->add_option("-o,--out", integ.out, "output stem or .pfm path (.pfm, .count.pgm, .json)")->required();
  auto* o_dz = c_int->add_option("--dz", integ.plane.altitude_offset, "focal plane height (m)");
  auto* o_tx = c_int->add_option("--tilt-x", integ.plane.tilt_x_deg, "tilt about image x (deg)");
  auto* o_ty = c_int->add_option("--tilt-y", integ.plane.tilt_y_deg, "tilt about image y (deg)");
  c_int->add_option("--plane", integ.plane_file, "focal plane JSON")
      ->check(CLI::ExistingFile)
      ->excludes(o_dz)
      ->excludes(o_tx)
      ->excludes(o_ty);
  c_int->add_option("--up,--up-angle", integ.up_angle, "virtual camera up-vector angle (deg)");
  c_int->add_option("--pgm", integ.pgm, "also write the tone-mapped 8-bit image");
  c_int->add_flag("--ahe", integ.ahe, "equalize before tone mapping the --pgm output");

  StackArgs stk;
  auto* c_stk = app.add_subcommand("stack", "focal stack over a range of plane heights");
  c_stk->add_option("--capture", stk.capture, "capture directory")->required()->check(CLI::ExistingDirectory);
  c_stk->add_option("--out", stk.out, "output directory")->required();
  c_stk->add_option("--dz-min", stk.dz_min)->capture_default_str();
  c_stk->add_option("--dz-max", stk.dz_max)->capture_default_str();
  c_stk->add_option("--dz-step", stk.dz_step)->capture_default_str();
  c_stk->add_option("--up-angle", stk.up_angle);

  FocusArgs foc;
  auto* c_foc = app.add_subcommand("optimize-focus", "search the sharpest focal plane");
  c_foc->add_option("--capture", foc.capture, "capture directory")->required()->check(CLI::ExistingDirectory);
  c_foc->add_option("--out", foc.out, "focal plane JSON");
  c_foc->add_option("--dz-min", foc.search.dz_min)->capture_default_str();
  c_foc->add_option("--dz-max", foc.search.dz_max)->capture_default_str();
  c_foc->add_option("--dz-step", foc.search.dz_step)->capture_default_str();
  c_foc->add_option("--tilt-range", foc.search.tilt_range)->capture_default_str();
  c_foc->add_option("--tilt-step", foc.search.tilt_step)->capture_default_str();
  c_foc->add_option("--resolution", foc.resolution, "virtual image side during search")
      ->capture_default_str()
      ->check(CLI::Range(8, 8192));

  AugmentArgs aug;
  auto* c_aug = app.add_subcommand("augment", "augmented training images with labels");
  c_aug->add_option("--mode", aug.mode)->required()->check(CLI::IsMember({"integral", "single"}));
  c_aug->add_option("--ahe", aug.ahe)->capture_default_str()->check(CLI::IsMember({"both", "on", "off"}));
  c_aug->add_option("--out", aug.out, "output directory")->required();
  c_aug->add_option("--capture", aug.capture, "capture directory")->required()->check(CLI::ExistingDirectory);
  c_aug->add_option("--labels", aug.labels, "3D labels JSON")->required()->check(CLI::ExistingFile);
  c_aug->add_option("--plane", aug.plane_file, "optimal focal plane JSON")->check(CLI::ExistingFile);
  c_aug->add_option("--rotations", aug.rotations)->capture_default_str()->check(CLI::PositiveNumber);
  c_aug->add_option("--seed", aug.seed)->capture_default_str();
  c_aug->add_option("--occlusion", aug.occlusion, "occlusion-patch density, single mode")
      ->check(CLI::Range(0.0, 1.0));

  DetectArgs det;
  auto* c_det = app.add_subcommand("detect", "blob detection on 8-bit images");
  c_det->add_option("--input", det.input, "PGM file or directory")->required()->check(CLI::ExistingPath);
  c_det->add_option("--out", det.out, "JSON-lines file or directory")->required();
  c_det->add_option("--percentile", det.cfg.threshold_percentile)->capture_default_str();
  c_det->add_option("--min-area", det.cfg.min_area)->capture_default_str();
  c_det->add_option("--max-area", det.cfg.max_area)->capture_default_str();

  EvaluateArgs ev;
  auto* c_ev = app.add_subcommand("evaluate", "score detections against labels");
  c_ev->add_option("--dets", ev.dets, "detections directory")->required()->check(CLI::ExistingDirectory);
  c_ev->add_option("--labels", ev.labels, "labels directory")->required()->check(CLI::ExistingDirectory);
  c_ev->add_option("--iou", ev.cfg.iou_threshold)->capture_default_str();
  c_ev->add_option("--conf", ev.cfg.confidence_floor)->capture_default_str();
  c_ev->add_option("--margin", ev.cfg.border_margin)->capture_default_str();
  c_ev->add_option("--nms", ev.cfg.nms_threshold, "IoU for the dual-pass merge")->capture_default_str();
  c_ev->add_option("--merge-ahe", ev.merge_ahe, "AHE-pass detections directory")->check(CLI::ExistingDirectory);
  c_ev->add_option("--mode", ev.mode)->capture_default_str()->check(CLI::IsMember({"integral", "single"}));
  c_ev->add_option("--pr-out", ev.pr_out, "precision/recall CSV");
  c_ev->add_option("--csv", ev.csv, "report CSV");
  c_ev->add_option("--width", ev.width, "image width for the border filter")->capture_default_str();
  c_ev->add_option("--height", ev.height, "image height for the border filter")->capture_default_str();

  CompareArgs cmp;
  auto* c_cmp = app.add_subcommand("compare", "run both arms end to end from a config");
  c_cmp->add_option("--config", cmp.config, "run config JSON")->required()->check(CLI::ExistingFile);
  c_cmp->add_option("--out", cmp.out, "output root (overrides the config)");
  c_cmp->add_option("--seed", cmp.seed, "run seed (overrides the config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }

  try {
    if (c_sim->parsed()) return simulate(sim, ctx);
    if (c_int->parsed()) return integrate_cmd(integ, ctx);
    if (c_stk->parsed()) return stack_cmd(stk, ctx);
    if (c_foc->parsed()) return optimize_focus(foc, ctx);
    if (c_aug->parsed()) return augment_cmd(aug, ctx);
    if (c_det->parsed()) return detect_cmd(det, ctx);
    if (c_ev->parsed()) return evaluate_cmd(ev, ctx);
    if (c_cmp->parsed()) return compare_cmd(cmp, ctx);
  } catch (const std::exception& e) {
    err << "aos: error: " << e.what() << "\n";
    return kStageFailure;
  }
  return kUsage;
}

}  // namespace aos::cli
