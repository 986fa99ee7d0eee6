#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include <json.hpp>

#include "aos/error.hpp"
#include "aos/hash.hpp"
#include "aos/pipeline.hpp"
#include "aos/serialize.hpp"
#include "scenes.hpp"

namespace aos {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("aos_pipeline_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// Five persons near the centre so that every view and the integral see all
// of them far from the image border.
SceneSpec open_field() {
  SceneSpec spec;
  spec.extent = 30.0;
  spec.ambient_temp = 0.2;
  const Vec2 centers[] = {{-3, -3}, {3, -3}, {0, 0}, {-3, 3}, {3, 3}};
  for (int i = 0; i < 5; ++i) {
    spec.persons.push_back(testing::rect_person(centers[i], 1.8, 0.6, 0.5 * i));
  }
  return spec;
}

RunConfig small_config(const fs::path& root) {
  RunConfig cfg;
  cfg.scenes.push_back({"F1", open_field()});
  cfg.scan = {10.0, 2.5, 2.5, 35.0};
  cfg.camera = {50.82, 192, 192};
  cfg.focus = {-0.5, 0.5, 0.25, 0.0, 1.0};
  cfg.focus_resolution = 64;
  cfg.rng_seed = 11;
  cfg.threads = 1;
  cfg.output_root = root;
  return cfg;
}

std::vector<fs::path> files_under(const fs::path& root) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) {
      out.push_back(fs::relative(e.path(), root));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

TEST(LoadRunConfig, ReadsFieldsAndResolvesScenePaths) {
  const fs::path dir = scratch("config");
  write_scene_spec(dir / "forest.json", open_field());
  write_text(dir / "run.json", R"({
    "scenes": ["forest.json", {"name": "inline", "ambient_temp": 0.1}],
    "scan": {"aperture": 20, "line_spacing": 2},
    "camera": {"width": 256, "height": 256},
    "focus": {"dz_min": -0.5, "dz_max": 0.5, "resolution": 96},
    "augment": {"enabled": true, "ahe": "on", "rotations": 3},
    "detector": {"threshold_percentile": 0.99, "ahe": "both"},
    "eval": {"median_box_size": 41},
    "rng_seed": 42,
    "output_root": "out",
    "write_captures": false
  })");
  const RunConfig cfg = load_run_config(dir / "run.json");
  ASSERT_EQ(cfg.scenes.size(), 2u);
  EXPECT_EQ(cfg.scenes[0].name, "forest");
  EXPECT_EQ(cfg.scenes[0].spec.persons.size(), 5u);
  EXPECT_EQ(cfg.scenes[1].name, "inline");
  EXPECT_EQ(cfg.scenes[1].spec.ambient_temp, 0.1);
  EXPECT_EQ(cfg.scan.aperture, 20.0);
  EXPECT_EQ(cfg.scan.line_spacing, 2.0);
  EXPECT_EQ(cfg.scan.along_spacing, ScanSpec{}.along_spacing);
  EXPECT_EQ(cfg.camera.width, 256);
  EXPECT_EQ(cfg.focus_resolution, 96);
  EXPECT_TRUE(cfg.augment.enabled);
  EXPECT_EQ(cfg.augment.ahe, AheMode::kOn);
  EXPECT_EQ(cfg.augment.rotations, 3);
  EXPECT_EQ(cfg.detect_ahe, AheMode::kBoth);
  EXPECT_EQ(cfg.detector.threshold_percentile, 0.99);
  EXPECT_EQ(cfg.eval.border_margin, 6);
  EXPECT_EQ(cfg.rng_seed, 42u);
  EXPECT_EQ(cfg.output_root, "out");
  EXPECT_FALSE(cfg.write_captures);
}

TEST(LoadRunConfig, ErrorsNameTheField) {
  const fs::path dir = scratch("config_errors");
  auto field_of = [&](const std::string& text) -> std::string {
    write_text(dir / "run.json", text);
    try {
      load_run_config(dir / "run.json");
    } catch (const FormatError& e) {
      EXPECT_NE(e.file().find("run.json"), std::string::npos);
      return e.field();
    }
    return "<no error>";
  };
  EXPECT_EQ(field_of(R"({"scenes": ["missing.json"]})"), "scenes[0]");
  EXPECT_EQ(field_of(R"({"scene": {}, "detector": {"ahe": "sometimes"}})"), "detector.ahe");
  EXPECT_EQ(field_of(R"({"scene": {}, "rng_seed": -1})"), "rng_seed");
  EXPECT_EQ(field_of(R"({"rng_seed": 1})"), "scenes");
  EXPECT_EQ(field_of(R"({"scenes": [{"name": "a"}, {"name": "a"}]})"), "scenes[1]");
  EXPECT_EQ(field_of(R"({"scene": {}, "scan": {"aperture": -1}})"), "<document>");
}

TEST(SceneSeed, MixesRunSeedSceneSeedAndIndex) {
  EXPECT_EQ(scene_seed(1, 2, 3), scene_seed(1, 2, 3));
  EXPECT_NE(scene_seed(1, 2, 3), scene_seed(2, 2, 3));
  EXPECT_NE(scene_seed(1, 2, 3), scene_seed(1, 3, 3));
  EXPECT_NE(scene_seed(1, 2, 3), scene_seed(1, 2, 4));
}

TEST(RunPipeline, UnoccludedSceneIsPerfectOnBothArms) {
  const fs::path root = scratch("perfect");
  const auto result = run_pipeline(small_config(root));
  ASSERT_EQ(result.status, 0) << result.error;
  ASSERT_TRUE(result.integral_report && result.single_report);
  ASSERT_TRUE(result.integral_report->aggregate.ap);
  EXPECT_DOUBLE_EQ(*result.integral_report->aggregate.ap, 1.0);
  EXPECT_EQ(result.integral_report->aggregate.gt, 5.0);
  EXPECT_EQ(result.integral_report->aggregate.fp, 0.0);
  ASSERT_TRUE(result.single_report->mean_scene_ap);
  EXPECT_DOUBLE_EQ(*result.single_report->mean_scene_ap, 1.0);
  EXPECT_EQ(result.single_report->aggregate.gt, 5.0);
  EXPECT_EQ(result.single_report->aggregate.fp, 0.0);

  for (const char* sub : {"captures", "integrals", "augmented", "detections", "reports"}) {
    EXPECT_TRUE(fs::is_directory(root / sub)) << sub;
  }
  EXPECT_TRUE(fs::exists(root / "captures" / "F1" / "camera.json"));
  EXPECT_TRUE(fs::exists(root / "integrals" / "F1.pfm"));
  EXPECT_TRUE(fs::exists(root / "detections" / "integral" / "F1.jsonl"));
  EXPECT_TRUE(fs::exists(root / "detections" / "gt" / "integral" / "F1.jsonl"));
  EXPECT_TRUE(fs::exists(root / "detections" / "single" / "F1" / "view_0000.jsonl"));
  EXPECT_TRUE(fs::exists(root / "reports" / "comparison.txt"));
}

TEST(RunPipeline, SameSeedGivesIdenticalArtifactsAndCompleteManifest) {
  const fs::path a = scratch("det_a");
  const fs::path b = scratch("det_b");
  RunConfig cfg = small_config(a);
  cfg.scenes[0].spec.occluders = {0.3, 2.0, 0.5, 0.0, 0.0};
  cfg.scenes[0].spec.ground_noise_stddev = 0.05;
  cfg.write_captures = false;
  ASSERT_EQ(run_pipeline(cfg).status, 0);
  cfg.output_root = b;
  ASSERT_EQ(run_pipeline(cfg).status, 0);

  const auto fa = files_under(a);
  ASSERT_EQ(fa, files_under(b));
  for (const auto& f : fa) {
    if (f == "manifest.json") continue;  // holds timings
    EXPECT_EQ(read_text(a / f), read_text(b / f)) << f;
  }

  const json manifest = json::parse(read_text(a / "manifest.json"));
  EXPECT_EQ(manifest["status"], "ok");
  EXPECT_EQ(manifest["rng_seed"], 11u);
  const auto& files = manifest["files"];
  std::set<std::string> listed;
  for (auto it = files.begin(); it != files.end(); ++it) {
    listed.insert(it.key());
    EXPECT_EQ(it.value().get<std::string>(), sha256_file(a / it.key())) << it.key();
  }
  for (const auto& f : fa) {
    if (f == "manifest.json") continue;
    EXPECT_TRUE(listed.count(f.generic_string())) << f << " missing from manifest";
  }
  EXPECT_EQ(listed.size() + 1, fa.size());
}

TEST(RunPipeline, StageFailureGivesStatusOneAndPartialManifest) {
  const fs::path root = scratch("failure");
  RunConfig cfg = small_config(root);
  // A featureless scene leaves the focus search nothing to maximize.
  cfg.scenes[0].spec.persons.clear();
  const auto result = run_pipeline(cfg);
  EXPECT_EQ(result.status, 1);
  EXPECT_NE(result.error.find("integrate"), std::string::npos) << result.error;
  const json manifest = json::parse(read_text(root / "manifest.json"));
  EXPECT_EQ(manifest["status"], "failed");
  EXPECT_TRUE(manifest["files"].contains("captures/F1/scene.json"));
  EXPECT_FALSE(fs::exists(root / "reports" / "integral.txt"));
  const auto& stages = manifest["stages"];
  ASSERT_FALSE(stages.empty());
  EXPECT_EQ(stages.back()["name"], "integrate");
  EXPECT_EQ(stages.back()["status"], "failed");
}

TEST(RunPipeline, EveryAugmentedImageHasLabels) {
  const fs::path root = scratch("augment");
  RunConfig cfg = small_config(root);
  cfg.camera = {50.82, 96, 96};
  cfg.augment = {true, AheMode::kBoth, 1};
  cfg.write_captures = false;
  ASSERT_EQ(run_pipeline(cfg).status, 0);
  std::set<std::string> images;
  std::set<std::string> labels;
  for (const auto& e : fs::directory_iterator(root / "augmented" / "F1")) {
    (e.path().extension() == ".pgm" ? images : labels).insert(e.path().stem().string());
  }
  EXPECT_EQ(images.size(), 54u);
  EXPECT_EQ(images, labels);
}

}  // namespace
}  // namespace aos
