#include <benchmark/benchmark.h>

#include <random>

#include "aos/augment.hpp"
#include "aos/eval.hpp"
#include "aos/lightfield.hpp"
#include "aos/simulator.hpp"

namespace {

using namespace aos;

SceneSpec forest(double density) {
  SceneSpec spec;
  spec.extent = 40.0;
  spec.ambient_temp = 0.2;
  spec.ground_noise_stddev = 0.02;
  spec.occluders = {density, 2.0, 0.5, 0.4, 0.05};
  spec.rng_seed = 3;
  for (int i = 0; i < 4; ++i) {
    const double c = -6.0 + 4.0 * i;
    spec.persons.push_back({{{c - 0.3, -0.9}, {c + 0.3, -0.9}, {c + 0.3, 0.9}, {c - 0.3, 0.9}}, 1.0});
  }
  return spec;
}

void BM_RenderSingle(benchmark::State& state) {
  const Scene scene = build_scene(forest(0.5));
  const auto side = static_cast<int>(state.range(0));
  const auto intr = fov_to_intrinsics(50.82, side, side);
  const Pose pose = Pose::nadir(Vec3(0, 0, 35));
  for (auto _ : state) {
    benchmark::DoNotOptimize(render_single(scene, intr, pose));
  }
  state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(BM_RenderSingle)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_Integrate(benchmark::State& state) {
  const Scene scene = build_scene(forest(0.5));
  const auto side = static_cast<int>(state.range(0));
  const auto cap = capture_scene(scene, plan_grid_scan(10.0, 1.0, 3.0, 35.0),
                                 fov_to_intrinsics(50.82, side, side));
  const VirtualCamera cam = virtual_camera_at_center(cap, 0.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(integrate(cap, FocalPlane{}, cam, {1}));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(cap.views.size()) * side * side);
}
BENCHMARK(BM_Integrate)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_Ahe(benchmark::State& state) {
  const auto side = static_cast<int>(state.range(0));
  std::mt19937_64 rng(1);
  std::normal_distribution<float> n(0.3f, 0.1f);
  HdrImage img(side, side);
  for (float& v : img.samples) {
    v = n(rng);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(ahe(img));
  }
  state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(BM_Ahe)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

std::vector<Detection> random_detections(int n, std::mt19937_64& rng, const std::string& id) {
  std::uniform_real_distribution<double> pos(0.0, 480.0);
  std::uniform_real_distribution<double> size(8.0, 32.0);
  std::uniform_real_distribution<double> conf(0.05, 1.0);
  std::vector<Detection> out;
  for (int i = 0; i < n; ++i) {
    const double x = pos(rng);
    const double y = pos(rng);
    out.push_back({{x, y, x + size(rng), y + size(rng)}, conf(rng), id});
  }
  return out;
}

void BM_Nms(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const auto dets = random_detections(static_cast<int>(state.range(0)), rng, "img");
  for (auto _ : state) {
    benchmark::DoNotOptimize(nms(dets, 0.5));
  }
}
BENCHMARK(BM_Nms)->Arg(100)->Arg(1000);

void BM_AveragePrecision(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::vector<EvalImage> images;
  for (int i = 0; i < state.range(0); ++i) {
    EvalImage img;
    img.id = "img_" + std::to_string(i);
    img.width = 512;
    img.height = 512;
    img.dets = random_detections(40, rng, img.id);
    for (const auto& d : random_detections(10, rng, img.id)) {
      img.gts.push_back(d.bbox);
    }
    images.push_back(std::move(img));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(average_precision(images, 0.25));
  }
}
BENCHMARK(BM_AveragePrecision)->Arg(10)->Arg(100);

}  // namespace
BENCHMARK_MAIN();
