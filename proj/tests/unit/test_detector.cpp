#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "aos/augment.hpp"
#include "aos/detector.hpp"
#include "aos/eval.hpp"
#include "scenes.hpp"

namespace aos {
namespace {

void fill_rect(GrayImage& img, int x0, int y0, int w, int h, std::uint8_t v) {
  for (int y = y0; y < y0 + h; ++y) {
    for (int x = x0; x < x0 + w; ++x) {
      img.at(x, y) = v;
    }
  }
}

TEST(PercentileValue, MatchesSortedRank) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    GrayImage img(17 + trial, 9);
    for (auto& v : img.samples) {
      v = static_cast<std::uint8_t>(rng() % 256);
    }
    std::vector<std::uint8_t> sorted = img.samples;
    std::sort(sorted.begin(), sorted.end());
    for (double p : {0.0, 0.5, 0.9, 0.98, 0.999}) {
      const auto rank = static_cast<std::size_t>(p * (sorted.size() - 1));
      EXPECT_EQ(percentile_value(img, p), sorted[rank]);
    }
  }
  GrayImage ramp(100, 1);
  for (int i = 0; i < 100; ++i) {
    ramp.samples[i] = static_cast<std::uint8_t>(i);
  }
  EXPECT_EQ(percentile_value(ramp, 0.98), 97);
  EXPECT_THROW(percentile_value(GrayImage{}, 0.5), std::invalid_argument);
}

TEST(DetectorConfig, Validate) {
  EXPECT_NO_THROW(DetectorConfig{}.validate());
  EXPECT_THROW((DetectorConfig{0.0, 9, 100}.validate()), std::invalid_argument);
  EXPECT_THROW((DetectorConfig{1.0, 9, 100}.validate()), std::invalid_argument);
  EXPECT_THROW((DetectorConfig{0.9, 0, 100}.validate()), std::invalid_argument);
  EXPECT_THROW((DetectorConfig{0.9, 50, 50}.validate()), std::invalid_argument);
}

TEST(DetectBlobs, AllZeroImageHasNoDetections) {
  EXPECT_TRUE(detect_blobs(GrayImage(128, 128, 0), {}).empty());
  EXPECT_TRUE(detect_blobs(GrayImage(64, 64, 200), {}).empty());
}

TEST(DetectBlobs, SaturatedSquare) {
  GrayImage img(128, 128, 0);
  fill_rect(img, 40, 20, 10, 10, 255);
  const auto dets = detect_blobs(img, {}, "sq");
  ASSERT_EQ(dets.size(), 1u);
  EXPECT_EQ(dets[0].bbox, (BoundingBox{40, 20, 50, 30}));
  EXPECT_DOUBLE_EQ(dets[0].confidence, 1.0);
  EXPECT_EQ(dets[0].image_id, "sq");
}

TEST(DetectBlobs, AreaLimitsAndConnectivity) {
  GrayImage img(128, 128, 0);
  fill_rect(img, 10, 10, 2, 2, 200);   // 4 px, below min_area
  fill_rect(img, 30, 10, 3, 3, 200);   // 9 px, kept
  fill_rect(img, 60, 60, 3, 3, 200);   // diagonal neighbour of the next block
  fill_rect(img, 63, 63, 3, 3, 200);
  const auto dets = detect_blobs(img, {});
  ASSERT_EQ(dets.size(), 2u);
  EXPECT_EQ(dets[0].bbox, (BoundingBox{30, 10, 33, 13}));
  EXPECT_EQ(dets[1].bbox, (BoundingBox{60, 60, 66, 66}));
  EXPECT_NEAR(dets[0].confidence, 200.0 / 255.0, 1e-12);

  DetectorConfig tight;
  tight.max_area = 10;
  EXPECT_EQ(detect_blobs(img, tight).size(), 1u);
}

TEST(DetectBlobs, FaintBlobGetsMinimumConfidence) {
  GrayImage img(128, 128, 0);
  fill_rect(img, 5, 5, 4, 4, 1);
  const auto dets = detect_blobs(img, {});
  ASSERT_EQ(dets.size(), 1u);
  EXPECT_DOUBLE_EQ(dets[0].confidence, kMinConfidence);
}

GrayImage smooth_random(int side, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> raw(static_cast<std::size_t>(side) * side);
  for (double& v : raw) {
    v = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  }
  GrayImage img(side, side);
  constexpr int r = 3;
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      double s = 0.0;
      int n = 0;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          const int xx = std::clamp(x + dx, 0, side - 1);
          const int yy = std::clamp(y + dy, 0, side - 1);
          s += raw[static_cast<std::size_t>(yy) * side + xx];
          ++n;
        }
      }
      img.at(x, y) = static_cast<std::uint8_t>(std::clamp((s / n - 0.5) * 1200.0 + 128.0, 0.0, 255.0));
    }
  }
  return img;
}

bool contains(const BoundingBox& outer, const BoundingBox& inner) {
  return outer.xmin <= inner.xmin && outer.ymin <= inner.ymin && outer.xmax >= inner.xmax &&
         outer.ymax >= inner.ymax;
}

TEST(DetectBlobsProperty, HigherThresholdOnlyShrinksBlobs) {
  DetectorConfig low{0.9, 9, 1000000};
  DetectorConfig high{0.97, 9, 1000000};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const GrayImage img = smooth_random(96, seed);
    const auto a = detect_blobs(img, low);
    const auto b = detect_blobs(img, high);
    for (const auto& d : b) {
      EXPECT_TRUE(std::any_of(a.begin(), a.end(),
                              [&](const Detection& o) { return contains(o.bbox, d.bbox); }));
    }
  }
}

TEST(DetectBlobsProperty, TranslationEquivariant) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    GrayImage img(128, 128, 0);
    for (int k = 0; k < 4; ++k) {
      const int x = std::uniform_int_distribution<int>(10, 90)(rng);
      const int y = std::uniform_int_distribution<int>(10, 90)(rng);
      const int w = std::uniform_int_distribution<int>(3, 12)(rng);
      const int h = std::uniform_int_distribution<int>(3, 12)(rng);
      fill_rect(img, x, y, w, h, static_cast<std::uint8_t>(60 + 40 * k));
    }
    const int dx = std::uniform_int_distribution<int>(-9, 9)(rng);
    const int dy = std::uniform_int_distribution<int>(-9, 9)(rng);
    GrayImage moved(128, 128, 0);
    for (int y = 0; y < 128; ++y) {
      for (int x = 0; x < 128; ++x) {
        const int sx = x - dx;
        const int sy = y - dy;
        if (sx >= 0 && sy >= 0 && sx < 128 && sy < 128) {
          moved.at(x, y) = img.at(sx, sy);
        }
      }
    }
    const auto a = detect_blobs(img, {});
    const auto b = detect_blobs(moved, {});
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(b[i].bbox, (BoundingBox{a[i].bbox.xmin + dx, a[i].bbox.ymin + dy,
                                        a[i].bbox.xmax + dx, a[i].bbox.ymax + dy}));
      EXPECT_DOUBLE_EQ(b[i].confidence, a[i].confidence);
    }
  }
}

TEST(DetectBlobsProperty, Deterministic) {
  const GrayImage img = smooth_random(80, 9);
  EXPECT_EQ(detect_blobs(img, {}), detect_blobs(img, {}));
}

TEST(DetectBlobs, FindsEveryPersonInUnoccludedIntegral) {
  SceneSpec spec;
  spec.extent = 30.0;
  spec.ambient_temp = 0.1;
  const Vec2 centers[] = {{-6, -5}, {5, -6}, {0, 0}, {-5, 6}, {6, 5}};
  for (int i = 0; i < 5; ++i) {
    spec.persons.push_back(testing::rect_person(centers[i], 1.8, 0.6, 0.4 * i));
  }
  const Scene scene(spec, {});
  const auto intr = fov_to_intrinsics(50.82, 256, 256);
  const auto cap = capture_scene(scene, plan_grid_scan(4.0, 2.0, 2.0, 35.0), intr);
  const VirtualCamera cam = virtual_camera_at_center(cap, 0.0);
  const IntegralImage integral = integrate(cap, FocalPlane{}, cam);
  const Mask mask = valid_mask(integral);
  const auto dets = detect_blobs(tone_map(integral.image, &mask), {});
  const auto labels = project_labels(scene.labels(), cam, Plane::horizontal(0.0));
  ASSERT_EQ(labels.boxes.size(), 5u);
  ASSERT_EQ(dets.size(), 5u);
  for (const auto& l : labels.boxes) {
    double best = 0.0;
    for (const auto& d : dets) {
      best = std::max(best, iou(d.bbox, l.box));
    }
    EXPECT_GE(best, 0.5);
  }
}

}  // namespace
}  // namespace aos
