#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "aos/augment.hpp"
#include "aos/error.hpp"
#include "oracles.hpp"
#include "scenes.hpp"

namespace aos {
namespace {

constexpr double kFov = 50.82;

HdrImage image_of(int w, int h, std::initializer_list<float> values) {
  HdrImage img(w, h);
  std::copy(values.begin(), values.end(), img.samples.begin());
  return img;
}

HdrImage random_image(int w, int h, std::uint64_t seed, float lo = 0.0f, float hi = 1.0f) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(lo, hi);
  HdrImage img(w, h);
  for (float& v : img.samples) {
    v = u(rng);
  }
  return img;
}

TEST(AugmentationSet, CountsAndGrid) {
  std::mt19937_64 rng(1);
  const auto set = generate_augmentation_set(10, rng);
  ASSERT_EQ(set.size(), 270u);
  EXPECT_EQ(with_ahe_duals(set).size(), 540u);

  std::map<double, int> per_angle;
  std::set<std::tuple<double, double, double>> focus;
  for (const auto& p : set) {
    EXPECT_GE(p.up_angle_deg, 0.0);
    EXPECT_LT(p.up_angle_deg, 360.0);
    EXPECT_FALSE(p.ahe);
    ++per_angle[p.up_angle_deg];
    focus.insert({p.dz, p.tilt_x_deg, p.tilt_y_deg});
    EXPECT_TRUE(p.dz == -0.25 || p.dz == 0.0 || p.dz == 0.25);
    EXPECT_TRUE(std::abs(p.tilt_x_deg) == 2.0 || p.tilt_x_deg == 0.0);
  }
  EXPECT_EQ(per_angle.size(), 10u);
  for (const auto& [angle, n] : per_angle) {
    EXPECT_EQ(n, 27) << angle;
  }
  EXPECT_EQ(focus.size(), 27u);

  std::mt19937_64 one(2);
  EXPECT_EQ(generate_augmentation_set(1, one).size(), 27u);
  EXPECT_THROW(generate_augmentation_set(0, one), std::invalid_argument);
}

TEST(AugmentationSet, ReproducibleFromSeed) {
  std::mt19937_64 a(77);
  std::mt19937_64 b(77);
  EXPECT_EQ(generate_augmentation_set(10, a), generate_augmentation_set(10, b));
}

TEST(AugmentationSet, DualsAlternatePlainAndAhe) {
  std::mt19937_64 rng(3);
  const auto set = generate_augmentation_set(2, rng);
  const auto duals = with_ahe_duals(set);
  for (std::size_t i = 0; i < set.size(); ++i) {
    AugmentationParams plain = duals[2 * i];
    AugmentationParams eq = duals[2 * i + 1];
    EXPECT_FALSE(plain.ahe);
    EXPECT_TRUE(eq.ahe);
    eq.ahe = false;
    EXPECT_EQ(plain, set[i]);
    EXPECT_EQ(eq, set[i]);
  }
}

TEST(AugmentationParams, AppliedToBase) {
  const AugmentationParams p{10.0, 0.25, -2.0, 2.0, false};
  const FocalPlane f = p.applied_to({0.3, 1.0, -1.0});
  EXPECT_DOUBLE_EQ(f.altitude_offset, 0.55);
  EXPECT_DOUBLE_EQ(f.tilt_x_deg, -1.0);
  EXPECT_DOUBLE_EQ(f.tilt_y_deg, 1.0);
}

TEST(ToneMap, Examples) {
  const GrayImage a = tone_map(image_of(2, 1, {0.0f, 1.0f}));
  EXPECT_EQ(a.samples, (std::vector<std::uint8_t>{0, 255}));
  // 127.5 rounds half up.
  const GrayImage b = tone_map(image_of(3, 1, {10.0f, 20.0f, 30.0f}));
  EXPECT_EQ(b.samples, (std::vector<std::uint8_t>{0, 128, 255}));
  const GrayImage c = tone_map(HdrImage(4, 4, 3.5f));
  EXPECT_TRUE(std::all_of(c.samples.begin(), c.samples.end(), [](auto v) { return v == 0; }));
}

TEST(ToneMap, MaskedPixelsIgnoredAndZero) {
  const HdrImage img = image_of(4, 1, {100.0f, 1.0f, 2.0f, 3.0f});
  Mask m(4, 1, 1);
  m.samples[0] = 0;
  const GrayImage out = tone_map(img, &m);
  EXPECT_EQ(out.samples, (std::vector<std::uint8_t>{0, 0, 128, 255}));
  Mask wrong(3, 1, 1);
  EXPECT_THROW(tone_map(img, &wrong), std::invalid_argument);
}

TEST(ToneMapProperty, AffineInvariant) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    // Samples on a 1/256 lattice with power-of-two scales and integer
    // offsets keep the float transform exact.
    HdrImage img = random_image(16, 16, 100 + trial, 0.0f, 1.0f);
    for (float& v : img.samples) {
      v = std::round(v * 256.0f) / 256.0f;
    }
    const float alpha = std::ldexp(1.0f, std::uniform_int_distribution<int>(-3, 5)(rng));
    const float beta = static_cast<float>(std::uniform_int_distribution<int>(-8, 8)(rng));
    HdrImage moved = img;
    for (float& v : moved.samples) {
      v = alpha * v + beta;
    }
    EXPECT_EQ(tone_map(moved), tone_map(img)) << alpha << " " << beta;
  }
}

TEST(Ahe, ConstantImageIsConstant) {
  const HdrImage out = ahe(HdrImage(64, 64, 0.4f));
  EXPECT_TRUE(std::all_of(out.samples.begin(), out.samples.end(),
                          [&](float v) { return v == out.samples[0]; }));
}

TEST(Ahe, OutputInUnitRange) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const HdrImage out = ahe(random_image(97, 61, seed, -5.0f, 40.0f));
    for (float v : out.samples) {
      EXPECT_GE(v, 0.0f);
      EXPECT_LE(v, 1.0f);
    }
  }
}

TEST(Ahe, MaskedPixelsAreZero) {
  HdrImage img = random_image(64, 64, 9);
  Mask m(64, 64, 1);
  for (int x = 0; x < 64; ++x) {
    m.at(x, 0) = 0;
    img.at(x, 0) = 1000.0f;  // would dominate the histogram range if counted
  }
  const HdrImage out = ahe(img, 512, &m);
  for (int x = 0; x < 64; ++x) {
    EXPECT_EQ(out.at(x, 0), 0.0f);
  }
  float peak = 0.0f;
  for (int y = 1; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      peak = std::max(peak, out.at(x, y));
    }
  }
  EXPECT_GT(peak, 0.9f);
}

double window_std(const HdrImage& img, int x0, int x1, int y0, int y1) {
  double s = 0.0;
  double s2 = 0.0;
  int n = 0;
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      s += img.at(x, y);
      s2 += img.at(x, y) * img.at(x, y);
      ++n;
    }
  }
  const double m = s / n;
  return std::sqrt(std::max(0.0, s2 / n - m * m));
}

TEST(Ahe, SmallWarmPatchKeepsContrastThatGlobalEqualizationLoses) {
  // A textured 24 px patch covers under 1% of the image, so a global CDF
  // squeezes it into the top bins while its tile still spreads it out.
  constexpr int kSide = 256;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<float> tex(-0.05f, 0.05f);
  HdrImage img(kSide, kSide);
  for (int y = 0; y < kSide; ++y) {
    for (int x = 0; x < kSide; ++x) {
      const bool patch = x >= 100 && x < 124 && y >= 100 && y < 124;
      img.at(x, y) = (patch ? 0.8f : 0.2f) + tex(rng);
    }
  }
  const HdrImage local = ahe(img, 512);
  const HdrImage global = oracle::global_equalize(img, 512);
  const double local_std = window_std(local, 100, 124, 100, 124);
  const double global_std = window_std(global, 100, 124, 100, 124);
  EXPECT_GT(local_std, 2.0 * global_std) << local_std << " vs " << global_std;
}

TEST(RotatedCropSize, Examples) {
  EXPECT_EQ(rotated_crop_size(512, 512, 45.0), (std::pair<int, int>{362, 362}));
  EXPECT_EQ(static_cast<int>(512.0 / (std::cos(M_PI / 4) + std::sin(M_PI / 4))), 362);
  EXPECT_EQ(rotated_crop_size(512, 512, 0.0), (std::pair<int, int>{512, 512}));
  EXPECT_EQ(rotated_crop_size(640, 480, 90.0), (std::pair<int, int>{480, 640}));
  EXPECT_EQ(rotated_crop_size(640, 480, 180.0), (std::pair<int, int>{640, 480}));
}

TEST(RotatedCropSize, CropCornersStayInsideSource) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const int w = std::uniform_int_distribution<int>(20, 700)(rng);
    const int h = std::uniform_int_distribution<int>(20, 700)(rng);
    const double a = std::uniform_real_distribution<double>(0.0, 360.0)(rng);
    const Rotation2D rot = make_rotation(w, h, a);
    ASSERT_GT(rot.dst_width, 0);
    ASSERT_GT(rot.dst_height, 0);
    for (const Vec2 corner : {Vec2(0, 0), Vec2(rot.dst_width, 0), Vec2(0, rot.dst_height),
                              Vec2(rot.dst_width, rot.dst_height)}) {
      const Vec2 s = rot.inverse(corner);
      EXPECT_GE(s.x(), -1e-6);
      EXPECT_GE(s.y(), -1e-6);
      EXPECT_LE(s.x(), w + 1e-6);
      EXPECT_LE(s.y(), h + 1e-6);
    }
  }
}

TEST(RotateImage, ZeroIsIdentity) {
  const HdrImage img = random_image(37, 23, 7);
  EXPECT_EQ(rotate_image(img, make_rotation(37, 23, 0.0)), img);
}

TEST(RotateImage, QuarterTurnIsExactLatticeRotation) {
  const HdrImage img = random_image(32, 32, 8);
  const HdrImage out = rotate_image(img, make_rotation(32, 32, 90.0));
  ASSERT_EQ(out.width, 32);
  ASSERT_EQ(out.height, 32);
  for (int v = 0; v < 32; ++v) {
    for (int u = 0; u < 32; ++u) {
      EXPECT_EQ(out.at(u, v), img.at(v, 31 - u));
    }
  }
  GrayImage g(16, 16);
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.samples[i] = static_cast<std::uint8_t>(i);
  }
  const GrayImage gr = rotate_image(g, make_rotation(16, 16, 90.0));
  EXPECT_EQ(gr.at(0, 0), g.at(0, 15));
}

TEST(RotateImage, ForwardInverseRoundTrip) {
  const Rotation2D rot = make_rotation(300, 200, 33.3);
  const Vec2 p(123.4, 56.7);
  EXPECT_NEAR((rot.inverse(rot.forward(p)) - p).norm(), 0.0, 1e-9);
}

Label3D square_label(const Vec2& c, double side, double z = 0.0, int id = 0) {
  Label3D l;
  l.person_id = id;
  const double r = side / 2;
  l.polygon = {Vec3(c.x() - r, c.y() - r, z), Vec3(c.x() + r, c.y() - r, z),
               Vec3(c.x() + r, c.y() + r, z), Vec3(c.x() - r, c.y() + r, z)};
  return l;
}

TEST(ProjectLabels, CentredSquare) {
  const VirtualCamera cam{Pose::nadir(Vec3(0, 0, 35)), fov_to_intrinsics(kFov, 512, 512)};
  const Label3D l = square_label(Vec2(0, 0), 2.0);
  const auto out = project_labels(std::span(&l, 1), cam, Plane::horizontal(0.0));
  ASSERT_EQ(out.boxes.size(), 1u);
  const double half = cam.intrinsics.focal_length / 35.0;
  EXPECT_NEAR(out.boxes[0].box.xmin, 256 - half, 1e-9);
  EXPECT_NEAR(out.boxes[0].box.xmax, 256 + half, 1e-9);
  EXPECT_NEAR(out.boxes[0].box.ymin, 256 - half, 1e-9);
  EXPECT_NEAR(out.boxes[0].box.ymax, 256 + half, 1e-9);
  EXPECT_TRUE(out.warnings.empty());
}

TEST(ProjectLabels, MostlyOutsideIsDiscarded) {
  const VirtualCamera cam{Pose::nadir(Vec3(0, 0, 35)), fov_to_intrinsics(kFov, 512, 512)};
  const double m_per_px = 35.0 / cam.intrinsics.focal_length;
  // 100 px wide box, 80 px of it beyond the right border.
  const double cx = (512 + 30 - 256) * m_per_px;
  Label3D l = square_label(Vec2(cx, 0), 100 * m_per_px);
  EXPECT_TRUE(project_labels(std::span(&l, 1), cam, Plane::horizontal(0.0)).boxes.empty());
  // 70 px beyond: 30% remains and the clipped box survives.
  l = square_label(Vec2((512 + 20 - 256) * m_per_px, 0), 100 * m_per_px);
  const auto kept = project_labels(std::span(&l, 1), cam, Plane::horizontal(0.0));
  ASSERT_EQ(kept.boxes.size(), 1u);
  EXPECT_NEAR(kept.boxes[0].box.xmax, 512.0, 1e-9);
}

TEST(ProjectLabels, VertexBehindCameraDropsWithWarning) {
  const VirtualCamera cam{Pose::nadir(Vec3(0, 0, 35)), fov_to_intrinsics(kFov, 64, 64)};
  Label3D l = square_label(Vec2(0, 0), 1.0, 0.0, 7);
  l.polygon[0].z() = 40.0;
  // The label plane seats vertices, so use a plane above the camera.
  const auto out = project_labels(std::span(&l, 1), cam, Plane::horizontal(40.0));
  EXPECT_TRUE(out.boxes.empty());
  ASSERT_EQ(out.warnings.size(), 1u);
  EXPECT_NE(out.warnings[0].find("7"), std::string::npos);
}

TEST(ProjectLabels, SeatsVerticesOnPlane) {
  const VirtualCamera cam{Pose::nadir(Vec3(0, 0, 35)), fov_to_intrinsics(kFov, 512, 512)};
  const Label3D low = square_label(Vec2(3, 2), 1.0, 0.0);
  const Label3D high = square_label(Vec2(3, 2), 1.0, 0.7);
  const auto a = project_labels(std::span(&low, 1), cam, Plane::horizontal(0.5));
  const auto b = project_labels(std::span(&high, 1), cam, Plane::horizontal(0.5));
  ASSERT_EQ(a.boxes.size(), 1u);
  EXPECT_EQ(a.boxes, b.boxes);
}

TEST(ProjectLabels, QuarterTurnOfUpVectorIsConsistent) {
  const Vec3 pos(0.5, -0.3, 35);
  const VirtualCamera c0{Pose::nadir(pos, 0.0), fov_to_intrinsics(kFov, 512, 512)};
  const VirtualCamera c90{Pose::nadir(pos, 90.0), c0.intrinsics};
  const Plane ground = Plane::horizontal(0.0);
  std::vector<Label3D> labels;
  for (int i = 0; i < 6; ++i) {
    labels.push_back(square_label(Vec2(-6.0 + 2.5 * i, 4.0 - 1.5 * i), 0.6 + 0.2 * i, 0.0, i));
  }
  const auto a = project_labels(labels, c0, ground);
  const auto b = project_labels(labels, c90, ground);
  ASSERT_EQ(a.boxes.size(), b.boxes.size());
  const Rotation2D quarter = make_rotation(512, 512, 90.0);
  for (std::size_t i = 0; i < a.boxes.size(); ++i) {
    const BoundingBox& s = a.boxes[i].box;
    BoundingBox r{1e9, 1e9, -1e9, -1e9};
    for (const Vec2 p : {Vec2(s.xmin, s.ymin), Vec2(s.xmax, s.ymin), Vec2(s.xmin, s.ymax),
                         Vec2(s.xmax, s.ymax)}) {
      const Vec2 q = quarter.forward(p);
      r = {std::min(r.xmin, q.x()), std::min(r.ymin, q.y()), std::max(r.xmax, q.x()),
           std::max(r.ymax, q.y())};
    }
    const BoundingBox& t = b.boxes[i].box;
    EXPECT_NEAR(r.xmin, t.xmin, 1.0);
    EXPECT_NEAR(r.ymin, t.ymin, 1.0);
    EXPECT_NEAR(r.xmax, t.xmax, 1.0);
    EXPECT_NEAR(r.ymax, t.ymax, 1.0);
  }
}

TEST(ProjectLabels, FollowsRenderedPersonUnderFocusPerturbation) {
  SceneSpec spec;
  spec.extent = 40.0;
  spec.persons.push_back(testing::rect_person(Vec2(3.0, -2.0), 1.8, 0.6, 0.5));
  spec.persons.push_back(testing::rect_person(Vec2(-5.0, 4.0), 1.7, 0.5, 2.0));
  const Scene scene(spec, {});
  const auto cap = capture_scene(scene, plan_grid_scan(30, 3, 3, 35),
                                 fov_to_intrinsics(kFov, 256, 256));
  const FocalPlane base{};
  const Plane label_plane = resolve_plane(base, virtual_camera_at_center(cap, 0.0));
  for (const AugmentationParams p : {AugmentationParams{30.0, -0.25, 2.0, -2.0, false},
                                     AugmentationParams{200.0, 0.25, -2.0, 0.0, false}}) {
    const VirtualCamera cam = virtual_camera_at_center(cap, p.up_angle_deg);
    const IntegralImage img = integrate(cap, p.applied_to(base), cam);
    const auto labels = project_labels(scene.labels(), cam, label_plane);
    ASSERT_EQ(labels.boxes.size(), 2u);
    for (const auto& lb : labels.boxes) {
      const Vec2 c = lb.box.center();
      double sx = 0.0;
      double sy = 0.0;
      double sw = 0.0;
      for (int y = static_cast<int>(c.y()) - 30; y < static_cast<int>(c.y()) + 30; ++y) {
        for (int x = static_cast<int>(c.x()) - 30; x < static_cast<int>(c.x()) + 30; ++x) {
          const double w = img.image.at(x, y);
          sx += w * (x + 0.5);
          sy += w * (y + 0.5);
          sw += w;
        }
      }
      EXPECT_NEAR(sx / sw, c.x(), 2.0);
      EXPECT_NEAR(sy / sw, c.y(), 2.0);
    }
  }
}

TEST(OcclusionPatch, ZeroDensityUnchanged) {
  GrayImage img(64, 64, 17);
  std::mt19937_64 rng(1);
  EXPECT_EQ(simulate_occlusion_patch(img, {}, 0.0, rng), img);
}

TEST(OcclusionPatch, CoverageAndFillValues) {
  // Two images whose pixels carry their own (x, y) coordinates; painting the
  // same rectangles into both reveals exactly which pixels were painted and
  // from where their fill value came.
  constexpr int kSide = 256;
  GrayImage xs(kSide, kSide);
  GrayImage ys(kSide, kSide);
  for (int y = 0; y < kSide; ++y) {
    for (int x = 0; x < kSide; ++x) {
      xs.at(x, y) = static_cast<std::uint8_t>(x);
      ys.at(x, y) = static_cast<std::uint8_t>(y);
    }
  }
  const std::vector<BoundingBox> labels = {{40, 40, 80, 120}, {150, 10, 200, 60}};
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    std::mt19937_64 ra(seed);
    std::mt19937_64 rb(seed);
    const GrayImage pa = simulate_occlusion_patch(xs, labels, 0.5, ra);
    const GrayImage pb = simulate_occlusion_patch(ys, labels, 0.5, rb);
    long painted = 0;
    for (int y = 0; y < kSide; ++y) {
      for (int x = 0; x < kSide; ++x) {
        const int fx = pa.at(x, y);
        const int fy = pb.at(x, y);
        if (fx == x && fy == y) {
          continue;
        }
        ++painted;
        for (const auto& b : labels) {
          EXPECT_FALSE(fx + 0.5 >= b.xmin && fx + 0.5 < b.xmax && fy + 0.5 >= b.ymin &&
                       fy + 0.5 < b.ymax)
              << "fill sampled from a labeled pixel";
        }
      }
    }
    const double frac = static_cast<double>(painted) / (kSide * kSide);
    EXPECT_GE(frac, 0.5);
    EXPECT_LT(frac, 0.55);
  }
}

TEST(OcclusionPatch, FullyLabeledImageThrows) {
  GrayImage img(16, 16, 5);
  const std::vector<BoundingBox> all = {{0, 0, 16, 16}};
  std::mt19937_64 rng(1);
  EXPECT_THROW(simulate_occlusion_patch(img, all, 0.3, rng), NoBackgroundSamples);
  EXPECT_NO_THROW(simulate_occlusion_patch(img, all, 0.0, rng));
}

LightFieldCapture tiny_capture(const Scene& scene, int side = 64) {
  return capture_scene(scene, plan_grid_scan(4.0, 2.0, 2.0, 35.0),
                       fov_to_intrinsics(kFov, side, side));
}

SceneSpec one_person() {
  SceneSpec spec;
  spec.extent = 20.0;
  spec.ambient_temp = 0.1;
  spec.persons.push_back(testing::rect_person(Vec2(0.5, -0.5), 1.8, 0.6, 0.3));
  spec.persons.push_back(testing::rect_person(Vec2(-3.0, 2.0), 1.8, 0.6, 1.3));
  return spec;
}

TEST(AugmentIntegral, EmitsOneLabeledImagePerTuple) {
  const Scene scene(one_person(), {});
  const auto cap = tiny_capture(scene);
  std::mt19937_64 rng(2);
  const auto set = with_ahe_duals(generate_augmentation_set(2, rng));
  std::vector<AugmentedImage> out;
  augment_integral(cap, scene.labels(), FocalPlane{}, set,
                   [&](AugmentedImage&& img) { out.push_back(std::move(img)); });
  ASSERT_EQ(out.size(), set.size());
  EXPECT_EQ(out[0].stem, "int_0000");
  EXPECT_EQ(out[1].stem, "int_0001_ahe");
  for (const auto& img : out) {
    EXPECT_EQ(img.image.width, 64);
    EXPECT_LE(img.labels.size(), scene.labels().size());
    EXPECT_FALSE(img.labels.empty());
    for (const auto& l : img.labels) {
      EXPECT_GE(l.box.xmin, 0.0);
      EXPECT_LE(l.box.xmax, 64.0);
    }
  }
}

TEST(AugmentSingle, CountsStemsAndDeterminism) {
  const Scene scene(one_person(), {});
  const auto cap = tiny_capture(scene, 48);
  SingleAugmentOptions opts;
  opts.rotations = 3;
  opts.occlusion_density = 0.2;
  std::vector<AugmentedImage> a;
  std::vector<AugmentedImage> b;
  augment_single(cap, scene.labels(), Plane::horizontal(0.0), 5, opts,
                 [&](AugmentedImage&& img) { a.push_back(std::move(img)); });
  augment_single(cap, scene.labels(), Plane::horizontal(0.0), 5, opts,
                 [&](AugmentedImage&& img) { b.push_back(std::move(img)); });
  ASSERT_EQ(a.size(), cap.views.size() * 3 * 2);
  EXPECT_EQ(a[0].stem, "v0000_r00");
  EXPECT_EQ(a[1].stem, "v0000_r00_ahe");
  std::set<std::string> stems;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].image, b[i].image);
    EXPECT_EQ(a[i].labels, b[i].labels);
    stems.insert(a[i].stem);
    EXPECT_LE(a[i].image.width, 48);
  }
  EXPECT_EQ(stems.size(), a.size());

  // A view's output does not depend on the views after it.
  LightFieldCapture first = cap;
  first.views.resize(1);
  std::vector<AugmentedImage> c;
  augment_single(first, scene.labels(), Plane::horizontal(0.0), 5, opts,
                 [&](AugmentedImage&& img) { c.push_back(std::move(img)); });
  ASSERT_EQ(c.size(), 6u);
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_EQ(c[i].image, a[i].image);
  }
}

}  // namespace
}  // namespace aos
