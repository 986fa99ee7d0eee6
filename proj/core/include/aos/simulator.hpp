#pragma once

// Procedural occluded-forest scenes: a ground temperature field with person
// polygons, covered by a single layer of opaque square occluders placed by a
// Poisson (Boolean-model) process so that the expected covered fraction of
// the layer equals the configured density D.

#include <cstdint>
#include <span>
#include <vector>

#include "aos/geometry.hpp"
#include "aos/image.hpp"
#include "aos/lightfield.hpp"

namespace aos {

struct Person {
  std::vector<Vec2> polygon;  // ground-plane outline, meters
  double temperature = 1.0;
};

struct OccluderLayer {
  double density = 0.0;    // D, covered fraction of the layer, in [0, 1)
  double altitude = 2.0;   // o, meters above the ground
  double width = 0.5;      // w, side of each square patch, meters
  double temp_mean = 0.0;
  double temp_stddev = 0.0;
};

struct SceneSpec {
  double extent = 30.0;  // side of the square region centred at the origin
  double ambient_temp = 0.0;
  double ground_altitude = 0.0;           // z of the ground plane
  Vec2 ground_gradient = Vec2::Zero();    // temperature change per meter in x, y
  std::vector<Person> persons;
  OccluderLayer occluders;
  double ground_noise_stddev = 0.0;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct OccluderPatch {
  Vec2 center;
  double size = 0.0;
  double temperature = 0.0;

  bool contains(double x, double y) const {
    const double r = 0.5 * size;
    return x >= center.x() - r && x < center.x() + r && y >= center.y() - r &&
           y < center.y() + r;
  }
};

/// Polygonal person outline lifted into 3D.
struct Label3D {
  std::vector<Vec3> polygon;
  int person_id = 0;

  void validate() const;
};

class Scene {
 public:
  /// Default spec, no persons and no occluders.
  Scene() : Scene(SceneSpec{}, {}) {}
  /// Scene with an explicit occluder list (e.g. a single test occluder).
  Scene(SceneSpec spec, std::vector<OccluderPatch> patches);

  const SceneSpec& spec() const { return spec_; }
  const std::vector<OccluderPatch>& occluders() const { return patches_; }
  const std::vector<Label3D>& labels() const { return labels_; }

  double occluder_altitude() const { return spec_.ground_altitude + spec_.occluders.altitude; }

  /// Noise-free ground temperature at (x, y), persons overriding the ambient field.
  double ground_temperature(double x, double y) const;

  /// Occluder covering (x, y) at the layer altitude, lowest index first.
  const OccluderPatch* occluder_at(double x, double y) const;

  /// True when the segment between two points crosses an occluder patch.
  bool ray_occluded(const Vec3& from, const Vec3& to) const;

  /// Same scene with every occluder at temperature 1 over a zero ground and no
  /// persons or noise; its renders are per-ray occlusion indicators.
  Scene occlusion_indicator() const;

 private:
  void build_index();

  SceneSpec spec_;
  std::vector<OccluderPatch> patches_;
  std::vector<Label3D> labels_;
  std::vector<Eigen::AlignedBox2d> person_bounds_;
  // Uniform grid over patch centres; each cell lists the patches overlapping it.
  Vec2 grid_origin_ = Vec2::Zero();
  double cell_ = 1.0;
  int grid_n_ = 0;
  std::vector<std::vector<std::uint32_t>> cells_;
};

/// Places occluders by a Poisson process with intensity -ln(1 - D) / w^2 over
/// the extent grown by w/2 on each side; deterministic in rng_seed.
Scene build_scene(const SceneSpec& spec);

/// Renders one thermal view: occluder temperature where the pixel ray hits a
/// patch, otherwise the ground temperature plus Gaussian noise seeded per
/// (scene seed, pose, pixel).
HdrImage render_single(const Scene& scene, const CameraIntrinsics& intr, const Pose& pose);

/// Noise- and occluder-free reference seen through the virtual camera on the
/// given focal plane.
HdrImage render_ground_truth(const Scene& scene, const VirtualCamera& cam,
                             const FocalPlane& plane);

/// Serpentine grid of nadir poses over [-a/2, a/2]^2: lines along x separated
/// by line_spacing, a pose every along_spacing.
std::vector<Pose> plan_grid_scan(double aperture, double along_spacing, double line_spacing,
                                 double altitude);

struct CaptureOptions {
  bool normalize_means = true;
  int threads = 0;
};

LightFieldCapture capture_scene(const Scene& scene, std::span<const Pose> scan,
                                const CameraIntrinsics& intr, const CaptureOptions& opts = {});

/// Boolean-model intensity for a target coverage D and patch width w.
double occluder_intensity(double density, double width);

}  // namespace aos
