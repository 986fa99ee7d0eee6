#pragma once

// Integral-image formation over an unstructured light field: every virtual
// pixel is back-projected onto a synthetic focal plane, the plane point is
// re-projected into all recorded views, and the bilinearly sampled values are
// averaged.

#include <cstdint>
#include <span>
#include <vector>

#include "aos/geometry.hpp"
#include "aos/image.hpp"

namespace aos {

struct View {
  HdrImage image;
  Pose pose;
};

/// Single images and their poses recorded over one synthetic aperture.
struct LightFieldCapture {
  CameraIntrinsics intrinsics;
  std::vector<View> views;

  /// Largest horizontal (x or y) extent of the view positions, in meters.
  double aperture_size() const;

  /// Throws std::invalid_argument on an empty capture or mismatched views.
  void validate() const;
};

/// Synthetic focal plane relative to a virtual camera. The plane passes through
/// the point on the virtual optical axis at world height `altitude_offset` and
/// is tilted about the virtual camera's horizontal (x) and vertical (y) image
/// axes.
struct FocalPlane {
  double altitude_offset = 0.0;  // meters
  double tilt_x_deg = 0.0;
  double tilt_y_deg = 0.0;

  void validate() const;
  bool operator==(const FocalPlane&) const = default;
};

struct VirtualCamera {
  Pose pose;
  CameraIntrinsics intrinsics;
};

struct IntegralImage {
  HdrImage image;       // invalid pixels hold kInvalidSample
  CountMap count_map;   // contributing views per pixel
  Pose virtual_pose;
  FocalPlane plane;

  static constexpr float kInvalidSample = 0.0f;

  bool valid(int x, int y) const { return count_map.at(x, y) > 0; }
  std::size_t valid_count() const;
};

struct IntegrateOptions {
  int threads = 0;  // <= 0: hardware concurrency
};

/// World-space plane for a focal plane seen from `cam`. Throws
/// std::invalid_argument when the plane point is not in front of the camera.
Plane resolve_plane(const FocalPlane& plane, const VirtualCamera& cam);

/// Registers all views onto the focal plane and averages them per virtual
/// pixel. Views are summed in a canonical order (sorted by pose), so the result
/// does not depend on the order of `capture.views` or on the thread count.
IntegralImage integrate(const LightFieldCapture& capture, const FocalPlane& plane,
                        const VirtualCamera& cam, const IntegrateOptions& opts = {});

/// Nadir virtual camera at the centroid of the view positions, sharing the
/// capture's intrinsics.
VirtualCamera virtual_camera_at_center(const LightFieldCapture& capture, double up_angle_deg);

std::vector<IntegralImage> focal_stack(const LightFieldCapture& capture,
                                       std::span<const FocalPlane> planes,
                                       const VirtualCamera& cam,
                                       const IntegrateOptions& opts = {});

/// Mean squared forward-difference gradient over pairs of valid pixels.
/// Throws std::invalid_argument when there are no such pairs.
double sharpness(const IntegralImage& img);
double sharpness(const HdrImage& img);

struct FocusSearch {
  double dz_min = -1.0;
  double dz_max = 1.0;
  double dz_step = 0.1;
  double tilt_range = 0.0;  // degrees, symmetric around 0
  double tilt_step = 1.0;

  void validate() const;
};

/// Grid search over (dz, tilt_x, tilt_y) maximizing sharpness, followed by a
/// golden-section refinement of dz to dz_step / 10. Throws NoFocusFound when
/// the objective is flat over the grid.
FocalPlane optimize_focal_plane(const LightFieldCapture& capture, const FocusSearch& search,
                                const VirtualCamera& cam, const IntegrateOptions& opts = {});

/// Shifts each image additively so that its mean equals the mean of all means.
std::vector<HdrImage> normalize_means(std::vector<HdrImage> images);
void normalize_means(std::span<View> views);

/// Ground footprint of an out-of-focus point at altitude o under an aperture of
/// size a at altitude h (intercept theorem): b = o a / (h - o).
double blur_footprint(double o, double a, double h);

/// Footprint of an occluder of width w: b' = (o a + w h) / (h - o).
double blur_footprint_sized(double o, double a, double h, double w);

}  // namespace aos
