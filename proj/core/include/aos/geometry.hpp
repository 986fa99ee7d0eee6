#pragma once

// Ideal pinhole cameras, rigid poses, rays and planes.
//
// World frame is z-up with the ground plane at z = 0; a camera's altitude is
// its position.z. Camera frame follows the usual vision convention: x right,
// y down, z along the optical axis. Continuous pixel coordinates put the
// centre of pixel (u, v) at (u + 0.5, v + 0.5).

#include <optional>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace aos {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct CameraIntrinsics {
  int width = 0;
  int height = 0;
  double focal_length = 0.0;  // pixels
  Vec2 principal_point = Vec2::Zero();

  /// Throws std::invalid_argument when any invariant is violated.
  void validate() const;

  /// Horizontal field of view in degrees.
  double fov_deg() const;

  bool contains(const Vec2& pixel) const {
    return pixel.x() >= 0.0 && pixel.y() >= 0.0 && pixel.x() <= width &&
           pixel.y() <= height;
  }

  bool operator==(const CameraIntrinsics&) const = default;
};

/// Focal length from a horizontal field of view; principal point at the image
/// centre.
CameraIntrinsics fov_to_intrinsics(double fov_deg, int width, int height);

/// Inverse of fov_to_intrinsics for the focal length.
double focal_to_fov_deg(double focal_length, int width);

struct Pose {
  Mat3 rotation = Mat3::Identity();  // camera -> world
  Vec3 position = Vec3::Zero();

  /// Camera looking straight down (-z). The image up direction is world +y
  /// rotated counter-clockwise (seen from above) by up_angle_deg.
  static Pose nadir(const Vec3& position, double up_angle_deg = 0.0);

  /// Camera at `position` looking along `forward` with image-up close to `up`.
  static Pose look(const Vec3& position, const Vec3& forward, const Vec3& up);

  Vec3 optical_axis() const { return rotation.col(2); }
  Vec3 up() const { return -rotation.col(1); }
  double altitude() const { return position.z(); }

  void validate() const;
};

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();

  static Ray through(const Vec3& origin, const Vec3& target);
  Vec3 at(double t) const { return origin + t * direction; }
};

struct Plane {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();

  static Plane horizontal(double z) { return {Vec3(0.0, 0.0, z), Vec3::UnitZ()}; }

  /// z of the plane above (x, y). Undefined for vertical planes.
  double height_at(double x, double y) const;
  double signed_distance(const Vec3& p) const { return normal.dot(p - point); }
};

struct Projection {
  Vec2 pixel;
  double depth;  // along the optical axis, > 0
};

/// Pinhole projection. std::nullopt when the point is not in front of the
/// camera. The pixel may lie outside the image.
std::optional<Projection> project_point(const CameraIntrinsics& intr,
                                        const Pose& pose,
                                        const Vec3& world_point);

/// Back-projection of a continuous pixel coordinate. Throws
/// std::invalid_argument when the pixel is outside [0, W] x [0, H].
Ray pixel_ray(const CameraIntrinsics& intr, const Pose& pose, const Vec2& pixel);

/// Same as pixel_ray without the bounds check.
Ray pixel_ray_unchecked(const CameraIntrinsics& intr, const Pose& pose,
                        const Vec2& pixel);

/// Intersection with positive ray parameter, std::nullopt when parallel or
/// behind the ray origin.
std::optional<Vec3> intersect_plane(const Ray& ray, const Plane& plane);

inline Vec2 pixel_center(int u, int v) { return {u + 0.5, v + 0.5}; }

/// Intrinsic matrix K and its inverse.
Mat3 camera_matrix(const CameraIntrinsics& intr);
Mat3 inverse_camera_matrix(const CameraIntrinsics& intr);

double deg_to_rad(double deg);
double rad_to_deg(double rad);

}  // namespace aos
