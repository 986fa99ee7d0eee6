#include "aos/simulator.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "aos/hash.hpp"
#include "aos/parallel.hpp"

namespace aos {
namespace {

bool point_in_polygon(const std::vector<Vec2>& poly, double x, double y) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    if ((a.y() > y) != (b.y() > y)) {
      const double xc = a.x() + (y - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
      if (x < xc) {
        inside = !inside;
      }
    }
  }
  return inside;
}

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  const double d1 = cross2(q2 - q1, p1 - q1);
  const double d2 = cross2(q2 - q1, p2 - q1);
  const double d3 = cross2(p2 - p1, q1 - p1);
  const double d4 = cross2(p2 - p1, q2 - p1);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 &&
         d4 != 0;
}

bool is_simple(const std::vector<Vec2>& poly) {
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      // Adjacent edges share a vertex and never count as crossing.
      if (j == i + 1 || (i == 0 && j == n - 1)) {
        continue;
      }
      if (segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n])) {
        return false;
      }
    }
  }
  return true;
}

std::uint64_t pose_key(const Pose& pose) {
  std::uint64_t h = 0x2545f4914f6cdd1dULL;
  for (int i = 0; i < 3; ++i) {
    h = hash_combine(h, std::bit_cast<std::uint64_t>(pose.position[i]));
  }
  for (int i = 0; i < 9; ++i) {
    h = hash_combine(h, std::bit_cast<std::uint64_t>(pose.rotation(i)));
  }
  return h;
}

}  // namespace

void SceneSpec::validate() const {
  if (!(extent > 0.0)) {
    throw std::invalid_argument("scene: extent must be positive");
  }
  const auto& occ = occluders;
  if (!(occ.density >= 0.0 && occ.density <= 1.0)) {
    throw std::invalid_argument("scene: occluder density must lie in [0, 1]");
  }
  if (occ.density >= 1.0) {
    throw std::invalid_argument("scene: occluder density 1 needs infinite Poisson intensity");
  }
  if (!(occ.altitude >= 0.0)) {
    throw std::invalid_argument("scene: occluder altitude must be non-negative");
  }
  if (!(occ.width > 0.0)) {
    throw std::invalid_argument("scene: occluder width must be positive");
  }
  if (!(occ.temp_stddev >= 0.0) || !(ground_noise_stddev >= 0.0)) {
    throw std::invalid_argument("scene: standard deviations must be non-negative");
  }
  const double half = extent / 2.0;
  for (std::size_t i = 0; i < persons.size(); ++i) {
    const auto& poly = persons[i].polygon;
    const std::string who = "scene: person " + std::to_string(i);
    if (poly.size() < 3) {
      throw std::invalid_argument(who + " needs at least 3 vertices");
    }
    for (const auto& v : poly) {
      if (std::abs(v.x()) > half || std::abs(v.y()) > half) {
        throw std::invalid_argument(who + " lies outside the scene extent");
      }
    }
    if (!is_simple(poly)) {
      throw std::invalid_argument(who + " polygon self-intersects");
    }
  }
}

void Label3D::validate() const {
  if (polygon.size() < 3) {
    throw std::invalid_argument("label: fewer than 3 vertices");
  }
  Vec3 normal = Vec3::Zero();
  for (std::size_t i = 1; i + 1 < polygon.size() && normal.norm() < 1e-12; ++i) {
    normal = (polygon[i] - polygon[0]).cross(polygon[i + 1] - polygon[0]);
  }
  if (normal.norm() < 1e-12) {
    throw std::invalid_argument("label: degenerate polygon");
  }
  normal.normalize();
  for (const auto& p : polygon) {
    if (std::abs(normal.dot(p - polygon[0])) > 1e-6) {
      throw std::invalid_argument("label: polygon is not planar");
    }
  }
}

Scene::Scene(SceneSpec spec, std::vector<OccluderPatch> patches)
    : spec_(std::move(spec)), patches_(std::move(patches)) {
  spec_.validate();
  for (std::size_t i = 0; i < spec_.persons.size(); ++i) {
    const auto& poly = spec_.persons[i].polygon;
    Label3D label;
    label.person_id = static_cast<int>(i);
    Eigen::AlignedBox2d box;
    for (const auto& v : poly) {
      label.polygon.emplace_back(v.x(), v.y(), spec_.ground_altitude);
      box.extend(v);
    }
    labels_.push_back(std::move(label));
    person_bounds_.push_back(box);
  }
  build_index();
}

void Scene::build_index() {
  cells_.clear();
  grid_n_ = 0;
  if (patches_.empty()) {
    return;
  }
  Eigen::AlignedBox2d bounds;
  double largest = 0.0;
  for (const auto& p : patches_) {
    const Vec2 r = Vec2::Constant(0.5 * p.size);
    bounds.extend(p.center - r);
    bounds.extend(p.center + r);
    largest = std::max(largest, p.size);
  }
  const double span = std::max(bounds.sizes().maxCoeff(), 1e-9);
  cell_ = std::max(largest, span / 4096.0);
  grid_n_ = static_cast<int>(std::ceil(span / cell_)) + 1;
  grid_origin_ = bounds.min();
  cells_.assign(static_cast<std::size_t>(grid_n_) * grid_n_, {});
  for (std::uint32_t i = 0; i < patches_.size(); ++i) {
    const auto& p = patches_[i];
    const double r = 0.5 * p.size;
    const int x0 = std::clamp(static_cast<int>((p.center.x() - r - grid_origin_.x()) / cell_), 0, grid_n_ - 1);
    const int x1 = std::clamp(static_cast<int>((p.center.x() + r - grid_origin_.x()) / cell_), 0, grid_n_ - 1);
    const int y0 = std::clamp(static_cast<int>((p.center.y() - r - grid_origin_.y()) / cell_), 0, grid_n_ - 1);
    const int y1 = std::clamp(static_cast<int>((p.center.y() + r - grid_origin_.y()) / cell_), 0, grid_n_ - 1);
    for (int cy = y0; cy <= y1; ++cy) {
      for (int cx = x0; cx <= x1; ++cx) {
        cells_[static_cast<std::size_t>(cy) * grid_n_ + cx].push_back(i);
      }
    }
  }
}

double Scene::ground_temperature(double x, double y) const {
  for (std::size_t i = 0; i < spec_.persons.size(); ++i) {
    if (person_bounds_[i].contains(Vec2(x, y)) &&
        point_in_polygon(spec_.persons[i].polygon, x, y)) {
      return spec_.persons[i].temperature;
    }
  }
  return spec_.ambient_temp + spec_.ground_gradient.x() * x + spec_.ground_gradient.y() * y;
}

const OccluderPatch* Scene::occluder_at(double x, double y) const {
  if (grid_n_ == 0) {
    return nullptr;
  }
  const double gx = (x - grid_origin_.x()) / cell_;
  const double gy = (y - grid_origin_.y()) / cell_;
  if (!(gx >= 0.0 && gy >= 0.0 && gx < grid_n_ && gy < grid_n_)) {
    return nullptr;
  }
  const auto& cell = cells_[static_cast<std::size_t>(gy) * grid_n_ + static_cast<std::size_t>(gx)];
  for (std::uint32_t i : cell) {
    if (patches_[i].contains(x, y)) {
      return &patches_[i];
    }
  }
  return nullptr;
}

bool Scene::ray_occluded(const Vec3& from, const Vec3& to) const {
  const double z = occluder_altitude();
  const double a = from.z() - z;
  const double b = to.z() - z;
  if (a * b > 0.0 || a == b) {
    return false;
  }
  const double t = a / (a - b);
  const Vec3 p = from + t * (to - from);
  return occluder_at(p.x(), p.y()) != nullptr;
}

Scene Scene::occlusion_indicator() const {
  SceneSpec spec = spec_;
  spec.ambient_temp = 0.0;
  spec.ground_gradient = Vec2::Zero();
  spec.persons.clear();
  spec.ground_noise_stddev = 0.0;
  std::vector<OccluderPatch> patches = patches_;
  for (auto& p : patches) {
    p.temperature = 1.0;
  }
  return Scene(std::move(spec), std::move(patches));
}

double occluder_intensity(double density, double width) {
  if (!(density >= 0.0 && density < 1.0) || !(width > 0.0)) {
    throw std::invalid_argument("occluder_intensity: need 0 <= D < 1 and w > 0");
  }
  return -std::log1p(-density) / (width * width);
}

Scene build_scene(const SceneSpec& spec) {
  spec.validate();
  const auto& occ = spec.occluders;
  std::vector<OccluderPatch> patches;
  if (occ.density > 0.0) {
    std::mt19937_64 rng(spec.rng_seed);
    const double side = spec.extent + occ.width;
    const double expected = occluder_intensity(occ.density, occ.width) * side * side;
    std::poisson_distribution<long long> count_dist(expected);
    std::uniform_real_distribution<double> pos(-side / 2.0, side / 2.0);
    std::normal_distribution<double> temp(occ.temp_mean, occ.temp_stddev > 0.0 ? occ.temp_stddev : 1.0);
    const long long n = count_dist(rng);
    patches.reserve(static_cast<std::size_t>(n));
    for (long long i = 0; i < n; ++i) {
      OccluderPatch p;
      p.center.x() = pos(rng);
      p.center.y() = pos(rng);
      p.size = occ.width;
      const double t = occ.temp_stddev > 0.0 ? temp(rng) : occ.temp_mean;
      p.temperature = std::max(t, spec.ambient_temp);
      patches.push_back(p);
    }
  }
  return Scene(spec, std::move(patches));
}

HdrImage render_single(const Scene& scene, const CameraIntrinsics& intr, const Pose& pose) {
  intr.validate();
  pose.validate();
  const double z_occ = scene.occluder_altitude();
  const double z_ground = scene.spec().ground_altitude;
  const bool has_layer = !scene.occluders().empty();
  if (has_layer && !(pose.position.z() > z_occ)) {
    throw std::invalid_argument("render_single: camera is not above the occluder layer");
  }
  const double sigma = scene.spec().ground_noise_stddev;
  const std::uint64_t key = hash_combine(scene.spec().rng_seed, pose_key(pose));
  const Mat3 back = pose.rotation * inverse_camera_matrix(intr);
  const Vec3& c = pose.position;

  HdrImage img(intr.width, intr.height);
  for (int y = 0; y < intr.height; ++y) {
    Vec3 d = back * Vec3(0.5, y + 0.5, 1.0);
    const Vec3 step = back.col(0);
    float* out = img.samples.data() + img.index(0, y);
    for (int x = 0; x < intr.width; ++x, d += step) {
      if (!(d.z() < 0.0)) {
        out[x] = static_cast<float>(scene.spec().ambient_temp);
        continue;
      }
      if (has_layer) {
        const double t = (z_occ - c.z()) / d.z();
        if (const auto* patch = scene.occluder_at(c.x() + t * d.x(), c.y() + t * d.y())) {
          out[x] = static_cast<float>(patch->temperature);
          continue;
        }
      }
      const double t = (z_ground - c.z()) / d.z();
      double value = scene.ground_temperature(c.x() + t * d.x(), c.y() + t * d.y());
      if (sigma > 0.0) {
        value += sigma * keyed_normal(hash_combine(key, img.index(x, y)));
      }
      out[x] = static_cast<float>(value);
    }
  }
  return img;
}

HdrImage render_ground_truth(const Scene& scene, const VirtualCamera& cam,
                             const FocalPlane& plane) {
  const Plane world_plane = resolve_plane(plane, cam);
  const auto& intr = cam.intrinsics;
  HdrImage img(intr.width, intr.height);
  for (int y = 0; y < intr.height; ++y) {
    for (int x = 0; x < intr.width; ++x) {
      const Ray ray = pixel_ray_unchecked(intr, cam.pose, pixel_center(x, y));
      const auto hit = intersect_plane(ray, world_plane);
      img.at(x, y) = static_cast<float>(hit ? scene.ground_temperature(hit->x(), hit->y())
                                            : scene.spec().ambient_temp);
    }
  }
  return img;
}

std::vector<Pose> plan_grid_scan(double aperture, double along_spacing, double line_spacing,
                                 double altitude) {
  if (!(aperture > 0.0) || !(along_spacing > 0.0) || !(line_spacing > 0.0)) {
    throw std::invalid_argument("plan_grid_scan: aperture and spacings must be positive");
  }
  if (!(altitude > 0.0)) {
    throw std::invalid_argument("plan_grid_scan: altitude must be positive");
  }
  const int lines = static_cast<int>(std::floor(aperture / line_spacing + 1e-9));
  const int stops = static_cast<int>(std::floor(aperture / along_spacing + 1e-9));
  const double half = aperture / 2.0;
  std::vector<Pose> poses;
  poses.reserve(static_cast<std::size_t>(lines + 1) * (stops + 1));
  for (int i = 0; i <= lines; ++i) {
    const double y = -half + i * line_spacing;
    for (int j = 0; j <= stops; ++j) {
      const int k = (i % 2 == 0) ? j : stops - j;
      poses.push_back(Pose::nadir(Vec3(-half + k * along_spacing, y, altitude)));
    }
  }
  return poses;
}

LightFieldCapture capture_scene(const Scene& scene, std::span<const Pose> scan,
                                const CameraIntrinsics& intr, const CaptureOptions& opts) {
  if (scan.empty()) {
    throw std::invalid_argument("capture_scene: empty scan");
  }
  LightFieldCapture capture;
  capture.intrinsics = intr;
  capture.views.resize(scan.size());
  parallel_for(0, static_cast<int>(scan.size()), opts.threads, [&](int lo, int hi) {
    for (int i = lo; i < hi; ++i) {
      capture.views[i] = View{render_single(scene, intr, scan[i]), scan[i]};
    }
  });
  if (opts.normalize_means) {
    normalize_means(std::span<View>(capture.views));
  }
  return capture;
}

}  // namespace aos
