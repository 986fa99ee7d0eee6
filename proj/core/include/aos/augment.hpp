#pragma once

// Augmentation of integral and single images for detector training, plus the
// projection of 3D person labels to axis-aligned image boxes.

#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "aos/box.hpp"
#include "aos/image.hpp"
#include "aos/lightfield.hpp"
#include "aos/simulator.hpp"

namespace aos {

/// Per-pixel validity: nonzero where the pixel carries data.
using Mask = Image<std::uint8_t>;

Mask valid_mask(const IntegralImage& img);

struct AugmentationParams {
  double up_angle_deg = 0.0;
  double dz = 0.0;          // meters, added to the optimal focal plane
  double tilt_x_deg = 0.0;  // added to the optimal tilts
  double tilt_y_deg = 0.0;
  bool ahe = false;

  FocalPlane applied_to(const FocalPlane& base) const {
    return {base.altitude_offset + dz, base.tilt_x_deg + tilt_x_deg,
            base.tilt_y_deg + tilt_y_deg};
  }
  bool operator==(const AugmentationParams&) const = default;
};

inline constexpr double kFocusOffsets[] = {-0.25, 0.0, 0.25};
inline constexpr double kTiltOffsets[] = {-2.0, 0.0, 2.0};

/// `rotations` up-angles drawn uniformly from [0, 360), each combined with the
/// 27 focus variations. The angles are shared by all focus variations.
std::vector<AugmentationParams> generate_augmentation_set(int rotations, std::mt19937_64& rng);

/// Every tuple once without and once with AHE, in that order.
std::vector<AugmentationParams> with_ahe_duals(std::span<const AugmentationParams> set);

/// Contrast-limited adaptive histogram equalization on an 8x8 tile grid with
/// clip limit 0.01 of the tile's pixel count. Output lies in [0, 1]; masked-out
/// pixels become 0, and an image without spread maps to 0 everywhere.
HdrImage ahe(const HdrImage& img, int bins = 512, const Mask* mask = nullptr);

/// Linear map of [min, max] over the (masked) pixels to [0, 255], rounding
/// half up. Constant images and masked-out pixels map to 0.
GrayImage tone_map(const HdrImage& img, const Mask* mask = nullptr);

/// Rigid image-plane rotation about the image centre followed by a centred
/// crop. A positive angle turns the content the same way as turning the
/// virtual camera's up vector by that angle.
struct Rotation2D {
  double angle_deg = 0.0;
  int src_width = 0;
  int src_height = 0;
  int dst_width = 0;
  int dst_height = 0;

  /// Destination pixel coordinates of a source point.
  Vec2 forward(const Vec2& src) const;
  /// Source coordinates of a destination point.
  Vec2 inverse(const Vec2& dst) const;
};

/// Largest centred axis-aligned rectangle inside a w x h image rotated by
/// angle_deg, floored to whole pixels.
std::pair<int, int> rotated_crop_size(int w, int h, double angle_deg);

Rotation2D make_rotation(int width, int height, double angle_deg);

HdrImage rotate_image(const HdrImage& img, const Rotation2D& rot);
GrayImage rotate_image(const GrayImage& img, const Rotation2D& rot);

struct ProjectedLabels {
  std::vector<LabelBox> boxes;
  std::vector<std::string> warnings;
};

/// Minimum clipped/unclipped area ratio for a projected box to survive.
inline constexpr double kMinVisibleFraction = 0.25;

/// Projects each label polygon into the camera after moving its vertices
/// vertically onto `plane`; the AABB of the projected vertices is clipped to
/// the image and dropped when less than a quarter of it remains. Optionally the
/// projected vertices are passed through a raster rotation first. Labels with
/// a vertex behind the camera are dropped with a warning.
ProjectedLabels project_labels(std::span<const Label3D> labels, const VirtualCamera& cam,
                               const Plane& plane, const Rotation2D* rotation = nullptr);

/// Paints random axis-aligned rectangles (sides 1..35 px) until at least a
/// fraction `density` of the pixels is covered. Fill values are drawn from
/// pixels outside every label box. Throws NoBackgroundSamples when no such
/// pixel exists and density > 0.
GrayImage simulate_occlusion_patch(const GrayImage& img, std::span<const BoundingBox> labels,
                                   double density, std::mt19937_64& rng);

struct AugmentedImage {
  std::string stem;
  GrayImage image;
  std::vector<LabelBox> labels;
  std::vector<std::string> warnings;
};

using AugmentSink = std::function<void(AugmentedImage&&)>;

struct IntegralAugmentOptions {
  int threads = 0;
};

/// Integral-image augmentation: every tuple is re-rendered with its own
/// up-angle and focal plane, tone-mapped (after AHE when flagged), and labeled
/// by projecting the 3D labels lying on `base`.
void augment_integral(const LightFieldCapture& capture, std::span<const Label3D> labels,
                      const FocalPlane& base, std::span<const AugmentationParams> set,
                      const AugmentSink& sink, const IntegralAugmentOptions& opts = {});

struct SingleAugmentOptions {
  int rotations = 10;
  bool plain = true;
  bool ahe = true;
  double occlusion_density = 0.0;  // 0 disables the occlusion-patch step
};

/// Single-image augmentation: each view is raster-rotated and cropped by
/// random angles, tone-mapped, optionally equalized and patched. Labels are
/// projected from the view's pose and rotated with the image.
void augment_single(const LightFieldCapture& capture, std::span<const Label3D> labels,
                    const Plane& label_plane, std::uint64_t seed, const SingleAugmentOptions& opts,
                    const AugmentSink& sink);

}  // namespace aos
