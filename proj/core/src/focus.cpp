#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "aos/error.hpp"
#include "aos/lightfield.hpp"

namespace aos {
namespace {

template <typename ValidFn>
double mean_squared_gradient(const HdrImage& img, ValidFn&& valid) {
  double acc = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      if (!valid(x, y)) {
        continue;
      }
      const double c = img.at(x, y);
      if (x + 1 < img.width && valid(x + 1, y)) {
        const double d = img.at(x + 1, y) - c;
        acc += d * d;
        ++n;
      }
      if (y + 1 < img.height && valid(x, y + 1)) {
        const double d = img.at(x, y + 1) - c;
        acc += d * d;
        ++n;
      }
    }
  }
  if (n == 0) {
    throw std::invalid_argument("sharpness: no pair of valid neighbouring pixels");
  }
  // Each pixel contributes an x and a y difference; report per-pixel energy.
  return 2.0 * acc / static_cast<double>(n);
}

struct Candidate {
  FocalPlane plane;
  double score = -std::numeric_limits<double>::infinity();
};

double tilt_magnitude(const FocalPlane& p) {
  return std::max(std::abs(p.tilt_x_deg), std::abs(p.tilt_y_deg));
}

// Higher score wins; ties go to smaller |dz|, then to smaller tilt.
bool better(const Candidate& a, const Candidate& b) {
  if (a.score != b.score) {
    return a.score > b.score;
  }
  const double dza = std::abs(a.plane.altitude_offset);
  const double dzb = std::abs(b.plane.altitude_offset);
  if (dza != dzb) {
    return dza < dzb;
  }
  return tilt_magnitude(a.plane) < tilt_magnitude(b.plane);
}

std::vector<double> grid(double lo, double hi, double step) {
  const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) {
    values.push_back(lo + i * step);
  }
  return values;
}

}  // namespace

double sharpness(const HdrImage& img) {
  return mean_squared_gradient(img, [](int, int) { return true; });
}

double sharpness(const IntegralImage& img) {
  return mean_squared_gradient(img.image, [&](int x, int y) { return img.valid(x, y); });
}

void FocusSearch::validate() const {
  if (!(dz_max > dz_min) || !(dz_step > 0.0) || dz_step > dz_max - dz_min) {
    throw std::invalid_argument("focus search: degenerate dz range");
  }
  if (!(tilt_range >= 0.0) || !(tilt_step > 0.0) || tilt_range >= 45.0) {
    throw std::invalid_argument("focus search: invalid tilt range");
  }
}

FocalPlane optimize_focal_plane(const LightFieldCapture& capture, const FocusSearch& search,
                                const VirtualCamera& cam, const IntegrateOptions& opts) {
  search.validate();
  capture.validate();
  if (capture.views.size() < 2) {
    throw std::invalid_argument("optimize_focal_plane: need at least two views");
  }

  auto evaluate = [&](const FocalPlane& p) {
    const IntegralImage img = integrate(capture, p, cam, opts);
    return Candidate{p, sharpness(img)};
  };

  const auto dzs = grid(search.dz_min, search.dz_max, search.dz_step);
  const auto tilts = search.tilt_range > 0.0
                         ? grid(-search.tilt_range, search.tilt_range, search.tilt_step)
                         : std::vector<double>{0.0};

  Candidate best;
  double lowest = std::numeric_limits<double>::infinity();
  for (double dz : dzs) {
    for (double tx : tilts) {
      for (double ty : tilts) {
        const Candidate c = evaluate({dz, tx, ty});
        lowest = std::min(lowest, c.score);
        if (better(c, best)) {
          best = c;
        }
      }
    }
  }
  if (best.score - lowest < 1e-12 * std::max(1.0, std::abs(best.score))) {
    throw NoFocusFound("optimize_focal_plane: sharpness is flat over the search grid");
  }

  // Golden-section refinement of dz around the grid optimum, tilts fixed.
  constexpr double kInvPhi = 0.6180339887498949;
  double lo = std::max(search.dz_min, best.plane.altitude_offset - search.dz_step);
  double hi = std::min(search.dz_max, best.plane.altitude_offset + search.dz_step);
  const double tol = search.dz_step / 10.0;
  auto at = [&](double dz) {
    FocalPlane p = best.plane;
    p.altitude_offset = dz;
    return evaluate(p);
  };
  double x1 = hi - kInvPhi * (hi - lo);
  double x2 = lo + kInvPhi * (hi - lo);
  Candidate c1 = at(x1);
  Candidate c2 = at(x2);
  while (hi - lo > tol) {
    if (better(c1, c2)) {
      hi = x2;
      x2 = x1;
      c2 = c1;
      x1 = hi - kInvPhi * (hi - lo);
      c1 = at(x1);
    } else {
      lo = x1;
      x1 = x2;
      c1 = c2;
      x2 = lo + kInvPhi * (hi - lo);
      c2 = at(x2);
    }
  }
  const Candidate refined = at(0.5 * (lo + hi));
  for (const Candidate c : {refined, c1, c2}) {
    if (c.score > best.score) {
      best = c;
    }
  }
  return best.plane;
}

}  // namespace aos
