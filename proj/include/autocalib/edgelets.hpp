#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "autocalib/errors.hpp"
#include "autocalib/image.hpp"
#include "autocalib/types.hpp"

namespace autocalib {

/// Oriented edge sample: seed point (centered image coordinates), unit
/// direction along the edge, and the anisotropy ratio of the local
/// magnitude-weighted coordinate scatter.
struct Edgelet {
  ImagePoint seed;
  Vec2 direction = Vec2::Zero();  // unit, d_y >= 0 (d_x > 0 when d_y == 0)
  double quality = 1.0;           // lambda1 / lambda2 >= 1
};

/// Seed pixel in image (top-left integer) coordinates.
struct SeedPoint {
  int x = 0;
  int y = 0;
};

/// Strict 3x3 local maxima of gradient magnitude above the threshold,
/// restricted to the mask and at least 4 px from every border so the 9x9
/// patch around a seed stays in bounds.
inline std::vector<SeedPoint> detect_seeds(const GradientField& grad,
                                           const RasterImage* mask_source,
                                           double threshold) {
  if (!(threshold > 0.0)) throw Error("seed threshold must be positive");
  std::vector<SeedPoint> seeds;
  const int margin = 4;
  for (int y = margin; y < grad.height - margin; ++y) {
    for (int x = margin; x < grad.width - margin; ++x) {
      if (mask_source && !mask_source->masked_in(x, y)) continue;
      const float m = grad.mag(x, y);
      if (m <= threshold) continue;
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          if (grad.mag(x + dx, y + dy) >= m) {
            is_max = false;
            break;
          }
        }
      if (is_max) seeds.push_back({x, y});
    }
  }
  return seeds;
}

namespace detail {

/// Closed-form eigen decomposition of the symmetric 2x2 matrix
/// [[sxx, sxy], [sxy, syy]]. Returns eigenvalues l1 >= l2 and the unit
/// eigenvector of l1.
struct Eigen2 {
  double l1 = 0.0, l2 = 0.0;
  Vec2 v1 = Vec2::Zero();
};

inline Eigen2 eigen_sym2(double sxx, double sxy, double syy) {
  Eigen2 e;
  const double tr = sxx + syy;
  const double diff = sxx - syy;
  const double disc = std::sqrt(diff * diff + 4.0 * sxy * sxy);
  e.l1 = 0.5 * (tr + disc);
  e.l2 = 0.5 * (tr - disc);
  // Eigenvector for l1; pick the better-conditioned expression.
  Vec2 v{sxy, e.l1 - sxx};
  if (v.norm() < 1e-30) v = Vec2{e.l1 - syy, sxy};
  if (v.norm() < 1e-30) v = Vec2{1.0, 0.0};  // isotropic: any direction
  e.v1 = v.normalized();
  return e;
}

}  // namespace detail

/// Edge direction and quality at a seed from the 9x9 patch: rows of X are the
/// magnitude-weighted offsets w_k * (m_k - x_i, n_k - y_i); the direction is
/// the principal eigenvector of X^T X and the quality the eigenvalue ratio.
inline Edgelet edgelet_at(const GradientField& grad, const SeedPoint& seed,
                          const ImageSize& size) {
  if (seed.x < 4 || seed.y < 4 || seed.x >= grad.width - 4 || seed.y >= grad.height - 4)
    throw Error("seed too close to border for a 9x9 patch");
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (int dy = -4; dy <= 4; ++dy) {
    for (int dx = -4; dx <= 4; ++dx) {
      const double w = grad.mag(seed.x + dx, seed.y + dy);
      const double u = w * dx;
      const double v = w * dy;
      sxx += u * u;
      sxy += u * v;
      syy += v * v;
    }
  }
  const detail::Eigen2 e = detail::eigen_sym2(sxx, sxy, syy);
  if (e.l1 < 1e-12) throw DegeneratePatch();
  Edgelet el;
  el.seed = size.to_centered(seed.x, seed.y);
  el.direction = e.v1;
  if (el.direction.y() < 0.0 || (el.direction.y() == 0.0 && el.direction.x() < 0.0))
    el.direction = -el.direction;
  el.quality = e.l2 > 0.0 ? e.l1 / e.l2 : std::numeric_limits<double>::infinity();
  return el;
}

/// All edgelets of one frame: gradient, seeds at threshold_fraction of the
/// frame's peak magnitude, then the patch analysis per seed. Degenerate
/// patches are skipped.
inline std::vector<Edgelet> frame_edgelets(const RasterImage& frame,
                                           double threshold_fraction = 0.1) {
  const GradientField grad = gradient_field(frame);
  float peak = 0.f;
  for (float m : grad.magnitude) peak = std::max(peak, m);
  if (peak <= 0.f) return {};
  std::vector<Edgelet> out;
  const auto seeds = detect_seeds(grad, frame.mask.empty() ? nullptr : &frame, threshold_fraction * peak);
  out.reserve(seeds.size());
  for (const auto& s : seeds) {
    try {
      out.push_back(edgelet_at(grad, s, frame.size()));
    } catch (const DegeneratePatch&) {
    }
  }
  return out;
}

/// True when the edgelet's line points at vp1 within the exclusion angle:
/// the angle between the edge direction and the seed->vp1 direction (taken
/// mod 180 degrees) is below the threshold.
inline bool edgelet_points_at(const Edgelet& e, const ImagePoint& vp1, double angle_deg) {
  const Vec2 to_vp{vp1.x - e.seed.x, vp1.y - e.seed.y};
  const double n = to_vp.norm();
  if (n < 1e-9) return true;  // seed at the VP: its line trivially passes through
  const double cosang = std::abs(e.direction.dot(to_vp) / n);
  return std::acos(std::clamp(cosang, 0.0, 1.0)) < deg2rad(angle_deg);
}

struct CollectOptions {
  double keep_fraction = 0.25;
  double vp1_exclusion_angle_deg = 15.0;
  double seed_threshold_fraction = 0.1;
};

/// Streams frames, extracts edgelets, drops those aligned with vp1, and keeps
/// the globally strongest fraction by quality. Sorting is deterministic:
/// quality descending, then seed position, then direction.
inline std::vector<Edgelet> collect_edgelets(
    const std::function<std::optional<RasterImage>()>& next_frame, const ImagePoint& vp1,
    const CollectOptions& opt = {}) {
  std::vector<Edgelet> all;
  while (auto frame = next_frame()) {
    auto es = frame_edgelets(*frame, opt.seed_threshold_fraction);
    for (auto& e : es) {
      if (!edgelet_points_at(e, vp1, opt.vp1_exclusion_angle_deg)) all.push_back(e);
    }
  }
  std::sort(all.begin(), all.end(), [](const Edgelet& a, const Edgelet& b) {
    if (a.quality != b.quality) return a.quality > b.quality;
    if (a.seed.y != b.seed.y) return a.seed.y < b.seed.y;
    if (a.seed.x != b.seed.x) return a.seed.x < b.seed.x;
    return a.direction.x() < b.direction.x();
  });
  const size_t keep = std::min(all.size(), static_cast<size_t>(std::llround(
                                               static_cast<double>(all.size()) * opt.keep_fraction)));
  all.resize(keep);
  return all;
}

/// Convenience overload for in-memory frame sets.
inline std::vector<Edgelet> collect_edgelets(const std::vector<RasterImage>& frames,
                                             const ImagePoint& vp1, const CollectOptions& opt = {}) {
  size_t i = 0;
  return collect_edgelets(
      [&]() -> std::optional<RasterImage> {
        if (i >= frames.size()) return std::nullopt;
        return frames[i++];
      },
      vp1, opt);
}

}  // namespace autocalib
