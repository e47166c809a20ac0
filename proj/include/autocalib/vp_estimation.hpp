#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "autocalib/diamond_space.hpp"
#include "autocalib/edgelets.hpp"
#include "autocalib/errors.hpp"
#include "autocalib/geometry.hpp"
#include "autocalib/types.hpp"

namespace autocalib {

/// Straight piece of one tracked point's image trajectory.
struct TrajectorySegment {
  ImagePoint p_start;
  ImagePoint p_end;
  int frame_start = 0;
  int frame_end = 0;
  double weight = 1.0;
};

constexpr double kMinSegmentDisplacementPx = 2.0;

/// One segment per tracked point: a total-least-squares line through the
/// track's samples, clipped to the first/last sample. Tracks moving less
/// than the minimum displacement are dropped (their angle is unreliable).
inline std::vector<TrajectorySegment> segments_from_point_tracks(
    const std::vector<std::vector<std::pair<int, ImagePoint>>>& tracks,
    double min_displacement_px = kMinSegmentDisplacementPx) {
  std::vector<TrajectorySegment> segments;
  for (const auto& track : tracks) {
    if (track.size() < 2) continue;
    Vec2 mean_pt = Vec2::Zero();
    for (const auto& [frame, p] : track) mean_pt += p.vec();
    mean_pt /= static_cast<double>(track.size());
    double sxx = 0, sxy = 0, syy = 0;
    for (const auto& [frame, p] : track) {
      const Vec2 d = p.vec() - mean_pt;
      sxx += d.x() * d.x();
      sxy += d.x() * d.y();
      syy += d.y() * d.y();
    }
    const detail::Eigen2 e = detail::eigen_sym2(sxx, sxy, syy);
    if (e.l1 <= 0.0) continue;
    const Vec2 dir = e.v1;
    const Vec2 first = track.front().second.vec() - mean_pt;
    const Vec2 last = track.back().second.vec() - mean_pt;
    const Vec2 a = mean_pt + dir * first.dot(dir);
    const Vec2 b = mean_pt + dir * last.dot(dir);
    if ((b - a).norm() < min_displacement_px) continue;
    segments.push_back({ImagePoint(a), ImagePoint(b), track.front().first, track.back().first,
                        (b - a).norm()});
  }
  return segments;
}

struct VpResult {
  HomoPoint point;
  double score = 0.0;
  double score_ratio = 0.0;  // peak votes / median positive cell in the search region
  size_t support = 0;        // observations within the inlier radius of the peak
};

/// Maxima whose score ratio falls below this are likely spurious (the
/// constraints exclude the real solution). Well-supported vanishing points
/// score an order of magnitude above the median feasible cell.
constexpr double kSpuriousScoreRatio = 10.0;

namespace detail {

/// Weighted least-squares intersection of a line bundle.
inline std::optional<ImagePoint> least_squares_intersection(
    const std::vector<LineObservation>& lines, const std::vector<size_t>& subset) {
  double m00 = 0, m01 = 0, m11 = 0, r0 = 0, r1 = 0;
  for (size_t i : subset) {
    const auto& l = lines[i];
    m00 += l.weight * l.a * l.a;
    m01 += l.weight * l.a * l.b;
    m11 += l.weight * l.b * l.b;
    r0 -= l.weight * l.a * l.c;
    r1 -= l.weight * l.b * l.c;
  }
  const double det = m00 * m11 - m01 * m01;
  if (std::abs(det) < 1e-9 * std::max(1.0, m00 + m11)) return std::nullopt;
  return ImagePoint{(m11 * r0 - m01 * r1) / det, (m00 * r1 - m01 * r0) / det};
}

/// Coarse pass, 4x re-accumulation masked to a window around the coarse
/// maximum, then a least-squares polish over the voting lines that pass close
/// to the refined peak. The polish keeps the voting robustness (only lines
/// within the peak cell's back-projected extent participate) while removing
/// the accumulator quantization from the final position.
inline VpResult voted_vanishing_point(const std::vector<LineObservation>& lines,
                                      double half_extent, int resolution,
                                      const DiamondSpace::CellMask& feasible) {
  DiamondSpace coarse(resolution, half_extent);
  for (const auto& l : lines) coarse.accumulate(l);
  const DiamondSpace::Maximum cm = coarse.find_maximum(feasible);

  const int fine_res = 4 * resolution + 1;
  DiamondSpace fine(fine_res, half_extent);
  for (const auto& l : lines) fine.accumulate(l);
  const Vec2 center = coarse.cell_to_diamond({static_cast<double>(cm.col), static_cast<double>(cm.row)});
  const double window = 1.5 * 2.0 / (resolution - 1);
  DiamondSpace::CellMask window_mask = [&](const HomoPoint& p) {
    const Vec2 d = fine.to_diamond(p);
    if (std::abs(d.x() - center.x()) > window || std::abs(d.y() - center.y()) > window)
      return false;
    return !feasible || feasible(p);
  };
  DiamondSpace::Maximum fm = fine.find_maximum(window_mask);

  VpResult result;
  result.point = fm.point;
  result.score = cm.score;
  // Spuriousness is judged on the coarse pass: the fine pass is windowed, so
  // its in-window median is not a meaningful reference level.
  result.score_ratio = cm.median_cell > 0.0 ? cm.score / cm.median_cell : 0.0;

  if (!fm.point.ideal(1e-12)) {
    const ImagePoint peak = fm.point.finite();
    const double radius =
        std::max(2.0, fine.cell_extent_px(fine.cell_to_diamond(
                          {static_cast<double>(fm.col), static_cast<double>(fm.row)})));
    std::vector<size_t> inliers;
    for (size_t i = 0; i < lines.size(); ++i) {
      if (std::abs(lines[i].a * peak.x + lines[i].b * peak.y + lines[i].c) <= radius)
        inliers.push_back(i);
    }
    result.support = inliers.size();
    if (inliers.size() >= 2) {
      if (auto polished = least_squares_intersection(lines, inliers)) {
        const HomoPoint hp(*polished);
        if (!feasible || feasible(hp)) result.point = hp;
      }
    }
  }
  return result;
}

}  // namespace detail

struct FirstVpOptions {
  int resolution = 421;
  size_t min_segments = 50;
};

/// First vanishing point from vehicle motion: every segment votes its
/// supporting line, weighted by displacement length.
inline VpResult estimate_first_vp(const std::vector<TrajectorySegment>& segments,
                                  const ImageSize& size, const FirstVpOptions& opt = {}) {
  if (segments.size() < opt.min_segments)
    throw InsufficientData("fewer trajectory segments than required minimum");
  std::vector<LineObservation> lines;
  lines.reserve(segments.size());
  for (const auto& s : segments) {
    if (distance(s.p_start, s.p_end) < kMinSegmentDisplacementPx) continue;
    lines.push_back(LineObservation::through(s.p_start, s.p_end, s.weight));
  }
  if (lines.size() < opt.min_segments)
    throw InsufficientData("fewer usable trajectory segments than required minimum");
  const double half_extent = std::max(size.width, size.height) / 2.0;
  return detail::voted_vanishing_point(lines, half_extent, opt.resolution, nullptr);
}

struct SecondVpOptions {
  int resolution = 421;
  size_t min_edgelets = 200;
  double vote_quality_cap = 50.0;
  /// Focal-length bound as a multiple of image width.
  double focal_min_width_ratio = 0.3;
  double focal_max_width_ratio = 10.0;
  /// Allowed inclination of the u-v horizon line, degrees from horizontal.
  std::optional<double> max_horizon_inclination_deg = 25.0;
  /// Candidates closer to vp1 than this are rejected as degenerate.
  double min_vp_separation_px = 20.0;
};

/// Feasibility mask for second-VP candidates given a fixed first VP: the
/// focal length from the VP pair must be real and inside the configured
/// range, and the implied horizon must stay within the inclination bound.
inline DiamondSpace::CellMask second_vp_mask(const ImagePoint& vp1, const ImageSize& size,
                                             const SecondVpOptions& opt) {
  const double f_lo = opt.focal_min_width_ratio * size.width;
  const double f_hi = opt.focal_max_width_ratio * size.width;
  return [vp1, f_lo, f_hi, opt](const HomoPoint& cand) {
    if (cand.ideal(1e-12)) return false;
    const ImagePoint v = cand.finite();
    if (distance(v, vp1) < opt.min_vp_separation_px) return false;
    const double radicand = -(vp1.x * v.x + vp1.y * v.y);
    if (!(radicand > 0.0)) return false;
    const double f = std::sqrt(radicand);
    if (f < f_lo || f > f_hi) return false;
    if (opt.max_horizon_inclination_deg) {
      const Vec2 h{v.x - vp1.x, v.y - vp1.y};
      const double incl = rad2deg(std::atan2(std::abs(h.y()), std::abs(h.x())));
      if (incl > *opt.max_horizon_inclination_deg) return false;
    }
    return true;
  };
}

/// Second vanishing point from edgelets: each edgelet votes the line through
/// its seed along its direction, weighted by capped quality.
inline VpResult estimate_second_vp(const std::vector<Edgelet>& edgelets, const ImagePoint& vp1,
                                   const ImageSize& size, const SecondVpOptions& opt = {}) {
  if (edgelets.size() < opt.min_edgelets)
    throw InsufficientData("fewer edgelets than required minimum");
  std::vector<LineObservation> lines;
  lines.reserve(edgelets.size());
  for (const auto& e : edgelets) {
    lines.push_back(LineObservation::from_point_dir(e.seed, e.direction,
                                                    std::min(e.quality, opt.vote_quality_cap)));
  }
  const double half_extent = std::max(size.width, size.height) / 2.0;
  return detail::voted_vanishing_point(lines, half_extent, opt.resolution,
                                       second_vp_mask(vp1, size, opt));
}

struct CalibrateOptions {
  FirstVpOptions first;
  SecondVpOptions second;
  CollectOptions collect;
};

struct CalibrationDiagnostics {
  VpResult first_vp;
  VpResult second_vp;
  size_t segment_count = 0;
  size_t edgelet_count = 0;
};

/// Full scale-free calibration from trajectory segments plus edgelets.
inline CameraCalibration calibrate(const std::vector<TrajectorySegment>& segments,
                                   const std::vector<Edgelet>& edgelets, const ImageSize& size,
                                   const CalibrateOptions& opt = {},
                                   CalibrationDiagnostics* diag = nullptr) {
  const VpResult r1 = estimate_first_vp(segments, size, opt.first);
  if (r1.point.ideal(1e-12)) throw DegenerateVPs("first vanishing point at infinity");
  const ImagePoint vp1 = r1.point.finite();
  const VpResult r2 = estimate_second_vp(edgelets, vp1, size, opt.second);
  if (r2.point.ideal(1e-12)) throw DegenerateVPs("second vanishing point at infinity");
  if (diag) {
    diag->first_vp = r1;
    diag->second_vp = r2;
    diag->segment_count = segments.size();
    diag->edgelet_count = edgelets.size();
  }
  return calibration_from_vps(vp1, r2.point.finite(), size);
}

/// Frame-streaming variant: extracts edgelets after the first VP is known.
inline CameraCalibration calibrate(const std::vector<TrajectorySegment>& segments,
                                   const std::function<std::optional<RasterImage>()>& frames,
                                   const ImageSize& size, const CalibrateOptions& opt = {},
                                   CalibrationDiagnostics* diag = nullptr,
                                   std::vector<Edgelet>* edgelets_out = nullptr) {
  const VpResult r1 = estimate_first_vp(segments, size, opt.first);
  if (r1.point.ideal(1e-12)) throw DegenerateVPs("first vanishing point at infinity");
  const ImagePoint vp1 = r1.point.finite();
  std::vector<Edgelet> edgelets = collect_edgelets(frames, vp1, opt.collect);
  if (edgelets_out) *edgelets_out = edgelets;
  const VpResult r2 = estimate_second_vp(edgelets, vp1, size, opt.second);
  if (r2.point.ideal(1e-12)) throw DegenerateVPs("second vanishing point at infinity");
  if (diag) {
    diag->first_vp = r1;
    diag->second_vp = r2;
    diag->segment_count = segments.size();
    diag->edgelet_count = edgelets.size();
  }
  return calibration_from_vps(vp1, r2.point.finite(), size);
}

}  // namespace autocalib
