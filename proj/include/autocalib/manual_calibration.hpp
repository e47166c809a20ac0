#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "autocalib/errors.hpp"
#include "autocalib/geometry.hpp"
#include "autocalib/parallel.hpp"
#include "autocalib/types.hpp"

namespace autocalib {

/// Road segment with a tape-measured length.
struct MeasuredSegment {
  ImagePoint p1;
  ImagePoint p2;
  double meters = 0.0;
};

/// Manually annotated scene geometry: lane-dividing lines (toward the first
/// VP), lines perpendicular to the traffic (toward the second VP), and
/// measured distances along both directions.
struct GroundTruthMarking {
  std::vector<std::pair<ImagePoint, ImagePoint>> lane_lines;
  std::vector<std::pair<ImagePoint, ImagePoint>> perp_lines;
  std::vector<MeasuredSegment> d1;  // toward vp1
  std::vector<MeasuredSegment> d2;  // toward vp2

  void validate() const {
    for (const auto& s : d1)
      if (!(s.meters > 0.0)) throw SchemaError("measured distance must be positive");
    for (const auto& s : d2)
      if (!(s.meters > 0.0)) throw SchemaError("measured distance must be positive");
    auto check_lines = [](const std::vector<std::pair<ImagePoint, ImagePoint>>& ls) {
      for (const auto& [a, b] : ls)
        if (distance(a, b) <= 0.0) throw SchemaError("marking line endpoints must be distinct");
    };
    check_lines(lane_lines);
    check_lines(perp_lines);
  }
};

/// Least-squares intersection of marked lines: minimizes the sum of squared
/// normalized line equations A u = -b.
inline ImagePoint vp_least_squares(const std::vector<std::pair<ImagePoint, ImagePoint>>& lines) {
  if (lines.size() < 2) throw ParallelLines();
  double m00 = 0, m01 = 0, m11 = 0, r0 = 0, r1 = 0;
  for (const auto& [p, q] : lines) {
    const Line2 l = Line2::through(p, q);
    m00 += l.a * l.a;
    m01 += l.a * l.b;
    m11 += l.b * l.b;
    r0 -= l.a * l.c;
    r1 -= l.b * l.c;
  }
  const double det = m00 * m11 - m01 * m01;
  if (std::abs(det) < 1e-9) throw ParallelLines();
  return {(m11 * r0 - m01 * r1) / det, (m00 * r1 - m01 * r0) / det};
}

/// Mean of measured length over projected pseudo-length across the segments.
inline double manual_scale(const CameraCalibration& calib,
                           const std::vector<MeasuredSegment>& segments) {
  if (segments.empty()) throw EmptyMarkings();
  std::vector<double> ratios;
  ratios.reserve(segments.size());
  for (const auto& s : segments) {
    const GroundPoint a = project_to_road(s.p1, calib);
    const GroundPoint b = project_to_road(s.p2, calib);
    const double d = (a - b).norm();
    if (d <= 1e-12) throw HorizonPoint();
    ratios.push_back(s.meters / d);
  }
  return mean(ratios);
}

/// Objective of the second-VP grid search: total absolute error of the
/// measured D2 distances, with the scale recomputed from D1 per candidate.
inline double manual_objective(const ImagePoint& vp1, const ImagePoint& vp2_candidate,
                               const ImageSize& size, const GroundTruthMarking& markings) {
  const CameraCalibration calib = calibration_from_vps(vp1, vp2_candidate, size);
  const double lambda = manual_scale(calib, markings.d1);
  double total = 0.0;
  for (const auto& s : markings.d2) {
    const GroundPoint a = project_to_road(s.p1, calib);
    const GroundPoint b = project_to_road(s.p2, calib);
    total += std::abs(lambda * (a - b).norm() - s.meters);
  }
  return total;
}

struct GridSearchOptions {
  double focal_min_width_ratio = 0.3;
  double focal_max_width_ratio = 10.0;
  double spacing_px = 2.0;
};

struct ManualCalibResult {
  CameraCalibration calibration;  // scale filled from D1
  ImagePoint vp2_initial;
  double objective = 0.0;
  size_t grid_size = 0;
  bool low_confidence = false;  // single D2 segment: result defined but weak
};

/// Second-VP refinement by grid search along the line of feasible second VPs
/// (the horizon through vp1 and the initial guess), sampled every spacing_px
/// within the focal-length bound. Candidates where the focal length is
/// imaginary are skipped; ties break toward the candidate nearest the guess.
inline ImagePoint optimize_second_vp(const ImagePoint& vp1, const ImagePoint& vp2_initial,
                                     const GroundTruthMarking& markings, const ImageSize& size,
                                     const GridSearchOptions& opt = {}) {
  if (markings.d2.empty() || markings.d1.empty()) throw EmptyMarkings();
  const Vec2 dir = (vp2_initial - vp1).vec().normalized();
  const double f_lo = opt.focal_min_width_ratio * size.width;
  const double f_hi = opt.focal_max_width_ratio * size.width;

  // Feasible parameter range along v(s) = vp2_initial + s * dir:
  // f(s)^2 = -(u . v(s)) is linear in s, so the focal bound is an interval.
  const auto radicand = [&](double s) {
    const ImagePoint v{vp2_initial.x + s * dir.x(), vp2_initial.y + s * dir.y()};
    return -(vp1.x * v.x + vp1.y * v.y);
  };
  const double r0 = radicand(0.0);
  const double slope = radicand(1.0) - r0;
  double s_min, s_max;
  if (std::abs(slope) < 1e-12) {
    if (r0 < f_lo * f_lo || r0 > f_hi * f_hi) throw EmptyFeasibleGrid();
    s_min = -4.0 * size.width;  // focal independent of s: bound the walk
    s_max = 4.0 * size.width;
  } else {
    const double s_at_lo = (f_lo * f_lo - r0) / slope;
    const double s_at_hi = (f_hi * f_hi - r0) / slope;
    s_min = std::min(s_at_lo, s_at_hi);
    s_max = std::max(s_at_lo, s_at_hi);
  }
  if (!(s_max > s_min)) throw EmptyFeasibleGrid();

  const long k_min = static_cast<long>(std::ceil(s_min / opt.spacing_px));
  const long k_max = static_cast<long>(std::floor(s_max / opt.spacing_px));
  if (k_max < k_min) throw EmptyFeasibleGrid();
  const size_t count = static_cast<size_t>(k_max - k_min + 1);

  struct Eval {
    double objective = std::numeric_limits<double>::infinity();
    double abs_s = std::numeric_limits<double>::infinity();
    ImagePoint v;
    bool ok = false;
  };
  std::vector<Eval> evals(count);
  parallel_for(count, [&](size_t i) {
    const double s = static_cast<double>(k_min + static_cast<long>(i)) * opt.spacing_px;
    const ImagePoint v{vp2_initial.x + s * dir.x(), vp2_initial.y + s * dir.y()};
    const double rad = radicand(s);
    if (!(rad > f_lo * f_lo) || !(rad < f_hi * f_hi)) return;
    try {
      evals[i] = {manual_objective(vp1, v, size, markings), std::abs(s), v, true};
    } catch (const Error&) {
      // candidate produced a degenerate calibration or horizon hit
    }
  });

  const Eval* best = nullptr;
  for (const auto& e : evals) {
    if (!e.ok) continue;
    if (!best || e.objective < best->objective ||
        (e.objective == best->objective && e.abs_s < best->abs_s)) {
      best = &e;
    }
  }
  if (!best) throw EmptyFeasibleGrid();
  return best->v;
}

/// Full supervised baseline: least-squares first VP from the lane lines,
/// least-squares second VP from the perpendicular lines refined by the grid
/// search, scale from the D1 distances.
inline ManualCalibResult manual_calibrate(const GroundTruthMarking& markings,
                                          const ImageSize& size,
                                          const GridSearchOptions& opt = {}) {
  markings.validate();
  const ImagePoint vp1 = vp_least_squares(markings.lane_lines);
  const ImagePoint vp2_init = vp_least_squares(markings.perp_lines);
  ManualCalibResult result;
  result.vp2_initial = vp2_init;
  const ImagePoint vp2 = optimize_second_vp(vp1, vp2_init, markings, size, opt);
  result.calibration = calibration_from_vps(vp1, vp2, size);
  result.calibration.scale = manual_scale(result.calibration, markings.d1);
  result.objective = manual_objective(vp1, vp2, size, markings);
  result.low_confidence = markings.d2.size() < 2;
  return result;
}

/// Scale from matched ground-truth and measured speeds (measured with
/// lambda = 1): the mean of the ratios. Lower error bound for the given
/// camera calibration.
inline double speed_scale(const std::vector<std::pair<double, double>>& gt_and_measured) {
  if (gt_and_measured.empty()) throw EmptyMatches();
  std::vector<double> ratios;
  ratios.reserve(gt_and_measured.size());
  for (const auto& [gt, v] : gt_and_measured) {
    if (!(v > 0.0)) throw Error("measured speed must be positive");
    ratios.push_back(gt / v);
  }
  return mean(ratios);
}

}  // namespace autocalib
