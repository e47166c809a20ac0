#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "autocalib/errors.hpp"
#include "autocalib/geometry.hpp"
#include "autocalib/manual_calibration.hpp"
#include "autocalib/speed.hpp"
#include "autocalib/tracking.hpp"
#include "autocalib/types.hpp"

namespace autocalib {

/// Mean / median / 99-percentile error summary in absolute units and in
/// percent relative to the ground truth. Median and p99 use the nearest-rank
/// convention.
struct ErrorSummary {
  double mean_abs = 0.0, median_abs = 0.0, p99_abs = 0.0;
  double mean_rel = 0.0, median_rel = 0.0, p99_rel = 0.0;  // percent
  size_t count = 0;
};

/// Summarizes |gt - measured| pairs; relative errors are percent of gt.
inline ErrorSummary summarize_errors(const std::vector<std::pair<double, double>>& gt_measured) {
  if (gt_measured.empty()) throw EmptyMatches();
  std::vector<double> abs_err, rel_err;
  abs_err.reserve(gt_measured.size());
  rel_err.reserve(gt_measured.size());
  for (const auto& [gt, measured] : gt_measured) {
    const double err = std::abs(gt - measured);
    abs_err.push_back(err);
    if (!(gt > 0.0)) throw Error("relative error requires positive ground truth");
    rel_err.push_back(err / gt * 100.0);
  }
  ErrorSummary s;
  s.count = abs_err.size();
  s.mean_abs = mean(abs_err);
  s.median_abs = percentile_nearest_rank(abs_err, 0.5);
  s.p99_abs = percentile_nearest_rank(abs_err, 0.99);
  s.mean_rel = mean(rel_err);
  s.median_rel = percentile_nearest_rank(rel_err, 0.5);
  s.p99_rel = percentile_nearest_rank(rel_err, 0.99);
  return s;
}

/// Scale-free calibration quality: for every (D1 segment, D2 segment) pair,
/// the measured pseudo-distance ratio against the tape-measured ratio.
inline ErrorSummary ratio_error(const CameraCalibration& calib,
                                const GroundTruthMarking& markings) {
  if (markings.d1.empty() || markings.d2.empty()) throw EmptyMarkings();
  auto pseudo = [&](const MeasuredSegment& s) {
    const GroundPoint a = project_to_road(s.p1, calib);
    const GroundPoint b = project_to_road(s.p2, calib);
    return (a - b).norm();
  };
  std::vector<std::pair<double, double>> pairs;
  for (const auto& s1 : markings.d1) {
    const double m1 = pseudo(s1);
    for (const auto& s2 : markings.d2) {
      const double m2 = pseudo(s2);
      if (m2 <= 1e-12) throw HorizonPoint();
      pairs.emplace_back(s1.meters / s2.meters, m1 / m2);
    }
  }
  return summarize_errors(pairs);
}

enum class DistanceFilter { kTowardVp1Only, kAll };

/// Metric distance errors over the measured segments.
inline ErrorSummary distance_error(const CameraCalibration& calib,
                                   const GroundTruthMarking& markings,
                                   DistanceFilter filter) {
  if (!calib.scale) throw MissingScale();
  std::vector<std::pair<double, double>> pairs;
  auto add = [&](const std::vector<MeasuredSegment>& segs) {
    for (const auto& s : segs)
      pairs.emplace_back(s.meters, ground_distance(s.p1, s.p2, calib));
  };
  add(markings.d1);
  if (filter == DistanceFilter::kAll) add(markings.d2);
  if (pairs.empty()) throw EmptyMarkings();
  return summarize_errors(pairs);
}

/// Cumulative histogram point: fraction of samples with error <= threshold.
struct HistogramBin {
  double threshold = 0.0;
  double fraction = 0.0;
};

inline std::vector<HistogramBin> cumulative_histogram(std::vector<double> errors,
                                                      double bin_width = 0.1) {
  if (errors.empty()) throw EmptyMatches();
  std::sort(errors.begin(), errors.end());
  const double top = errors.back();
  const int bins = static_cast<int>(std::ceil(top / bin_width)) + 1;
  std::vector<HistogramBin> out;
  out.reserve(static_cast<size_t>(bins));
  size_t idx = 0;
  for (int b = 0; b < bins; ++b) {
    const double threshold = b * bin_width;
    while (idx < errors.size() && errors[idx] <= threshold) ++idx;
    out.push_back({threshold, static_cast<double>(idx) / static_cast<double>(errors.size())});
  }
  if (out.empty() || out.back().fraction < 1.0)
    out.push_back({top, 1.0});
  return out;
}

struct SpeedEvaluation {
  ErrorSummary summary;
  std::vector<HistogramBin> histogram;  // km/h thresholds, 0.1 bins
  CountingResult counting;
};

/// Speed errors over matched (track, GT pass) pairs plus the counting metric.
inline SpeedEvaluation speed_error(const std::vector<SpeedMeasurement>& measurements,
                                   const std::vector<Track>& tracks,
                                   const std::vector<GroundTruthPass>& gt,
                                   const LaneGeometry& geom, double scene_duration_s) {
  SpeedEvaluation eval;
  eval.counting = match_tracks_to_ground_truth(tracks, gt, geom, scene_duration_s);
  if (eval.counting.matches.empty()) throw EmptyMatches();

  std::vector<std::pair<double, double>> pairs;
  std::vector<double> abs_errors;
  for (const auto& match : eval.counting.matches) {
    const SpeedMeasurement* m = nullptr;
    for (const auto& sm : measurements)
      if (sm.track_id == match.track_id) {
        m = &sm;
        break;
      }
    if (!m) continue;
    const GroundTruthPass* pass = nullptr;
    for (const auto& p : gt)
      if (p.vehicle_id == match.gt_vehicle_id) {
        pass = &p;
        break;
      }
    if (!pass) continue;
    pairs.emplace_back(pass->speed_kmh, m->speed_kmh);
    abs_errors.push_back(std::abs(pass->speed_kmh - m->speed_kmh));
  }
  if (pairs.empty()) throw EmptyMatches();
  eval.summary = summarize_errors(pairs);
  eval.histogram = cumulative_histogram(abs_errors, 0.1);
  return eval;
}

}  // namespace autocalib
