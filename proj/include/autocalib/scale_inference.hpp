#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "autocalib/errors.hpp"
#include "autocalib/geometry.hpp"
#include "autocalib/parallel.hpp"
#include "autocalib/tracking.hpp"
#include "autocalib/types.hpp"
#include "autocalib/wireframe.hpp"

namespace autocalib {

/// One rendered-vs-detected alignment sample.
struct ScaleSample {
  double lambda = 0.0;  // meters per pseudo-unit implied by this render
  double iou = 0.0;     // alignment score m_ij
  int instance = 0;     // vehicle instance index
  int scale_index = 0;  // position in the scale grid
};

struct ScaleEstimate {
  double lambda_star = 0.0;           // KDE argmax
  double lambda_reg = 0.0;            // alpha * lambda_star + beta
  double alpha = 1.0, beta = 0.0;
  size_t sample_count = 0;
  std::vector<std::pair<double, double>> density;  // (lambda, p) curve
};

struct RenderedBox {
  BBox bbox;                  // axis-aligned box of the projected wireframe
  ImagePoint anchor_front;    // projected base anchors
  ImagePoint anchor_rear;
};

/// Pose of a vehicle on the road implied by the calibration: ground position
/// of the base center plus the ground-plane travel direction (unit) derived
/// from vp1, sign-aligned with the observed image motion.
struct VehiclePose {
  GroundPoint base_center;
  Vec3 forward;  // unit, in camera coordinates, parallel to the road plane
  Vec3 up;       // unit plane normal toward the camera side
};

inline VehiclePose vehicle_pose(const ImagePoint& base_center_img, const Vec2& image_motion,
                                const CameraCalibration& calib) {
  VehiclePose pose;
  pose.base_center = project_to_road(base_center_img, calib);
  Vec3 fwd = calib.vp1_lifted().normalized();
  // Ground motion implied by the image motion decides the sign.
  const ImagePoint ahead{base_center_img.x + image_motion.x(),
                         base_center_img.y + image_motion.y()};
  const Vec3 motion = project_to_road(ahead, calib) - pose.base_center;
  if (motion.dot(fwd) < 0.0) fwd = -fwd;
  pose.up = calib.plane.n;
  pose.forward = (fwd - fwd.dot(pose.up) * pose.up).normalized();
  return pose;
}

/// Projects the wireframe placed at the pose with candidate scale lambda_j
/// (the model's metric geometry shrinks by 1/lambda_j into pseudo-units).
/// No rasterization: the bbox of the projected vertices is exact.
inline RenderedBox rendered_bbox(const WireframeModel& model, const VehiclePose& pose,
                                 double lambda_j, const CameraCalibration& calib) {
  if (!(lambda_j > 0.0)) throw Error("scale candidate must be positive");
  const Vec3 left = pose.up.cross(pose.forward);
  auto place = [&](const Vec3& v) -> Vec3 {
    return pose.base_center +
           (v.x() * pose.forward + v.y() * left + v.z() * pose.up) / lambda_j;
  };
  auto project = [&](const Vec3& cam_pt) -> ImagePoint {
    if (cam_pt.z() <= 1e-12) throw BehindCamera();
    return {calib.f * cam_pt.x() / cam_pt.z(), calib.f * cam_pt.y() / cam_pt.z()};
  };
  RenderedBox out;
  std::vector<ImagePoint> pts;
  pts.reserve(model.vertices.size());
  for (const auto& v : model.vertices) pts.push_back(project(place(v)));
  out.bbox = BBox::hull_of(pts);
  out.anchor_front = pts[static_cast<size_t>(model.anchor_front)];
  out.anchor_rear = pts[static_cast<size_t>(model.anchor_rear)];
  return out;
}

struct ScaleGridOptions {
  int candidates = 60;
  double span = 0.5;           // +-50% around the prior, log spaced
  double iou_threshold = 0.85; // retain samples with m_ij above this
};

/// Scale prior from one track: the 3D bounding box base length (toward vp1)
/// in pseudo-units against the model's metric length.
inline std::optional<double> scale_prior_of(const Track& track, const WireframeModel& model,
                                            const CameraCalibration& calib) {
  if (track.boxes3d.empty()) return std::nullopt;
  const BoundingBox3D& box = track.boxes3d[track.boxes3d.size() / 2];
  try {
    const GroundPoint a = project_to_road(box.base[0], calib);
    const GroundPoint b = project_to_road(box.base[1], calib);
    const double len_pu = (a - b).norm();
    if (len_pu <= 1e-12) return std::nullopt;
    return model.length_m / len_pu;
  } catch (const HorizonPoint&) {
    return std::nullopt;
  }
}

/// Log-spaced candidate scales around the prior.
inline std::vector<double> make_scale_grid(double prior, const ScaleGridOptions& opt) {
  std::vector<double> grid(static_cast<size_t>(opt.candidates));
  const double lo = std::log(prior * (1.0 - opt.span));
  const double hi = std::log(prior * (1.0 + opt.span));
  for (int j = 0; j < opt.candidates; ++j) {
    grid[static_cast<size_t>(j)] =
        std::exp(lo + (hi - lo) * j / static_cast<double>(opt.candidates - 1));
  }
  return grid;
}

namespace detail {

inline const WireframeModel* model_for(const std::vector<WireframeModel>& models,
                                       const std::string& cls) {
  for (const auto& m : models)
    if (m.id == cls) return &m;
  return nullptr;
}

}  // namespace detail

/// Renders every classified track at every candidate scale, keeps samples
/// whose rendered/detected IoU clears the threshold, and reports
/// lambda_ij = l_t / |F_ij - R_ij| per retained sample. The alignment frame
/// is the track's median-position detection.
inline std::vector<ScaleSample> collect_scale_samples(const std::vector<Track>& tracks,
                                                      const std::vector<WireframeModel>& models,
                                                      const CameraCalibration& calib,
                                                      const ScaleGridOptions& opt = {}) {
  struct Job {
    const Track* track;
    const WireframeModel* model;
    size_t box_index;
    int instance;
  };
  std::vector<Job> jobs;
  int instance = 0;
  for (const auto& t : tracks) {
    const std::string cls = t.dominant_class();
    const WireframeModel* model = cls == "other" ? nullptr : detail::model_for(models, cls);
    if (!model || t.boxes3d.empty()) continue;
    jobs.push_back({&t, model, t.boxes3d.size() / 2, instance++});
  }
  if (jobs.empty()) throw NoModelsMatched();

  // Grid prior from the first classified instance.
  std::optional<double> prior;
  for (const auto& j : jobs) {
    prior = scale_prior_of(*j.track, *j.model, calib);
    if (prior) break;
  }
  if (!prior) throw NoModelsMatched();
  const std::vector<double> grid = make_scale_grid(*prior, opt);

  std::vector<std::vector<ScaleSample>> per_job(jobs.size());
  parallel_for(jobs.size(), [&](size_t ji) {
    const Job& job = jobs[ji];
    const Track& track = *job.track;
    // Median-position detection with a hull (aligned with boxes3d order).
    size_t det_index = 0, with_hull = 0;
    for (size_t di = 0; di < track.detections.size(); ++di) {
      if (track.detections[di].hull.size() >= 3) {
        if (with_hull == job.box_index) {
          det_index = di;
          break;
        }
        ++with_hull;
      }
    }
    const Detection& det = track.detections[det_index];
    const BoundingBox3D& box = track.boxes3d[job.box_index];
    const Vec2 motion =
        track.detections.back().bbox.center() - track.detections.front().bbox.center();
    VehiclePose pose;
    try {
      pose = vehicle_pose(box.base_center, motion, calib);
    } catch (const HorizonPoint&) {
      return;
    }
    for (int j = 0; j < static_cast<int>(grid.size()); ++j) {
      const double lambda_j = grid[static_cast<size_t>(j)];
      RenderedBox rendered;
      try {
        rendered = rendered_bbox(*job.model, pose, lambda_j, calib);
      } catch (const Error&) {
        continue;
      }
      const double m_ij = iou(rendered.bbox, det.bbox);
      if (m_ij <= opt.iou_threshold) continue;
      try {
        const GroundPoint f = project_to_road(rendered.anchor_front, calib);
        const GroundPoint r = project_to_road(rendered.anchor_rear, calib);
        const double dist = (f - r).norm();
        if (dist <= 1e-12) continue;
        per_job[ji].push_back({job.model->length_m / dist, m_ij, job.instance, j});
      } catch (const HorizonPoint&) {
      }
    }
  });

  std::vector<ScaleSample> samples;
  for (const auto& v : per_job) samples.insert(samples.end(), v.begin(), v.end());
  return samples;
}

struct KdeOptions {
  int grid_points = 512;
  double bandwidth = 0.0;  // 0 = Silverman's rule on the sample spread
};

/// Weighted Gaussian KDE over the retained scale samples; returns the mode
/// with parabolic sub-grid refinement, ties broken toward the smaller scale.
inline ScaleEstimate kde_argmax(const std::vector<ScaleSample>& samples,
                                const KdeOptions& opt = {}) {
  if (samples.empty()) throw EmptySamples();
  std::vector<double> xs;
  xs.reserve(samples.size());
  for (const auto& s : samples) xs.push_back(s.lambda);
  const double n = static_cast<double>(xs.size());
  const double mu = mean(xs);
  double var = 0.0;
  for (double x : xs) var += (x - mu) * (x - mu);
  var /= n;
  double h = opt.bandwidth;
  if (h <= 0.0) {
    const double sigma = std::sqrt(var);
    h = 1.06 * sigma * std::pow(n, -0.2);
    if (h <= 0.0) h = std::max(1e-9, 1e-4 * mu);  // all samples identical
  }

  double lo = *std::min_element(xs.begin(), xs.end()) - 3.0 * h;
  double hi = *std::max_element(xs.begin(), xs.end()) + 3.0 * h;
  if (hi <= lo) hi = lo + 1e-9;
  const int m = std::max(8, opt.grid_points);
  const double step = (hi - lo) / (m - 1);

  ScaleEstimate est;
  est.sample_count = samples.size();
  est.density.resize(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i) {
    const double x = lo + step * i;
    double p = 0.0;
    for (const auto& s : samples) {
      const double z = (x - s.lambda) / h;
      p += s.iou * std::exp(-0.5 * z * z);
    }
    est.density[static_cast<size_t>(i)] = {x, p};
  }
  int best = 0;
  for (int i = 1; i < m; ++i) {
    if (est.density[static_cast<size_t>(i)].second >
        est.density[static_cast<size_t>(best)].second)
      best = i;  // ties keep the smaller lambda
  }
  double lambda = est.density[static_cast<size_t>(best)].first;
  if (best > 0 && best + 1 < m) {
    const double y0 = est.density[static_cast<size_t>(best - 1)].second;
    const double y1 = est.density[static_cast<size_t>(best)].second;
    const double y2 = est.density[static_cast<size_t>(best + 1)].second;
    const double denom = y0 - 2.0 * y1 + y2;
    if (std::abs(denom) > 1e-300) {
      const double delta = 0.5 * (y0 - y2) / denom;
      if (std::abs(delta) <= 1.0) lambda += delta * step;
    }
  }
  est.lambda_star = lambda;
  est.lambda_reg = lambda;  // identity until a regression is applied
  return est;
}

/// Ordinary least squares for the scale-correcting regression
/// lambda_reg = alpha * lambda_star + beta over per-scene training pairs.
struct ScaleRegression {
  double alpha = 1.0;
  double beta = 0.0;
  double apply(double lambda_star) const { return alpha * lambda_star + beta; }
};

inline ScaleRegression fit_scale_regression(
    const std::vector<std::pair<double, double>>& estimated_vs_truth) {
  if (estimated_vs_truth.size() < 2) throw DegenerateFit();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(estimated_vs_truth.size());
  for (const auto& [x, y] : estimated_vs_truth) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double det = n * sxx - sx * sx;
  if (std::abs(det) < 1e-12 * std::max(1.0, sxx * n)) throw DegenerateFit();
  ScaleRegression reg;
  reg.alpha = (n * sxy - sx * sy) / det;
  reg.beta = (sy * sxx - sx * sxy) / det;
  return reg;
}

}  // namespace autocalib
