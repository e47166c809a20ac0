#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "autocalib/errors.hpp"
#include "autocalib/geometry.hpp"
#include "autocalib/image.hpp"
#include "autocalib/manual_calibration.hpp"
#include "autocalib/tracking.hpp"
#include "autocalib/types.hpp"
#include "autocalib/wireframe.hpp"

namespace autocalib::sim {

/// World frame: X down the road in the traffic direction, Y lateral (left),
/// Z up; the road is the plane Z = 0. The camera sits at (0, camera_y,
/// height) looking down-road, pitched by tilt, turned by pan, twisted by
/// roll. Because the scene scale of the two-VP model equals the camera
/// height, the ground-truth lambda is height_m.
struct CameraConfig {
  double focal_px = 1500.0;
  double tilt_deg = 20.0;
  double pan_deg = 10.0;
  double roll_deg = 0.0;
  double height_m = 10.0;
  double lateral_m = 0.0;  // camera Y offset
  int width = 1280;
  int height = 720;
};

struct VehicleSpec {
  std::string model_id = "combi";
  double length_m = 0.0;  // 0 = model's native length
  double speed_kmh = 90.0;
  int lane = 0;
  double entry_time_s = 0.0;
  double entry_x_m = 12.0;  // base-center X when the vehicle enters
};

struct NoiseConfig {
  double trajectory_sigma_px = 0.0;
  double edge_outlier_fraction = 0.0;
  double bbox_jitter_px = 0.0;
};

struct SceneConfig {
  CameraConfig camera;
  int lane_count = 2;
  double lane_width_m = 3.5;
  std::vector<VehicleSpec> vehicles;
  NoiseConfig noise;
  double fps = 12.5;
  double duration_s = 8.0;
  double measurement_line_x_m = 35.0;
  int trajectory_points_per_vehicle = 12;
  bool emit_frames = true;
  bool emit_masks = false;

  void validate() const {
    if (!(camera.height_m > 0.0)) throw ConfigInvalid("camera height must be positive");
    if (!(camera.focal_px > 0.0)) throw ConfigInvalid("focal length must be positive");
    if (camera.width < 16 || camera.height < 16) throw ConfigInvalid("image too small");
    if (!(fps > 0.0)) throw ConfigInvalid("frame rate must be positive");
    if (!(duration_s > 0.0)) throw ConfigInvalid("duration must be positive");
    if (lane_count < 1) throw ConfigInvalid("need at least one lane");
    if (!(lane_width_m > 0.0)) throw ConfigInvalid("lane width must be positive");
    for (const auto& v : vehicles) {
      if (!(v.speed_kmh > 0.0)) throw ConfigInvalid("vehicle speed must be positive");
      if (v.lane < 0 || v.lane >= lane_count) throw ConfigInvalid("vehicle lane out of range");
      if (v.model_id != "combi" && v.model_id != "sedan")
        throw ConfigInvalid("unknown vehicle model: " + v.model_id);
    }
  }
};

/// Projective camera for the configured pose.
class Camera {
 public:
  explicit Camera(const CameraConfig& cfg) : cfg_(cfg) {
    const double ct = std::cos(deg2rad(cfg.tilt_deg)), st = std::sin(deg2rad(cfg.tilt_deg));
    const double cp = std::cos(deg2rad(cfg.pan_deg)), sp = std::sin(deg2rad(cfg.pan_deg));
    const Vec3 forward{ct * cp, ct * sp, -st};
    Vec3 right = forward.cross(Vec3(0, 0, 1)).normalized();
    Vec3 down = forward.cross(right).normalized();
    const double cr = std::cos(deg2rad(cfg.roll_deg)), sr = std::sin(deg2rad(cfg.roll_deg));
    const Vec3 right_r = cr * right + sr * down;
    const Vec3 down_r = -sr * right + cr * down;
    world_to_cam_.row(0) = right_r;
    world_to_cam_.row(1) = down_r;
    world_to_cam_.row(2) = forward;
    position_ = Vec3(0.0, cfg.lateral_m, cfg.height_m);
  }

  ImageSize size() const { return {cfg_.width, cfg_.height}; }
  const Mat3& world_to_cam() const { return world_to_cam_; }
  Vec3 cam_point(const Vec3& world) const { return world_to_cam_ * (world - position_); }

  ImagePoint project(const Vec3& world) const {
    const Vec3 c = cam_point(world);
    if (c.z() <= 1e-9) throw BehindCamera();
    return {cfg_.focal_px * c.x() / c.z(), cfg_.focal_px * c.y() / c.z()};
  }

  bool in_frame(const ImagePoint& p, double margin = 0.0) const {
    return std::abs(p.x) <= cfg_.width / 2.0 - margin &&
           std::abs(p.y) <= cfg_.height / 2.0 - margin;
  }

  ImagePoint vp_of_direction(const Vec3& dir) const {
    const Vec3 d = world_to_cam_ * dir;
    if (std::abs(d.z()) < 1e-12) throw HorizonPoint();
    return {cfg_.focal_px * d.x() / d.z(), cfg_.focal_px * d.y() / d.z()};
  }

  CameraCalibration gt_calibration() const {
    CameraCalibration calib =
        calibration_from_vps(vp_of_direction({1, 0, 0}), vp_of_direction({0, 1, 0}), size());
    calib.scale = cfg_.height_m;
    return calib;
  }

 private:
  CameraConfig cfg_;
  Mat3 world_to_cam_;
  Vec3 position_;
};

/// Ground-truth bundle the oracle hands to the evaluation side.
struct SceneTruth {
  CameraCalibration calibration;  // includes the true scale
  std::vector<GroundTruthPass> passes;
  LaneGeometry lanes;
  GroundTruthMarking markings;
  double duration_s = 0.0;
};

/// Everything the pipeline consumes, generated from one scene.
struct SceneData {
  SceneConfig config;
  SceneTruth truth;
  int frame_count = 0;
  /// One entry per tracked point: (frame, centered image point) samples.
  std::vector<std::vector<std::pair<int, ImagePoint>>> point_tracks;
  std::vector<Detection> detections;
  /// Deterministic frame renderer (wireframe edges over a dark background).
  std::function<RasterImage(int)> render_frame;
  std::vector<WireframeModel> models;  // the exact geometry used
};

namespace detail {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Independent deterministic stream per (seed, purpose, a, b), so frames and
/// vehicles can be generated in any order (or in parallel) with identical
/// output.
inline std::mt19937_64 stream(uint64_t seed, uint64_t purpose, uint64_t a, uint64_t b) {
  return std::mt19937_64(splitmix64(splitmix64(splitmix64(seed ^ purpose) ^ (a + 1)) ^ (b + 1)));
}

constexpr uint64_t kTrajStream = 1;
constexpr uint64_t kDetStream = 2;
constexpr uint64_t kOutlierStream = 3;

}  // namespace detail

/// One concrete vehicle: the spec plus the scaled model placed in a lane.
struct VehicleInstance {
  VehicleSpec spec;
  WireframeModel model;  // scaled to the spec length
  double lane_y = 0.0;
  double speed_mps = 0.0;

  double x_at(double t) const { return spec.entry_x_m + speed_mps * (t - spec.entry_time_s); }
  Vec3 vertex_world(size_t idx, double t) const {
    const Vec3& v = model.vertices[idx];
    return {x_at(t) + v.x(), lane_y + v.y(), v.z()};
  }
};

inline double lane_center_y(const SceneConfig& cfg, int lane) {
  return (lane - (cfg.lane_count - 1) / 2.0) * cfg.lane_width_m;
}

inline std::vector<VehicleInstance> build_vehicles(const SceneConfig& cfg) {
  std::vector<VehicleInstance> out;
  for (const auto& spec : cfg.vehicles) {
    VehicleInstance inst;
    inst.spec = spec;
    const WireframeModel base = spec.model_id == "combi" ? make_combi_model() : make_sedan_model();
    inst.model = spec.length_m > 0.0 ? base.scaled(spec.length_m / base.length_m) : base;
    inst.lane_y = lane_center_y(cfg, spec.lane);
    inst.speed_mps = spec.speed_kmh / 3.6;
    out.push_back(std::move(inst));
  }
  return out;
}

namespace detail {

/// Fully visible check: every vertex projects inside the frame.
inline bool vehicle_visible(const Camera& cam, const VehicleInstance& veh, double t,
                            std::vector<ImagePoint>* projected) {
  projected->clear();
  for (size_t i = 0; i < veh.model.vertices.size(); ++i) {
    ImagePoint p;
    try {
      p = cam.project(veh.vertex_world(i, t));
    } catch (const BehindCamera&) {
      return false;
    }
    if (!cam.in_frame(p, 2.0)) return false;
    projected->push_back(p);
  }
  return true;
}

inline GroundTruthMarking make_markings(const SceneConfig& cfg, const Camera& cam) {
  GroundTruthMarking mk;
  const double y_lo = lane_center_y(cfg, 0) - cfg.lane_width_m / 2.0;
  const double y_hi = lane_center_y(cfg, cfg.lane_count - 1) + cfg.lane_width_m / 2.0;
  // A marker grid on the road patch around the measurement line.
  const double x0 = cfg.measurement_line_x_m - 12.0;
  const double x1 = cfg.measurement_line_x_m + 12.0;
  for (int b = 0; b <= cfg.lane_count; ++b) {
    const double y = y_lo + b * cfg.lane_width_m;
    mk.lane_lines.emplace_back(cam.project({x0, y, 0}), cam.project({x1, y, 0}));
  }
  for (double x : {x0, cfg.measurement_line_x_m, x1}) {
    mk.perp_lines.emplace_back(cam.project({x, y_lo, 0}), cam.project({x, y_hi, 0}));
  }
  for (int b = 0; b <= cfg.lane_count; ++b) {
    const double y = y_lo + b * cfg.lane_width_m;
    mk.d1.push_back({cam.project({x0, y, 0}), cam.project({x1, y, 0}), x1 - x0});
    mk.d1.push_back(
        {cam.project({x0 + 4.0, y, 0}), cam.project({x1 - 4.0, y, 0}), x1 - x0 - 8.0});
  }
  for (double x : {x0, cfg.measurement_line_x_m, x1}) {
    mk.d2.push_back({cam.project({x, y_lo, 0}), cam.project({x, y_hi, 0}), y_hi - y_lo});
    if (cfg.lane_count >= 2) {
      mk.d2.push_back({cam.project({x, y_lo, 0}),
                       cam.project({x, y_lo + cfg.lane_width_m, 0}), cfg.lane_width_m});
    }
  }
  return mk;
}

inline LaneGeometry make_lane_geometry(const SceneConfig& cfg, const Camera& cam) {
  LaneGeometry geom;
  const double y_lo = lane_center_y(cfg, 0) - cfg.lane_width_m / 2.0;
  const double y_hi = lane_center_y(cfg, cfg.lane_count - 1) + cfg.lane_width_m / 2.0;
  geom.measurement_line = Line2::through(cam.project({cfg.measurement_line_x_m, y_lo - 2.0, 0}),
                                         cam.project({cfg.measurement_line_x_m, y_hi + 2.0, 0}));
  for (int b = 0; b <= cfg.lane_count; ++b) {
    const double y = y_lo + b * cfg.lane_width_m;
    geom.lane_boundaries.push_back(
        Line2::through(cam.project({10.0, y, 0}), cam.project({80.0, y, 0})));
  }
  return geom;
}

}  // namespace detail

/// Generates the full data bundle. Deterministic for a fixed (config, seed);
/// the frame renderer is a pure function of (config, seed, frame index).
inline SceneData generate(const SceneConfig& config, uint64_t seed) {
  config.validate();
  SceneData data;
  data.config = config;
  const Camera cam(config.camera);
  const auto vehicles = build_vehicles(config);
  data.frame_count = static_cast<int>(std::floor(config.duration_s * config.fps)) + 1;

  data.truth.calibration = cam.gt_calibration();
  data.truth.markings = detail::make_markings(config, cam);
  data.truth.lanes = detail::make_lane_geometry(config, cam);
  data.truth.duration_s = config.duration_s;
  for (size_t vi = 0; vi < vehicles.size(); ++vi) {
    const auto& veh = vehicles[vi];
    GroundTruthPass pass;
    pass.vehicle_id = static_cast<int>(vi);
    pass.lane = veh.spec.lane;
    pass.speed_kmh = veh.spec.speed_kmh;
    // The tracked reference point is the bottom-front edge midpoint, which
    // crosses the measurement line when the vehicle front reaches it.
    const double front_offset = veh.model.vertices[static_cast<size_t>(veh.model.anchor_front)].x();
    pass.t_cross = veh.spec.entry_time_s +
                   (config.measurement_line_x_m - veh.spec.entry_x_m - front_offset) /
                       veh.speed_mps;
    data.truth.passes.push_back(pass);
  }

  // Tracked points: a deterministic subset of each vehicle's vertices.
  std::vector<std::vector<size_t>> tracked_vertices(vehicles.size());
  for (size_t vi = 0; vi < vehicles.size(); ++vi) {
    const size_t n = vehicles[vi].model.vertices.size();
    const size_t want =
        std::min<size_t>(static_cast<size_t>(config.trajectory_points_per_vehicle), n);
    for (size_t k = 0; k < want; ++k) tracked_vertices[vi].push_back((k * n) / want);
  }

  std::vector<ImagePoint> scratch;
  for (size_t vi = 0; vi < vehicles.size(); ++vi) {
    const auto& veh = vehicles[vi];
    std::vector<std::vector<std::pair<int, ImagePoint>>> tracks(tracked_vertices[vi].size());
    for (int frame = 0; frame < data.frame_count; ++frame) {
      const double t = frame / config.fps;
      if (!detail::vehicle_visible(cam, veh, t, &scratch)) continue;

      for (size_t k = 0; k < tracked_vertices[vi].size(); ++k) {
        ImagePoint p = scratch[tracked_vertices[vi][k]];
        if (config.noise.trajectory_sigma_px > 0.0) {
          auto gen = detail::stream(seed, detail::kTrajStream, vi * 1000 + k,
                                    static_cast<uint64_t>(frame));
          std::normal_distribution<double> noise(0.0, config.noise.trajectory_sigma_px);
          p.x += noise(gen);
          p.y += noise(gen);
        }
        tracks[k].emplace_back(frame, p);
      }

      Detection det;
      det.frame = frame;
      det.t = t;
      det.cls = veh.spec.model_id;
      det.confidence = 0.97;
      BBox box = BBox::hull_of(scratch);
      std::vector<ImagePoint> hull_pts = scratch;
      if (config.noise.bbox_jitter_px > 0.0) {
        auto gen = detail::stream(seed, detail::kDetStream, vi, static_cast<uint64_t>(frame));
        std::uniform_real_distribution<double> jitter(-config.noise.bbox_jitter_px,
                                                      config.noise.bbox_jitter_px);
        const double dx0 = jitter(gen), dy0 = jitter(gen), dx1 = jitter(gen), dy1 = jitter(gen);
        box = {box.x + dx0, box.y + dy0, std::max(4.0, box.w + dx1 - dx0),
               std::max(4.0, box.h + dy1 - dy0)};
        for (auto& p : hull_pts) {
          p.x += jitter(gen);
          p.y += jitter(gen);
          p.x = std::clamp(p.x, box.x - 7.5, box.x2() + 7.5);
          p.y = std::clamp(p.y, box.y - 7.5, box.y2() + 7.5);
        }
      }
      det.bbox = box;
      det.hull = convex_hull(hull_pts);
      data.detections.push_back(det);
    }
    for (auto& tr : tracks)
      if (tr.size() >= 2) data.point_tracks.push_back(std::move(tr));
  }

  // Frame renderer: anti-aliased wireframe edges over a dark background,
  // plus the configured fraction of spurious edge segments.
  const SceneConfig cfg_copy = config;
  const Camera cam_copy = cam;
  const auto vehicles_copy = vehicles;
  data.render_frame = [cfg_copy, cam_copy, vehicles_copy, seed](int frame) -> RasterImage {
    RasterImage img(cfg_copy.camera.width, cfg_copy.camera.height);
    const double t = frame / cfg_copy.fps;
    const Vec2 half = img.size().half();
    size_t edges_drawn = 0;
    std::vector<ImagePoint> proj;
    std::vector<BBox> boxes;
    for (const auto& veh : vehicles_copy) {
      if (!detail::vehicle_visible(cam_copy, veh, t, &proj)) continue;
      for (const auto& [a, b] : veh.model.edges) {
        draw_segment_aa(img, proj[static_cast<size_t>(a)].vec() + half,
                        proj[static_cast<size_t>(b)].vec() + half, 0.9f);
        ++edges_drawn;
      }
      boxes.push_back(BBox::hull_of(proj));
    }
    if (cfg_copy.noise.edge_outlier_fraction > 0.0 && edges_drawn > 0) {
      const double frac = cfg_copy.noise.edge_outlier_fraction;
      const int spurious = static_cast<int>(std::lround(edges_drawn * frac / (1.0 - frac)));
      auto gen = detail::stream(seed, detail::kOutlierStream, static_cast<uint64_t>(frame), 0);
      std::uniform_real_distribution<double> ux(0.0, cfg_copy.camera.width);
      std::uniform_real_distribution<double> uy(0.0, cfg_copy.camera.height);
      std::uniform_real_distribution<double> uang(0.0, kPi);
      std::uniform_real_distribution<double> ulen(30.0, 120.0);
      for (int s = 0; s < spurious; ++s) {
        const Vec2 c{ux(gen), uy(gen)};
        const double ang = uang(gen), len = ulen(gen);
        const Vec2 d{std::cos(ang) * len / 2, std::sin(ang) * len / 2};
        draw_segment_aa(img, c - d, c + d, 0.9f);
      }
    }
    if (cfg_copy.emit_masks) {
      img.mask.assign(img.samples.size(), 0);
      for (const auto& b : boxes) {
        const int x0 = std::max(0, static_cast<int>(b.x + half.x()) - 12);
        const int x1 = std::min(img.width - 1, static_cast<int>(b.x2() + half.x()) + 12);
        const int y0 = std::max(0, static_cast<int>(b.y + half.y()) - 12);
        const int y1 = std::min(img.height - 1, static_cast<int>(b.y2() + half.y()) + 12);
        for (int y = y0; y <= y1; ++y)
          for (int x = x0; x <= x1; ++x) img.mask[static_cast<size_t>(y) * img.width + x] = 1;
      }
    }
    return img;
  };

  data.models = builtin_models();
  return data;
}

}  // namespace autocalib::sim
