#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "autocalib/errors.hpp"
#include "autocalib/geometry.hpp"
#include "autocalib/types.hpp"

namespace autocalib {

/// One detector output for one frame. Geometry is in centered image
/// coordinates (converted at ingestion).
struct Detection {
  int frame = 0;
  double t = 0.0;  // seconds
  BBox bbox;
  std::string cls = "other";
  double confidence = 0.0;
  std::vector<ImagePoint> hull;  // convex foreground hull, may be empty

  void validate() const {
    if (!(bbox.area() > 0.0)) throw SchemaError("detection bbox must have positive area");
    for (const auto& p : hull)
      if (!bbox.contains(p, 8.0)) throw SchemaError("hull vertex outside bbox dilated by 8 px");
  }
};

/// Kalman state snapshot per frame: bbox center, size, and image velocity.
struct KalmanSnapshot {
  int frame = 0;
  Eigen::Matrix<double, 6, 1> state;  // cx, cy, w, h, vx, vy
  Vec2 predicted_center = Vec2::Zero();
};

/// Image-space 3D bounding box: four base corners and the four top corners
/// above them. Base edges 0-1 and 2-3 point at the first vanishing point,
/// edges 1-2 and 3-0 at the second.
struct BoundingBox3D {
  std::array<ImagePoint, 4> base;
  std::array<ImagePoint, 4> top;
  ImagePoint base_center;

  BBox bbox2d() const {
    std::vector<ImagePoint> pts(base.begin(), base.end());
    pts.insert(pts.end(), top.begin(), top.end());
    return BBox::hull_of(pts);
  }
};

/// One tracked vehicle.
struct Track {
  int id = 0;
  std::vector<Detection> detections;
  std::vector<KalmanSnapshot> kalman;
  std::vector<BoundingBox3D> boxes3d;               // per detection with a hull
  std::vector<std::pair<double, ImagePoint>> reference_points;  // (t, point)
  std::map<std::string, double> class_posterior;    // mean of per-detection probabilities

  std::string dominant_class() const {
    std::string best = "other";
    double best_p = -1.0;
    for (const auto& [cls, p] : class_posterior) {
      if (p > best_p || (p == best_p && cls < best)) {
        best = cls;
        best_p = p;
      }
    }
    return best;
  }
};

// ---------------------------------------------------------------------------
// Detection grouping / occlusion filtering
// ---------------------------------------------------------------------------

/// Removes detections that overlap a nearer detection (larger bottom edge y)
/// with IoU above the threshold; only fully visible vehicles are tracked.
inline std::vector<Detection> group_and_filter(const std::vector<Detection>& frame_detections,
                                               double iou_threshold = 0.25) {
  std::vector<Detection> kept;
  for (const auto& d : frame_detections) {
    bool occluded = false;
    for (const auto& other : frame_detections) {
      if (&other == &d) continue;
      if (other.bbox.y2() > d.bbox.y2() && iou(d.bbox, other.bbox) > iou_threshold) {
        occluded = true;
        break;
      }
    }
    if (!occluded) kept.push_back(d);
  }
  return kept;
}

// ---------------------------------------------------------------------------
// Constant-velocity Kalman tracking of 2D boxes
// ---------------------------------------------------------------------------

struct TrackerOptions {
  double measurement_sigma_px = 1.0;
  double accel_sigma_px = 0.5;   // process acceleration, px / frame^2
  double gate_sigmas = 3.0;      // association gate on predicted position
  int max_missed_frames = 5;     // termination after consecutive misses
  size_t min_detections = 5;     // discard shorter tracks
  double occlusion_iou = 0.25;
};

namespace detail {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Vec4 = Eigen::Matrix<double, 4, 1>;
using Mat4 = Eigen::Matrix<double, 4, 4>;
using Mat46 = Eigen::Matrix<double, 4, 6>;

struct KalmanBox {
  Vec6 x = Vec6::Zero();
  Mat6 p = Mat6::Zero();
  int updates = 0;
  int steps_since_update = 0;

  static Mat6 transition() {
    Mat6 f = Mat6::Identity();
    f(0, 4) = 1.0;
    f(1, 5) = 1.0;
    return f;
  }
  static Mat46 observation() {
    Mat46 h = Mat46::Zero();
    for (int i = 0; i < 4; ++i) h(i, i) = 1.0;
    return h;
  }

  void init(const Vec4& z, double meas_var) {
    x.head<4>() = z;
    x.tail<2>().setZero();
    p.setZero();
    for (int i = 0; i < 4; ++i) p(i, i) = meas_var;
    p(4, 4) = p(5, 5) = 1e4;  // velocity unknown until the second hit
    updates = 1;
  }

  void predict(double accel_var) {
    const Mat6 f = transition();
    x = f * x;
    p = f * p * f.transpose();
    ++steps_since_update;
    // Piecewise-constant acceleration noise on (pos, vel); random walk on size.
    const double q11 = accel_var / 4.0, q12 = accel_var / 2.0, q22 = accel_var;
    p(0, 0) += q11;
    p(0, 4) += q12;
    p(4, 0) += q12;
    p(4, 4) += q22;
    p(1, 1) += q11;
    p(1, 5) += q12;
    p(5, 1) += q12;
    p(5, 5) += q22;
    p(2, 2) += accel_var;
    p(3, 3) += accel_var;
  }

  void update(const Vec4& z, double meas_var) {
    if (updates == 1) {
      // Two-point initialization: the second hit pins the velocity exactly
      // (the prediction used v = 0, so the position innovation over the
      // elapsed frames is z2 - z1).
      const Vec4 nu = z - observation() * x;
      const double dt = std::max(1, steps_since_update);
      x.head<4>() = z;
      x(4) += nu(0) / dt;
      x(5) += nu(1) / dt;
      p.setZero();
      for (int i = 0; i < 4; ++i) p(i, i) = meas_var;
      p(4, 4) = p(5, 5) = 2.0 * meas_var / (dt * dt);
      p(0, 4) = p(4, 0) = meas_var / dt;
      p(1, 5) = p(5, 1) = meas_var / dt;
      ++updates;
      steps_since_update = 0;
      return;
    }
    const Mat46 h = observation();
    Mat4 s = h * p * h.transpose();
    for (int i = 0; i < 4; ++i) s(i, i) += meas_var + 1e-12;
    const Eigen::Matrix<double, 6, 4> k = p * h.transpose() * s.inverse();
    x += k * (z - h * x);
    p = (Mat6::Identity() - k * h) * p;
    ++updates;
    steps_since_update = 0;
  }

  Vec2 predicted_center() const { return {x(0), x(1)}; }
  double position_gate(double sigmas, double meas_var) const {
    const double var = std::max(p(0, 0), p(1, 1)) + meas_var;
    return std::max(1.0, sigmas * std::sqrt(var));  // floor for noise-free setups
  }
};

inline Vec4 measurement_of(const Detection& d) {
  Vec4 z;
  z << d.bbox.center().x(), d.bbox.center().y(), d.bbox.w, d.bbox.h;
  return z;
}

}  // namespace detail

/// Groups detections per frame, filters occlusions, and tracks the boxes with
/// a constant-velocity Kalman filter. Association is gated nearest-centroid;
/// the returned tracks have at least min_detections detections each.
inline std::vector<Track> track_boxes(const std::vector<Detection>& detections,
                                      const TrackerOptions& opt = {}) {
  // Bucket by frame, preserving input order inside a frame.
  std::map<int, std::vector<Detection>> frames;
  for (const auto& d : detections) {
    d.validate();
    frames[d.frame].push_back(d);
  }

  struct Active {
    detail::KalmanBox kf;
    Track track;
    int missed = 0;
  };
  std::vector<Active> active;
  std::vector<Track> done;
  int next_id = 0;
  const double meas_var = opt.measurement_sigma_px * opt.measurement_sigma_px;
  const double accel_var = opt.accel_sigma_px * opt.accel_sigma_px;

  auto retire = [&](Active& a) {
    if (a.track.detections.size() >= opt.min_detections) done.push_back(std::move(a.track));
  };

  std::optional<int> prev_frame;
  for (auto& [frame, raw] : frames) {
    const std::vector<Detection> dets = group_and_filter(raw, opt.occlusion_iou);
    // Frames without any detection never appear in the map; advance the
    // filters (and the miss counters) across the gap.
    const int gap = prev_frame ? frame - *prev_frame : 1;
    prev_frame = frame;
    for (auto& a : active) {
      for (int s = 0; s < gap; ++s) a.kf.predict(accel_var);
      a.missed += gap - 1;
    }
    {
      // Tracks that ran out of allowed misses during the gap retire now.
      std::vector<Active> still;
      for (auto& a : active) {
        if (a.missed > opt.max_missed_frames)
          retire(a);
        else
          still.push_back(std::move(a));
      }
      active = std::move(still);
    }

    // Greedy nearest-centroid association, deterministic by distance then ids.
    struct Cand {
      double dist;
      size_t track_idx;
      size_t det_idx;
    };
    std::vector<Cand> cands;
    for (size_t ti = 0; ti < active.size(); ++ti) {
      const double gate = active[ti].kf.position_gate(opt.gate_sigmas, meas_var);
      for (size_t di = 0; di < dets.size(); ++di) {
        const double dist = (detail::measurement_of(dets[di]).head<2>() -
                             active[ti].kf.predicted_center())
                                .norm();
        if (dist <= gate) cands.push_back({dist, ti, di});
      }
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
      if (a.dist != b.dist) return a.dist < b.dist;
      if (a.track_idx != b.track_idx) return a.track_idx < b.track_idx;
      return a.det_idx < b.det_idx;
    });
    std::vector<bool> track_used(active.size(), false), det_used(dets.size(), false);
    for (const auto& c : cands) {
      if (track_used[c.track_idx] || det_used[c.det_idx]) continue;
      track_used[c.track_idx] = true;
      det_used[c.det_idx] = true;
      Active& a = active[c.track_idx];
      const Vec2 predicted = a.kf.predicted_center();
      a.kf.update(detail::measurement_of(dets[c.det_idx]), meas_var);
      a.track.detections.push_back(dets[c.det_idx]);
      a.track.kalman.push_back({frame, a.kf.x, predicted});
      a.missed = 0;
    }
    for (size_t ti = 0; ti < active.size(); ++ti)
      if (!track_used[ti]) ++active[ti].missed;
    for (size_t di = 0; di < dets.size(); ++di) {
      if (det_used[di]) continue;
      Active a;
      a.kf.init(detail::measurement_of(dets[di]), meas_var);
      a.track.id = next_id++;
      a.track.detections.push_back(dets[di]);
      a.track.kalman.push_back({frame, a.kf.x, a.kf.predicted_center()});
      active.push_back(std::move(a));
    }
    // Terminate stale tracks.
    std::vector<Active> still;
    for (auto& a : active) {
      if (a.missed > opt.max_missed_frames)
        retire(a);
      else
        still.push_back(std::move(a));
    }
    active = std::move(still);
  }
  for (auto& a : active) retire(a);

  // Class posterior: mean of per-detection class probability. A detection
  // contributes `confidence` to its label and 1 - confidence to "other".
  for (auto& t : done) {
    for (const auto& d : t.detections) {
      t.class_posterior[d.cls] += d.confidence;
      if (d.cls != "other") t.class_posterior["other"] += 1.0 - d.confidence;
    }
    for (auto& [cls, p] : t.class_posterior) p /= static_cast<double>(t.detections.size());
  }
  std::sort(done.begin(), done.end(), [](const Track& a, const Track& b) { return a.id < b.id; });
  return done;
}

// ---------------------------------------------------------------------------
// Convex hulls and tangent lines
// ---------------------------------------------------------------------------

/// Convex hull (Andrew monotone chain), counter-clockwise in image
/// coordinates with y down (i.e. clockwise on screen).
inline std::vector<ImagePoint> convex_hull(std::vector<ImagePoint> pts) {
  if (pts.size() < 3) throw DegenerateHull();
  std::sort(pts.begin(), pts.end(), [](const ImagePoint& a, const ImagePoint& b) {
    return a.x != b.x ? a.x < b.x : a.y < b.y;
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const ImagePoint& a, const ImagePoint& b) { return a == b; }),
            pts.end());
  if (pts.size() < 3) throw DegenerateHull();
  auto cross = [](const ImagePoint& o, const ImagePoint& a, const ImagePoint& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
  };
  std::vector<ImagePoint> h(2 * pts.size());
  size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], p) <= 0) --k;
    h[k++] = p;
  }
  const size_t lower = k + 1;
  for (auto it = pts.rbegin() + 1; it != pts.rend(); ++it) {
    while (k >= lower && cross(h[k - 2], h[k - 1], *it) <= 0) --k;
    h[k++] = *it;
  }
  h.resize(k - 1);
  if (h.size() < 3) throw DegenerateHull();
  return h;
}

namespace detail {

struct Tangent {
  Line2 line;
  std::vector<ImagePoint> contacts;  // hull vertices on the line (1 or 2)

  double contact_distance(const Tangent& other) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& a : contacts)
      for (const auto& b : other.contacts) best = std::min(best, distance(a, b));
    return best;
  }
};

/// Two tangent lines from a (finite or ideal) point to a convex polygon.
/// A vertex is a contact point when the whole polygon lies on one side of the
/// line through the viewpoint and that vertex; an edge contact records both
/// endpoints.
inline std::pair<Tangent, Tangent> hull_tangents(const std::vector<ImagePoint>& hull,
                                                 const HomoPoint& vp) {
  if (hull.size() < 3) throw DegenerateHull();
  std::optional<Tangent> pos, neg;
  for (size_t i = 0; i < hull.size(); ++i) {
    Line2 l;
    try {
      l = Line2::through_homo(hull[i], vp);
    } catch (const DegenerateLine&) {
      throw TangentFailure();  // vp coincides with a hull vertex
    }
    double lo = 0.0, hi = 0.0;
    for (size_t j = 0; j < hull.size(); ++j) {
      if (j == i) continue;
      const double s = l.eval(hull[j]);
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
    const double tol = 1e-7 * (1.0 + std::abs(lo) + std::abs(hi));
    if (lo >= -tol || hi <= tol) {
      std::optional<Tangent>& slot = lo >= -tol ? pos : neg;
      if (!slot) slot = Tangent{l, {hull[i]}};
      else slot->contacts.push_back(hull[i]);
    }
  }
  if (!pos || !neg) throw TangentFailure();
  return {*pos, *neg};
}

inline ImagePoint intersect_lines(const Line2& a, const Line2& b) {
  return Line2::intersect(a, b);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// 3D bounding box from hull tangents
// ---------------------------------------------------------------------------

/// Vanishing point triple used by the box construction. The third VP is the
/// image of the plane-normal direction (finite for tilted cameras, ideal for
/// a horizontal one).
struct VpTriple {
  HomoPoint u;
  HomoPoint v;
  HomoPoint w;
};

inline VpTriple vp_triple_of(const CameraCalibration& calib) {
  VpTriple t;
  t.u = HomoPoint(calib.vp1);
  t.v = HomoPoint(calib.vp2);
  const Vec3 w_bar = calib.vp1_lifted().cross(calib.vp2_lifted());
  if (std::abs(w_bar.z()) > 1e-9 * w_bar.norm()) {
    t.w = HomoPoint{calib.f * w_bar.x() / w_bar.z(), calib.f * w_bar.y() / w_bar.z(), 1.0};
  } else {
    // Ideal nadir: orient the direction downward in the image.
    const double s = w_bar.y() >= 0.0 ? 1.0 : -1.0;
    t.w = HomoPoint{s * w_bar.x(), s * w_bar.y(), 0.0};
  }
  return t;
}

/// Builds the image-space 3D bounding box around a convex hull: two tangent
/// lines per vanishing point; the base face is bounded by the tangents that
/// separate the hull from the nadir VP, the top face by the opposite ones,
/// and the remaining corners follow from incidence with the VPs.
inline BoundingBox3D construct_3d_bbox(const std::vector<ImagePoint>& hull_in,
                                       const VpTriple& vps) {
  const std::vector<ImagePoint> hull = convex_hull(hull_in);

  const auto [tu_a, tu_b] = detail::hull_tangents(hull, vps.u);
  const auto [tv_a, tv_b] = detail::hull_tangents(hull, vps.v);
  const auto [tw_a, tw_b] = detail::hull_tangents(hull, vps.w);

  // Base tangent: its contact vertices sit on the road-facing side of the
  // silhouette, i.e. nearer the nadir VP (base corners lie below the top
  // corners along the vertical direction).
  auto downness = [&](const detail::Tangent& t) {
    double s = 0.0;
    for (const auto& c : t.contacts) {
      if (vps.w.ideal(1e-12)) {
        const double n = std::hypot(vps.w.x, vps.w.y);
        s += (c.x * vps.w.x + c.y * vps.w.y) / n;
      } else {
        s -= distance(c, vps.w.finite());
      }
    }
    return s / static_cast<double>(t.contacts.size());
  };
  auto pick_base = [&](const detail::Tangent& a, const detail::Tangent& b) {
    return downness(a) >= downness(b) ? std::make_pair(a, b) : std::make_pair(b, a);
  };
  const auto [u_base, u_top] = pick_base(tu_a, tu_b);
  const auto [v_base, v_top] = pick_base(tv_a, tv_b);

  // Pair each vertical tangent with the base tangent whose contact region it
  // shares; the cuboid's extreme vertical edges touch the base edges at the
  // silhouette corners.
  const double cost_direct =
      tw_a.contact_distance(u_base) + tw_b.contact_distance(v_base);
  const double cost_swapped =
      tw_b.contact_distance(u_base) + tw_a.contact_distance(v_base);
  const detail::Tangent& w_u = cost_direct <= cost_swapped ? tw_a : tw_b;
  const detail::Tangent& w_v = cost_direct <= cost_swapped ? tw_b : tw_a;

  // Corner from a line/tangent intersection; when the pair is (numerically)
  // parallel -- flat boxes seen along an axis -- fall back to the tangent
  // contact farthest from the anchor corner.
  auto corner = [](const Line2& line, const detail::Tangent& tangent, const ImagePoint& anchor) {
    try {
      return detail::intersect_lines(line, tangent.line);
    } catch (const ParallelLines&) {
      ImagePoint best = tangent.contacts.front();
      for (const auto& c : tangent.contacts)
        if (distance(c, anchor) > distance(best, anchor)) best = c;
      return best;
    }
  };

  BoundingBox3D box;
  // Base quadrilateral: edges 0-1 and 2-3 run toward u, 1-2 and 3-0 toward v.
  box.base[0] = detail::intersect_lines(u_base.line, v_base.line);
  box.base[1] = corner(u_base.line, w_u, box.base[0]);
  box.base[3] = corner(v_base.line, w_v, box.base[0]);
  box.base[2] = detail::intersect_lines(Line2::through_homo(box.base[1], vps.v),
                                        Line2::through_homo(box.base[3], vps.u));
  // Top quadrilateral, vertically above the base corners.
  box.top[2] = detail::intersect_lines(u_top.line, v_top.line);
  box.top[1] = corner(v_top.line, w_u, box.base[1]);
  box.top[3] = corner(u_top.line, w_v, box.base[3]);
  box.top[0] = detail::intersect_lines(Line2::through_homo(box.top[1], vps.u),
                                       Line2::through_homo(box.top[3], vps.v));
  box.base_center = detail::intersect_lines(Line2::through(box.base[0], box.base[2]),
                                            Line2::through(box.base[1], box.base[3]));
  return box;
}

inline BoundingBox3D construct_3d_bbox(const std::vector<ImagePoint>& hull,
                                       const CameraCalibration& calib) {
  return construct_3d_bbox(hull, vp_triple_of(calib));
}

/// Midpoint of the bottom-front edge. The front is the v-parallel base edge
/// whose road projection is nearest the camera; a travel-direction-aware
/// overload below serves the tracking pipeline.
inline ImagePoint reference_point(const BoundingBox3D& box, const CameraCalibration& calib) {
  const ImagePoint m_a{(box.base[3].x + box.base[0].x) / 2, (box.base[3].y + box.base[0].y) / 2};
  const ImagePoint m_b{(box.base[1].x + box.base[2].x) / 2, (box.base[1].y + box.base[2].y) / 2};
  const double da = project_to_road(m_a, calib).norm();
  const double db = project_to_road(m_b, calib).norm();
  return da <= db ? m_a : m_b;
}

/// Front edge by travel direction: the v-parallel base edge farther along
/// the vehicle's ground motion. `travel` is the image-space motion direction
/// of the vehicle (e.g. from Kalman velocity).
inline ImagePoint reference_point(const BoundingBox3D& box, const CameraCalibration& calib,
                                  const Vec2& travel) {
  const ImagePoint m_a{(box.base[3].x + box.base[0].x) / 2, (box.base[3].y + box.base[0].y) / 2};
  const ImagePoint m_b{(box.base[1].x + box.base[2].x) / 2, (box.base[1].y + box.base[2].y) / 2};
  const GroundPoint ga = project_to_road(m_a, calib);
  const GroundPoint gb = project_to_road(m_b, calib);
  // Ground travel direction from the image motion: project two points of the
  // motion ray. The front edge has the larger coordinate along it.
  const ImagePoint c = box.base_center;
  const GroundPoint g0 = project_to_road(c, calib);
  const GroundPoint g1 = project_to_road({c.x + travel.x(), c.y + travel.y()}, calib);
  const Vec3 dir = (g1 - g0).normalized();
  return ga.dot(dir) >= gb.dot(dir) ? m_a : m_b;
}

/// Builds per-detection 3D boxes and reference points for a track. Detections
/// without hulls are skipped. Requires at least two detections to orient the
/// travel direction.
inline void attach_reference_points(Track& track, const CameraCalibration& calib) {
  track.boxes3d.clear();
  track.reference_points.clear();
  if (track.detections.size() < 2) return;
  const Vec2 motion = track.detections.back().bbox.center() -
                      track.detections.front().bbox.center();
  const VpTriple vps = vp_triple_of(calib);
  for (const auto& d : track.detections) {
    if (d.hull.size() < 3) continue;
    try {
      const BoundingBox3D box = construct_3d_bbox(d.hull, vps);
      const ImagePoint rp = reference_point(box, calib, motion);
      track.boxes3d.push_back(box);
      track.reference_points.emplace_back(d.t, rp);
    } catch (const Error&) {
      // Degenerate hull or tangent failure for this frame; skip it.
    }
  }
}

// ---------------------------------------------------------------------------
// Track / ground truth matching (counting metric)
// ---------------------------------------------------------------------------

/// Ground-truth vehicle pass: lane index and the time it crosses the
/// measurement line.
struct GroundTruthPass {
  int vehicle_id = 0;
  int lane = 0;
  double t_cross = 0.0;
  double speed_kmh = 0.0;
};

/// Lane geometry in image space: the measurement line plus the lane boundary
/// lines ordered so that lane i lies between boundaries i and i+1.
struct LaneGeometry {
  Line2 measurement_line;
  std::vector<Line2> lane_boundaries;

  int lane_of(const ImagePoint& p) const {
    if (lane_boundaries.size() < 2) return 0;
    int lane = -1;
    for (size_t i = 0; i + 1 < lane_boundaries.size(); ++i) {
      const double s0 = lane_boundaries[i].eval(p);
      const double s1 = lane_boundaries[i + 1].eval(p);
      if (s0 * s1 <= 0.0) {
        lane = static_cast<int>(i);
        break;
      }
    }
    return lane;
  }
};

/// Time and lane at which a track's reference points cross the measurement
/// line, by linear interpolation between the two straddling samples.
inline std::optional<std::pair<double, int>> track_crossing(const Track& track,
                                                            const LaneGeometry& geom) {
  const auto& rps = track.reference_points;
  for (size_t i = 0; i + 1 < rps.size(); ++i) {
    const double s0 = geom.measurement_line.eval(rps[i].second);
    const double s1 = geom.measurement_line.eval(rps[i + 1].second);
    if (s0 == 0.0) {
      return std::make_pair(rps[i].first, geom.lane_of(rps[i].second));
    }
    if (s0 * s1 < 0.0) {
      const double a = s0 / (s0 - s1);
      const double t = rps[i].first + a * (rps[i + 1].first - rps[i].first);
      const ImagePoint p{rps[i].second.x + a * (rps[i + 1].second.x - rps[i].second.x),
                         rps[i].second.y + a * (rps[i + 1].second.y - rps[i].second.y)};
      return std::make_pair(t, geom.lane_of(p));
    }
  }
  return std::nullopt;
}

struct CountingResult {
  struct Match {
    int track_id;
    int gt_vehicle_id;
    double dt;
  };
  std::vector<Match> matches;
  double fppm = 0.0;
  double recall = 0.0;
  size_t false_positives = 0;
};

/// Matches tracks to ground-truth passes: same lane and crossing-time
/// difference below 0.2 s. Unmatched tracks are false positives, reported
/// per minute of scene duration.
inline CountingResult match_tracks_to_ground_truth(const std::vector<Track>& tracks,
                                                   const std::vector<GroundTruthPass>& gt,
                                                   const LaneGeometry& geom,
                                                   double scene_duration_s,
                                                   double max_dt_s = 0.2) {
  CountingResult result;
  std::vector<bool> gt_used(gt.size(), false);
  size_t matched_tracks = 0;
  for (const auto& track : tracks) {
    const auto crossing = track_crossing(track, geom);
    bool matched = false;
    if (crossing) {
      // Best unused GT pass in the same lane.
      double best_dt = max_dt_s;
      size_t best = gt.size();
      for (size_t i = 0; i < gt.size(); ++i) {
        if (gt_used[i] || gt[i].lane != crossing->second) continue;
        const double dt = std::abs(gt[i].t_cross - crossing->first);
        if (dt < best_dt) {
          best_dt = dt;
          best = i;
        }
      }
      if (best < gt.size()) {
        gt_used[best] = true;
        result.matches.push_back({track.id, gt[best].vehicle_id, best_dt});
        matched = true;
      }
    }
    if (matched)
      ++matched_tracks;
    else
      ++result.false_positives;
  }
  (void)matched_tracks;
  result.fppm = scene_duration_s > 0.0
                    ? static_cast<double>(result.false_positives) / (scene_duration_s / 60.0)
                    : 0.0;
  result.recall = gt.empty() ? 1.0
                             : static_cast<double>(result.matches.size()) /
                                   static_cast<double>(gt.size());
  return result;
}

}  // namespace autocalib
