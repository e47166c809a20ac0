#pragma once

#include <cmath>
#include <optional>

#include "autocalib/errors.hpp"
#include "autocalib/types.hpp"

namespace autocalib {

/// Road plane n^T P + delta = 0 with unit normal and delta fixed to 1.
/// The constant term pins the otherwise unrecoverable distance to the plane,
/// so points on it carry pseudo-units until the scene scale is known.
struct RoadPlane {
  Vec3 n = Vec3::Zero();
  double delta = 1.0;
};

/// Point on the road plane, in pseudo-units (camera-frame coordinates before
/// scaling by lambda).
using GroundPoint = Vec3;

/// Full recoverable camera state: two vanishing points, focal length, road
/// plane, and (once inferred) the scene scale in meters per pseudo-unit.
/// The principal point is the image center; all image coordinates here are
/// centered.
struct CameraCalibration {
  ImagePoint vp1;       // direction of traffic flow (u)
  ImagePoint vp2;       // perpendicular in-plane direction (v)
  double f = 0.0;       // focal length, pixels
  RoadPlane plane;
  std::optional<double> scale;  // lambda, meters per pseudo-unit
  ImageSize image_size;

  Vec3 vp1_lifted() const { return vp1.lift(f); }
  Vec3 vp2_lifted() const { return vp2.lift(f); }
};

/// Focal length from two vanishing points: f = sqrt(-(u_x v_x + u_y v_y)).
/// Only the x,y components enter the dot product; the homogeneous 1*1 term
/// is excluded.
inline double focal_from_vps(const ImagePoint& u, const ImagePoint& v) {
  const double radicand = -(u.x * v.x + u.y * v.y);
  if (!(radicand > 0.0)) throw NonPositiveRadicand();
  return std::sqrt(radicand);
}

namespace detail {

/// Sign convention for the plane normal: projecting the bottom image-center
/// pixel must land in front of the camera, i.e. lift(bottom_center) . n < 0.
/// Falls back to n_z < 0 (then n_y < 0) when that pixel sits on the horizon.
inline Vec3 orient_plane_normal(Vec3 n, double f, const ImageSize& size) {
  const Vec3 bottom_center{0.0, size.height / 2.0, f};
  const double d = bottom_center.dot(n);
  if (d < 0.0) return n;
  if (d > 0.0) return -n;
  if (n.z() != 0.0) return n.z() < 0.0 ? n : -n;
  return n.y() < 0.0 ? n : -n;
}

}  // namespace detail

/// Builds the scale-free calibration from two finite vanishing points:
/// focal length, third VP direction w = u x v (lifted), road plane normal.
inline CameraCalibration calibration_from_vps(const ImagePoint& u, const ImagePoint& v,
                                              const ImageSize& size) {
  if (distance(u, v) < 1e-6) throw DegenerateVPs();
  CameraCalibration calib;
  calib.vp1 = u;
  calib.vp2 = v;
  calib.f = focal_from_vps(u, v);
  calib.image_size = size;
  const Vec3 w = u.lift(calib.f).cross(v.lift(calib.f));
  const double wn = w.norm();
  if (wn < 1e-12) throw DegenerateVPs();
  calib.plane.n = detail::orient_plane_normal(w / wn, calib.f, size);
  calib.plane.delta = 1.0;
  return calib;
}

/// Projects an image point onto the road plane:
/// P = -delta / ([p_bar^T, 0] . rho) * p_bar. Throws HorizonPoint when the
/// ray is (numerically) parallel to the plane or meets it behind the camera.
inline GroundPoint project_to_road(const ImagePoint& p, const CameraCalibration& calib) {
  const Vec3 lifted = p.lift(calib.f);
  const double denom = lifted.dot(calib.plane.n);
  const double eps = 1e-9 * lifted.norm();
  if (!(denom < -eps)) throw HorizonPoint();
  return (-calib.plane.delta / denom) * lifted;
}

/// Metric distance between the road projections of two image points.
inline double ground_distance(const ImagePoint& p1, const ImagePoint& p2,
                              const CameraCalibration& calib) {
  if (!calib.scale) throw MissingScale();
  const GroundPoint a = project_to_road(p1, calib);
  const GroundPoint b = project_to_road(p2, calib);
  return *calib.scale * (a - b).norm();
}

/// Camera rotation with columns (u-direction, v-direction, plane normal
/// direction). The noisy lifted VPs are re-orthogonalized: column 1 is
/// normalized u_bar, column 2 is v_bar made orthogonal to it, column 3 is
/// their cross product, which fixes det(R) = +1 and R^T R = I exactly.
inline Mat3 rotation_from_vps(const CameraCalibration& calib) {
  Vec3 c1 = calib.vp1_lifted();
  const double n1 = c1.norm();
  if (n1 < 1e-12) throw DegenerateVPs();
  c1 /= n1;
  Vec3 c2 = calib.vp2_lifted();
  c2 -= c2.dot(c1) * c1;
  const double n2 = c2.norm();
  if (n2 < 1e-12) throw DegenerateVPs();
  c2 /= n2;
  Mat3 r;
  r.col(0) = c1;
  r.col(1) = c2;
  r.col(2) = c1.cross(c2);
  return r;
}

/// Unit viewpoint vector phi = -R^T b_bar: direction from the vehicle whose
/// base center projects to b, toward the camera, in vehicle-aligned axes.
inline Vec3 viewpoint_vector(const ImagePoint& b, const CameraCalibration& calib) {
  const Mat3 r = rotation_from_vps(calib);
  Vec3 phi = -(r.transpose() * b.lift(calib.f));
  const double n = phi.norm();
  if (n < 1e-12) throw DegenerateVPs();
  return phi / n;
}

/// Horizon line through the two vanishing points.
inline Line2 horizon_line(const CameraCalibration& calib) {
  return Line2::through(calib.vp1, calib.vp2);
}

}  // namespace autocalib
