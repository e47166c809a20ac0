#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "autocalib/errors.hpp"

namespace autocalib {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// 2D image point in centered coordinates: the origin is the principal point
/// (image center), x grows right, y grows down. All pipeline-internal image
/// coordinates use this frame; the shift from top-left pixel coordinates is
/// applied exactly once when a file is ingested.
struct ImagePoint {
  double x = 0.0;
  double y = 0.0;

  ImagePoint() = default;
  ImagePoint(double x_, double y_) : x(x_), y(y_) {}
  explicit ImagePoint(const Vec2& v) : x(v.x()), y(v.y()) {}

  Vec2 vec() const { return {x, y}; }
  /// Lift to the image plane in 3D: [x, y, f].
  Vec3 lift(double f) const { return {x, y, f}; }

  friend ImagePoint operator+(const ImagePoint& a, const ImagePoint& b) {
    return {a.x + b.x, a.y + b.y};
  }
  friend ImagePoint operator-(const ImagePoint& a, const ImagePoint& b) {
    return {a.x - b.x, a.y - b.y};
  }
  friend bool operator==(const ImagePoint& a, const ImagePoint& b) {
    return a.x == b.x && a.y == b.y;
  }
};

inline double distance(const ImagePoint& a, const ImagePoint& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

/// Homogeneous 2D point. w == 0 encodes an ideal point (direction at
/// infinity); otherwise the finite point is (x/w, y/w).
struct HomoPoint {
  double x = 0.0;
  double y = 0.0;
  double w = 1.0;

  HomoPoint() = default;
  HomoPoint(double x_, double y_, double w_) : x(x_), y(y_), w(w_) {}
  explicit HomoPoint(const ImagePoint& p) : x(p.x), y(p.y), w(1.0) {}

  bool ideal(double eps = 0.0) const { return std::abs(w) <= eps; }
  ImagePoint finite() const { return {x / w, y / w}; }
  Vec3 vec() const { return {x, y, w}; }
};

/// Image size in pixels. Centered coordinates are top-left minus half_extent.
struct ImageSize {
  int width = 0;
  int height = 0;

  Vec2 half() const { return {width / 2.0, height / 2.0}; }
  ImagePoint to_centered(double x_tl, double y_tl) const {
    return {x_tl - width / 2.0, y_tl - height / 2.0};
  }
  Vec2 to_top_left(const ImagePoint& p) const {
    return {p.x + width / 2.0, p.y + height / 2.0};
  }
  friend bool operator==(const ImageSize& a, const ImageSize& b) {
    return a.width == b.width && a.height == b.height;
  }
};

/// Axis-aligned rectangle; (x, y) is the min corner. Coordinates follow
/// whatever frame the caller uses (centered internally, top-left in files).
struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double x2() const { return x + w; }
  double y2() const { return y + h; }
  double area() const { return w * h; }
  Vec2 center() const { return {x + w / 2.0, y + h / 2.0}; }
  bool contains(const ImagePoint& p, double slack = 0.0) const {
    return p.x >= x - slack && p.x <= x2() + slack && p.y >= y - slack &&
           p.y <= y2() + slack;
  }

  static BBox hull_of(const std::vector<ImagePoint>& pts) {
    BBox b;
    if (pts.empty()) return b;
    double x0 = pts[0].x, x1 = pts[0].x, y0 = pts[0].y, y1 = pts[0].y;
    for (const auto& p : pts) {
      x0 = std::min(x0, p.x);
      x1 = std::max(x1, p.x);
      y0 = std::min(y0, p.y);
      y1 = std::max(y1, p.y);
    }
    return {x0, y0, x1 - x0, y1 - y0};
  }
};

/// Intersection over union of two axis-aligned boxes.
inline double iou(const BBox& a, const BBox& b) {
  const double ix = std::max(0.0, std::min(a.x2(), b.x2()) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y2(), b.y2()) - std::max(a.y, b.y));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

/// Line a*x + b*y + c = 0 with a^2 + b^2 = 1, in centered image coordinates.
struct Line2 {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;

  static Line2 through(const ImagePoint& p, const ImagePoint& q) {
    return from_point_dir(p, {q.x - p.x, q.y - p.y});
  }
  static Line2 from_point_dir(const ImagePoint& p, const Vec2& dir) {
    const double n = dir.norm();
    if (n <= 0.0) throw DegenerateLine();
    const double a = -dir.y() / n;
    const double b = dir.x() / n;
    return {a, b, -(a * p.x + b * p.y)};
  }
  /// Line through a finite point and a homogeneous point (finite or ideal).
  static Line2 through_homo(const ImagePoint& p, const HomoPoint& q) {
    if (q.ideal(1e-300)) return from_point_dir(p, {q.x, q.y});
    return through(p, q.finite());
  }

  double eval(const ImagePoint& p) const { return a * p.x + b * p.y + c; }
  /// Signed evaluation of a homogeneous point: a*x + b*y + c*w.
  double eval(const HomoPoint& p) const { return a * p.x + b * p.y + c * p.w; }
  Vec2 direction() const { return {b, -a}; }

  static ImagePoint intersect(const Line2& l1, const Line2& l2) {
    const double det = l1.a * l2.b - l2.a * l1.b;
    if (std::abs(det) < 1e-300) throw ParallelLines();
    return {(l1.b * l2.c - l2.b * l1.c) / det, (l2.a * l1.c - l1.a * l2.c) / det};
  }
};

/// Median using the deterministic lower-middle convention for even counts.
inline double median_lower(std::vector<double> v) {
  if (v.empty()) throw Error("median of empty set");
  const size_t k = (v.size() - 1) / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
  return v[k];
}

/// Nearest-rank percentile: the ceil(q*n)-th smallest element (1-indexed).
inline double percentile_nearest_rank(std::vector<double> v, double q) {
  if (v.empty()) throw Error("percentile of empty set");
  size_t rank = static_cast<size_t>(std::ceil(q * static_cast<double>(v.size())));
  rank = std::clamp<size_t>(rank, 1, v.size());
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(rank - 1), v.end());
  return v[rank - 1];
}

inline double mean(const std::vector<double>& v) {
  if (v.empty()) throw Error("mean of empty set");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline constexpr double kPi = 3.14159265358979323846;
inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

}  // namespace autocalib
