#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <vector>

#include "autocalib/errors.hpp"
#include "autocalib/types.hpp"

namespace autocalib {

/// One voted line: a*x + b*y + c = 0 in centered image coordinates with
/// a^2 + b^2 = 1, plus a non-negative vote strength.
struct LineObservation {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double weight = 1.0;

  LineObservation(double a_, double b_, double c_, double weight_)
      : a(a_), b(b_), c(c_), weight(weight_) {
    const double n = std::hypot(a, b);
    if (!(n > 1e-300)) throw DegenerateLine();
    a /= n;
    b /= n;
    c /= n;
    if (weight < 0.0) throw Error("negative line weight");
  }

  static LineObservation through(const ImagePoint& p, const ImagePoint& q, double weight) {
    const Line2 l = Line2::through(p, q);
    return {l.a, l.b, l.c, weight};
  }
  static LineObservation from_point_dir(const ImagePoint& p, const Vec2& dir, double weight) {
    const Line2 l = Line2::from_point_dir(p, dir);
    return {l.a, l.b, l.c, weight};
  }
};

/// Bounded accumulator over the whole projective plane of the image.
///
/// Parameterization: an image point, normalized by the half-extent S, maps as
///   finite (x, y)      ->  (x, y) / (|x| + |y| + 1)
///   ideal  (dx, dy, 0) ->  (dx, dy) / (|dx| + |dy|)
/// which is a bijection onto the closed L1 ball |X| + |Y| <= 1 (opposite
/// boundary points identified). Inside each sign quadrant the map is a
/// homography, so an image line maps to a polyline of at most 3 straight
/// segments whose endpoints are the line's two (antipodal) ideal points.
/// Votes are rasterized with anti-aliased line drawing, the weight split
/// between the two nearest cells per step.
///
/// Cells store integer votes: each contribution is fraction * weight with the
/// fraction quantized to 2^-20 and the weight to 2^-12, so accumulation is
/// exactly additive, order-independent, and mergeable.
class DiamondSpace {
 public:
  static constexpr int64_t kFracOne = 1 << 20;
  static constexpr int64_t kWeightOne = 1 << 12;

  struct Maximum {
    HomoPoint point;        // back-projected image-space position
    double score = 0.0;     // votes at the peak cell, in weight units
    double median_cell = 0.0;  // median of positive cells, in weight units
    int row = 0;
    int col = 0;
  };

  using CellMask = std::function<bool(const HomoPoint&)>;

  DiamondSpace(int resolution, double image_half_extent)
      : d_(resolution), norm_(image_half_extent), grid_(static_cast<size_t>(d_) * d_, 0) {
    if (d_ < 3 || d_ % 2 == 0) throw Error("diamond resolution must be odd and >= 3");
    if (!(norm_ > 0.0)) throw Error("image half extent must be positive");
  }

  int resolution() const { return d_; }
  double image_half_extent() const { return norm_; }
  int64_t raw_cell(int row, int col) const { return grid_[idx(row, col)]; }
  double cell(int row, int col) const {
    return static_cast<double>(grid_[idx(row, col)]) / (kFracOne * static_cast<double>(kWeightOne));
  }
  size_t lines_accumulated() const { return lines_; }

  /// Maps a homogeneous image point to diamond coordinates in [-1,1]^2.
  Vec2 to_diamond(const HomoPoint& p) const {
    const double x = p.x / norm_;
    const double y = p.y / norm_;
    const double s = std::abs(x) + std::abs(y) + std::abs(p.w);
    if (!(s > 0.0)) throw Error("cannot map zero homogeneous point");
    return {x / s, y / s};
  }

  /// Inverse of to_diamond. Boundary points come back as ideal directions.
  HomoPoint from_diamond(const Vec2& dpt) const {
    const double r = 1.0 - std::abs(dpt.x()) - std::abs(dpt.y());
    if (r <= 1e-12) {
      return {dpt.x(), dpt.y(), 0.0};
    }
    return {dpt.x() / r * norm_, dpt.y() / r * norm_, 1.0};
  }

  /// Adds the line's polyline to the grid; additive and order-independent.
  void accumulate(const LineObservation& line) {
    const int64_t weight_q = static_cast<int64_t>(std::llround(line.weight * kWeightOne));
    ++lines_;
    if (weight_q <= 0) return;

    // Line in normalized coordinates: A*x + B*y + C = 0 with x, y in units
    // of the half extent.
    const double A = line.a * norm_;
    const double B = line.b * norm_;
    const double C = line.c;

    // Polyline vertices: ideal endpoint, axis crossings ordered along the
    // line, antipodal ideal endpoint. Crossings of x=0 and y=0 are the only
    // places the quadrant (and hence the homography) changes.
    const Vec2 dir{B, -A};  // direction of travel along the line
    struct Crossing {
      double s;
      Vec2 p;
    };
    std::vector<Crossing> crossings;
    crossings.reserve(2);
    const double d2 = dir.squaredNorm();
    auto param_of = [&](const Vec2& p) { return p.dot(dir) / d2; };
    if (std::abs(B) > 1e-300) {
      const Vec2 p{0.0, -C / B};  // x = 0 crossing
      crossings.push_back({param_of(p), p});
    }
    if (std::abs(A) > 1e-300) {
      const Vec2 p{-C / A, 0.0};  // y = 0 crossing
      crossings.push_back({param_of(p), p});
    }
    if (crossings.size() == 2 && crossings[0].s > crossings[1].s)
      std::swap(crossings[0], crossings[1]);

    std::vector<Vec2> verts;
    verts.reserve(4);
    verts.push_back(diamond_of_ideal(-dir));
    for (const auto& cr : crossings) verts.push_back(diamond_of_norm(cr.p));
    verts.push_back(diamond_of_ideal(dir));

    for (size_t i = 0; i + 1 < verts.size(); ++i) {
      if ((verts[i + 1] - verts[i]).norm() < 1e-15) continue;
      rasterize_segment(verts[i], verts[i + 1], weight_q, i + 2 == verts.size());
    }
  }

  /// Cell-wise sum of another accumulator built with identical parameters.
  void merge(const DiamondSpace& other) {
    if (other.d_ != d_ || other.norm_ != norm_) throw Error("diamond space mismatch");
    for (size_t i = 0; i < grid_.size(); ++i) grid_[i] += other.grid_[i];
    lines_ += other.lines_;
  }

  /// Global maximum with sub-cell center-of-mass refinement over the 3x3
  /// neighborhood. The optional mask filters candidate cells by their
  /// back-projected position; ties break toward the smallest row-major index.
  Maximum find_maximum(const CellMask& mask = nullptr) const {
    if (lines_ == 0) throw EmptyAccumulator();
    int64_t best = 0;
    int best_row = -1, best_col = -1;
    bool any_feasible = false;
    for (int row = 0; row < d_; ++row) {
      for (int col = 0; col < d_; ++col) {
        if (!inside_diamond(row, col)) continue;
        if (mask && !mask(cell_point(row, col))) continue;
        any_feasible = true;
        const int64_t v = grid_[idx(row, col)];
        if (v > best) {
          best = v;
          best_row = row;
          best_col = col;
        }
      }
    }
    if (best_row < 0) {
      // Either the mask rejected everything or no feasible cell has votes;
      // both mean the constraints are inconsistent with the data.
      (void)any_feasible;
      throw AllMasked();
    }

    // Center of mass over the 3x3 neighborhood, in cell coordinates.
    double mx = 0.0, my = 0.0, mass = 0.0;
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        const int r = best_row + dr, ccol = best_col + dc;
        if (r < 0 || r >= d_ || ccol < 0 || ccol >= d_) continue;
        const double v = static_cast<double>(grid_[idx(r, ccol)]);
        mx += v * ccol;
        my += v * r;
        mass += v;
      }
    }
    Vec2 dpt = mass > 0.0 ? cell_to_diamond({mx / mass, my / mass})
                          : cell_to_diamond({static_cast<double>(best_col), static_cast<double>(best_row)});
    // The refined point may leave the diamond by a hair near the boundary.
    const double l1 = std::abs(dpt.x()) + std::abs(dpt.y());
    if (l1 > 1.0) dpt /= l1;

    Maximum m;
    // Peaks within 2.5 cells of the boundary are beyond the finite resolving
    // range (back-projection > ~80x the half extent at default resolution);
    // report them as ideal directions instead of enormous finite points.
    const double step = 2.0 / (d_ - 1);
    const Vec2 peak_center =
        cell_to_diamond({static_cast<double>(best_col), static_cast<double>(best_row)});
    const double r_center = 1.0 - std::abs(peak_center.x()) - std::abs(peak_center.y());
    if (r_center < 2.5 * step) {
      const double dl1 = std::abs(dpt.x()) + std::abs(dpt.y());
      m.point = HomoPoint{dpt.x() / dl1, dpt.y() / dl1, 0.0};
    } else {
      m.point = from_diamond(dpt);
    }
    m.score = static_cast<double>(best) / (kFracOne * static_cast<double>(kWeightOne));
    m.row = best_row;
    m.col = best_col;
    m.median_cell = median_positive_cell(mask);
    return m;
  }

  /// Back-projected image position of a cell center.
  HomoPoint cell_point(int row, int col) const {
    return from_diamond(cell_to_diamond({static_cast<double>(col), static_cast<double>(row)}));
  }

  Vec2 cell_to_diamond(const Vec2& cell) const {
    const double step = 2.0 / (d_ - 1);
    return {cell.x() * step - 1.0, cell.y() * step - 1.0};
  }
  Vec2 diamond_to_cell(const Vec2& dpt) const {
    const double step = 2.0 / (d_ - 1);
    return {(dpt.x() + 1.0) / step, (dpt.y() + 1.0) / step};
  }

  /// Approximate image-pixel extent of one cell back-projected at dpt;
  /// infinite for boundary cells. The Jacobian of the inverse map scales
  /// like S / r^2 with r the L1 distance to the boundary.
  double cell_extent_px(const Vec2& dpt) const {
    const double r = 1.0 - std::abs(dpt.x()) - std::abs(dpt.y());
    if (r <= 1e-9) return std::numeric_limits<double>::infinity();
    const double step = 2.0 / (d_ - 1);
    return step * norm_ / (r * r);
  }

  /// 16-bit PGM dump of the grid for inspection.
  void dump_pgm(std::ostream& os) const;

 private:
  size_t idx(int row, int col) const { return static_cast<size_t>(row) * d_ + col; }

  bool inside_diamond(int row, int col) const {
    const Vec2 dpt = cell_to_diamond({static_cast<double>(col), static_cast<double>(row)});
    return std::abs(dpt.x()) + std::abs(dpt.y()) <= 1.0 + 1e-12;
  }

  Vec2 diamond_of_norm(const Vec2& p) const {
    const double s = std::abs(p.x()) + std::abs(p.y()) + 1.0;
    return {p.x() / s, p.y() / s};
  }
  static Vec2 diamond_of_ideal(const Vec2& dir) {
    const double s = std::abs(dir.x()) + std::abs(dir.y());
    return {dir.x() / s, dir.y() / s};
  }

  /// Wu-style anti-aliased rasterization of one diamond-space segment.
  /// Steps along the major axis; each step deposits the full quantized weight
  /// split between the two nearest cells on the minor axis. Segments are
  /// half-open at the far (d1) end except the final one of a polyline, so
  /// joint cells are not double counted.
  void rasterize_segment(const Vec2& d0, const Vec2& d1, int64_t weight_q, bool include_end) {
    Vec2 c0 = diamond_to_cell(d0);
    Vec2 c1 = diamond_to_cell(d1);
    const bool x_major = std::abs(c1.x() - c0.x()) >= std::abs(c1.y() - c0.y());
    if (!x_major) {
      std::swap(c0.x(), c0.y());
      std::swap(c1.x(), c1.y());
    }
    bool reversed = false;
    if (c0.x() > c1.x()) {
      std::swap(c0, c1);
      reversed = true;
    }
    const double dx = c1.x() - c0.x();
    const double slope = dx > 1e-15 ? (c1.y() - c0.y()) / dx : 0.0;
    int first = static_cast<int>(std::ceil(c0.x() - 0.5));  // nearest cell index >= start
    int last = static_cast<int>(std::floor(c1.x() + 0.5));  // nearest cell index <= end
    if (first < 0) first = 0;
    const int limit = d_ - 1;
    if (last > limit) last = limit;
    if (!include_end && last > first) {
      if (reversed)
        ++first;
      else
        --last;
    }
    for (int i = first; i <= last; ++i) {
      const double y = c0.y() + slope * (i - c0.x());
      const int y0 = static_cast<int>(std::floor(y));
      const double frac = y - y0;
      const int64_t f_hi = std::llround(frac * kFracOne);
      const int64_t f_lo = kFracOne - f_hi;
      deposit(x_major ? y0 : i, x_major ? i : y0, f_lo * weight_q);
      deposit(x_major ? y0 + 1 : i, x_major ? i : y0 + 1, f_hi * weight_q);
    }
  }

  void deposit(int row, int col, int64_t amount) {
    if (amount == 0 || row < 0 || row >= d_ || col < 0 || col >= d_) return;
    grid_[idx(row, col)] += amount;
  }

  /// Median of the positive cells inside the searched (masked) region; the
  /// reference level for the peak's spuriousness diagnostic.
  double median_positive_cell(const CellMask& mask) const {
    std::vector<int64_t> positive;
    positive.reserve(1024);
    for (int row = 0; row < d_; ++row) {
      for (int col = 0; col < d_; ++col) {
        const int64_t v = grid_[idx(row, col)];
        if (v <= 0 || !inside_diamond(row, col)) continue;
        if (mask && !mask(cell_point(row, col))) continue;
        positive.push_back(v);
      }
    }
    if (positive.empty()) return 0.0;
    const size_t k = (positive.size() - 1) / 2;
    std::nth_element(positive.begin(), positive.begin() + static_cast<std::ptrdiff_t>(k),
                     positive.end());
    return static_cast<double>(positive[k]) / (kFracOne * static_cast<double>(kWeightOne));
  }

  int d_;
  double norm_;
  std::vector<int64_t> grid_;
  size_t lines_ = 0;
};

inline void DiamondSpace::dump_pgm(std::ostream& os) const {
  int64_t peak = 0;
  for (int64_t v : grid_) peak = std::max(peak, v);
  os << "P5\n" << d_ << " " << d_ << "\n65535\n";
  for (int64_t v : grid_) {
    const uint16_t g = peak > 0 ? static_cast<uint16_t>((v * 65535) / peak) : 0;
    const unsigned char bytes[2] = {static_cast<unsigned char>(g >> 8),
                                    static_cast<unsigned char>(g & 0xff)};
    os.write(reinterpret_cast<const char*>(bytes), 2);
  }
}

}  // namespace autocalib
