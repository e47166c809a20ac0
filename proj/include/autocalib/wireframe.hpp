#pragma once

#include <string>
#include <utility>
#include <vector>

#include "autocalib/errors.hpp"
#include "autocalib/types.hpp"

namespace autocalib {

/// 3D vehicle wireframe in a canonical frame: x along the vehicle axis
/// (rear -> front), y lateral (left), z up, base plane at z = 0. The front
/// and rear anchors sit on the base; the physical length is the distance
/// between them.
struct WireframeModel {
  std::string id;
  double length_m = 0.0;
  std::vector<Vec3> vertices;
  std::vector<std::pair<int, int>> edges;
  int anchor_front = -1;
  int anchor_rear = -1;

  void validate() const {
    if (!(length_m > 0.0)) throw SchemaError("wireframe length must be positive");
    const int n = static_cast<int>(vertices.size());
    if (anchor_front < 0 || anchor_front >= n || anchor_rear < 0 || anchor_rear >= n)
      throw SchemaError("wireframe anchors out of range");
    for (const auto& [a, b] : edges)
      if (a < 0 || a >= n || b < 0 || b >= n) throw SchemaError("wireframe edge out of range");
    if (std::abs(vertices[anchor_front].z()) > 1e-6 || std::abs(vertices[anchor_rear].z()) > 1e-6)
      throw SchemaError("wireframe anchors must lie on the base plane");
    const double d = (vertices[anchor_front] - vertices[anchor_rear]).norm();
    if (std::abs(d - length_m) > 1e-6) throw SchemaError("anchor distance must equal length_m");
  }

  /// Returns a copy with all geometry (and the physical length) scaled.
  WireframeModel scaled(double factor) const {
    WireframeModel m = *this;
    m.length_m *= factor;
    for (auto& v : m.vertices) v *= factor;
    return m;
  }
};

namespace detail {

/// Box-with-cabin wireframe. The full-length body box sits on the base; the
/// cabin box is inset on top. A few lateral feature lines (bumpers, grille,
/// beltline) enrich the perpendicular edge statistics.
inline WireframeModel make_box_cab(const std::string& id, double length, double width,
                                   double body_height, double roof_height, double cab_front,
                                   double cab_rear) {
  WireframeModel m;
  m.id = id;
  m.length_m = length;
  const double hl = length / 2.0;
  const double hw = width / 2.0;
  auto add = [&](double x, double y, double z) {
    m.vertices.emplace_back(x, y, z);
    return static_cast<int>(m.vertices.size()) - 1;
  };
  auto edge = [&](int a, int b) { m.edges.emplace_back(a, b); };

  // Body box (base at z = 0).
  const int b0 = add(-hl, -hw, 0), b1 = add(hl, -hw, 0), b2 = add(hl, hw, 0), b3 = add(-hl, hw, 0);
  const int t0 = add(-hl, -hw, body_height), t1 = add(hl, -hw, body_height),
            t2 = add(hl, hw, body_height), t3 = add(-hl, hw, body_height);
  edge(b0, b1); edge(b1, b2); edge(b2, b3); edge(b3, b0);
  edge(t0, t1); edge(t1, t2); edge(t2, t3); edge(t3, t0);
  edge(b0, t0); edge(b1, t1); edge(b2, t2); edge(b3, t3);

  // Cabin box on top of the body.
  const double cw = hw * 0.92;
  const int c0 = add(cab_rear, -cw, body_height), c1 = add(cab_front, -cw, body_height),
            c2 = add(cab_front, cw, body_height), c3 = add(cab_rear, cw, body_height);
  const int r0 = add(cab_rear + 0.18, -cw * 0.96, roof_height),
            r1 = add(cab_front - 0.25, -cw * 0.96, roof_height),
            r2 = add(cab_front - 0.25, cw * 0.96, roof_height),
            r3 = add(cab_rear + 0.18, cw * 0.96, roof_height);
  edge(c0, c1); edge(c1, c2); edge(c2, c3); edge(c3, c0);
  edge(r0, r1); edge(r1, r2); edge(r2, r3); edge(r3, r0);
  edge(c0, r0); edge(c1, r1); edge(c2, r2); edge(c3, r3);

  // Lateral feature lines: front/rear bumpers and mid-height grille bar.
  const int f0 = add(hl, -hw, body_height * 0.35), f1 = add(hl, hw, body_height * 0.35);
  const int g0 = add(hl, -hw * 0.8, body_height * 0.7), g1 = add(hl, hw * 0.8, body_height * 0.7);
  const int q0 = add(-hl, -hw, body_height * 0.45), q1 = add(-hl, hw, body_height * 0.45);
  edge(f0, f1); edge(g0, g1); edge(q0, q1);

  // Base anchors at the axis ends.
  m.anchor_rear = add(-hl, 0, 0);
  m.anchor_front = add(hl, 0, 0);
  edge(b0, m.anchor_rear); edge(m.anchor_rear, b3);
  edge(b1, m.anchor_front); edge(m.anchor_front, b2);

  m.validate();
  return m;
}

}  // namespace detail

/// Station-wagon style body: long roof, cabin reaching almost to the tail.
inline WireframeModel make_combi_model() {
  return detail::make_box_cab("combi", 4.52, 1.77, 0.95, 1.48, 1.05, -2.05);
}

/// Sedan body: shorter cabin, pronounced trunk.
inline WireframeModel make_sedan_model() {
  return detail::make_box_cab("sedan", 4.51, 1.73, 0.93, 1.43, 0.95, -1.25);
}

inline std::vector<WireframeModel> builtin_models() {
  return {make_combi_model(), make_sedan_model()};
}

}  // namespace autocalib
