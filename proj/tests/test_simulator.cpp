#include <doctest.h>

#include "autocalib/simulator.hpp"
#include "test_support.hpp"

using namespace autocalib;

namespace {

sim::SceneConfig small_scene() {
  sim::SceneConfig cfg;
  cfg.camera = {1500.0, 22.0, 12.0, 0.0, 10.0, 0.0, 1280, 720};
  cfg.lane_count = 2;
  cfg.duration_s = 6.0;
  cfg.fps = 12.5;
  cfg.vehicles = {
      {"combi", 0.0, 90.0, 0, 0.0, 12.0},
      {"sedan", 0.0, 70.0, 1, 0.8, 12.0},
  };
  return cfg;
}

}  // namespace

TEST_CASE("scene truth is internally consistent") {
  const auto data = sim::generate(small_scene(), 7);
  const auto& calib = data.truth.calibration;
  REQUIRE(calib.scale.has_value());

  SUBCASE("markings re-measure to their stated lengths (1e-9)") {
    for (const auto& s : data.truth.markings.d1) {
      CHECK(ground_distance(s.p1, s.p2, calib) == doctest::Approx(s.meters).epsilon(1e-9));
    }
    for (const auto& s : data.truth.markings.d2) {
      CHECK(ground_distance(s.p1, s.p2, calib) == doctest::Approx(s.meters).epsilon(1e-9));
    }
  }
  SUBCASE("gt vp1 is the intersection of projected lane lines") {
    const auto& lines = data.truth.markings.lane_lines;
    REQUIRE(lines.size() >= 2);
    for (const auto& [a, b] : lines) {
      const Line2 l = Line2::through(a, b);
      CHECK(std::abs(l.eval(calib.vp1)) < 1e-6);
    }
  }
  SUBCASE("the scene scale equals the camera height") {
    CHECK(*calib.scale == doctest::Approx(10.0));
  }
  SUBCASE("speed ground truth: distance equals speed times elapsed time") {
    const auto vehicles = sim::build_vehicles(data.config);
    const auto& v = vehicles[0];
    const double d = v.x_at(3.0) - v.x_at(1.0);
    CHECK(d == doctest::Approx(v.speed_mps * 2.0).epsilon(1e-12));
  }
}

TEST_CASE("generation is deterministic for a fixed seed") {
  auto cfg = small_scene();
  cfg.noise = {0.5, 0.2, 2.0};
  const auto a = sim::generate(cfg, 42);
  const auto b = sim::generate(cfg, 42);
  REQUIRE(a.detections.size() == b.detections.size());
  for (size_t i = 0; i < a.detections.size(); ++i) {
    CHECK(a.detections[i].bbox.x == b.detections[i].bbox.x);
    CHECK(a.detections[i].bbox.w == b.detections[i].bbox.w);
  }
  REQUIRE(a.point_tracks.size() == b.point_tracks.size());
  for (size_t i = 0; i < a.point_tracks.size(); ++i) {
    REQUIRE(a.point_tracks[i].size() == b.point_tracks[i].size());
    for (size_t j = 0; j < a.point_tracks[i].size(); ++j) {
      CHECK(a.point_tracks[i][j].second.x == b.point_tracks[i][j].second.x);
      CHECK(a.point_tracks[i][j].second.y == b.point_tracks[i][j].second.y);
    }
  }
  const RasterImage fa = a.render_frame(10);
  const RasterImage fb = b.render_frame(10);
  REQUIRE(fa.samples.size() == fb.samples.size());
  CHECK(std::equal(fa.samples.begin(), fa.samples.end(), fb.samples.begin()));

  const auto c = sim::generate(cfg, 43);
  bool any_diff = false;
  for (size_t i = 0; i < std::min(a.detections.size(), c.detections.size()); ++i)
    if (a.detections[i].bbox.x != c.detections[i].bbox.x) any_diff = true;
  CHECK(any_diff);
}

TEST_CASE("noise-free observations project exactly") {
  const auto data = sim::generate(small_scene(), 1);
  const sim::Camera cam(data.config.camera);
  const auto vehicles = sim::build_vehicles(data.config);
  for (const auto& det : data.detections) {
    bool matched_any = false;
    const double t = det.frame / data.config.fps;
    for (const auto& veh : vehicles) {
      if (veh.spec.model_id != det.cls) continue;
      std::vector<ImagePoint> proj;
      bool ok = true;
      for (size_t i = 0; i < veh.model.vertices.size() && ok; ++i) {
        try {
          proj.push_back(cam.project(veh.vertex_world(i, t)));
        } catch (const BehindCamera&) {
          ok = false;
        }
      }
      if (!ok) continue;
      const BBox bb = BBox::hull_of(proj);
      if (std::abs(bb.x - det.bbox.x) < 1e-9 && std::abs(bb.w - det.bbox.w) < 1e-9)
        matched_any = true;
    }
    CHECK(matched_any);
  }
}

TEST_CASE("invalid configs rejected") {
  auto cfg = small_scene();
  cfg.camera.height_m = -1.0;
  CHECK_THROWS_AS(sim::generate(cfg, 1), ConfigInvalid);
  cfg = small_scene();
  cfg.vehicles[0].lane = 9;
  CHECK_THROWS_AS(sim::generate(cfg, 1), ConfigInvalid);
  cfg = small_scene();
  cfg.vehicles[0].model_id = "truck";
  CHECK_THROWS_AS(sim::generate(cfg, 1), ConfigInvalid);
}

TEST_CASE("rendered frames carry usable edge structure") {
  auto cfg = small_scene();
  const auto data = sim::generate(cfg, 3);
  int frames_with_edges = 0;
  for (int f = 0; f < data.frame_count; f += 8) {
    const RasterImage img = data.render_frame(f);
    float peak = 0.f;
    for (float s : img.samples) peak = std::max(peak, s);
    if (peak > 0.5f) ++frames_with_edges;
  }
  CHECK(frames_with_edges >= 3);
}
