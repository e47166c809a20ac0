#include <doctest.h>

#include <random>

#include "autocalib/tracking.hpp"
#include "test_support.hpp"

using namespace autocalib;
using testsup::OracleCamera;

namespace {

Detection det(int frame, double t, BBox b, std::string cls = "car", double conf = 0.9) {
  Detection d;
  d.frame = frame;
  d.t = t;
  d.bbox = b;
  d.cls = std::move(cls);
  d.confidence = conf;
  return d;
}

/// Corners of an axis-aligned cuboid on the road: base center (cx, cy),
/// length along X, width along Y, height up. The first four are the base.
std::vector<Vec3> cuboid_corners(double cx, double cy, double length, double width,
                                 double height) {
  std::vector<Vec3> out;
  for (double sz : {0.0, 1.0})
    for (double sx : {-0.5, 0.5})
      for (double sy : {-0.5, 0.5})
        out.emplace_back(cx + sx * length, cy + sy * width, sz * height);
  return out;
}

}  // namespace

TEST_CASE("group_and_filter") {
  const double t0 = 0.0;
  SUBCASE("disjoint boxes both kept") {
    std::vector<Detection> ds{det(0, t0, {0, 0, 50, 40}), det(0, t0, {200, 10, 60, 45})};
    CHECK(group_and_filter(ds).size() == 2);
  }
  SUBCASE("box fully inside a nearer box is removed") {
    // B has the larger bottom edge (nearer); A inside B overlaps it with
    // IoU 0.45 > 0.25 and gets dropped.
    std::vector<Detection> ds{det(0, t0, {10, 10, 60, 60}), det(0, t0, {0, 0, 100, 80})};
    const auto kept = group_and_filter(ds);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].bbox.w == 100);
  }
  SUBCASE("overlap below threshold keeps both") {
    std::vector<Detection> ds{det(0, t0, {0, 0, 50, 40}), det(0, t0, {40, 10, 50, 40})};
    CHECK(group_and_filter(ds).size() == 2);
  }
}

TEST_CASE("track_boxes") {
  SUBCASE("single vehicle, constant velocity: exact prediction after burn-in") {
    std::vector<Detection> ds;
    for (int f = 0; f < 20; ++f)
      ds.push_back(det(f, f / 25.0, {100.0 + 7.0 * f, 50.0 + 3.0 * f, 60, 40}));
    TrackerOptions opt;
    opt.measurement_sigma_px = 0.0;
    const auto tracks = track_boxes(ds, opt);
    REQUIRE(tracks.size() == 1);
    REQUIRE(tracks[0].detections.size() == 20);
    for (size_t i = 2; i < tracks[0].kalman.size(); ++i) {
      const auto& snap = tracks[0].kalman[i];
      const Vec2 measured = tracks[0].detections[i].bbox.center();
      CHECK((snap.predicted_center - measured).norm() < 1e-6);
    }
  }
  SUBCASE("two parallel vehicles 200 px apart: no identity switch") {
    std::vector<Detection> ds;
    for (int f = 0; f < 30; ++f) {
      ds.push_back(det(f, f / 25.0, {100.0 + 6.0 * f, 100, 60, 40}, "a"));
      ds.push_back(det(f, f / 25.0, {100.0 + 6.0 * f, 300, 60, 40}, "b"));
    }
    const auto tracks = track_boxes(ds);
    REQUIRE(tracks.size() == 2);
    for (const auto& t : tracks) {
      const std::string cls = t.detections.front().cls;
      for (const auto& d : t.detections) CHECK(d.cls == cls);
      CHECK(t.detections.size() == 30);
    }
  }
  SUBCASE("3-frame detection gap stays one track") {
    std::vector<Detection> ds;
    for (int f = 0; f < 24; ++f) {
      if (f >= 10 && f < 13) continue;
      ds.push_back(det(f, f / 25.0, {100.0 + 6.0 * f, 50, 60, 40}));
    }
    const auto tracks = track_boxes(ds);
    REQUIRE(tracks.size() == 1);
    CHECK(tracks[0].detections.size() == 21);
  }
  SUBCASE("tracks shorter than the minimum are discarded") {
    std::vector<Detection> ds;
    for (int f = 0; f < 4; ++f) ds.push_back(det(f, f / 25.0, {100.0 + 6.0 * f, 50, 60, 40}));
    CHECK(track_boxes(ds).empty());
  }
  SUBCASE("class posterior is the mean of detection probabilities") {
    std::vector<Detection> ds;
    for (int f = 0; f < 10; ++f)
      ds.push_back(det(f, f / 25.0, {100.0 + 6.0 * f, 50, 60, 40}, "sedan", 0.8));
    const auto tracks = track_boxes(ds);
    REQUIRE(tracks.size() == 1);
    CHECK(tracks[0].class_posterior.at("sedan") == doctest::Approx(0.8));
    CHECK(tracks[0].dominant_class() == "sedan");
  }
}

TEST_CASE("kalman reproduces noise-free measurements exactly after 2 steps") {
  std::mt19937_64 gen = testsup::rng(41);
  std::uniform_real_distribution<double> up(-300, 300), uv(-8, 8), us(20, 80);
  for (int trial = 0; trial < 100; ++trial) {
    const double x0 = up(gen), y0 = up(gen), vx = uv(gen), vy = uv(gen);
    const double w = us(gen), h = us(gen);
    std::vector<Detection> ds;
    for (int f = 0; f < 6; ++f)
      ds.push_back(det(f, f / 25.0, {x0 + vx * f - w / 2, y0 + vy * f - h / 2, w, h}));
    TrackerOptions opt;
    opt.measurement_sigma_px = 0.0;
    opt.accel_sigma_px = 0.0;
    const auto tracks = track_boxes(ds, opt);
    REQUIRE(tracks.size() == 1);
    for (size_t i = 2; i < tracks[0].kalman.size(); ++i) {
      const Vec2 measured = tracks[0].detections[i].bbox.center();
      CHECK((tracks[0].kalman[i].predicted_center - measured).norm() < 1e-6);
    }
  }
}

TEST_CASE("convex hull") {
  std::vector<ImagePoint> pts{{0, 0}, {10, 0}, {10, 10}, {0, 10}, {5, 5}, {2, 8}};
  const auto h = convex_hull(pts);
  CHECK(h.size() == 4);
  CHECK_THROWS_AS(convex_hull({{0, 0}, {1, 1}, {2, 2}, {3, 3}}), DegenerateHull);
  CHECK_THROWS_AS(convex_hull({{0, 0}, {1, 1}}), DegenerateHull);
}

TEST_CASE("3d bounding box construction") {
  SUBCASE("square hull with axis-aligned ideal VPs reproduces the square") {
    const std::vector<ImagePoint> square{{-10, -10}, {10, -10}, {10, 10}, {-10, 10}};
    VpTriple vps;
    vps.u = HomoPoint{1, 0, 0};
    vps.v = HomoPoint{0, 1, 0};
    vps.w = HomoPoint{0, 1, 0};  // flat box: verticals collapse onto v
    const auto box = construct_3d_bbox(square, vps);
    const BBox bb = box.bbox2d();
    CHECK(bb.x == doctest::Approx(-10));
    CHECK(bb.y == doctest::Approx(-10));
    CHECK(bb.w == doctest::Approx(20));
    CHECK(bb.h == doctest::Approx(20));
    for (const auto& c : box.base) {
      CHECK(std::abs(std::abs(c.x) - 10) < 1e-9);
      CHECK(std::abs(std::abs(c.y) - 10) < 1e-9);
    }
  }
  SUBCASE("vp inside hull fails") {
    const std::vector<ImagePoint> square{{-10, -10}, {10, -10}, {10, 10}, {-10, 10}};
    VpTriple vps;
    vps.u = HomoPoint{0, 0, 1};  // inside
    vps.v = HomoPoint{0, 1, 0};
    vps.w = HomoPoint{0, 1, 0};
    CHECK_THROWS_AS(construct_3d_bbox(square, vps), TangentFailure);
  }
  SUBCASE("simulator cuboid: recovered base corners within 2 px of truth") {
    OracleCamera cam;
    cam.tilt_deg = 22;
    cam.pan_deg = 14;
    cam.f = 1300;
    const auto calib = cam.gt_calibration();
    const auto corners = cuboid_corners(35, 2.0, 4.4, 1.8, 1.5);
    std::vector<ImagePoint> projected;
    for (const auto& c : corners) projected.push_back(cam.project(c));
    const auto hull = convex_hull(projected);
    const auto box = construct_3d_bbox(hull, calib);

    for (int i = 0; i < 4; ++i) {
      const ImagePoint truth = projected[static_cast<size_t>(i)];
      double best = 1e18;
      for (const auto& got : box.base) best = std::min(best, distance(got, truth));
      CHECK(best < 2.0);
    }
    auto check_edge = [&](const ImagePoint& a, const ImagePoint& b, const ImagePoint& vp) {
      const Line2 l = Line2::through(a, b);
      CHECK(std::abs(l.eval(vp)) < 1.0);
    };
    check_edge(box.base[0], box.base[1], calib.vp1);
    check_edge(box.base[2], box.base[3], calib.vp1);
    check_edge(box.base[1], box.base[2], calib.vp2);
    check_edge(box.base[3], box.base[0], calib.vp2);
    const BBox bb = box.bbox2d();
    for (const auto& p : hull) CHECK(bb.contains(p, 1e-6));
  }
}

TEST_CASE("reference point") {
  OracleCamera cam;
  cam.tilt_deg = 25;
  cam.pan_deg = 10;
  const auto calib = cam.gt_calibration();

  SUBCASE("simulator cuboid: within 2 px of the true front-bottom midpoint") {
    const double cx = 40, cy = 1.0, len = 4.4, wid = 1.8;
    const auto corners = cuboid_corners(cx, cy, len, wid, 1.4);
    std::vector<ImagePoint> projected;
    for (const auto& c : corners) projected.push_back(cam.project(c));
    const auto box = construct_3d_bbox(convex_hull(projected), calib);
    const ImagePoint truth = cam.project({cx + len / 2, cy, 0});
    const Vec2 travel = (cam.project({cx + 1, cy, 0}) - cam.project({cx, cy, 0})).vec();
    const ImagePoint rp = reference_point(box, calib, travel);
    CHECK(distance(rp, truth) < 2.0);
  }
  SUBCASE("symmetric box: exact midpoint of two front base corners") {
    const auto corners = cuboid_corners(45, 0.0, 4.0, 1.8, 1.4);
    std::vector<ImagePoint> projected;
    for (const auto& c : corners) projected.push_back(cam.project(c));
    const auto box = construct_3d_bbox(convex_hull(projected), calib);
    const ImagePoint rp = reference_point(box, calib);
    bool matches_an_edge_midpoint = false;
    for (int e : {0, 1}) {
      const ImagePoint a = e == 0 ? box.base[3] : box.base[1];
      const ImagePoint b = e == 0 ? box.base[0] : box.base[2];
      const ImagePoint mid{(a.x + b.x) / 2, (a.y + b.y) / 2};
      if (distance(mid, rp) < 1e-12) matches_an_edge_midpoint = true;
    }
    CHECK(matches_an_edge_midpoint);
  }
  SUBCASE("straight-moving vehicle: reference points collinear toward vp1") {
    std::vector<ImagePoint> rps;
    const Vec2 travel = (cam.project({31, 2, 0}) - cam.project({30, 2, 0})).vec();
    for (double x = 28; x <= 80; x += 4) {
      const auto corners = cuboid_corners(x, 2.0, 4.4, 1.8, 1.4);
      std::vector<ImagePoint> projected;
      for (const auto& c : corners) projected.push_back(cam.project(c));
      const auto box = construct_3d_bbox(convex_hull(projected), calib);
      rps.push_back(reference_point(box, calib, travel));
    }
    const Line2 l = Line2::through(rps.front(), rps.back());
    for (const auto& p : rps) CHECK(std::abs(l.eval(p)) < 1.0);
    CHECK(std::abs(l.eval(calib.vp1)) < 3.0);
  }
}

TEST_CASE("track to ground truth matching") {
  LaneGeometry geom;
  geom.measurement_line = Line2{0, 1, -100};
  geom.lane_boundaries = {Line2{1, 0, 50}, Line2{1, 0, 0}, Line2{1, 0, -50}};

  auto make_track = [](int id, double x, double t_at_line) {
    Track t;
    t.id = id;
    for (int i = 0; i < 10; ++i) {
      const double time = t_at_line + (i - 5) * 0.1;
      t.reference_points.emplace_back(time, ImagePoint{x, 100.0 + (i - 5) * 10.0});
    }
    return t;
  };

  SUBCASE("identical tracks: recall 1, fppm 0") {
    std::vector<GroundTruthPass> gt{{0, 0, 5.0, 90}, {1, 1, 7.0, 80}};
    std::vector<Track> tracks{make_track(0, -25, 5.0), make_track(1, 25, 7.0)};
    const auto r = match_tracks_to_ground_truth(tracks, gt, geom, 60.0);
    CHECK(r.recall == doctest::Approx(1.0));
    CHECK(r.fppm == doctest::Approx(0.0));
    CHECK(r.matches.size() == 2);
  }
  SUBCASE("one spurious track in a 1-minute scene: FPPM 1") {
    std::vector<GroundTruthPass> gt{{0, 0, 5.0, 90}};
    std::vector<Track> tracks{make_track(0, -25, 5.0), make_track(1, -25, 35.0)};
    const auto r = match_tracks_to_ground_truth(tracks, gt, geom, 60.0);
    CHECK(r.fppm == doctest::Approx(1.0));
    CHECK(r.recall == doctest::Approx(1.0));
  }
  SUBCASE("jitter below 0.2 s still matches; above does not") {
    std::vector<GroundTruthPass> gt{{0, 0, 5.0, 90}};
    {
      std::vector<Track> tracks{make_track(0, -25, 5.19)};
      const auto r = match_tracks_to_ground_truth(tracks, gt, geom, 60.0);
      CHECK(r.matches.size() == 1);
    }
    {
      std::vector<Track> tracks{make_track(0, -25, 5.21)};
      const auto r = match_tracks_to_ground_truth(tracks, gt, geom, 60.0);
      CHECK(r.matches.empty());
    }
  }
  SUBCASE("wrong lane does not match") {
    std::vector<GroundTruthPass> gt{{0, 0, 5.0, 90}};
    std::vector<Track> tracks{make_track(0, 25, 5.0)};  // lane 1, gt lane 0
    const auto r = match_tracks_to_ground_truth(tracks, gt, geom, 60.0);
    CHECK(r.matches.empty());
  }
}
