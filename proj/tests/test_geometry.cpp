#include <doctest.h>

#include "autocalib/geometry.hpp"
#include "test_support.hpp"

using namespace autocalib;
using testsup::OracleCamera;

namespace {
const ImageSize kSize{1920, 1080};
}

TEST_CASE("focal length from vanishing point pairs") {
  CHECK(focal_from_vps({100, 0}, {-4, 0}) == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(focal_from_vps({0, 50}, {0, -2}) == doctest::Approx(10.0).epsilon(1e-12));
  CHECK_THROWS_AS(focal_from_vps({10, 0}, {5, 0}), NonPositiveRadicand);
  CHECK_THROWS_AS(focal_from_vps({0, 0}, {5, 0}), NonPositiveRadicand);  // radicand 0
}

TEST_CASE("calibration from vanishing points") {
  SUBCASE("horizon-aligned pair gives a lateral plane normal") {
    const auto calib = calibration_from_vps({100, 0}, {-4, 0}, kSize);
    CHECK(std::abs(calib.plane.n.x()) < 1e-12);
    CHECK(std::abs(std::abs(calib.plane.n.y()) - 1.0) < 1e-9);
    CHECK(std::abs(calib.plane.n.z()) < 1e-12);
    // Sign convention: bottom image-center pixel projects in front of the camera.
    const Vec3 bc{0.0, kSize.height / 2.0, calib.f};
    CHECK(bc.dot(calib.plane.n) < 0.0);
  }
  SUBCASE("normal is orthogonal to both lifted VPs") {
    const auto calib = calibration_from_vps({431, -77}, {-1905, 12}, kSize);
    CHECK(std::abs(calib.plane.n.dot(calib.vp1_lifted())) < 1e-9 * calib.vp1_lifted().norm());
    CHECK(std::abs(calib.plane.n.dot(calib.vp2_lifted())) < 1e-9 * calib.vp2_lifted().norm());
    CHECK(calib.plane.delta == 1.0);
    CHECK(std::abs(calib.plane.n.norm() - 1.0) < 1e-12);
  }
  SUBCASE("degenerate pair rejected") {
    CHECK_THROWS_AS(calibration_from_vps({100, 0}, {100, 0}, kSize), DegenerateVPs);
  }
  SUBCASE("recovers the oracle plane normal") {
    OracleCamera cam;
    cam.tilt_deg = 25;
    cam.pan_deg = -12;
    cam.f = 1400;
    const auto calib = calibration_from_vps(cam.vp1(), cam.vp2(), cam.size);
    CHECK(calib.f == doctest::Approx(cam.f).epsilon(1e-9));
    const Vec3 n_true = cam.world_to_cam() * Vec3(0, 0, 1);
    CHECK((calib.plane.n - n_true).norm() < 1e-6);
  }
}

TEST_CASE("project_to_road") {
  OracleCamera cam;
  const auto calib = calibration_from_vps(cam.vp1(), cam.vp2(), cam.size);

  SUBCASE("result satisfies the plane equation") {
    for (double x : {-500.0, 0.0, 400.0}) {
      for (double y : {100.0, 300.0, 500.0}) {
        const GroundPoint p = project_to_road({x, y}, calib);
        CHECK(std::abs(calib.plane.n.dot(p) + calib.plane.delta) < 1e-9);
      }
    }
  }
  SUBCASE("matches the oracle marker up to one global scale") {
    // Markers on the road, in front of the camera.
    const std::vector<Vec3> markers{{30, 2, 0}, {45, -3, 0}, {60, 1, 0}, {80, -2, 0}};
    std::vector<double> ratios;
    for (const auto& m : markers) {
      const GroundPoint p = project_to_road(cam.project(m), calib);
      const Vec3 cam_true = cam.cam_point(m);
      for (int i = 0; i < 3; ++i) {
        if (std::abs(cam_true[i]) > 1e-6) ratios.push_back(p[i] / cam_true[i]);
      }
    }
    for (double r : ratios) CHECK(r == doctest::Approx(ratios.front()).epsilon(1e-6));
    CHECK(ratios.front() > 0.0);
  }
  SUBCASE("horizon points rejected") {
    const Line2 h = horizon_line(calib);
    // A point exactly on the horizon line.
    const ImagePoint on_h{calib.vp1.x, calib.vp1.y};
    CHECK_THROWS_AS(project_to_road(on_h, calib), HorizonPoint);
    // A point above the horizon (sky) projects behind the camera.
    const ImagePoint sky{0.0, calib.vp1.y - 300.0};
    CHECK(h.eval(sky) != doctest::Approx(0.0));
    CHECK_THROWS_AS(project_to_road(sky, calib), HorizonPoint);
  }
}

TEST_CASE("ground_distance") {
  OracleCamera cam;
  cam.height_m = 12.0;
  auto calib = cam.gt_calibration();

  SUBCASE("identity and scale linearity") {
    const ImagePoint p{100, 300};
    CHECK(ground_distance(p, p, calib) == 0.0);
    const ImagePoint q{-50, 200};
    const double d1 = ground_distance(p, q, calib);
    calib.scale = 2.0 * *calib.scale;
    CHECK(ground_distance(p, q, calib) == doctest::Approx(2.0 * d1).epsilon(1e-12));
  }
  SUBCASE("missing scale") {
    auto c2 = calibration_from_vps(cam.vp1(), cam.vp2(), cam.size);
    CHECK_THROWS_AS(ground_distance({0, 200}, {10, 250}, c2), MissingScale);
  }
  SUBCASE("oracle markers 30 m apart") {
    const Vec3 a{40, 1.5, 0}, b{70, 1.5, 0};
    const double d = ground_distance(cam.project(a), cam.project(b), calib);
    CHECK(d == doctest::Approx(30.0).epsilon(1e-6));
  }
  SUBCASE("symmetry and triangle inequality") {
    std::mt19937_64 gen = testsup::rng(7);
    std::uniform_real_distribution<double> ux(-400, 400), uy(120, 500);
    for (int i = 0; i < 100; ++i) {
      const ImagePoint p{ux(gen), uy(gen)}, q{ux(gen), uy(gen)}, r{ux(gen), uy(gen)};
      const double pq = ground_distance(p, q, calib);
      const double qp = ground_distance(q, p, calib);
      CHECK(pq == doctest::Approx(qp).epsilon(1e-12));
      CHECK(pq <= ground_distance(p, r, calib) + ground_distance(r, q, calib) + 1e-9);
    }
  }
}

TEST_CASE("rotation_from_vps") {
  OracleCamera cam;
  cam.tilt_deg = 33;
  cam.pan_deg = 18;
  cam.f = 2100;
  const auto calib = cam.gt_calibration();
  const Mat3 r = rotation_from_vps(calib);

  CHECK((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(r.determinant() == doctest::Approx(1.0).epsilon(1e-6));

  // Columns match the oracle's world axes mapped to camera coordinates,
  // up to the documented per-column sign convention.
  const Mat3 wc = cam.world_to_cam();
  for (int col = 0; col < 3; ++col) {
    const Vec3 truth = wc * Vec3::Unit(col);
    const Vec3 got = r.col(col);
    const double sign = truth.dot(got) >= 0 ? 1.0 : -1.0;
    CHECK((got - sign * truth).cwiseAbs().maxCoeff() < 1e-5);
  }
}

TEST_CASE("viewpoint_vector") {
  SUBCASE("principal point with axis-aligned rotation") {
    // Hand-built calibration whose lifted VPs are (numerically) the x and y
    // axes, so R is the identity. Exactly axis-aligned VPs have no finite
    // focal length, hence the direct construction.
    CameraCalibration calib;
    calib.vp1 = {1e12, 0};
    calib.vp2 = {0, 1e12};
    calib.f = 1000.0;
    calib.image_size = kSize;
    const Vec3 phi = viewpoint_vector({0, 0}, calib);
    CHECK(phi.x() == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(phi.y() == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(phi.z() == doctest::Approx(-1.0).epsilon(1e-9));
  }
  SUBCASE("always unit length") {
    OracleCamera cam;
    const auto calib = cam.gt_calibration();
    std::mt19937_64 gen = testsup::rng(11);
    std::uniform_real_distribution<double> ux(-800, 800), uy(-400, 500);
    for (int i = 0; i < 100; ++i) {
      const Vec3 phi = viewpoint_vector({ux(gen), uy(gen)}, calib);
      CHECK(phi.norm() == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  SUBCASE("matches the oracle camera-from-vehicle direction") {
    OracleCamera cam;
    cam.tilt_deg = 28;
    cam.pan_deg = -20;
    const auto calib = cam.gt_calibration();
    const Vec3 vehicle{45, 2, 0};
    const Vec3 phi = viewpoint_vector(cam.project(vehicle), calib);
    // True direction from vehicle to camera, in vehicle-aligned world axes.
    const Vec3 to_cam = (Vec3(0, 0, cam.height_m) - vehicle).normalized();
    // Column sign convention: flip each axis to agree with the rotation used.
    const Mat3 r = rotation_from_vps(calib);
    const Mat3 wc = cam.world_to_cam();
    Vec3 expected;
    for (int i = 0; i < 3; ++i) {
      const double sign = (wc * Vec3::Unit(i)).dot(r.col(i)) >= 0 ? 1.0 : -1.0;
      expected[i] = sign * to_cam[i];
    }
    const double angle = rad2deg(std::acos(std::clamp(phi.dot(expected), -1.0, 1.0)));
    CHECK(angle < 0.1);
  }
}

TEST_CASE("horizon contains every road-parallel direction VP") {
  OracleCamera cam;
  cam.tilt_deg = 15;
  cam.pan_deg = 25;
  cam.f = 1100;
  const auto calib = cam.gt_calibration();
  const Line2 h = horizon_line(calib);
  std::mt19937_64 gen = testsup::rng(3);
  std::uniform_real_distribution<double> uang(0.05, autocalib::kPi - 0.05);
  for (int i = 0; i < 100; ++i) {
    const double a = uang(gen);
    const Vec3 dir{std::cos(a), std::sin(a), 0.0};
    try {
      const ImagePoint vp = cam.vp_of_direction(dir);
      CHECK(std::abs(h.eval(vp)) < 1e-3);
    } catch (const HorizonPoint&) {
      // direction parallel to the image plane; no finite VP
    }
  }
}

TEST_CASE("round trip: simulator ground points recovered up to one scale") {
  OracleCamera cam;
  cam.tilt_deg = 35;
  cam.pan_deg = 8;
  cam.roll_deg = 2;
  const auto calib = calibration_from_vps(cam.vp1(), cam.vp2(), cam.size);
  std::mt19937_64 gen = testsup::rng(5);
  std::uniform_real_distribution<double> ux(15, 120), uy(-8, 8);
  double s0 = 0.0;
  for (int i = 0; i < 200; ++i) {
    const Vec3 g{ux(gen), uy(gen), 0.0};
    const GroundPoint p = project_to_road(cam.project(g), calib);
    const Vec3 cam_true = cam.cam_point(g);
    const double s = p.norm() / cam_true.norm();
    if (i == 0) s0 = s;
    CHECK(s == doctest::Approx(s0).epsilon(1e-6));
    CHECK((p / s - cam_true).norm() < 1e-6 * cam_true.norm());
  }
  CHECK(s0 > 0.0);
}

TEST_CASE("Eq(1) consistency invariant") {
  std::mt19937_64 gen = testsup::rng(13);
  std::uniform_real_distribution<double> u1(-2000, 2000), u2(100, 4000);
  for (int i = 0; i < 100; ++i) {
    const ImagePoint u{u1(gen), -u2(gen) / 4};
    const ImagePoint v{u1(gen) > 0 ? -u2(gen) : u2(gen), u2(gen) / 10};
    const double radicand = -(u.x * v.x + u.y * v.y);
    if (radicand <= 0) continue;
    const double f = focal_from_vps(u, v);
    CHECK(std::abs(f * f + (u.x * v.x + u.y * v.y)) <= 1e-6 * f * f);
  }
}
