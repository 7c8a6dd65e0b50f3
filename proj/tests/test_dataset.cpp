#include "support.hpp"

#include "mvg/oracle.hpp"

#include <cmath>

using namespace mvg;
using oracle::Real;

namespace {

template <class F>
auto seven_point(F f, Real s, Real h) {
  using V = oracle::V3;
  const V num = -f(s - 3 * h) + Real(9) * f(s - 2 * h) - Real(45) * f(s - h) + Real(45) * f(s + h) -
                Real(9) * f(s + 2 * h) + f(s + 3 * h);
  return V(num / (Real(60) * h));
}

AnalyticCurve make(CurveFamily f, double a, double b, double s0, double s1, int n = 100) {
  AnalyticCurve c;
  c.family = f;
  c.a = a;
  c.b = b;
  c.s0 = s0;
  c.s1 = s1;
  c.samples = n;
  return c;
}

template <class E>
void expect_code(E&& fn, ErrorCode code) {
  try {
    fn();
    FAIL("expected " << to_string(code));
  } catch (const GeometryError& e) {
    CHECK(e.code() == code);
  }
}

}  // namespace

TEST_CASE("curve closed forms") {
  const CurveDerivatives h = evaluate_curve(make(CurveFamily::Helix, 1, 1, -1, 1), 0.0);
  CHECK(h.point == Vec3(1, 0, 0));
  CHECK(h.d1 == Vec3(0, 1, 1));
  const CurveDerivatives l = evaluate_curve(make(CurveFamily::Line, 0, 0, -1, 1), 0.3);
  CHECK(l.d2 == Vec3::Zero());
  CHECK(l.d3 == Vec3::Zero());
  expect_code([] { evaluate_curve(make(CurveFamily::Line, 0, 0, -1, 1), 1.5); }, ErrorCode::OutOfRange);
  CHECK(curve_family_from_string("saddle") == CurveFamily::Saddle);
  CHECK(std::string(to_string(CurveFamily::Parabola)) == "parabola");
  CHECK(is_planar(CurveFamily::Ellipse));
  CHECK_FALSE(is_planar(CurveFamily::Helix));
}

TEST_CASE("curve derivatives agree with sixth-order finite differences") {
  const Scene scene = default_scene();
  double worst = 0;
  for (const AnalyticCurve& c : scene.curves) {
    for (int k = 0; k < c.samples; k += 7) {
      const Real s = sample_parameter(c, k);
      const CurveDerivatives d = evaluate_curve(c, double(s));
      const Real h = 1e-3;
      auto pos = [&](Real u) { return curve_jet<Real>(c, u).point; };
      auto d1 = [&](Real u) { return curve_jet<Real>(c, u).d1; };
      auto d2 = [&](Real u) { return curve_jet<Real>(c, u).d2; };
      worst = std::max(worst, test::vec_err(seven_point(pos, s, h).cast<double>(), d.d1));
      worst = std::max(worst, test::vec_err(seven_point(d1, s, h).cast<double>(), d.d2));
      worst = std::max(worst, test::vec_err(seven_point(d2, s, h).cast<double>(), d.d3));
    }
  }
  CHECK(worst <= 1e-8);
}

TEST_CASE("sampled curves carry Frenet data") {
  const std::vector<SpaceCurveSample> helix = sample_curve(make(CurveFamily::Helix, 1, 1, 0, 6));
  REQUIRE(helix.size() == 100);
  for (const SpaceCurveSample& s : helix) {
    CHECK(s.frame.K == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(s.frame.tau == doctest::Approx(0.5).epsilon(1e-14));
  }
  for (const SpaceCurveSample& s : sample_curve(make(CurveFamily::Ellipse, 2, 1, 0, 6))) {
    CHECK(std::abs(s.frame.tau) <= 1e-14);
  }
  int nonzero = 0;
  const std::vector<SpaceCurveSample> saddle = sample_curve(make(CurveFamily::Saddle, 0.9, 0.15, 0, 6.2));
  for (const SpaceCurveSample& s : saddle) nonzero += std::abs(s.frame.Kdot) > 1e-6;
  CHECK(nonzero >= 95);
  for (const SpaceCurveSample& s : sample_curve(make(CurveFamily::Line, 0, 0, -1, 1))) {
    CHECK_FALSE(s.frame.has_normal);
    CHECK(s.frame.K == 0.0);
  }
  // midpoint parameters
  const AnalyticCurve c = make(CurveFamily::Line, 0, 0, 0, 1, 4);
  CHECK(sample_parameter(c, 0) == 0.125);
  CHECK(sample_parameter(c, 3) == 0.875);
}

TEST_CASE("camera orbit") {
  Orbit o;
  o.frames = 4;
  o.elevation = 0;
  const std::vector<CameraPose> poses = camera_orbit(o);
  REQUIRE(poses.size() == 4);
  for (int k = 0; k < 4; ++k) {
    const Vec3 a = poses[k].c, b = poses[(k + 1) % 4].c;
    CHECK(std::abs(a.dot(b)) <= 1e-12);
    CHECK(a.norm() == doctest::Approx(10.0));
    CHECK(a.cross(b).normalized().dot(e3) == doctest::Approx(1.0));
  }
  const Scene scene = default_scene();
  for (const CameraPose& p : camera_orbit(scene)) {
    CHECK((p.R.transpose() * p.R - Mat3::Identity()).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK(p.R.determinant() == doctest::Approx(1.0));
    const Vec3 look = p.R * (scene.orbit.center - p.c);
    CHECK(look.head<2>().norm() <= 1e-14 * look.norm());
    CHECK(look.z() > 0);
    CHECK((p.t + p.R * p.c).norm() <= 1e-14);
  }
  Orbit bad;
  bad.radius = 1e-12;
  expect_code([&] { camera_orbit(bad); }, ErrorCode::DegenerateLookAt);
  bad.radius = 0;
  expect_code([&] { camera_orbit(bad); }, ErrorCode::InvalidArgument);
}

TEST_CASE("orbit motion matches the pose trajectory") {
  const Orbit o;
  for (double t0 : {0.0, 0.7, 3.0}) {
    const OrbitState<double> s0 = orbit_state(o, t0);
    const CameraMotion m = orbit_motion(o, t0);
    std::vector<double> dts{1e-1, 1e-2, 1e-3}, err;
    for (double dt : dts) {
      const OrbitState<double> s1 = orbit_state(o, t0 + dt);
      const TaylorPose tp = taylor_pose(m, dt);
      err.push_back(std::max((tp.R - s1.R * s0.R.transpose()).norm(), (tp.c - s0.R * (s1.c - s0.c)).norm()));
    }
    CHECK(oracle::fit_order(dts, err) == doctest::Approx(3.0).epsilon(0.07));
  }
}

TEST_CASE("rendering") {
  CameraPose pose;
  pose.K = Orbit{}.K;
  SUBCASE("frontal circle centered on the axis") {
    AnalyticCurve c = make(CurveFamily::Ellipse, 1, 1, 0, 2 * M_PI, 40);
    c.center = {0, 0, 5};
    std::vector<LabeledSample> in;
    const std::vector<SpaceCurveSample> ss = sample_curve(c);
    for (int k = 0; k < 40; ++k) in.push_back({0, k, sample_parameter(c, k), ss[k]});
    const RenderResult r = render_view(in, pose, 500, 400);
    REQUIRE(r.samples.size() == 40);
    const double k0 = r.samples[0].pixel.frame.kappa;
    CHECK(k0 == doctest::Approx(-1.0 / 120.0).epsilon(1e-12));
    for (const RenderedSample& s : r.samples) {
      CHECK(s.pixel.frame.kappa == doctest::Approx(k0).epsilon(1e-12));
      CHECK(s.normalized.frame.kappa == doctest::Approx(-5.0).epsilon(1e-12));
      CHECK(std::abs(s.pixel.frame.kappadot) <= 1e-12);
    }
  }
  SUBCASE("behind the camera") {
    AnalyticCurve c = make(CurveFamily::Helix, 0.5, 0.1, 0, 1, 3);
    c.center = {0, 0, 5};
    std::vector<LabeledSample> in;
    const std::vector<SpaceCurveSample> ss = sample_curve(c);
    for (int k = 0; k < 3; ++k) in.push_back({0, k, sample_parameter(c, k), ss[k]});
    in[1].sample.point.z() = -5;
    const RenderResult r = render_view(in, pose, 500, 400);
    CHECK(r.dropped_behind == 1);
    CHECK(r.samples.size() == 2);
    CHECK(r.samples[1].sample_id == 2);
  }
  SUBCASE("outside the frame") {
    AnalyticCurve c = make(CurveFamily::Line, 0, 0, 0, 1, 2);
    c.center = {10, 0, 5};
    std::vector<LabeledSample> in;
    const std::vector<SpaceCurveSample> ss = sample_curve(c);
    for (int k = 0; k < 2; ++k) in.push_back({0, k, sample_parameter(c, k), ss[k]});
    CHECK(render_view(in, pose, 500, 400).dropped_outside == 2);
  }
}

TEST_CASE("default scene renders with no drops and round-trips through pixels") {
  const Scene scene = default_scene();
  CHECK_NOTHROW(scene.validate());
  CHECK(scene.curves.size() == 5);
  const std::vector<LabeledSample> samples = sample_scene(scene);
  CHECK(samples.size() == 500);
  double worst = 0;
  for (const CameraPose& pose : camera_orbit(scene)) {
    const RenderResult r = render_view(samples, pose, scene.orbit.image_width, scene.orbit.image_height);
    CHECK(r.dropped_behind == 0);
    CHECK(r.dropped_outside == 0);
    CHECK(r.dropped_degenerate == 0);
    CHECK(r.samples.size() == samples.size());
    for (const RenderedSample& s : r.samples) {
      const ImageCurveSample back = from_pixel_sample(s.pixel, pose.K);
      worst = std::max({worst, test::vec_err(back.point.gamma, s.normalized.point.gamma),
                        test::vec_err(back.frame.t, s.normalized.frame.t),
                        test::rel_err(back.frame.kappa, s.normalized.frame.kappa),
                        test::rel_err(back.frame.kappadot, s.normalized.frame.kappadot)});
    }
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("quadric contour generators") {
  Quadric sphere;
  CameraPose pose;
  pose.c = {0, 0, -2};
  const std::vector<GeneratorSample> g = quadric_contour_generator(sphere, pose, 64);
  REQUIRE(g.size() == 64);
  for (const GeneratorSample& s : g) {
    const Vec3& x = s.sample.point;
    CHECK(std::hypot(x.x(), x.y()) == doctest::Approx(std::sqrt(3.0) / 2).epsilon(1e-14));
    CHECK(x.z() == doctest::Approx(-0.5).epsilon(1e-14));
    CHECK(s.Kt == doctest::Approx(1.0).epsilon(1e-14));
  }
  Quadric big;
  big.semi_axes = {2, 2, 2};
  for (const GeneratorSample& s : quadric_contour_generator(big, orbit_pose(Orbit{}, 0.3), 16))
    CHECK(s.Kt == doctest::Approx(0.5).epsilon(1e-14));
  const Scene scene = default_scene();
  double worst = 0;
  for (const Quadric& q : scene.quadrics) {
    for (const CameraPose& p : camera_orbit(scene)) {
      for (const GeneratorSample& s : quadric_contour_generator(q, p, 256)) {
        const Vec3 d = s.sample.point - q.center;
        worst = std::max(worst, std::abs(d.dot(q.shape() * d) - 1));
        worst = std::max(worst, std::abs((s.sample.point - p.c).normalized().dot(s.normal)));
        CHECK(s.Kt > 0);
        CHECK(s.normal.dot(d) > 0);
        CHECK((s.sample.point - p.c).cross(s.sample.frame.T).dot(s.normal) < 0);
      }
    }
  }
  CHECK(worst <= 1e-10);
  pose.c = {0, 0, 0.5};
  expect_code([&] { quadric_contour_generator(sphere, pose, 8); }, ErrorCode::CameraInsideQuadric);
  Quadric flat;
  flat.semi_axes = {1, 0, 1};
  CHECK_THROWS_AS(flat.validate(), GeometryError);
}

// sphere at the orbit center: (q - c) . c_dot = 0, so the ray-parallel slip has
// a definite sign along the direction of travel
TEST_CASE("generator slip follows the camera on the sphere") {
  const Scene scene = default_scene();
  for (const Quadric& q : {scene.quadrics[0]}) {
    for (double t0 : {0.1, 1.4, 4.0}) {
      const OrbitState<double> st = orbit_state(scene.orbit, t0);
      const CameraMotion m = orbit_motion(scene.orbit, t0);
      for (const GeneratorSample& s : quadric_contour_generator(q, orbit_pose(scene.orbit, t0), 64)) {
        const Vec3 cam = st.R * (s.sample.point - st.c);
        const Vec3 gamma = cam / cam.z();
        const Vec3 t = project_tangent(st.R * s.sample.frame.T, gamma).t;
        const Vec3 w = st.R.transpose() * contour_generator_velocity(gamma, cam.z(), m.V, t, s.Kt);
        CHECK(w.dot(st.c_dot) >= -1e-12);
      }
    }
  }
}

TEST_CASE("generator frames and correspondence bookkeeping") {
  const Scene scene = default_scene();
  CHECK(scene.generator_samples >= 1024);
  const GeneratorFrame a = generator_frame(scene.quadrics[1], scene.orbit, 0.2, scene.generator_samples);
  const GeneratorFrame b = generator_frame(scene.quadrics[1], scene.orbit, 0.25, scene.generator_samples);
  const std::vector<EpipolarMatch> m = epipolar_correspond(scene.quadrics[1], a, b);
  REQUIRE(m.size() == a.samples.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    CHECK(m[i].index == static_cast<int>(i));
    CHECK(m[i].angle <= 1e-6);
  }
  CHECK_THROWS_AS(epipolar_correspond(scene.quadrics[1], b, a), GeometryError);
}
