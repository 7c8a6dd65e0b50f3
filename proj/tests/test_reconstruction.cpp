#include "support.hpp"

#include "mvg/reconstruction.hpp"

using namespace mvg;
using mvg::test::rel_err;
using mvg::test::vec_err;

namespace {

SpaceCurveSample to_camera(const SpaceCurveSample& w, const CameraPose& pose) {
  SpaceCurveSample c = w;
  c.point = world_to_camera(w.point, pose);
  c.frame.T = pose.R * w.frame.T;
  c.frame.N = pose.R * w.frame.N;
  c.frame.B = pose.R * w.frame.B;
  c.frame_id = FrameTag::camera(0);
  return c;
}

ViewMeasurement measure(const SpaceCurveSample& w, const CameraPose& pose) {
  return lift_measurement(project_sample(to_camera(w, pose)), pose);
}

SpaceCurveSample world_sample(const AnalyticCurve& c, double s) {
  const CurveJet<double> j = curve_jet<double>(c, s);
  return {j.point, frenet3_partial(j.d1, j.d2, j.d3), FrameTag::world()};
}

ViewMeasurement simple(const Vec3& gamma, const Vec3& t, const Vec3& c) {
  ViewMeasurement m;
  m.gamma = gamma;
  m.t = t;
  m.c = c;
  return m;
}

CameraPose look_at(const Vec3& c, const Vec3& target) {
  const Vec3 z = (target - c).normalized();
  const Vec3 x = z.cross(e3).normalized();
  Mat3 R;
  R.row(0) = x.transpose();
  R.row(1) = z.cross(x).transpose();
  R.row(2) = z.transpose();
  return CameraPose::from_center(R, c);
}

struct Worst {
  double point = 0, T = 0, N = 0, K = 0, tau = 0, Kdot = 0;
  int used = 0, skipped = 0;
};

Worst round_trip(const Scene& scene, int v1, int v2) {
  const std::vector<CameraPose> poses = camera_orbit(scene);
  Worst w;
  for (const LabeledSample& ls : sample_scene(scene)) {
    const SpaceCurveSample& truth = ls.sample;
    ReconstructedPoint rp;
    try {
      rp = reconstruct_point(measure(truth, poses[v1]), measure(truth, poses[v2]));
    } catch (const GeometryError& e) {
      REQUIRE(e.code() == ErrorCode::EpipolarTangency);
      ++w.skipped;
      continue;
    }
    ++w.used;
    w.point = std::max(w.point, vec_err(rp.point, truth.point));
    w.T = std::max(w.T, vec_err(rp.frame.T, truth.frame.T));
    w.K = std::max(w.K, rel_err(rp.frame.K, truth.frame.K));
    REQUIRE(rp.frame.has_normal == truth.frame.has_normal);
    if (!truth.frame.has_normal) continue;
    w.N = std::max(w.N, vec_err(rp.frame.N, truth.frame.N));
    w.tau = std::max(w.tau, rel_err(rp.frame.tau, truth.frame.tau));
    w.Kdot = std::max(w.Kdot, rel_err(rp.frame.Kdot, truth.frame.Kdot));
    CHECK(rp.residuals.curvature_orthogonality <= 1e-10);
    CHECK(rp.residuals.torsion_orthogonality <= 1e-10);
  }
  return w;
}

}  // namespace

TEST_CASE("lifting into the world basis") {
  ImageCurveSample s;
  s.point.gamma = {0.1, -0.2, 1};
  s.frame.t = e1;
  s.frame.n = {0, -1, 0};
  s.frame.kappa = 0.7;
  s.frame.kappadot = -0.2;
  ViewMeasurement m = lift_measurement(s, CameraPose{});
  CHECK(m.gamma == s.point.gamma);
  CHECK(m.t == e1);
  CHECK(m.e3 == e3);
  CHECK(m.kappa == 0.7);
  CHECK(m.kappadot == -0.2);
  m = lift_measurement(s, CameraPose::from_center(rot_z(M_PI / 2), {1, 2, 3}));
  CHECK((m.t - Vec3(0, -1, 0)).norm() <= 1e-15);
  CHECK(m.c == Vec3(1, 2, 3));
  test::Rng rng(8);
  for (int i = 0; i < 100; ++i) {
    s.point.gamma = rng.image_point();
    const CameraPose pose = CameraPose::from_center(rng.rotation(), rng.vec(-3, 3));
    m = lift_measurement(s, pose);
    CHECK(std::abs(m.e3.dot(m.gamma) - 1.0) <= 1e-12);
    CHECK(std::abs(m.e3.dot(m.t)) <= 1e-12);
  }
}

TEST_CASE("triangulation") {
  const ViewMeasurement a = simple(e3, e2, Vec3::Zero());
  const ViewMeasurement b = simple({-0.2, 0, 1}, e2, {1, 0, 0});
  const Triangulation tr = triangulate(a, b);
  CHECK(tr.rho1 == doctest::Approx(5.0).epsilon(1e-14));
  CHECK(tr.rho2 == doctest::Approx(5.0).epsilon(1e-14));
  CHECK((tr.point - Vec3(0, 0, 5)).norm() <= 1e-13);
  CHECK(tr.residual <= 1e-13);

  auto code = [](const ViewMeasurement& x, const ViewMeasurement& y) {
    try {
      triangulate(x, y);
    } catch (const GeometryError& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  CHECK(code(a, simple({0, 1, 1}, e2, {1, 0, 0})) == ErrorCode::NonCoplanarRays);
  CHECK(code(a, a) == ErrorCode::ParallelRays);
  CHECK(code(a, simple({0.2, 0, 1}, e2, {1, 0, 0})) == ErrorCode::NegativeDepth);
}

TEST_CASE("tangent reconstruction") {
  const ViewMeasurement a = simple(e3, e2, Vec3::Zero());
  const ViewMeasurement b = simple({-0.2, 0, 1}, e2, {1, 0, 0});
  const TangentReconstruction t = reconstruct_tangent(a, b);
  CHECK((t.T - e2).norm() <= 1e-15);
  CHECK(t.epsilon == -1);
  CHECK(t.theta1 == doctest::Approx(M_PI / 2));
  CHECK(t.theta1 >= 0.0);
  CHECK(t.theta1 < M_PI);

  try {
    reconstruct_tangent(simple(e3, e1, Vec3::Zero()), simple({-0.2, 0, 1}, e1, {1, 0, 0}));
    FAIL("expected EpipolarTangency");
  } catch (const GeometryError& e) {
    CHECK(e.code() == ErrorCode::EpipolarTangency);
  }
  try {
    reconstruct_tangent(a, simple({-0.2, 0, 1}, -e2, {1, 0, 0}));
    FAIL("expected InconsistentSign");
  } catch (const GeometryError& e) {
    CHECK(e.code() == ErrorCode::InconsistentSign);
  }
}

TEST_CASE("frontal circle curvature round trip") {
  // r = 1 in the plane z = 5, at s = 0
  SpaceCurveSample w;
  w.point = {1, 0, 5};
  w.frame.T = e2;
  w.frame.N = -e1;
  w.frame.B = e2.cross(-e1);
  w.frame.G = 1;
  w.frame.K = 1;
  const CameraPose p1, p2 = CameraPose::from_center(Mat3::Identity(), {0.5, 0, 0});
  const ViewMeasurement m1 = measure(w, p1), m2 = measure(w, p2);
  const Triangulation tri = triangulate(m1, m2);
  const TangentReconstruction tr = reconstruct_tangent(m1, m2);
  const double g1 = view_speed_ratio(tr.T, m1, tri.rho1), g2 = view_speed_ratio(tr.T, m2, tri.rho2);
  const CurvatureReconstruction cr = reconstruct_curvature(m1, m2, tr.T, tri.rho1, tri.rho2, g1, g2);
  CHECK(cr.K == doctest::Approx(1.0).epsilon(1e-9));
  CHECK((cr.N - Vec3(-1, 0, 0)).norm() <= 1e-9);
  CHECK((cr.B - tr.T.cross(cr.N)).norm() <= 1e-15);
}

TEST_CASE("straight line has zero reconstructed curvature") {
  SpaceCurveSample w;
  w.point = {0.2, 0.1, 4};
  w.frame.T = Vec3(1, 0.5, 0.2).normalized();
  w.frame.G = 1;
  w.frame.has_normal = false;
  const CameraPose p1, p2 = CameraPose::from_center(rot_y(-0.1), {0.5, 0.1, 0});
  const ViewMeasurement m1 = measure(w, p1), m2 = measure(w, p2);
  CHECK(m1.kappa == 0.0);
  const Triangulation tri = triangulate(m1, m2);
  const TangentReconstruction tr = reconstruct_tangent(m1, m2);
  try {
    reconstruct_curvature(m1, m2, tr.T, tri.rho1, tri.rho2, view_speed_ratio(tr.T, m1, tri.rho1),
                          view_speed_ratio(tr.T, m2, tri.rho2));
    FAIL("expected ZeroCurvature");
  } catch (const GeometryError& e) {
    CHECK(e.code() == ErrorCode::ZeroCurvature);
  }
  const ReconstructedPoint rp = reconstruct_point(m1, m2);
  CHECK_FALSE(rp.frame.has_normal);
  CHECK(vec_err(rp.frame.T, w.frame.T) <= 1e-12);
}

TEST_CASE("ill conditioned system") {
  // both views and the tangent are nearly coplanar with one row
  const ViewMeasurement a = simple(e3, e2, Vec3::Zero());
  ViewMeasurement b = simple({-0.2, 0, 1}, e2, {1, 0, 0});
  try {
    reconstruct_curvature(a, b, e1, 5, 5, 0.2, 0.2);
    FAIL("expected IllConditionedSystem");
  } catch (const GeometryError& e) {
    CHECK(e.code() == ErrorCode::IllConditionedSystem);
  }
}

TEST_CASE("torsion on analytic families") {
  const CameraPose p1 = look_at({0, -8, 1.5}, Vec3::Zero());
  const CameraPose p2 = look_at({3.5, -7, 2.5}, Vec3::Zero());
  AnalyticCurve c;
  SUBCASE("helix") {
    c.family = CurveFamily::Helix;
    c.a = 1;
    c.b = 1;
    for (double s : {-2.5, -1.0, 0.3, 1.9}) {
      const SpaceCurveSample w = world_sample(c, s);
      const ReconstructedPoint rp = reconstruct_point(measure(w, p1), measure(w, p2));
      CHECK(std::abs(rp.frame.tau - 0.5) <= 1e-7);
      CHECK(std::abs(rp.frame.Kdot) <= 1e-7);
      CHECK(std::abs(rp.frame.K - 0.5) <= 1e-9);
    }
  }
  SUBCASE("ellipse in several poses") {
    c.family = CurveFamily::Ellipse;
    c.a = 1.3;
    c.b = 0.7;
    for (const Vec3& rot : {Vec3(0.3, 0.1, 0), Vec3(-0.2, 0.5, 0.9), Vec3(1.1, 0, 0.2)}) {
      c.rotation = rot;
      for (double s : {0.4, 2.2, 3.9, 5.5}) {
        const SpaceCurveSample w = world_sample(c, s);
        try {
          const ReconstructedPoint rp = reconstruct_point(measure(w, p1), measure(w, p2));
          CHECK(std::abs(rp.frame.tau) <= 1e-8);
        } catch (const GeometryError& e) {
          CHECK(e.code() == ErrorCode::EpipolarTangency);
        }
      }
    }
  }
  SUBCASE("saddle") {
    c.family = CurveFamily::Saddle;
    c.a = 1;
    c.b = 0.3;
    for (double s : {0.2, 1.4, 2.9, 4.4}) {
      const SpaceCurveSample w = world_sample(c, s);
      CHECK(std::abs(w.frame.Kdot) > 1e-3);
      const ReconstructedPoint rp = reconstruct_point(measure(w, p1), measure(w, p2));
      CHECK(rel_err(rp.frame.tau, w.frame.tau) <= 1e-6);
      CHECK(rel_err(rp.frame.Kdot, w.frame.Kdot) <= 1e-6);
    }
  }
}

TEST_CASE("speed ratio identities") {
  test::Rng rng(31);
  for (int i = 0; i < 200; ++i) {
    SpaceCurveSample w;
    w.point = rng.vec(-1, 1);
    w.frame.T = rng.unit();
    w.frame.G = 1;
    w.frame.has_normal = false;
    const CameraPose p1 = look_at(Vec3(0, -6, 1) + rng.vec(-1, 1), Vec3::Zero());
    const CameraPose p2 = look_at(Vec3(4, -5, 2) + rng.vec(-1, 1), Vec3::Zero());
    ViewMeasurement m1, m2;
    try {
      m1 = measure(w, p1);
      m2 = measure(w, p2);
    } catch (const GeometryError&) {
      continue;
    }
    const Triangulation tri = triangulate(m1, m2);
    const double r = two_view_speed_ratio(w.frame.T, m1, m2, tri.rho1, tri.rho2);
    const double g1 = view_speed_ratio(w.frame.T, m1, tri.rho1);
    const double g2 = view_speed_ratio(w.frame.T, m2, tri.rho2);
    CHECK(std::abs(r - g1 / g2) <= 1e-12 * r);
    DepthSpeedRelations d;
    try {
      d = depth_speed_relations(m1, m2);
    } catch (const GeometryError& e) {
      CHECK(e.code() == ErrorCode::EpipolarTangency);
      continue;
    }
    // rho' = T . e3 under arc length
    CHECK(std::abs(d.view1 - w.frame.T.dot(m1.e3) / (tri.rho1 * g1)) <= 1e-9 * std::max(1.0, std::abs(d.view1)));
    CHECK(std::abs(d.view2 - w.frame.T.dot(m2.e3) / (tri.rho2 * g2)) <= 1e-9 * std::max(1.0, std::abs(d.view2)));
    const TangentReconstruction tr = reconstruct_tangent(m1, m2);
    CHECK(std::abs(d.view1 - 1.0 / (std::tan(tr.theta1) * m1.gamma.norm())) <=
          1e-12 * std::max(1.0, std::abs(d.view1)));
  }
  // symmetric rig over a frontal point
  SpaceCurveSample w;
  w.point = {0, 0, 5};
  w.frame.T = e2;
  w.frame.G = 1;
  const CameraPose a = CameraPose::from_center(rot_y(-0.1), {-0.5, 0, 0});
  const CameraPose b = CameraPose::from_center(rot_y(0.1), {0.5, 0, 0});
  const ViewMeasurement m1 = measure(w, a), m2 = measure(w, b);
  const Triangulation tri = triangulate(m1, m2);
  CHECK(two_view_speed_ratio(e2, m1, m2, tri.rho1, tri.rho2) == doctest::Approx(1.0).epsilon(1e-14));
  const DepthSpeedRelations d = depth_speed_relations(m1, m2);
  CHECK(std::abs(d.view1) <= 1e-15);
  CHECK(std::abs(d.view2) <= 1e-15);
}

TEST_CASE("speed ratio against differenced image speeds") {
  const Scene scene = default_scene();
  const std::vector<CameraPose> poses = camera_orbit(scene);
  const AnalyticCurve& c = scene.curves[4];
  auto image_point = [&](const CameraPose& p, double s) {
    return project(world_to_camera(curve_jet<double>(c, s).point, p)).gamma;
  };
  for (double s : {0.5, 2.5, 4.5}) {
    const SpaceCurveSample w = world_sample(c, s);
    const ViewMeasurement m1 = measure(w, poses[0]), m2 = measure(w, poses[3]);
    const Triangulation tri = triangulate(m1, m2);
    const double h = 1e-5;
    const double fd = (image_point(poses[0], s + h) - image_point(poses[0], s - h)).norm() /
                      (image_point(poses[3], s + h) - image_point(poses[3], s - h)).norm();
    CHECK(rel_err(two_view_speed_ratio(w.frame.T, m1, m2, tri.rho1, tri.rho2), fd) <= 1e-8);
  }
}

TEST_CASE("dataset round trip") {
  const Scene scene = default_scene();
  for (auto [v1, v2] : {std::pair{0, 10}, std::pair{0, 3}, std::pair{5, 12}, std::pair{17, 1}}) {
    CAPTURE(v1);
    CAPTURE(v2);
    const Worst w = round_trip(scene, v1, v2);
    MESSAGE("views " << v1 << "," << v2 << " used " << w.used << " skipped " << w.skipped
                     << " point " << w.point << " T " << w.T << " N " << w.N << " K " << w.K
                     << " tau " << w.tau << " Kdot " << w.Kdot);
    CHECK(w.used >= 450);
    CHECK(w.point <= 1e-8);
    CHECK(w.T <= 1e-8);
    CHECK(w.N <= 1e-8);
    CHECK(w.K <= 1e-8);
    CHECK(w.tau <= 1e-6);
    CHECK(w.Kdot <= 1e-6);
  }
}

TEST_CASE("reconstruction inverts projection for arbitrary third-order data") {
  test::Rng rng(1234);
  int done = 0;
  for (int i = 0; i < 500; ++i) {
    SpaceCurveSample w;
    w.point = rng.vec(-1, 1);
    w.frame.T = rng.unit();
    Vec3 N = rng.unit();
    w.frame.N = (N - N.dot(w.frame.T) * w.frame.T).normalized();
    w.frame.B = w.frame.T.cross(w.frame.N);
    w.frame.G = 1;
    w.frame.K = rng.uniform(0.05, 3);
    w.frame.Kdot = rng.uniform(-2, 2);
    w.frame.tau = rng.uniform(-2, 2);
    const CameraPose p1 = look_at(Vec3(0, -6, 1) + rng.vec(-1, 1), Vec3::Zero());
    const CameraPose p2 = look_at(Vec3(4, -5, 2) + rng.vec(-1, 1), Vec3::Zero());
    ImageCurveSample s1, s2;
    ReconstructedPoint rp;
    try {
      s1 = project_sample(to_camera(w, p1));
      s2 = project_sample(to_camera(w, p2));
      rp = reconstruct_point(lift_measurement(s1, p1), lift_measurement(s2, p2));
    } catch (const GeometryError&) {
      continue;
    }
    ++done;
    const TransferResult back1 = transfer_to_view(lift_measurement(s1, p1), lift_measurement(s2, p2), p1);
    const ImageCurveSample& r1 = back1.sample;
    const double scale = std::max(1.0, std::abs(s1.frame.kappadot));
    CHECK((r1.point.gamma - s1.point.gamma).norm() <= 1e-8);
    CHECK((r1.frame.t - s1.frame.t).norm() <= 1e-8);
    CHECK(std::abs(r1.frame.kappa - s1.frame.kappa) <= 1e-8 * std::max(1.0, std::abs(s1.frame.kappa)));
    CHECK(std::abs(r1.frame.kappadot - s1.frame.kappadot) <= 1e-8 * scale);
    CHECK(rp.residuals.tangent_reprojection <= 1e-8);
  }
  CHECK(done > 400);
}

TEST_CASE("third view transfer") {
  const Scene scene = default_scene();
  const std::vector<CameraPose> poses = camera_orbit(scene);
  const std::vector<LabeledSample> samples = sample_scene(scene);
  double worst = 0;
  for (std::size_t i = 0; i < samples.size(); i += 7) {
    const SpaceCurveSample& w = samples[i].sample;
    const ViewMeasurement m1 = measure(w, poses[0]), m2 = measure(w, poses[10]);
    TransferResult self, third;
    try {
      self = transfer_to_view(m1, m2, poses[0]);
      third = transfer_to_view(m1, m2, poses[6]);
    } catch (const GeometryError& e) {
      CHECK(e.code() == ErrorCode::EpipolarTangency);
      continue;
    }
    const ImageCurveSample s1 = project_sample(to_camera(w, poses[0]));
    CHECK((self.sample.point.gamma - s1.point.gamma).norm() <= 1e-9);
    CHECK((self.sample.frame.t - s1.frame.t).norm() <= 1e-9);
    CHECK(rel_err(self.sample.frame.kappa, s1.frame.kappa) <= 1e-9);
    const ImageCurveSample s3 = project_sample(to_camera(w, poses[6]));
    worst = std::max({worst, (third.sample.point.gamma - s3.point.gamma).norm(),
                      (third.sample.frame.t - s3.frame.t).norm(),
                      rel_err(third.sample.frame.kappa, s3.frame.kappa),
                      rel_err(third.sample.frame.kappadot, s3.frame.kappadot)});
  }
  CHECK(worst <= 1e-7);
  // a camera looking away from the point
  const SpaceCurveSample& w = samples[10].sample;
  const CameraPose away = CameraPose::from_center(poses[0].R, poses[0].c + 30.0 * (w.point - poses[0].c));
  try {
    transfer_to_view(measure(w, poses[0]), measure(w, poses[10]), away);
    FAIL("expected BehindCamera");
  } catch (const GeometryError& e) {
    CHECK(e.code() == ErrorCode::BehindCamera);
  }
}

TEST_CASE("tangent orientation tests agree on the dataset") {
  const Scene scene = default_scene();
  const std::vector<CameraPose> poses = camera_orbit(scene);
  int agree = 0;
  for (const LabeledSample& ls : sample_scene(scene)) {
    try {
      const TangentReconstruction t =
          reconstruct_tangent(measure(ls.sample, poses[2]), measure(ls.sample, poses[9]));
      CHECK(t.T.dot(ls.sample.frame.T) > 0.0);
      ++agree;
    } catch (const GeometryError& e) {
      CHECK(e.code() == ErrorCode::EpipolarTangency);
    }
  }
  CHECK(agree >= 490);
}
