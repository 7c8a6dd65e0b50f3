#include "mvg/reconstruction.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <cassert>
#include <cmath>

namespace mvg {

namespace {

double condition_number(const Mat3& A) {
  const Vec3 sv = Eigen::JacobiSVD<Mat3>(A).singularValues();
  if (sv(2) == 0.0) return INFINITY;
  return sv(0) / sv(2);
}

Vec3 solve_frenet_system(const ViewMeasurement& m1, const ViewMeasurement& m2, const Vec3& T,
                         const Vec3& rhs) {
  Mat3 A;
  A.row(0) = m1.gamma.cross(m1.t).transpose();
  A.row(1) = m2.gamma.cross(m2.t).transpose();
  A.row(2) = T.transpose();
  if (!(condition_number(A) < kMaxCondition))
    fail(ErrorCode::IllConditionedSystem, "Frenet system is ill conditioned");
  return A.fullPivLu().solve(rhs);
}

double sign_test(const Vec3& T, const ViewMeasurement& m) {
  return (T - T.dot(m.e3) * m.gamma).dot(m.t);
}

}  // namespace

ViewMeasurement lift_measurement(const ImageCurveSample& sample, const CameraPose& pose) {
  ViewMeasurement m;
  const Mat3 Rt = pose.R.transpose();
  m.gamma = Rt * sample.point.gamma;
  m.t = Rt * sample.frame.t;
  m.e3 = Rt * e3;
  m.c = pose.c;
  m.kappa = sample.frame.kappa;
  m.kappadot = sample.frame.kappadot;
  return m;
}

Triangulation triangulate(const ViewMeasurement& m1, const ViewMeasurement& m2,
                          const TriangulationOptions& opt) {
  const Vec3 b = m2.c - m1.c;
  const Vec3 g1 = m1.gamma;
  const Vec3 g2 = m2.gamma;
  const Vec3 cr = g1.cross(g2);
  if (std::abs(b.dot(cr)) > opt.coplanar * b.norm() * cr.norm())
    fail(ErrorCode::NonCoplanarRays, "visual rays do not intersect");
  const double g11 = g1.dot(g1);
  const double g22 = g2.dot(g2);
  const double g12 = g1.dot(g2);
  const double den = g11 * g22 - g12 * g12;
  if (!(den > opt.parallel)) fail(ErrorCode::ParallelRays, "visual rays are parallel");
  const double b1 = b.dot(g1);
  const double b2 = b.dot(g2);
  Triangulation out;
  out.rho1 = (b1 * g22 - b2 * g12) / den;
  out.rho2 = (b1 * g12 - b2 * g11) / den;
  if (!(out.rho1 > opt.depth) || !(out.rho2 > opt.depth))
    fail(ErrorCode::NegativeDepth, "reconstructed point is behind a camera");
  out.point = m1.c + out.rho1 * g1;
  out.residual = (out.point - (m2.c + out.rho2 * g2)).norm();
  return out;
}

DepthSpeedRelations depth_speed_relations(const ViewMeasurement& m1, const ViewMeasurement& m2,
                                          double eps_epi) {
  const Vec3 p1 = m1.gamma.cross(m1.t);
  const Vec3 p2 = m2.gamma.cross(m2.t);
  const double d1 = m1.gamma.dot(p2);
  const double d2 = m2.gamma.dot(p1);
  if (std::abs(d1) <= eps_epi * m1.gamma.norm() * p2.norm() ||
      std::abs(d2) <= eps_epi * m2.gamma.norm() * p1.norm())
    fail(ErrorCode::EpipolarTangency, "tangent lies in the epipolar plane");
  return {-m1.t.dot(p2) / d1, -m2.t.dot(p1) / d2};
}

TangentReconstruction reconstruct_tangent(const ViewMeasurement& m1, const ViewMeasurement& m2,
                                          double eps_epi) {
  const Vec3 a = m1.t.cross(m1.gamma);
  const Vec3 b = m2.t.cross(m2.gamma);
  const Vec3 u = a.cross(b);
  const double len = u.norm();
  if (!(len > eps_epi * a.norm() * b.norm()))
    fail(ErrorCode::EpipolarTangency, "tangent lies in the epipolar plane");
  Vec3 T = u / len;
  const double s1 = sign_test(T, m1);
  const double s2 = sign_test(T, m2);
  if (s1 == 0.0 || s2 == 0.0 || (s1 > 0.0) != (s2 > 0.0))
    fail(ErrorCode::InconsistentSign, "tangent orientation differs between views");
  TangentReconstruction out;
  out.epsilon = s1 > 0.0 ? 1 : -1;
  out.T = out.epsilon * T;
  const DepthSpeedRelations r = depth_speed_relations(m1, m2, eps_epi);
  out.theta1 = std::atan2(1.0, r.view1 * m1.gamma.norm());
  out.theta2 = std::atan2(1.0, r.view2 * m2.gamma.norm());
  assert(((r.view1 * m1.gamma + m1.t).normalized() - out.T).norm() < 1e-6);
  return out;
}

double view_speed_ratio(const Vec3& T, const ViewMeasurement& m, double rho) {
  return (T - T.dot(m.e3) * m.gamma).norm() / rho;
}

double view_speed_derivative(double K, const Vec3& N, const Vec3& T, const ViewMeasurement& m,
                             double rho, double g) {
  return ((N - N.dot(m.e3) * m.gamma).dot(m.t) * K - 2.0 * g * T.dot(m.e3)) / rho;
}

double two_view_speed_ratio(const Vec3& T, const ViewMeasurement& m1, const ViewMeasurement& m2,
                            double rho1, double rho2, const Tolerances& tol) {
  const double n1 = (T - T.dot(m1.e3) * m1.gamma).norm();
  const double n2 = (T - T.dot(m2.e3) * m2.gamma).norm();
  if (!(n1 > tol.regular) || !(n2 > tol.regular))
    fail(ErrorCode::StationaryImagePoint, "image speed vanishes");
  return rho2 / rho1 * n1 / n2;
}

CurvatureReconstruction reconstruct_curvature(const ViewMeasurement& m1, const ViewMeasurement& m2,
                                              const Vec3& T, double rho1, double rho2, double g1,
                                              double g2, const Tolerances& tol) {
  const Vec3 rhs(-rho1 * g1 * g1 * m1.kappa, -rho2 * g2 * g2 * m2.kappa, 0.0);
  CurvatureReconstruction out;
  out.NK = solve_frenet_system(m1, m2, T, rhs);
  out.orthogonality = std::abs(out.NK.dot(T));
  out.K = out.NK.norm();
  if (!(out.K > tol.curvature)) fail(ErrorCode::ZeroCurvature, "reconstructed curvature vanishes");
  out.N = out.NK / out.K;
  out.B = T.cross(out.N);
  return out;
}

TorsionReconstruction reconstruct_torsion(const ViewMeasurement& m1, const ViewMeasurement& m2,
                                          const Vec3& T, const Vec3& N, const Vec3& B, double K,
                                          double rho1, double rho2, double g1, double g2,
                                          double gp1, double gp2, const Tolerances& tol) {
  if (!(K > tol.curvature)) fail(ErrorCode::ZeroCurvature, "torsion undefined at zero curvature");
  auto row = [&](const ViewMeasurement& m, double rho, double g, double gp) {
    return -(3.0 * g * g * m.kappa * m.e3.dot(T) +
             rho * (3.0 * g * gp * m.kappa + g * g * g * m.kappadot));
  };
  const Vec3 rhs(row(m1, rho1, g1, gp1), row(m2, rho2, g2, gp2), 0.0);
  TorsionReconstruction out;
  out.tau_tilde = solve_frenet_system(m1, m2, T, rhs);
  out.tau = out.tau_tilde.dot(B) / K;
  out.Kdot = out.tau_tilde.dot(N);
  out.residual = std::abs(out.tau_tilde.dot(T));
  return out;
}

ReconstructedPoint reconstruct_point(const ViewMeasurement& m1, const ViewMeasurement& m2,
                                     const Tolerances& tol) {
  ReconstructedPoint rp;
  const Triangulation tri = triangulate(m1, m2);
  rp.point = tri.point;
  rp.rho1 = tri.rho1;
  rp.rho2 = tri.rho2;
  rp.residuals.triangulation = tri.residual;

  const TangentReconstruction tr = reconstruct_tangent(m1, m2);
  rp.theta1 = tr.theta1;
  rp.theta2 = tr.theta2;
  rp.epsilon = tr.epsilon;
  rp.frame.T = tr.T;
  rp.frame.G = 1.0;

  auto reproject = [&](const ViewMeasurement& m) {
    const Vec3 d = (tr.T - tr.T.dot(m.e3) * m.gamma).normalized();
    return (d - m.t).norm();
  };
  rp.residuals.tangent_reprojection = std::max(reproject(m1), reproject(m2));

  const double g1 = view_speed_ratio(tr.T, m1, tri.rho1);
  const double g2 = view_speed_ratio(tr.T, m2, tri.rho2);
  if (!(g1 > tol.regular) || !(g2 > tol.regular))
    fail(ErrorCode::StationaryImagePoint, "image speed vanishes");

  CurvatureReconstruction cr;
  try {
    cr = reconstruct_curvature(m1, m2, tr.T, tri.rho1, tri.rho2, g1, g2, tol);
  } catch (const GeometryError& e) {
    if (e.code() != ErrorCode::ZeroCurvature) throw;
    rp.frame.has_normal = false;
    return rp;
  }
  rp.frame.K = cr.K;
  rp.frame.N = cr.N;
  rp.frame.B = cr.B;
  rp.residuals.curvature_orthogonality = cr.orthogonality;

  const double gp1 = view_speed_derivative(cr.K, cr.N, tr.T, m1, tri.rho1, g1);
  const double gp2 = view_speed_derivative(cr.K, cr.N, tr.T, m2, tri.rho2, g2);
  const TorsionReconstruction tor =
      reconstruct_torsion(m1, m2, tr.T, cr.N, cr.B, cr.K, tri.rho1, tri.rho2, g1, g2, gp1, gp2, tol);
  rp.frame.tau = tor.tau;
  rp.frame.Kdot = tor.Kdot;
  rp.residuals.torsion_orthogonality = tor.residual;
  return rp;
}

TransferResult transfer_to_view(const ViewMeasurement& m1, const ViewMeasurement& m2,
                                const CameraPose& pose3, const Tolerances& tol) {
  TransferResult out;
  out.source = reconstruct_point(m1, m2, tol);
  SpaceCurveSample cam;
  cam.point = world_to_camera(out.source.point, pose3);
  cam.frame = out.source.frame;
  cam.frame.T = pose3.R * out.source.frame.T;
  cam.frame.N = pose3.R * out.source.frame.N;
  cam.frame.B = pose3.R * out.source.frame.B;
  cam.frame_id = FrameTag::camera(0);
  out.sample = project_sample(cam, tol);
  return out;
}

}  // namespace mvg
