#include "mvg/motion.hpp"

#include <cassert>
#include <cmath>

namespace mvg {

namespace {

// x - x_z gamma, the image-plane part of a camera-frame vector
Vec3 plane_part(const Vec3& x, const Vec3& gamma) {
  Vec3 out = x - x.z() * gamma;
  out.z() = 0.0;
  return out;
}

Vec3 perp(const Vec3& t) { return Vec3(t.y(), -t.x(), 0.0); }

Mat3 second_order_rotation(const CameraMotion& m) {
  const Mat3 W = skew(m.Omega);
  return W * W + skew(m.Omega_t);
}

}  // namespace

CurveMotionState CurveMotionState::fixed(const Vec3& gamma, double rho) {
  CurveMotionState s;
  s.gamma = gamma;
  s.rho = rho;
  return s;
}

CurveMotionState CurveMotionState::occluding(const Vec3& gamma, double rho, const Vec3& Gw_t,
                                             double Kt) {
  CurveMotionState s;
  s.gamma = gamma;
  s.rho = rho;
  s.Gw_t = Gw_t;
  s.kind = CurveKind::Occluding;
  s.Kt = Kt;
  return s;
}

CurveMotionState CurveMotionState::nonrigid(const Vec3& gamma, double rho, const Vec3& Gw_t,
                                            const Vec3& Gw_tt) {
  CurveMotionState s;
  s.gamma = gamma;
  s.rho = rho;
  s.Gw_t = Gw_t;
  s.Gw_tt = Gw_tt;
  s.kind = CurveKind::Nonrigid;
  return s;
}

void CurveMotionState::validate(double tol) const {
  if (gamma.z() != 1.0) fail(ErrorCode::InvalidArgument, "image point must have unit third component");
  if (!(rho > 0.0)) fail(ErrorCode::InvalidArgument, "depth must be positive");
  switch (kind) {
    case CurveKind::Fixed:
      if (!Gw_t.isZero(0.0) || !Gw_tt.isZero(0.0))
        fail(ErrorCode::InvalidArgument, "fixed points have no world velocity");
      break;
    case CurveKind::Occluding:
      if (Gw_t.cross(gamma).norm() > tol * Gw_t.norm() * gamma.norm())
        fail(ErrorCode::InvalidArgument, "occluding velocity must lie along the visual ray");
      break;
    case CurveKind::Nonrigid:
      break;
  }
}

AngularVelocity angular_velocity(const Mat3& R_t, const Mat3& R, double max_residual) {
  const Mat3 M = R_t * R.transpose();
  const double sym = (0.5 * (M + M.transpose())).norm();
  if (sym > max_residual) fail(ErrorCode::NonSkew, "R_t R^T is not skew-symmetric");
  return {unskew(M), sym};
}

TaylorPose taylor_pose(const CameraMotion& m, double dt) {
  const Mat3 W = skew(m.Omega);
  TaylorPose p;
  p.R = Mat3::Identity() + W * dt + 0.5 * (skew(m.Omega_t) + W * W) * dt * dt;
  p.t = m.V * dt + 0.5 * m.V_t * dt * dt;
  p.c = -m.V * dt + 0.5 * (-m.V_t + 2.0 * W * m.V) * dt * dt;
  return p;
}

Vec3 point_velocity_camera(const Vec3& Gamma, const Vec3& Gw_t, const Mat3& R, const Vec3& Omega,
                           const Vec3& V, const Vec3& transl) {
  return Omega.cross(Gamma - transl) + R * Gw_t + V;
}

ImageVelocity image_velocity(const CurveMotionState& s, const CameraMotion& m) {
  const Vec3 Wg = m.Omega.cross(s.gamma);
  ImageVelocity out;
  out.rho_t = s.rho * Wg.z() + s.Gw_t.z() + m.V.z();
  out.gamma_t = plane_part(Wg, s.gamma) + plane_part(s.Gw_t, s.gamma) / s.rho +
                plane_part(m.V, s.gamma) / s.rho;
  return out;
}

ImageAcceleration image_acceleration(const CurveMotionState& s, const CameraMotion& m) {
  const ImageVelocity v = image_velocity(s, m);
  const Vec3 Mg = second_order_rotation(m) * s.gamma;
  const Vec3 forcing = 2.0 * m.Omega.cross(s.Gw_t) + s.Gw_tt + m.V_t;
  ImageAcceleration out;
  out.rho_tt = s.rho * Mg.z() + forcing.z();
  out.gamma_tt = plane_part(Mg, s.gamma) + plane_part(forcing, s.gamma) / s.rho -
                 2.0 * v.rho_t / s.rho * v.gamma_t;
  return out;
}

Vec3 fixed_point_flow(const Vec3& gamma, double rho, const CameraMotion& m) {
  return image_velocity(CurveMotionState::fixed(gamma, rho), m).gamma_t;
}

FlowMatrices flow_decomposition(const Vec3& gamma) {
  const double x = gamma.x();
  const double y = gamma.y();
  FlowMatrices f;
  f.A << 1.0, 0.0, -x,
         0.0, 1.0, -y,
         0.0, 0.0, 0.0;
  f.B << -x * y, 1.0 + x * x, -y,
         -(1.0 + y * y), x * y, x,
         0.0, 0.0, 0.0;
  return f;
}

double differential_epipolar_residual(const Vec3& gamma, const Vec3& gamma_t,
                                      const CameraMotion& m) {
  const Vec3 Vg = m.V.cross(gamma);
  return gamma_t.dot(Vg) + gamma.dot(m.Omega.cross(Vg));
}

NormalTangentialVelocity curve_velocity_frenet(const CurveMotionState& s, const Vec3& t,
                                               const CameraMotion& m, const Mat3& R,
                                               const Vec3& transl) {
  const Vec3 n = perp(t);
  const Vec3 gt = s.gamma.cross(t);
  const Vec3 gn = s.gamma.cross(n);
  const Vec3 W = (m.V - m.Omega.cross(transl) + R * s.Gw_t) / s.rho;
  NormalTangentialVelocity out;
  out.alpha = m.Omega.dot(s.gamma.cross(gn)) + W.dot(gn);
  out.beta = -m.Omega.dot(s.gamma.cross(gt)) - W.dot(gt);
#ifndef NDEBUG
  if (transl.isZero(0.0) && R.isIdentity(0.0)) {
    const Vec3 gv = image_velocity(s, m).gamma_t;
    assert((out.alpha * t + out.beta * n - gv).norm() <= 1e-9 * (1.0 + gv.norm()));
  }
#endif
  return out;
}

double alpha_from_beta(double beta, const Vec3& gamma, const Vec3& t, const CameraMotion& m,
                       double eps) {
  const Vec3 n = perp(t);
  const Vec3 gt = gamma.cross(t);
  const Vec3 gn = gamma.cross(n);
  const double pt = m.V.dot(gt);
  if (!(std::abs(pt) > eps * m.V.norm() * gt.norm()))
    fail(ErrorCode::EpipolarDegenerate, "epipolar line is tangent to the curve");
  const double a = m.Omega.dot(gamma.cross(gn));
  const double b = m.Omega.dot(gamma.cross(gt));
  return a - (beta + b) * m.V.dot(gn) / pt;
}

double frenet_epipolar_residual(double alpha, double beta, const Vec3& gamma, const Vec3& t,
                                const CameraMotion& m) {
  const Vec3 n = perp(t);
  const Vec3 gt = gamma.cross(t);
  const Vec3 gn = gamma.cross(n);
  const double a = m.Omega.dot(gamma.cross(gn));
  const double b = m.Omega.dot(gamma.cross(gt));
  return m.V.dot(gt) * (alpha - a) + m.V.dot(gn) * (beta + b);
}

Vec3 gamma_st(const CurveMotionState& s, const Vec3& gamma_s, double rho_s, const CameraMotion& m,
              const Vec3& Gw_st) {
  const Vec3& g = s.gamma;
  const double rho = s.rho;
  const Vec3 Wgs = m.Omega.cross(gamma_s);
  const Vec3 Wg = m.Omega.cross(g);
  const double mu = s.Gw_t.z();
  Vec3 out = Wgs - Wgs.z() * g - Wg.z() * gamma_s;
  out += (Gw_st - Gw_st.z() * g - (m.V.z() + mu) * gamma_s) / rho;
  out -= (m.V + s.Gw_t - (m.V.z() + mu) * g) * rho_s / (rho * rho);
  out.z() = 0.0;
  return out;
}

FrenetAcceleration gamma_tt_frenet(const CurveMotionState& s, const Vec3& t, const CameraMotion& m,
                                   double alpha, double beta) {
  const Vec3 n = perp(t);
  const Vec3 Mg = second_order_rotation(m) * s.gamma;
  const Vec3 forcing = 2.0 * m.Omega.cross(s.Gw_t) + s.Gw_tt + m.V_t;
  const double rate = m.Omega.cross(s.gamma).z() + (m.V.z() + s.Gw_t.z()) / s.rho;
  const double accel = Mg.z() + forcing.z() / s.rho;
  FrenetAcceleration out;
  out.tangential = t.dot(Mg) + t.dot(forcing) / s.rho - 2.0 * rate * alpha - accel * t.dot(s.gamma);
  out.normal = n.dot(Mg) + n.dot(forcing) / s.rho - 2.0 * rate * beta - accel * n.dot(s.gamma);
  return out;
}

Vec3 contour_generator_velocity(const Vec3& gamma, double rho, const Vec3& V, const Vec3& t,
                                double Kt, const Tolerances& tol) {
  if (!(std::abs(Kt) > tol.curvature))
    fail(ErrorCode::FlatSurfacePoint, "normal curvature along the ray vanishes");
  const Vec3 N = gamma.cross(t).normalized();
  return (V.dot(N) / (rho * Kt)) * gamma / gamma.squaredNorm();
}

Vec3 occluding_flow(const Vec3& gamma, double rho, const CameraMotion& m) {
  return fixed_point_flow(gamma, rho, m);
}

Vec3 occluding_gamma_tt(const CurveMotionState& s, const CameraMotion& m, const Vec3& gamma_t,
                        double rho_t) {
  const Vec3& g = s.gamma;
  const double rho = s.rho;
  const double mu = s.Gw_t.z();
  const Vec3 Mg = second_order_rotation(m) * g;
  const Vec3 forcing = 2.0 * m.Omega.cross(s.Gw_t) + m.V_t;
  return plane_part(Mg, g) + plane_part(forcing, g) / rho + (mu - 2.0 * rho_t) / rho * gamma_t -
         mu / rho * plane_part(m.Omega.cross(g), g);
}

Vec3 tangent_rate(const Vec3& t, const Vec3& gamma_st, double g) {
  const Vec3 n = perp(t);
  return (n.dot(gamma_st) / g) * n;
}

L1Residual l1_residual(const L1Input& in, const CameraMotion& m, const L1Options& opt) {
  if (in.kind == CurveKind::Nonrigid)
    fail(ErrorCode::InvalidArgument, "the L1 relation holds only for fixed and occluding curves");
  const Vec3& g = in.gamma;
  const Vec3 u = g.cross(in.t);
  const Vec3 w = g.cross(u);
  const Vec3 u_t = in.gamma_t.cross(in.t) + g.cross(in.t_t);
  const Vec3 w_t = in.gamma_t.cross(u) + g.cross(u_t);
  const double D = -(in.beta + m.Omega.dot(w));
  const double pt = m.V.dot(u);
  const double rot_g = m.Omega.cross(g).z();

  double r = m.V.z() * D * D;
  r += pt * (-in.beta_t - m.Omega_t.dot(w) - m.Omega.dot(w_t));
  r -= (m.V_t.dot(u) + m.V.dot(u_t)) * D;
  r += pt * rot_g * D;
  r += in.e3_dot_Gw_t * D * D;
  if (opt.rotation_coupling_term) r += m.Omega.cross(m.V).dot(u) * D;

  const double scale = std::abs(in.beta) + m.Omega.norm();
  const double norm = (m.V.norm() + m.Omega.norm() * in.depth_scale) * scale * scale +
                      opt.normalization_floor;
  return {r, r / norm};
}

}  // namespace mvg
