#pragma once

#include "mvg/core.hpp"

// Differential camera motion and the image-curve flow relations it induces.
// Quantities are taken at the reference time t = 0, where the camera frame
// coincides with the world frame (R = I, c = 0). Normal velocity beta is
// measured along n = t x e3.

namespace mvg {

struct CameraMotion {
  Vec3 Omega = Vec3::Zero();
  Vec3 Omega_t = Vec3::Zero();
  Vec3 V = Vec3::Zero();
  Vec3 V_t = Vec3::Zero();
};

enum class CurveKind { Fixed, Occluding, Nonrigid };

struct CurveMotionState {
  Vec3 gamma = e3;
  double rho = 1.0;
  Vec3 Gw_t = Vec3::Zero();
  Vec3 Gw_tt = Vec3::Zero();
  CurveKind kind = CurveKind::Fixed;
  double Kt = 0.0;  // normal curvature, occluding only

  static CurveMotionState fixed(const Vec3& gamma, double rho);
  static CurveMotionState occluding(const Vec3& gamma, double rho, const Vec3& Gw_t, double Kt);
  static CurveMotionState nonrigid(const Vec3& gamma, double rho, const Vec3& Gw_t,
                                   const Vec3& Gw_tt);
  // throws InvalidArgument when the kind-specific invariants fail
  void validate(double tol = 1e-10) const;
};

struct AngularVelocity {
  Vec3 Omega;
  double symmetric_residual;
};

AngularVelocity angular_velocity(const Mat3& R_t, const Mat3& R, double max_residual = 1e-6);

struct TaylorPose {
  Mat3 R;
  Vec3 t;
  Vec3 c;
};

TaylorPose taylor_pose(const CameraMotion& m, double dt);

// transl is the camera translation at the evaluation time (zero at t = 0)
Vec3 point_velocity_camera(const Vec3& Gamma, const Vec3& Gw_t, const Mat3& R, const Vec3& Omega,
                           const Vec3& V, const Vec3& transl = Vec3::Zero());

struct ImageVelocity {
  Vec3 gamma_t;
  double rho_t;
};

struct ImageAcceleration {
  Vec3 gamma_tt;
  double rho_tt;
};

ImageVelocity image_velocity(const CurveMotionState& s, const CameraMotion& m);
ImageAcceleration image_acceleration(const CurveMotionState& s, const CameraMotion& m);
Vec3 fixed_point_flow(const Vec3& gamma, double rho, const CameraMotion& m);

struct FlowMatrices {
  Mat3 A;
  Mat3 B;
};

// gamma_t = A V / rho + B Omega
FlowMatrices flow_decomposition(const Vec3& gamma);

double differential_epipolar_residual(const Vec3& gamma, const Vec3& gamma_t, const CameraMotion& m);

struct NormalTangentialVelocity {
  double alpha;  // along t
  double beta;   // along n
};

// R and transl describe the camera at the evaluation time; identity and zero at t = 0.
NormalTangentialVelocity curve_velocity_frenet(const CurveMotionState& s, const Vec3& t,
                                               const CameraMotion& m,
                                               const Mat3& R = Mat3::Identity(),
                                               const Vec3& transl = Vec3::Zero());

inline constexpr double kEpipolarDegenerateEps = 1e-12;

double alpha_from_beta(double beta, const Vec3& gamma, const Vec3& t, const CameraMotion& m,
                       double eps = kEpipolarDegenerateEps);
double frenet_epipolar_residual(double alpha, double beta, const Vec3& gamma, const Vec3& t,
                                const CameraMotion& m);

// gamma_s, rho_s: spatial derivatives along the curve; Gw_st defaults to zero.
Vec3 gamma_st(const CurveMotionState& s, const Vec3& gamma_s, double rho_s, const CameraMotion& m,
              const Vec3& Gw_st = Vec3::Zero());

struct FrenetAcceleration {
  double tangential;  // t . gamma_tt
  double normal;      // n . gamma_tt
};

FrenetAcceleration gamma_tt_frenet(const CurveMotionState& s, const Vec3& t, const CameraMotion& m,
                                   double alpha, double beta);

Vec3 contour_generator_velocity(const Vec3& gamma, double rho, const Vec3& V, const Vec3& t,
                                double Kt, const Tolerances& tol = kTolerances);
Vec3 occluding_flow(const Vec3& gamma, double rho, const CameraMotion& m);
// rho_t is the depth rate of the generator point itself
Vec3 occluding_gamma_tt(const CurveMotionState& s, const CameraMotion& m, const Vec3& gamma_t,
                        double rho_t);

struct L1Input {
  Vec3 gamma = e3;
  Vec3 t = e1;
  double beta = 0.0;
  double beta_t = 0.0;
  Vec3 gamma_t = Vec3::Zero();  // image velocity at the point
  Vec3 t_t = Vec3::Zero();      // time derivative of the unit tangent
  double e3_dot_Gw_t = 0.0;
  CurveKind kind = CurveKind::Fixed;
  double depth_scale = 1.0;  // only enters the normalization
};

struct L1Options {
  bool rotation_coupling_term = true;  // the (Omega x V).(gamma x t) D term
  double normalization_floor = 1e-30;
};

struct L1Residual {
  double raw;
  double normalized;
};

// t_t from the mixed derivative gamma_st along a parameter of speed g
Vec3 tangent_rate(const Vec3& t, const Vec3& gamma_st, double g);

L1Residual l1_residual(const L1Input& in, const CameraMotion& m, const L1Options& opt = {});

}  // namespace mvg
