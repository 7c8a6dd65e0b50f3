#include "mvg/core.hpp"

#include <cmath>

namespace mvg {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonRegular: return "NonRegular";
    case ErrorCode::ZeroCurvature: return "ZeroCurvature";
    case ErrorCode::BehindCamera: return "BehindCamera";
    case ErrorCode::SingularIntrinsics: return "SingularIntrinsics";
    case ErrorCode::TangentAlongRay: return "TangentAlongRay";
    case ErrorCode::StationaryImagePoint: return "StationaryImagePoint";
    case ErrorCode::NonCoplanarRays: return "NonCoplanarRays";
    case ErrorCode::ParallelRays: return "ParallelRays";
    case ErrorCode::NegativeDepth: return "NegativeDepth";
    case ErrorCode::EpipolarTangency: return "EpipolarTangency";
    case ErrorCode::InconsistentSign: return "InconsistentSign";
    case ErrorCode::IllConditionedSystem: return "IllConditionedSystem";
    case ErrorCode::NonSkew: return "NonSkew";
    case ErrorCode::EpipolarDegenerate: return "EpipolarDegenerate";
    case ErrorCode::FlatSurfacePoint: return "FlatSurfacePoint";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::DegenerateLookAt: return "DegenerateLookAt";
    case ErrorCode::CameraInsideQuadric: return "CameraInsideQuadric";
    case ErrorCode::NoEpipolarMatch: return "NoEpipolarMatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

GeometryError::GeometryError(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw GeometryError(code, what); }

Mat3 skew(const Vec3& w) {
  Mat3 m;
  m << 0.0, -w.z(), w.y(),
       w.z(), 0.0, -w.x(),
       -w.y(), w.x(), 0.0;
  return m;
}

Vec3 unskew(const Mat3& m) {
  return 0.5 * Vec3(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1));
}

Mat3 rot_x(double theta) {
  return Eigen::AngleAxisd(theta, e1).toRotationMatrix();
}

Mat3 rot_y(double theta) {
  return Eigen::AngleAxisd(theta, e2).toRotationMatrix();
}

Mat3 rot_z(double theta) {
  return Eigen::AngleAxisd(theta, e3).toRotationMatrix();
}

Mat3 rodrigues(const Vec3& w) {
  const double angle = w.norm();
  if (angle == 0.0) return Mat3::Identity();
  return Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
}

bool is_rotation(const Mat3& R, double tol) {
  if (!R.allFinite()) return false;
  return (R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol &&
         std::abs(R.determinant() - 1.0) <= tol;
}

double speed_derivative(const Vec3& d1, const Vec3& d2) { return d2.dot(d1) / d1.norm(); }

namespace {

Frenet3 frenet3_impl(const Vec3& d1, const Vec3& d2, const Vec3& d3, const Tolerances& tol,
                     bool allow_straight) {
  Frenet3 f;
  f.G = d1.norm();
  if (!(f.G > tol.regular)) fail(ErrorCode::NonRegular, "curve speed below regularity threshold");
  f.T = d1 / f.G;
  const double Gp = d2.dot(f.T);
  const Vec3 KN = (d2 - Gp * f.T) / (f.G * f.G);
  f.K = KN.norm();
  if (!(f.K > tol.curvature)) {
    if (!allow_straight) fail(ErrorCode::ZeroCurvature, "curvature vanishes, normal undefined");
    f.K = 0.0;
    f.has_normal = false;
    return f;
  }
  f.N = KN / f.K;
  f.B = f.T.cross(f.N);
  const double G3 = f.G * f.G * f.G;
  // d3 = (G'' - G^3 K^2) T + (3 G G' K + G^3 Kdot) N + G^3 K tau B
  f.Kdot = (d3.dot(f.N) - 3.0 * f.G * Gp * f.K) / G3;
  f.tau = d3.dot(f.B) / (G3 * f.K);
  return f;
}

}  // namespace

Frenet3 frenet3_from_derivatives(const Vec3& d1, const Vec3& d2, const Vec3& d3,
                                 const Tolerances& tol) {
  return frenet3_impl(d1, d2, d3, tol, false);
}

Frenet3 frenet3_partial(const Vec3& d1, const Vec3& d2, const Vec3& d3, const Tolerances& tol) {
  return frenet3_impl(d1, d2, d3, tol, true);
}

Frenet2 frenet2_from_derivatives(const Vec3& d1, const Vec3& d2, const Vec3& d3,
                                 const Tolerances& tol) {
  if (d1.z() != 0.0 || d2.z() != 0.0 || d3.z() != 0.0)
    fail(ErrorCode::InvalidArgument, "image derivatives must have zero third component");
  Frenet2 f;
  f.g = d1.norm();
  if (!(f.g > tol.regular)) fail(ErrorCode::NonRegular, "image curve speed below threshold");
  f.t = d1 / f.g;
  f.n = Vec3(f.t.y(), -f.t.x(), 0.0);  // t x e3
  const double gp = d2.dot(f.t);
  const double g2 = f.g * f.g;
  f.kappa = d2.dot(f.n) / g2;
  // d3 . n = 3 g g' kappa + g^3 kappadot
  f.kappadot = (d3.dot(f.n) - 3.0 * f.g * gp * f.kappa) / (g2 * f.g);
  return f;
}

Mat3 Intrinsics::matrix() const {
  Mat3 m;
  m << alpha_u, skew, u0,
       0.0, alpha_v, v0,
       0.0, 0.0, 1.0;
  return m;
}

bool Intrinsics::invertible() const {
  return std::isfinite(alpha_u) && std::isfinite(alpha_v) && std::isfinite(skew) &&
         std::isfinite(u0) && std::isfinite(v0) && alpha_u * alpha_v != 0.0;
}

Mat3 Intrinsics::inverse() const {
  if (!invertible()) fail(ErrorCode::SingularIntrinsics, "intrinsic matrix is singular");
  Mat3 m;
  m << 1.0 / alpha_u, -skew / (alpha_u * alpha_v), (skew * v0 - alpha_v * u0) / (alpha_u * alpha_v),
       0.0, 1.0 / alpha_v, -v0 / alpha_v,
       0.0, 0.0, 1.0;
  return m;
}

CameraPose CameraPose::from_center(const Mat3& R, const Vec3& c, const Intrinsics& K) {
  CameraPose p;
  p.R = R;
  p.c = c;
  p.t = -R * c;
  p.K = K;
  return p;
}

Vec3 world_to_camera(const Vec3& p, const CameraPose& pose) { return pose.R * p + pose.t; }

ImagePoint project(const Vec3& p_cam, const Tolerances& tol) {
  const double z = p_cam.z();
  if (!(z > tol.depth)) fail(ErrorCode::BehindCamera, "point is not in front of the camera");
  ImagePoint ip;
  ip.gamma = Vec3(p_cam.x() / z, p_cam.y() / z, 1.0);
  ip.rho = z;
  return ip;
}

Vec3 lift(const ImagePoint& p) { return p.rho.value_or(1.0) * p.gamma; }

DepthDerivatives depth_derivatives(const Frenet3& f, double z, double G_prime) {
  DepthDerivatives d;
  d.rho = z;
  d.rho_d1 = f.G * f.T.z();
  d.rho_d2 = G_prime * f.T.z() + f.G * f.G * f.K * f.N.z();
  return d;
}

Vec3 to_pixel(const ImagePoint& p, const Intrinsics& K) {
  if (!K.invertible()) fail(ErrorCode::SingularIntrinsics, "intrinsic matrix is singular");
  return K.matrix() * p.gamma;
}

ImagePoint from_pixel(const Vec3& p_im, const Intrinsics& K) {
  ImagePoint ip;
  ip.gamma = K.inverse() * p_im;
  ip.gamma.z() = 1.0;
  return ip;
}

}  // namespace mvg
