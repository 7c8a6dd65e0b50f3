#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <optional>
#include <stdexcept>
#include <string>

// Fixed-size geometry, Frenet frames, pinhole projection.
//
// Matrices are indexed (row, col). A rotation R maps world vectors into the
// camera frame: Gamma = R (Gamma_w - c). rot_z(theta) is the active rotation
// taking e1 to (cos theta, sin theta, 0).
//
// Image tangents carry the normal n = t x e3. Under this orientation a
// counterclockwise unit circle has curvature -1.

namespace mvg {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline const Vec3 e1{1.0, 0.0, 0.0};
inline const Vec3 e2{0.0, 1.0, 0.0};
inline const Vec3 e3{0.0, 0.0, 1.0};

enum class ErrorCode {
  NonRegular,
  ZeroCurvature,
  BehindCamera,
  SingularIntrinsics,
  TangentAlongRay,
  StationaryImagePoint,
  NonCoplanarRays,
  ParallelRays,
  NegativeDepth,
  EpipolarTangency,
  InconsistentSign,
  IllConditionedSystem,
  NonSkew,
  EpipolarDegenerate,
  FlatSurfacePoint,
  OutOfRange,
  DegenerateLookAt,
  CameraInsideQuadric,
  NoEpipolarMatch,
  InvalidArgument,
};

const char* to_string(ErrorCode code);

class GeometryError : public std::runtime_error {
 public:
  GeometryError(ErrorCode code, const std::string& what);
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

struct Tolerances {
  double regular = 1e-10;    // minimum speed
  double curvature = 1e-10;  // below this K is treated as zero
  double depth = 1e-9;       // minimum positive depth
};

inline constexpr Tolerances kTolerances{};

Mat3 skew(const Vec3& w);
Vec3 unskew(const Mat3& m);
Mat3 rot_x(double theta);
Mat3 rot_y(double theta);
Mat3 rot_z(double theta);
// exp of skew(w)
Mat3 rodrigues(const Vec3& w);
bool is_rotation(const Mat3& R, double tol = 1e-12);

struct Frenet3 {
  Vec3 T = Vec3::Zero();
  Vec3 N = Vec3::Zero();
  Vec3 B = Vec3::Zero();
  double G = 0.0;
  double K = 0.0;
  double Kdot = 0.0;
  double tau = 0.0;
  // false for straight pieces: N, B, Kdot, tau are meaningless
  bool has_normal = true;
};

struct Frenet2 {
  Vec3 t = Vec3::Zero();
  Vec3 n = Vec3::Zero();
  double g = 0.0;
  double kappa = 0.0;
  double kappadot = 0.0;
};

Frenet3 frenet3_from_derivatives(const Vec3& d1, const Vec3& d2, const Vec3& d3,
                                 const Tolerances& tol = kTolerances);
// Same as above but reports K = 0 with has_normal = false instead of throwing.
Frenet3 frenet3_partial(const Vec3& d1, const Vec3& d2, const Vec3& d3,
                        const Tolerances& tol = kTolerances);
Frenet2 frenet2_from_derivatives(const Vec3& d1, const Vec3& d2, const Vec3& d3,
                                 const Tolerances& tol = kTolerances);

// Derivative of the parametrization speed, d/ds ||d1||.
double speed_derivative(const Vec3& d1, const Vec3& d2);

struct Intrinsics {
  double alpha_u = 1.0;
  double alpha_v = 1.0;
  double skew = 0.0;
  double u0 = 0.0;
  double v0 = 0.0;

  Mat3 matrix() const;
  Mat3 inverse() const;
  bool invertible() const;
};

struct CameraPose {
  Mat3 R = Mat3::Identity();
  Vec3 c = Vec3::Zero();
  Vec3 t = Vec3::Zero();
  Intrinsics K{};

  static CameraPose from_center(const Mat3& R, const Vec3& c, const Intrinsics& K = {});
};

struct ImagePoint {
  Vec3 gamma = e3;
  std::optional<double> rho;
  std::optional<double> rho_d1;
  std::optional<double> rho_d2;
};

Vec3 world_to_camera(const Vec3& p, const CameraPose& pose);
ImagePoint project(const Vec3& p_cam, const Tolerances& tol = kTolerances);
Vec3 lift(const ImagePoint& p);

struct DepthDerivatives {
  double rho = 0.0;
  double rho_d1 = 0.0;
  double rho_d2 = 0.0;
};

// f is expressed in the camera frame; G_prime = 0 under arc length.
DepthDerivatives depth_derivatives(const Frenet3& f, double z, double G_prime = 0.0);

Vec3 to_pixel(const ImagePoint& p, const Intrinsics& K);
ImagePoint from_pixel(const Vec3& p_im, const Intrinsics& K);

}  // namespace mvg
