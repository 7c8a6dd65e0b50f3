#pragma once

#include "mvg/motion.hpp"
#include "mvg/projection.hpp"

#include <cmath>
#include <string>
#include <vector>

// Synthetic validation world: analytic curves with closed-form derivatives,
// a circular look-at camera orbit, rendering into pixel coordinates, and
// contour generators of axis-aligned quadrics.
//
// Curve families, in local coordinates before rotation and translation:
//   helix     (a cos s, a sin s, b s)
//   parabola  (s, a s^2, 0)
//   ellipse   (a cos s, b sin s, 0)
//   line      (s, 0, 0)
//   saddle    (a cos s, a sin s, b cos 2s)

namespace mvg {

template <class S>
using Vec3T = Eigen::Matrix<S, 3, 1>;
template <class S>
using Mat3T = Eigen::Matrix<S, 3, 3>;

enum class CurveFamily { Helix, Parabola, Ellipse, Line, Saddle };

const char* to_string(CurveFamily f);
CurveFamily curve_family_from_string(const std::string& name);
bool is_planar(CurveFamily f);

struct AnalyticCurve {
  int id = 0;
  CurveFamily family = CurveFamily::Helix;
  double a = 1.0;
  double b = 1.0;
  double s0 = 0.0;
  double s1 = 1.0;
  int samples = 100;
  Vec3 center = Vec3::Zero();
  Vec3 rotation = Vec3::Zero();  // axis-angle

  Mat3 orientation() const { return rodrigues(rotation); }
  void validate() const;
};

template <class S>
struct CurveJet {
  Vec3T<S> point, d1, d2, d3;
};

// Closed-form position and first three parameter derivatives, no range check.
template <class S>
CurveJet<S> curve_jet(const AnalyticCurve& c, S s) {
  using std::cos;
  using std::sin;
  const S a = S(c.a);
  const S b = S(c.b);
  const S cs = cos(s), sn = sin(s);
  CurveJet<S> j;
  switch (c.family) {
    case CurveFamily::Helix:
      j.point = {a * cs, a * sn, b * s};
      j.d1 = {-a * sn, a * cs, b};
      j.d2 = {-a * cs, -a * sn, S(0)};
      j.d3 = {a * sn, -a * cs, S(0)};
      break;
    case CurveFamily::Parabola:
      j.point = {s, a * s * s, S(0)};
      j.d1 = {S(1), S(2) * a * s, S(0)};
      j.d2 = {S(0), S(2) * a, S(0)};
      j.d3 = Vec3T<S>::Zero();
      break;
    case CurveFamily::Ellipse:
      j.point = {a * cs, b * sn, S(0)};
      j.d1 = {-a * sn, b * cs, S(0)};
      j.d2 = {-a * cs, -b * sn, S(0)};
      j.d3 = {a * sn, -b * cs, S(0)};
      break;
    case CurveFamily::Line:
      j.point = {s, S(0), S(0)};
      j.d1 = {S(1), S(0), S(0)};
      j.d2 = Vec3T<S>::Zero();
      j.d3 = Vec3T<S>::Zero();
      break;
    case CurveFamily::Saddle: {
      const S c2 = cos(S(2) * s), s2 = sin(S(2) * s);
      j.point = {a * cs, a * sn, b * c2};
      j.d1 = {-a * sn, a * cs, S(-2) * b * s2};
      j.d2 = {-a * cs, -a * sn, S(-4) * b * c2};
      j.d3 = {a * sn, -a * cs, S(8) * b * s2};
      break;
    }
  }
  const Mat3T<S> R = c.orientation().template cast<S>();
  j.point = c.center.template cast<S>() + R * j.point;
  j.d1 = R * j.d1;
  j.d2 = R * j.d2;
  j.d3 = R * j.d3;
  return j;
}

struct CurveDerivatives {
  Vec3 point, d1, d2, d3;
};

CurveDerivatives evaluate_curve(const AnalyticCurve& c, double s);
// Midpoint sampling: s_k = s0 + (k + 1/2)(s1 - s0)/n.
double sample_parameter(const AnalyticCurve& c, int k);
std::vector<SpaceCurveSample> sample_curve(const AnalyticCurve& c,
                                           const Tolerances& tol = kTolerances);

struct Quadric {
  enum class Kind { Sphere, Ellipsoid };
  int id = 0;
  Kind kind = Kind::Sphere;
  Vec3 center = Vec3::Zero();
  Vec3 semi_axes = Vec3::Ones();

  // (x - q)^T A (x - q) = 1
  Mat3 shape() const;
  void validate() const;
};

struct Orbit {
  Vec3 center = Vec3::Zero();
  Vec3 axis = e3;
  double radius = 10.0;
  double elevation = 4.0;
  int frames = 20;
  double angular_rate = 1.0;  // rad/s
  double phase = 0.0;
  Intrinsics K{600.0, 600.0, 0.0, 250.0, 200.0};
  int image_width = 500;
  int image_height = 400;

  double frame_time(int k) const;
};

template <class S>
struct OrbitState {
  Mat3T<S> R;
  Vec3T<S> c, c_dot, c_ddot;
};

// Camera looks at the orbit center; image x = forward x axis, y = forward x x.
template <class S>
OrbitState<S> orbit_state(const Orbit& o, S time) {
  using std::cos;
  using std::sin;
  const Vec3T<S> a = o.axis.normalized().template cast<S>();
  Vec3T<S> ref = (std::abs(o.axis.normalized().x()) < 0.9 ? e1 : e2).template cast<S>();
  const Vec3T<S> u = a.cross(ref).normalized();
  const Vec3T<S> w = a.cross(u);
  const S phi = S(o.phase) + S(o.angular_rate) * time;
  const S r = S(o.radius), om = S(o.angular_rate);
  const Vec3T<S> radial = cos(phi) * u + sin(phi) * w;
  OrbitState<S> st;
  st.c = o.center.template cast<S>() + S(o.elevation) * a + r * radial;
  st.c_dot = r * om * (-sin(phi) * u + cos(phi) * w);
  st.c_ddot = -r * om * om * radial;
  const Vec3T<S> z = (o.center.template cast<S>() - st.c).normalized();
  const Vec3T<S> zx = z.cross(a);
  if (!(zx.norm() > S(1e-9))) fail(ErrorCode::DegenerateLookAt, "view direction parallel to up");
  const Vec3T<S> x = zx.normalized();
  const Vec3T<S> y = z.cross(x);
  st.R.row(0) = x.transpose();
  st.R.row(1) = y.transpose();
  st.R.row(2) = z.transpose();
  return st;
}

CameraPose orbit_pose(const Orbit& o, double time);
std::vector<CameraPose> camera_orbit(const Orbit& o);
// Differential motion relative to the camera frame at `time`.
CameraMotion orbit_motion(const Orbit& o, double time);

struct Scene {
  std::vector<AnalyticCurve> curves;
  std::vector<Quadric> quadrics;
  Orbit orbit{};
  int generator_samples = 2048;

  void validate() const;
};

Scene default_scene();
std::vector<CameraPose> camera_orbit(const Scene& scene);

struct LabeledSample {
  int curve_id = 0;
  int sample_id = 0;
  double s = 0.0;
  SpaceCurveSample sample;  // world frame
};

std::vector<LabeledSample> sample_scene(const Scene& scene, const Tolerances& tol = kTolerances);

struct RenderedSample {
  int curve_id = 0;
  int sample_id = 0;
  double s = 0.0;
  ImageCurveSample pixel;
  ImageCurveSample normalized;
  SpaceCurveSample world;
};

struct RenderResult {
  std::vector<RenderedSample> samples;
  int dropped_behind = 0;
  int dropped_outside = 0;
  int dropped_degenerate = 0;
};

RenderResult render_view(const std::vector<LabeledSample>& samples, const CameraPose& pose,
                         int width, int height, const Tolerances& tol = kTolerances);

struct GeneratorSample {
  SpaceCurveSample sample;  // world frame
  double Kt = 0.0;
  Vec3 normal = Vec3::Zero();  // outward surface normal
  double phi = 0.0;
};

// Point on the contour generator seen from camera center c, with phi
// derivatives; orientation makes (x - c) x T point into the surface.
template <class S>
CurveJet<S> generator_jet(const Quadric& q, const Vec3T<S>& c, S phi) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  const Vec3T<S> ax = q.semi_axes.template cast<S>();
  const Vec3T<S> qc = q.center.template cast<S>();
  const Vec3T<S> p = (c - qc).cwiseQuotient(ax);
  const S pn2 = p.squaredNorm();
  if (!(pn2 > S(1))) fail(ErrorCode::CameraInsideQuadric, "camera center inside the quadric");
  const Vec3T<S> ph = p / sqrt(pn2);
  const Vec3T<S> ref = (std::abs(double(ph.z())) < 0.9 ? e3 : e1).template cast<S>();
  const Vec3T<S> u = ref.cross(ph).normalized();
  Vec3T<S> w = ph.cross(u);
  const S rs = sqrt(S(1) - S(1) / pn2);
  // orientation test at phi = 0
  {
    const Vec3T<S> z0 = p / pn2 + rs * u;
    const Vec3T<S> x0 = qc + ax.cwiseProduct(z0);
    const Vec3T<S> T0 = ax.cwiseProduct(w);
    const Vec3T<S> grad = z0.cwiseQuotient(ax);
    if ((x0 - c).cross(T0).dot(grad) > S(0)) w = -w;
  }
  const S cp = cos(phi), sp = sin(phi);
  CurveJet<S> j;
  j.point = qc + ax.cwiseProduct(p / pn2 + rs * (cp * u + sp * w));
  j.d1 = ax.cwiseProduct(rs * (-sp * u + cp * w));
  j.d2 = ax.cwiseProduct(-rs * (cp * u + sp * w));
  j.d3 = ax.cwiseProduct(rs * (sp * u - cp * w));
  return j;
}

// Normal curvature along the unit ray direction, signed so that a convex
// surface seen from outside is positive.
double occluding_normal_curvature(const Quadric& q, const Vec3& x, const Vec3& c, const Vec3& T);

std::vector<GeneratorSample> quadric_contour_generator(const Quadric& q, const CameraPose& pose,
                                                       int n);

struct GeneratorFrame {
  double time = 0.0;
  Vec3 c = Vec3::Zero();
  Vec3 c_dot = Vec3::Zero();
  std::vector<GeneratorSample> samples;
};

GeneratorFrame generator_frame(const Quadric& q, const Orbit& o, double time, int n);

struct EpipolarMatch {
  int index = 0;
  Vec3 next_point = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();  // world frame estimate of Gamma_t
  double angle = 0.0;            // grazing-angle error of the matched point, rad
  bool frontier = false;         // epipolar plane misses the other generator; closest approach used
};

// Forward difference with `next`; centered when `prev` is given.
std::vector<EpipolarMatch> epipolar_correspond(const Quadric& q, const GeneratorFrame& now,
                                               const GeneratorFrame& next,
                                               const GeneratorFrame* prev = nullptr,
                                               double angle_tol = 1e-6);

}  // namespace mvg
