#include "mvg/dataset.hpp"

#include <algorithm>

#include <cmath>
#include <numbers>

namespace mvg {

const char* to_string(CurveFamily f) {
  switch (f) {
    case CurveFamily::Helix: return "helix";
    case CurveFamily::Parabola: return "parabola";
    case CurveFamily::Ellipse: return "ellipse";
    case CurveFamily::Line: return "line";
    case CurveFamily::Saddle: return "saddle";
  }
  return "unknown";
}

CurveFamily curve_family_from_string(const std::string& name) {
  for (CurveFamily f : {CurveFamily::Helix, CurveFamily::Parabola, CurveFamily::Ellipse,
                        CurveFamily::Line, CurveFamily::Saddle})
    if (name == to_string(f)) return f;
  fail(ErrorCode::InvalidArgument, "unknown curve family '" + name + "'");
}

bool is_planar(CurveFamily f) {
  return f == CurveFamily::Parabola || f == CurveFamily::Ellipse || f == CurveFamily::Line;
}

void AnalyticCurve::validate() const {
  if (!(s1 > s0)) fail(ErrorCode::InvalidArgument, "curve parameter range is empty");
  if (samples < 1) fail(ErrorCode::InvalidArgument, "curve needs at least one sample");
  if (!center.allFinite() || !rotation.allFinite() || !std::isfinite(a) || !std::isfinite(b))
    fail(ErrorCode::InvalidArgument, "curve parameters must be finite");
  switch (family) {
    case CurveFamily::Helix:
    case CurveFamily::Saddle:
    case CurveFamily::Ellipse:
      if (!(a > 0.0)) fail(ErrorCode::NonRegular, "radius must be positive");
      if (family == CurveFamily::Ellipse && !(b > 0.0))
        fail(ErrorCode::NonRegular, "semi-axis must be positive");
      break;
    case CurveFamily::Parabola:
    case CurveFamily::Line:
      break;
  }
}

CurveDerivatives evaluate_curve(const AnalyticCurve& c, double s) {
  if (!(s >= c.s0 && s <= c.s1)) fail(ErrorCode::OutOfRange, "curve parameter outside its range");
  const CurveJet<double> j = curve_jet(c, s);
  return {j.point, j.d1, j.d2, j.d3};
}

double sample_parameter(const AnalyticCurve& c, int k) {
  return c.s0 + (k + 0.5) * (c.s1 - c.s0) / c.samples;
}

std::vector<SpaceCurveSample> sample_curve(const AnalyticCurve& c, const Tolerances& tol) {
  c.validate();
  std::vector<SpaceCurveSample> out;
  out.reserve(c.samples);
  for (int k = 0; k < c.samples; ++k) {
    const CurveDerivatives d = evaluate_curve(c, sample_parameter(c, k));
    SpaceCurveSample s;
    s.point = d.point;
    s.frame = frenet3_partial(d.d1, d.d2, d.d3, tol);
    s.frame_id = FrameTag::world();
    out.push_back(s);
  }
  return out;
}

Mat3 Quadric::shape() const {
  return semi_axes.cwiseProduct(semi_axes).cwiseInverse().asDiagonal();
}

void Quadric::validate() const {
  if (!(semi_axes.minCoeff() > 0.0)) fail(ErrorCode::InvalidArgument, "semi-axes must be positive");
  if (kind == Kind::Sphere && (semi_axes.x() != semi_axes.y() || semi_axes.x() != semi_axes.z()))
    fail(ErrorCode::InvalidArgument, "sphere needs equal semi-axes");
}

double Orbit::frame_time(int k) const {
  return k * 2.0 * std::numbers::pi / (angular_rate * frames);
}

CameraPose orbit_pose(const Orbit& o, double time) {
  const OrbitState<double> st = orbit_state(o, time);
  return CameraPose::from_center(st.R, st.c, o.K);
}

std::vector<CameraPose> camera_orbit(const Orbit& o) {
  if (!(o.radius > 0.0)) fail(ErrorCode::InvalidArgument, "orbit radius must be positive");
  std::vector<CameraPose> poses;
  for (int k = 0; k < o.frames; ++k) poses.push_back(orbit_pose(o, o.frame_time(k)));
  return poses;
}

std::vector<CameraPose> camera_orbit(const Scene& scene) { return camera_orbit(scene.orbit); }

CameraMotion orbit_motion(const Orbit& o, double time) {
  const OrbitState<double> st = orbit_state(o, time);
  CameraMotion m;
  m.Omega = -o.angular_rate * (st.R * o.axis.normalized());
  m.Omega_t = Vec3::Zero();
  m.V = -(st.R * st.c_dot);
  m.V_t = 2.0 * m.Omega.cross(m.V) - st.R * st.c_ddot;
  return m;
}

void Scene::validate() const {
  for (std::size_t i = 0; i < curves.size(); ++i) {
    curves[i].validate();
    for (std::size_t j = 0; j < i; ++j)
      if (curves[j].id == curves[i].id) fail(ErrorCode::InvalidArgument, "duplicate curve id");
  }
  for (const Quadric& q : quadrics) q.validate();
  if (orbit.frames < 1) fail(ErrorCode::InvalidArgument, "orbit needs at least one frame");
  if (!(orbit.radius > 0.0)) fail(ErrorCode::InvalidArgument, "orbit radius must be positive");
  if (!(orbit.angular_rate > 0.0)) fail(ErrorCode::InvalidArgument, "orbit rate must be positive");
  if (!orbit.K.invertible()) fail(ErrorCode::SingularIntrinsics, "intrinsic matrix is singular");
  if (orbit.image_width < 1 || orbit.image_height < 1)
    fail(ErrorCode::InvalidArgument, "image size must be positive");
}

Scene default_scene() {
  constexpr double pi = std::numbers::pi;
  Scene s;
  auto add = [&](CurveFamily f, double a, double b, double s0, double s1, Vec3 center, Vec3 rot) {
    AnalyticCurve c;
    c.id = static_cast<int>(s.curves.size());
    c.family = f;
    c.a = a;
    c.b = b;
    c.s0 = s0;
    c.s1 = s1;
    c.samples = 100;
    c.center = center;
    c.rotation = rot;
    s.curves.push_back(c);
  };
  add(CurveFamily::Helix, 0.8, 0.15, -2.0 * pi, 2.0 * pi, {-0.7, 0.5, 0.0}, {0.11, -0.07, 0.3});
  add(CurveFamily::Parabola, 0.5, 0.0, -1.2, 1.2, {1.1, -0.9, 0.4}, {0.17, 0.12, 0.71});
  add(CurveFamily::Ellipse, 1.4, 0.9, 0.0, 2.0 * pi, {0.1, 0.0, -0.9}, {0.21, -0.13, 0.37});
  add(CurveFamily::Line, 0.0, 0.0, -1.5, 1.5, {0.3, 0.9, 0.8}, {0.31, 0.53, 1.13});
  add(CurveFamily::Saddle, 0.9, 0.15, 0.0, 2.0 * pi, {0.2, -0.3, 1.6}, {0.05, 0.09, 0.23});

  Quadric sphere;
  sphere.id = 0;
  sphere.kind = Quadric::Kind::Sphere;
  sphere.center = {0.0, 0.0, 0.0};
  sphere.semi_axes = {1.0, 1.0, 1.0};
  Quadric ellipsoid;
  ellipsoid.id = 1;
  ellipsoid.kind = Quadric::Kind::Ellipsoid;
  ellipsoid.center = {0.4, -0.2, 0.3};
  ellipsoid.semi_axes = {1.2, 0.8, 0.6};
  s.quadrics = {sphere, ellipsoid};
  return s;
}

std::vector<LabeledSample> sample_scene(const Scene& scene, const Tolerances& tol) {
  std::vector<LabeledSample> out;
  for (const AnalyticCurve& c : scene.curves) {
    const std::vector<SpaceCurveSample> samples = sample_curve(c, tol);
    for (int k = 0; k < static_cast<int>(samples.size()); ++k)
      out.push_back({c.id, k, sample_parameter(c, k), samples[k]});
  }
  return out;
}

RenderResult render_view(const std::vector<LabeledSample>& samples, const CameraPose& pose,
                         int width, int height, const Tolerances& tol) {
  RenderResult out;
  for (const LabeledSample& ls : samples) {
    SpaceCurveSample cam;
    cam.point = world_to_camera(ls.sample.point, pose);
    cam.frame = ls.sample.frame;
    cam.frame.T = pose.R * ls.sample.frame.T;
    cam.frame.N = pose.R * ls.sample.frame.N;
    cam.frame.B = pose.R * ls.sample.frame.B;
    cam.frame_id = FrameTag::camera(0);
    if (!(cam.point.z() > tol.depth)) {
      ++out.dropped_behind;
      continue;
    }
    RenderedSample r;
    try {
      r.normalized = project_sample(cam, tol);
      r.pixel = to_pixel_sample(r.normalized, pose.K);
    } catch (const GeometryError&) {
      ++out.dropped_degenerate;
      continue;
    }
    const Vec3& px = r.pixel.point.gamma;
    if (!(px.x() >= 0.0 && px.x() < width && px.y() >= 0.0 && px.y() < height)) {
      ++out.dropped_outside;
      continue;
    }
    r.curve_id = ls.curve_id;
    r.sample_id = ls.sample_id;
    r.s = ls.s;
    r.world = ls.sample;
    out.samples.push_back(r);
  }
  return out;
}

double occluding_normal_curvature(const Quadric& q, const Vec3& x, const Vec3& c, const Vec3& T) {
  const Mat3 A = q.shape();
  const Vec3 grad = A * (x - q.center);
  const Vec3 u = (x - c).normalized();
  const Vec3 N = (x - c).cross(T).normalized();
  return -N.dot(grad.normalized()) * u.dot(A * u) / grad.norm();
}

std::vector<GeneratorSample> quadric_contour_generator(const Quadric& q, const CameraPose& pose,
                                                       int n) {
  q.validate();
  if (n < 1) fail(ErrorCode::InvalidArgument, "generator needs at least one sample");
  std::vector<GeneratorSample> out;
  out.reserve(n);
  for (int k = 0; k < n; ++k) {
    const double phi = 2.0 * std::numbers::pi * k / n;
    const CurveJet<double> j = generator_jet(q, pose.c, phi);
    GeneratorSample g;
    g.phi = phi;
    g.sample.point = j.point;
    g.sample.frame = frenet3_from_derivatives(j.d1, j.d2, j.d3);
    g.sample.frame_id = FrameTag::world();
    g.normal = (q.shape() * (j.point - q.center)).normalized();
    g.Kt = occluding_normal_curvature(q, j.point, pose.c, g.sample.frame.T);
    out.push_back(g);
  }
  return out;
}

GeneratorFrame generator_frame(const Quadric& q, const Orbit& o, double time, int n) {
  const OrbitState<double> st = orbit_state(o, time);
  GeneratorFrame f;
  f.time = time;
  f.c = st.c;
  f.c_dot = st.c_dot;
  f.samples = quadric_contour_generator(q, CameraPose::from_center(st.R, st.c, o.K), n);
  return f;
}

namespace {

struct Crossing {
  bool found = false;
  bool crossed = false;  // false: closest approach, the plane misses the curve
  Vec3 point = Vec3::Zero();
  double angle = 0.0;
  double miss = 0.0;  // distance from the plane
};

// Crossing of the plane with the other frame's generator polyline (linear
// interpolation); when the plane misses it, the closest vertex.
Crossing cross_plane(const Quadric& q, const GeneratorFrame& other, const Vec3& origin,
                     const Vec3& normal) {
  Crossing best;
  double best_dist = INFINITY;
  const auto& pts = other.samples;
  const int n = static_cast<int>(pts.size());
  for (int j = 0; j < n; ++j) {
    const Vec3& p0 = pts[j].sample.point;
    const Vec3& p1 = pts[(j + 1) % n].sample.point;
    const double f0 = normal.dot(p0 - origin);
    const double f1 = normal.dot(p1 - origin);
    if ((f0 > 0.0) == (f1 > 0.0) && f0 != 0.0) {
      const double miss = std::abs(f0) / normal.norm();
      if (!best.crossed && (!best.found || miss < best.miss)) {
        best.found = true;
        best.point = p0;
        best.miss = miss;
      }
      continue;
    }
    const double s = f0 == f1 ? 0.0 : f0 / (f0 - f1);
    const Vec3 p = p0 + s * (p1 - p0);
    const double dist = (p - origin).norm();
    if (!best.crossed || dist < best_dist) {
      best_dist = dist;
      best.found = best.crossed = true;
      best.point = p;
      best.miss = 0.0;
    }
  }
  if (best.found) {
    const Vec3 grad = (q.shape() * (best.point - q.center)).normalized();
    const Vec3 ray = best.point - other.c;
    best.angle = std::asin(std::min(1.0, std::abs(ray.dot(grad)) / ray.norm()));
  }
  return best;
}

}  // namespace

std::vector<EpipolarMatch> epipolar_correspond(const Quadric& q, const GeneratorFrame& now,
                                               const GeneratorFrame& next,
                                               const GeneratorFrame* prev, double angle_tol) {
  std::vector<EpipolarMatch> out;
  const double h = next.time - now.time;
  if (!(h > 0.0)) fail(ErrorCode::InvalidArgument, "frames must be in increasing time order");
  for (int i = 0; i < static_cast<int>(now.samples.size()); ++i) {
    const Vec3& G = now.samples[i].sample.point;
    const Vec3 normal = (G - now.c).cross(now.c_dot);
    if (!(normal.norm() > 0.0))
      fail(ErrorCode::NoEpipolarMatch, "epipolar plane undefined for a ray along the motion");
    auto match = [&](const GeneratorFrame& other) {
      Crossing x = cross_plane(q, other, G, normal);
      if (x.found) x.angle = std::max(x.angle, std::asin(std::min(1.0, x.miss / (x.point - now.c).norm())));
      if (!x.found || x.angle > angle_tol)
        fail(ErrorCode::NoEpipolarMatch, "no epipolar match within tolerance; sampling too coarse");
      return x;
    };
    const Crossing fwd = match(next);
    EpipolarMatch m;
    m.index = i;
    m.next_point = fwd.point;
    m.angle = fwd.angle;
    m.frontier = !fwd.crossed;
    m.velocity = (fwd.point - G) / h;
    if (prev != nullptr) {
      const Crossing bwd = match(*prev);
      m.velocity = (fwd.point - bwd.point) / (next.time - prev->time);
      m.angle = std::max(m.angle, bwd.angle);
      m.frontier = m.frontier || !bwd.crossed;
    }
    out.push_back(m);
  }
  return out;
}

}  // namespace mvg
