#pragma once

#include "mvg/dataset.hpp"

#include <cmath>
#include <functional>
#include <type_traits>
#include <utility>
#include <vector>

// Extended-precision exact trajectories and finite-difference helpers used as
// references for the closed-form motion relations. Nothing here calls into
// the motion formulas.

namespace mvg::oracle {

using Real = long double;
using V3 = Vec3T<Real>;
using M3 = Mat3T<Real>;

inline V3 up(const Vec3& v) { return v.cast<Real>(); }
inline Vec3 down(const V3& v) { return v.cast<double>(); }

inline M3 skew_l(const V3& w) {
  M3 m;
  m << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
  return m;
}

inline M3 exp_so3(const V3& w) {
  const Real th = w.norm();
  const M3 W = skew_l(w);
  if (th < Real(1e-12)) return M3::Identity() + W + Real(0.5) * W * W;
  return M3::Identity() + std::sin(th) / th * W + (Real(1) - std::cos(th)) / (th * th) * W * W;
}

inline V3 plane_part(const V3& x, const V3& gamma) {
  V3 out = x - x.z() * gamma;
  out.z() = 0;
  return out;
}

inline V3 perp(const V3& t) { return V3(t.y(), -t.x(), 0); }

template <class F>
using ValueOf = std::decay_t<decltype(std::declval<F>()(Real(0)))>;

template <class F>
ValueOf<F> first_difference(F f, Real h) {
  return (f(h) - f(-h)) / (Real(2) * h);
}

template <class F>
ValueOf<F> second_difference(F f, Real h) {
  return (f(h) - Real(2) * f(Real(0)) + f(-h)) / (h * h);
}

// fourth-order first derivative
template <class F>
ValueOf<F> five_point_difference(F f, Real h) {
  return (Real(8) * (f(h) - f(-h)) - (f(Real(2) * h) - f(Real(-2) * h))) / (Real(12) * h);
}

// Least-squares slope of log(err) against log(h).
inline double fit_order(const std::vector<double>& h, const std::vector<double>& err) {
  const std::size_t n = h.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = std::log(h[i]);
    const double y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// Image-plane derivatives of Gamma / z from camera-frame parameter derivatives.
template <class S>
CurveJet<S> projected_jet(const CurveJet<S>& c) {
  const S z = c.point.z(), z1 = c.d1.z(), z2 = c.d2.z(), z3 = c.d3.z();
  CurveJet<S> g;
  g.point = c.point / z;
  g.d1 = (c.d1 - z1 * g.point) / z;
  g.d2 = (c.d2 - S(2) * z1 * g.d1 - z2 * g.point) / z;
  g.d3 = (c.d3 - S(3) * z1 * g.d2 - S(3) * z2 * g.d1 - z3 * g.point) / z;
  g.point.z() = S(1);
  g.d1.z() = g.d2.z() = g.d3.z() = S(0);
  return g;
}

template <class S>
CurveJet<S> camera_jet(const CurveJet<S>& w, const CameraPose& pose) {
  const Mat3T<S> R = pose.R.template cast<S>();
  return {R * (w.point - pose.c.template cast<S>()), R * w.d1, R * w.d2, R * w.d3};
}

// Frenet data of the exactly projected parametric curve; g is per unit parameter.
inline Frenet2 projected_frame(const AnalyticCurve& c, const CameraPose& pose, double s) {
  const CurveJet<double> g = projected_jet(camera_jet(curve_jet<double>(c, s), pose));
  return frenet2_from_derivatives(g.d1, g.d2, g.d3);
}

// Camera with R(t) = exp(t W) exp(t^2/2 W_t), translation V t + V_t t^2/2, and a
// world point moving on Gamma0 + Gw_t t + Gw_tt t^2/2. At t = 0 camera and world
// frames coincide.
struct PolynomialMotion {
  V3 Omega, Omega_t, V, V_t;
  V3 Gamma0, Gw_t, Gw_tt;

  M3 R(Real t) const {
    return exp_so3(t * Omega) * exp_so3(Real(0.5) * t * t * Omega_t);
  }
  V3 camera_point(Real t) const {
    const V3 Gw = Gamma0 + Gw_t * t + Real(0.5) * Gw_tt * t * t;
    return R(t) * Gw + V * t + Real(0.5) * V_t * t * t;
  }
  V3 gamma(Real t) const {
    const V3 p = camera_point(t);
    return p / p.z();
  }
  Real rho(Real t) const { return camera_point(t).z(); }
};

// Rigid world point seen from the orbit at time t0 + tau, evaluated in scalar S.
template <class S>
struct OrbitViewT {
  using V = Vec3T<S>;
  using M = Mat3T<S>;
  Orbit orbit;
  S t0 = 0;

  OrbitState<S> state(S tau) const { return orbit_state<S>(orbit, t0 + tau); }
  M R_dot(const OrbitState<S>& st) const {
    const V a = orbit.axis.normalized().template cast<S>();
    M A;
    A << S(0), -a.z(), a.y(), a.z(), S(0), -a.x(), -a.y(), a.x(), S(0);
    return M(-S(orbit.angular_rate) * st.R * A);
  }
  static V plane(const V& x, const V& g) {
    V out = x - x.z() * g;
    out.z() = S(0);
    return out;
  }
  V camera_point(const V& Gw, S tau) const {
    const OrbitState<S> st = state(tau);
    return st.R * (Gw - st.c);
  }
  V gamma(const V& Gw, S tau) const {
    const V p = camera_point(Gw, tau);
    return p / p.z();
  }
  // exact image velocity of a world point moving with velocity Gw_dot
  V gamma_t(const V& Gw, const V& Gw_dot, S tau) const {
    const OrbitState<S> st = state(tau);
    const V p = st.R * (Gw - st.c);
    const V p_t = R_dot(st) * (Gw - st.c) + st.R * (Gw_dot - st.c_dot);
    const V g = p / p.z();
    return plane(p_t, g) / p.z();
  }
  // unit image tangent of a world direction
  V image_tangent(const V& Gw, const V& Tw, S tau) const {
    const OrbitState<S> st = state(tau);
    const V p = st.R * (Gw - st.c);
    return plane(st.R * Tw, p / p.z()).normalized();
  }
};

using OrbitView = OrbitViewT<Real>;

// Contour-generator point followed under the epipolar parametrization:
// dGamma/dt = lambda (Gamma - c), integrated with RK4.
template <class S>
struct OccludingTrackT {
  using V = Vec3T<S>;
  using M = Mat3T<S>;
  Quadric quadric;
  OrbitViewT<S> view;
  V start;      // generator point at tau = 0
  V tangent0;   // orientation reference for the generator tangent
  int steps_per_unit = 20000;

  V velocity(const V& G, S tau) const {
    const OrbitState<S> st = view.state(tau);
    const M A = quadric.shape().template cast<S>();
    const V q = quadric.center.template cast<S>();
    const V d = G - st.c;
    const S lambda = st.c_dot.dot(A * (G - q)) / d.dot(A * d);
    return lambda * d;
  }
  V point(S tau) const {
    if (tau == 0) return start;
    using std::abs;
    using std::ceil;
    const int n = std::max(8, static_cast<int>(ceil(abs(tau) * steps_per_unit)));
    const S dt = tau / n;
    V G = start;
    S s = 0;
    for (int i = 0; i < n; ++i) {
      const V k1 = velocity(G, s);
      const V k2 = velocity(G + S(0.5) * dt * k1, s + S(0.5) * dt);
      const V k3 = velocity(G + S(0.5) * dt * k2, s + S(0.5) * dt);
      const V k4 = velocity(G + dt * k3, s + dt);
      G += dt / 6 * (k1 + S(2) * k2 + S(2) * k3 + k4);
      s += dt;
    }
    return G;
  }
  V world_tangent(const V& G, S tau) const {
    const OrbitState<S> st = view.state(tau);
    const M A = quadric.shape().template cast<S>();
    const V q = quadric.center.template cast<S>();
    V T = (A * (G - q)).cross(A * (S(2) * G - q - st.c)).normalized();
    if (T.dot(tangent0) < 0) T = -T;
    return T;
  }
  V gamma(S tau) const { return view.gamma(point(tau), tau); }
  V gamma_t(S tau) const {
    const V G = point(tau);
    return view.gamma_t(G, velocity(G, tau), tau);
  }
  S beta(S tau) const {
    const V G = point(tau);
    const V t = view.image_tangent(G, world_tangent(G, tau), tau);
    return view.gamma_t(G, velocity(G, tau), tau).dot(V(t.y(), -t.x(), S(0)));
  }
};

using OccludingTrack = OccludingTrackT<Real>;

}  // namespace mvg::oracle
