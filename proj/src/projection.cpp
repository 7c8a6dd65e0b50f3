#include "mvg/projection.hpp"

#include <cassert>
#include <cmath>

namespace mvg {

namespace {

[[maybe_unused]] bool agree(double a, double b) {
  return std::abs(a - b) <= 1e-8 * (1.0 + std::abs(a) + std::abs(b));
}

Vec3 perp(const Vec3& t) { return Vec3(t.y(), -t.x(), 0.0); }

}  // namespace

ImageTangent project_tangent(const Vec3& T, const Vec3& gamma, const Tolerances& tol) {
  Vec3 d = T - T.z() * gamma;
  d.z() = 0.0;
  const double len = d.norm();
  if (!(len > tol.regular)) fail(ErrorCode::TangentAlongRay, "space tangent is along the visual ray");
  ImageTangent out;
  out.t = d / len;
  out.n = perp(out.t);
  return out;
}

double speed_ratio(const Vec3& T, const Vec3& gamma, double z) {
  Vec3 d = T - T.z() * gamma;
  d.z() = 0.0;
  return d.norm() / z;
}

double project_curvature(double K, const Vec3& N, const Vec3& gamma, const Vec3& t, double rho,
                         double g_over_G, const Tolerances& tol) {
  if (!(g_over_G > tol.regular)) fail(ErrorCode::StationaryImagePoint, "image speed vanishes");
  if (K == 0.0) return 0.0;
  const double inv = 1.0 / g_over_G;
  const double kappa = -inv * inv * N.dot(gamma.cross(t)) / rho * K;
  assert(agree(kappa, project_curvature_normal_form(K, N, gamma, perp(t), rho, g_over_G)));
  return kappa;
}

double project_curvature_normal_form(double K, const Vec3& N, const Vec3& gamma, const Vec3& n,
                                     double rho, double g) {
  return (N - N.z() * gamma).dot(n) * K / (rho * g * g);
}

double projected_speed_derivative(double K, const Vec3& N, double T_z, const Vec3& gamma,
                                  const Vec3& t, double rho, double g) {
  const double gp = ((N - N.z() * gamma).dot(t) * K - 2.0 * g * T_z) / rho;
  assert(agree(gp, projected_speed_derivative_normal_form(K, N, T_z, gamma, perp(t), rho, g)));
  return gp;
}

double projected_speed_derivative_normal_form(double K, const Vec3& N, double T_z,
                                              const Vec3& gamma, const Vec3& n, double rho,
                                              double g) {
  return (K * N.dot(gamma.cross(n)) - 2.0 * g * T_z) / rho;
}

double project_curvature_derivative(double Kdot, double K, double tau, const Vec3& N,
                                    const Vec3& B, double T_z, const Vec3& gamma, const Vec3& t, double rho,
                                    double g, double g_prime, double kappa,
                                    const Tolerances& tol) {
  if (!(g > tol.regular)) fail(ErrorCode::StationaryImagePoint, "image speed vanishes");
  const Vec3 third = Kdot * N + K * tau * B;
  return -third.dot(gamma.cross(t)) / (rho * g * g * g) -
         3.0 * kappa * (T_z / (rho * g) + g_prime / (g * g));
}

ImageCurveSample project_sample(const SpaceCurveSample& cam, const Tolerances& tol) {
  const ImagePoint ip = project(cam.point, tol);
  const double rho = *ip.rho;
  const Frenet3& F = cam.frame;
  const ImageTangent tn = project_tangent(F.T, ip.gamma, tol);
  const double g = speed_ratio(F.T, ip.gamma, rho);

  ImageCurveSample s;
  s.point = ip;
  s.point.rho_d1 = F.T.z();
  s.point.rho_d2 = F.has_normal ? F.K * F.N.z() : 0.0;
  s.coords = Coords::Normalized;
  s.frame.t = tn.t;
  s.frame.n = tn.n;
  s.frame.g = g;
  if (!F.has_normal) {
    s.g_prime = -2.0 * g * F.T.z() / rho;
    return s;
  }
  s.frame.kappa = project_curvature(F.K, F.N, ip.gamma, tn.t, rho, g, tol);
  s.g_prime = projected_speed_derivative(F.K, F.N, F.T.z(), ip.gamma, tn.t, rho, g);
  s.frame.kappadot = project_curvature_derivative(F.Kdot, F.K, F.tau, F.N, F.B, F.T.z(), ip.gamma,
                                                  tn.t, rho, g, s.g_prime, s.frame.kappa, tol);
  return s;
}

PixelTransfer transfer_linear(const Frenet2& f, const Mat3& L) {
  const Vec3 Lt = L * f.t;
  const Vec3 Ln = L * f.n;
  const double gi = Lt.norm();
  if (!(gi > 0.0) || !std::isfinite(gi)) fail(ErrorCode::SingularIntrinsics, "degenerate linear map");
  PixelTransfer out;
  Frenet2& r = out.frame;
  r.g = gi;
  r.t = Lt / gi;
  r.t.z() = 0.0;
  r.n = perp(r.t);
  out.g_prime = f.kappa * Lt.dot(Ln) / gi;
  r.kappa = r.n.dot(f.kappa * Ln) / (gi * gi);
  const Vec3 third = L * (-f.kappa * f.kappa * f.t + f.kappadot * f.n);
  r.kappadot = r.n.dot(third) / (gi * gi * gi) - 3.0 * out.g_prime * r.kappa / (gi * gi);
  return out;
}

PixelTransfer intrinsics_transfer(const Frenet2& f, const Intrinsics& K) {
  if (!K.invertible()) fail(ErrorCode::SingularIntrinsics, "intrinsic matrix is singular");
  return transfer_linear(f, K.matrix());
}

PixelTransfer intrinsics_transfer_inverse(const Frenet2& f, const Intrinsics& K) {
  return transfer_linear(f, K.inverse());
}

ImageCurveSample to_pixel_sample(const ImageCurveSample& s, const Intrinsics& K) {
  const PixelTransfer tr = intrinsics_transfer(s.frame, K);
  ImageCurveSample out = s;
  out.coords = Coords::Pixel;
  out.point.gamma = to_pixel(s.point, K);
  out.frame = tr.frame;
  out.frame.g = s.frame.g * tr.frame.g;
  out.g_prime = s.g_prime * tr.frame.g + s.frame.g * s.frame.g * tr.g_prime;
  return out;
}

ImageCurveSample from_pixel_sample(const ImageCurveSample& s, const Intrinsics& K) {
  const PixelTransfer tr = intrinsics_transfer_inverse(s.frame, K);
  ImageCurveSample out = s;
  out.coords = Coords::Normalized;
  out.point.gamma = from_pixel(s.point.gamma, K).gamma;
  out.frame = tr.frame;
  out.frame.g = s.frame.g * tr.frame.g;
  out.g_prime = s.g_prime * tr.frame.g + s.frame.g * s.frame.g * tr.g_prime;
  return out;
}

}  // namespace mvg
