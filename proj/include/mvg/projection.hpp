#pragma once

#include "mvg/core.hpp"

// Projection of space-curve differential geometry into one view, and its
// mapping through intrinsic parameters. Third-order operations take inputs
// under space arc length (G = 1).

namespace mvg {

struct FrameTag {
  enum class Kind { World, Camera } kind = Kind::World;
  int index = -1;

  static FrameTag world() { return {}; }
  static FrameTag camera(int i) { return {Kind::Camera, i}; }
};

struct SpaceCurveSample {
  Vec3 point = Vec3::Zero();
  Frenet3 frame{};
  FrameTag frame_id{};
};

enum class Coords { Normalized, Pixel };

struct ImageCurveSample {
  ImagePoint point{};
  Frenet2 frame{};
  double g_prime = 0.0;  // d g / d S, space arc length
  Coords coords = Coords::Normalized;
};

struct ImageTangent {
  Vec3 t;
  Vec3 n;
};

ImageTangent project_tangent(const Vec3& T, const Vec3& gamma, const Tolerances& tol = kTolerances);
double speed_ratio(const Vec3& T, const Vec3& gamma, double z);

double project_curvature(double K, const Vec3& N, const Vec3& gamma, const Vec3& t, double rho,
                         double g_over_G, const Tolerances& tol = kTolerances);
// (N - N_z gamma) . n form, G = 1
double project_curvature_normal_form(double K, const Vec3& N, const Vec3& gamma, const Vec3& n,
                                     double rho, double g);

double projected_speed_derivative(double K, const Vec3& N, double T_z, const Vec3& gamma,
                                  const Vec3& t, double rho, double g);
// gamma x n form
double projected_speed_derivative_normal_form(double K, const Vec3& N, double T_z,
                                              const Vec3& gamma, const Vec3& n, double rho,
                                              double g);

double project_curvature_derivative(double Kdot, double K, double tau, const Vec3& N,
                                    const Vec3& B, double T_z, const Vec3& gamma, const Vec3& t, double rho,
                                    double g, double g_prime, double kappa,
                                    const Tolerances& tol = kTolerances);

// Full chain for a sample expressed in the camera frame. Zero-curvature
// samples give kappa = kappadot = 0.
ImageCurveSample project_sample(const SpaceCurveSample& cam, const Tolerances& tol = kTolerances);

struct PixelTransfer {
  Frenet2 frame;  // g holds g_im, speed relative to unit speed at the input
  double g_prime = 0.0;
};

// Any linear map whose last row is e3^T.
PixelTransfer transfer_linear(const Frenet2& f, const Mat3& L);
PixelTransfer intrinsics_transfer(const Frenet2& f, const Intrinsics& K);
PixelTransfer intrinsics_transfer_inverse(const Frenet2& f, const Intrinsics& K);

// Whole-sample conversions. Speeds stay relative to space arc length.
ImageCurveSample to_pixel_sample(const ImageCurveSample& s, const Intrinsics& K);
ImageCurveSample from_pixel_sample(const ImageCurveSample& s, const Intrinsics& K);

}  // namespace mvg
