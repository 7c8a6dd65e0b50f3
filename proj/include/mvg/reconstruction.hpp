#pragma once

#include "mvg/projection.hpp"

// Two-view reconstruction of position, tangent, curvature, curvature
// derivative and torsion. All vectors live in the world basis; rays are
// scaled so that e3_i . gamma_i = 1.

namespace mvg {

struct ViewMeasurement {
  Vec3 gamma = e3;
  Vec3 t = e1;
  double kappa = 0.0;
  double kappadot = 0.0;
  Vec3 e3 = mvg::e3;
  Vec3 c = Vec3::Zero();
};

ViewMeasurement lift_measurement(const ImageCurveSample& sample, const CameraPose& pose);

struct TriangulationOptions {
  double coplanar = 1e-8;
  double parallel = 1e-12;
  double depth = kTolerances.depth;
};

struct Triangulation {
  double rho1 = 0.0;
  double rho2 = 0.0;
  Vec3 point = Vec3::Zero();
  double residual = 0.0;
};

Triangulation triangulate(const ViewMeasurement& m1, const ViewMeasurement& m2,
                          const TriangulationOptions& opt = {});

struct TangentReconstruction {
  Vec3 T = Vec3::Zero();
  double theta1 = 0.0;
  double theta2 = 0.0;
  int epsilon = 1;
};

inline constexpr double kEpipolarEps = 1e-10;

TangentReconstruction reconstruct_tangent(const ViewMeasurement& m1, const ViewMeasurement& m2,
                                          double eps_epi = kEpipolarEps);

struct CurvatureReconstruction {
  double K = 0.0;
  Vec3 N = Vec3::Zero();
  Vec3 B = Vec3::Zero();
  Vec3 NK = Vec3::Zero();
  double orthogonality = 0.0;  // |NK . T|
};

inline constexpr double kMaxCondition = 1e12;

CurvatureReconstruction reconstruct_curvature(const ViewMeasurement& m1, const ViewMeasurement& m2,
                                              const Vec3& T, double rho1, double rho2, double g1,
                                              double g2, const Tolerances& tol = kTolerances);

struct TorsionReconstruction {
  double tau = 0.0;
  double Kdot = 0.0;
  Vec3 tau_tilde = Vec3::Zero();
  double residual = 0.0;  // |tau_tilde . T|
};

TorsionReconstruction reconstruct_torsion(const ViewMeasurement& m1, const ViewMeasurement& m2,
                                          const Vec3& T, const Vec3& N, const Vec3& B, double K,
                                          double rho1, double rho2, double g1, double g2,
                                          double gp1, double gp2,
                                          const Tolerances& tol = kTolerances);

// g / G for one view, world basis
double view_speed_ratio(const Vec3& T, const ViewMeasurement& m, double rho);
// dg/dS for one view, world basis, G = 1
double view_speed_derivative(double K, const Vec3& N, const Vec3& T, const ViewMeasurement& m,
                             double rho, double g);

double two_view_speed_ratio(const Vec3& T, const ViewMeasurement& m1, const ViewMeasurement& m2,
                            double rho1, double rho2, const Tolerances& tol = kTolerances);

struct DepthSpeedRelations {
  double view1 = 0.0;  // rho_1' / (rho_1 g_1)
  double view2 = 0.0;
};

DepthSpeedRelations depth_speed_relations(const ViewMeasurement& m1, const ViewMeasurement& m2,
                                          double eps_epi = kEpipolarEps);

struct ReconstructionResiduals {
  double triangulation = 0.0;
  double tangent_reprojection = 0.0;
  double curvature_orthogonality = 0.0;
  double torsion_orthogonality = 0.0;
};

struct ReconstructedPoint {
  Vec3 point = Vec3::Zero();
  double rho1 = 0.0;
  double rho2 = 0.0;
  Frenet3 frame{};  // G = 1; has_normal false on straight pieces
  double theta1 = 0.0;
  double theta2 = 0.0;
  int epsilon = 1;
  ReconstructionResiduals residuals{};
};

ReconstructedPoint reconstruct_point(const ViewMeasurement& m1, const ViewMeasurement& m2,
                                     const Tolerances& tol = kTolerances);

struct TransferResult {
  ImageCurveSample sample;  // normalized coordinates of the third view
  ReconstructedPoint source;
};

TransferResult transfer_to_view(const ViewMeasurement& m1, const ViewMeasurement& m2,
                                const CameraPose& pose3, const Tolerances& tol = kTolerances);

}  // namespace mvg
