// Distributed under the MIT License.
// See LICENSE.txt for details.

#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "cmcfol/metric_model.hpp"
#include "cmcfol/sphere_spectral.hpp"

namespace cmcfol {

// Radial graph Phi(y) = lambda xi + (lambda + u(y)) y over the unit sphere;
// equivalently the Euclidean graph of u over the round sphere of radius
// lambda centered at lambda xi. Injectivity needs u > -lambda pointwise.
struct GraphSurface {
  Vec3 xi = Vec3::Zero();
  double lambda = 0.0;
  SphereField u;
  const MetricModel* metric = nullptr;

  Vec3 center() const { return lambda * xi; }
};

GraphSurface make_round_surface(std::shared_ptr<const SphereTransform> tr,
                                const MetricModel& metric, double lambda,
                                const Vec3& xi = Vec3::Zero());

// Pointwise extrinsic geometry in both the Euclidean metric (barred) and the
// physical metric. Mean curvature sign: round sphere in flat space has
// H = +2/lambda with outward normal.
struct ExtrinsicData {
  std::shared_ptr<const SphereTransform> tr;
  double lambda = 0.0;
  Vec3 xi = Vec3::Zero();

  std::vector<Vec3> position;
  std::vector<Vec3> e_theta, e_phi;    // embedding tangent vectors
  std::vector<Vec3> nu_bar, nu;        // outward unit normals
  std::vector<Eigen::Matrix2d> q_bar, q, qinv_bar, qinv;
  std::vector<Eigen::Matrix2d> h_bar, h;
  VecX H_bar, H;
  VecX dmu_bar, dmu;    // area elements relative to the solid-angle measure
  VecX norm_h2_bar, norm_h2;      // |h|^2 = q^{ac} q^{bd} h_ab h_cd
  VecX hcirc2_bar, hcirc2;        // |h - (H/2) q|^2
  VecX ric_nu;                    // ambient Ric(nu, nu)
  double area_bar = 0.0, area_g = 0.0;

  double integrate(const VecX& f) const;      // Int f dmu
  double integrate_bar(const VecX& f) const;  // Int f dmu_bar
  SphereField mean_curvature_field() const;
  VecX stability_potential() const;  // |h|^2 + Ric(nu, nu)
};

ExtrinsicData compute_extrinsic(const GraphSurface& surface);

double area(const GraphSurface& surface);
double euclidean_area(const GraphSurface& surface);

// vol_g of the region between the surface and the coordinate sphere of
// radius 2 lambda about the origin, by radial quadrature from lambda xi.
double enclosed_volume_relative(const GraphSurface& surface);

double hawking_mass(const ExtrinsicData& ext);
double hawking_mass(const GraphSurface& surface);

struct SurfaceDiagnostics {
  double area_radius = 0.0;   // sqrt(|Sigma|_g / 4 pi)
  double inner_radius = 0.0;  // min |x| over nodes
  double hawking_mass = 0.0;
  double cy_deficit = 0.0;    // 16 pi - Int H^2 dmu
  double hcirc_l2 = 0.0;      // Int |hcirc|^2 dmu
};

SurfaceDiagnostics diagnostics(const ExtrinsicData& ext);
SurfaceDiagnostics diagnostics(const GraphSurface& surface);

// Residuals of the first-order perturbation expansions of (nu - nu_bar),
// (dmu/dmu_bar - 1) and (H - H_bar) on a round sphere (u = 0), together with
// the decay exponents the expansions predict for each residual.
struct LinearizationResiduals {
  double nu_residual = 0.0;
  double measure_residual = 0.0;
  double mean_curvature_residual = 0.0;
  double nu_predicted_order = 0.0;       // 2 tau
  double measure_predicted_order = 0.0;  // 2 tau
  double mean_curvature_predicted_order = 0.0;  // 1 + 2 tau
};

LinearizationResiduals linearization_residuals(const GraphSurface& surface);

}  // namespace cmcfol
