// Distributed under the MIT License.
// See LICENSE.txt for details.

#pragma once

#include <utility>
#include <vector>

#include "cmcfol/metric_model.hpp"
#include "cmcfol/surface_geometry.hpp"

namespace cmcfol {

// One rung of the asymptotic radius ladder.  All integrals are quadratures
// over the coordinate sphere S_radius(0) with the Euclidean measure.
struct FluxSample {
  double radius = 0.0;
  // Mass surface integral in coordinate-derivative form,
  // (16 pi)^-1 r^-1 Int x^i [d_j g_ij - d_i g_jj].
  double mass_estimate = 0.0;
  // Hamiltonian center integral divided by 16 pi times the extrapolated
  // mass.  Zero (and meaningless) when that mass vanishes.
  Vec3 com_estimate = Vec3::Zero();
  // Same mass content written against the deviation sigma = g - id:
  // (16 pi)^-1 Int [div sigma(nu) - D_nu tr sigma].  Agrees with
  // mass_estimate identically; kept as an independent code path.
  double mass_flux_form = 0.0;
  // Vector combination [D_nu tr sigma - div sigma(nu)] nu
  // + r^-1 sigma(nu, .) - r^-1 tr sigma nu whose integral tends to zero;
  // its decay rate controls convergence of the center integrals.
  Vec3 com_flux_form = Vec3::Zero();
};

struct FluxReport {
  std::vector<FluxSample> sequence;
  double mass = 0.0;  // extrapolated limit of mass_estimate
  double mass_order = 0.0;
  bool mass_converged = false;
  bool com_defined = false;  // false when the extrapolated mass is ~0
  Vec3 com = Vec3::Zero();   // extrapolated limit of com_estimate
  double com_order = 0.0;
  bool com_converged = false;
  double com_flux_order = 0.0;  // fitted decay order of |com_flux_form|
  // Odd metric part decays fast enough for the center integrals to have a
  // limit (tau_hat > 1/2).  When false the com ladder typically diverges.
  bool rt_conformant = true;
};

std::vector<double> default_flux_radii();

// Mass integral at one radius (> 2).  Throws DomainError otherwise.
double adm_mass(const MetricModel& model, double radius, int lmax = 16);

// Richardson limit of adm_mass over the radius ladder (default
// {25, 50, 100, 200, 400}).
double adm_mass_limit(const MetricModel& model, std::vector<double> radii = {},
                      int lmax = 16);

// Center integral at one radius, divided by 16 pi times the extrapolated
// mass.  Throws MassZeroError when |mass| < 1e-12.
Vec3 hamiltonian_com(const MetricModel& model, double radius, int lmax = 16);

// (mass form, vanishing vector combination) at one radius.
std::pair<double, Vec3> flux_forms(const MetricModel& model, double radius, int lmax = 16);

// Full ladder sweep with extrapolations; rungs evaluated in parallel.
FluxReport flux_report(const MetricModel& model, std::vector<double> radii = {},
                       int lmax = 16, int jobs = 0);

// |LHS - RHS| of the sphere integration-by-parts identity
//   Int [D_a tr sigma - (D_a sigma)(nu, nu) - 2 lambda^-1 tr sigma g(a, nu)]
//   = Int [lambda^-1 g(a, x - lambda xi) (D_nu tr sigma - div sigma(nu))
//          + lambda^-1 sigma(nu, a) - lambda^-1 g(a, nu) tr sigma]
// on the Euclidean sphere of radius lambda about lambda xi.  The identity is
// exact; the return value is pure quadrature error.
double ibp_residual_sphere(const MetricModel& model, const Vec3& xi, double lambda,
                           const Vec3& a, int lmax = 16);

// General-surface version: the right-hand side picks up 1/2 H_bar
// [sigma(nu,a) + g(a,nu) tr sigma] and two contractions against the
// trace-free Euclidean second fundamental form.
double ibp_residual_surface(const GraphSurface& surface, const Vec3& a);

// Direction 1/2 H z - nu_bar(z) at the node z of minimal |x|; the unit-scale
// displacement a large near-round surface shows against the chart origin.
Vec3 drift_direction(const ExtrinsicData& ext);

// Flux pairing that obstructs off-center constant mean curvature spheres:
//   Int [D_nu tr s - div s(nu)] g(a, 1/2 H x - xihat) dmu_bar
//   + 1/2 H Int [s(a, nu) - g(a, nu) tr s] dmu_bar
// with H the mean of the physical mean curvature and xihat from
// drift_direction.  For a near-round CMC surface this approaches
// 16 pi m g(a, xihat).  The surface must be CMC up to the l <= 1 modes a
// graph solve cannot control: the relative sup variation of the projection
// of H onto (Lambda0 + Lambda1)-perp must be below cmc_tol, else NotCmcError.
double drift_obstruction(const ExtrinsicData& ext, const MetricModel& model, const Vec3& a,
                         double cmc_tol = 1e-4);
double drift_obstruction(const GraphSurface& surface, const Vec3& a, double cmc_tol = 1e-4);

// Physical-measure barycenter Int x dmu / |Sigma|_g.
Vec3 metric_barycenter(const ExtrinsicData& ext);

struct CmcCenterReport {
  std::vector<double> lambdas;
  std::vector<Vec3> barycenters;  // per-leaf metric barycenters
  Vec3 c_cmc = Vec3::Zero();      // extrapolated geometric center
  double c_cmc_order = 0.0;
  bool c_cmc_converged = false;
  Vec3 c_hamiltonian = Vec3::Zero();  // flux-integral center, for comparison
  bool c_hamiltonian_converged = false;
  double difference = 0.0;            // |c_cmc - c_hamiltonian|
  std::vector<double> gap;            // per-leaf |barycenter - c_hamiltonian|
};

// Geometric center of mass of a leaf family (ascending lambda, one shared
// metric model).  Throws MassZeroError when the model's mass vanishes.
CmcCenterReport cmc_center_of_mass(const std::vector<GraphSurface>& leaves,
                                   std::vector<double> radii = {}, int lmax = 16,
                                   int jobs = 0);

}  // namespace cmcfol
