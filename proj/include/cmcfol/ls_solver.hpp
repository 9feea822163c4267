// Distributed under the MIT License.
// See LICENSE.txt for details.

#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "cmcfol/surface_geometry.hpp"

namespace cmcfol {

// Options shared by the graph solves and the reduced-problem optimizer.
// Residual gates scale with the leaf: the mean-curvature gate is
// tol_h / lambda and the volume gate tol_vol * lambda^3.
struct SolveOptions {
  int lmax = 16;
  double delta = 0.1;              // containment: |xi| <= 1 - delta
  double lambda_min_scale = 20.0;  // admissible lambda >= scale * (1 + |m|)
  double tol_h = 1e-10;            // residual_H_perp <= tol_h / lambda
  double tol_vol = 1e-8;           // |volume defect| <= tol_vol * lambda^3
  double tol_crit = 1e-8;          // |grad G| at an accepted critical point
  double tol_cmc = 1e-7;           // relative CMC certificate
  int max_iters = 30;
  double smallness = 0.05;         // graph-norm ball radius, in units of lambda
  double fd_step = 1e-3;           // xi finite-difference step
  double cross_tol = 1e-5;         // gradient cross-check budget
  double stability_tol = 1e-8;     // verdict margin around zero
  bool with_gradient = true;       // fill G_gradient on solve_graph
  const SphereField* initial_u = nullptr;  // warm start; lmax must match
};

// One solved leaf: the graph function u with u orthogonal to the l = 1
// harmonics, the shell volume pinned to 28 pi/3 lambda^3, and the reduced
// area G = lambda^{-1} |Sigma|_g with its xi-gradient.
struct LSLeaf {
  Vec3 xi = Vec3::Zero();
  double lambda = 0.0;
  SphereField u;
  double G_value = 0.0;
  Vec3 G_gradient = Vec3::Zero();
  double residual_H_perp = 0.0;   // L2 norm of the l >= 2 part of H
  double residual_volume = 0.0;   // |shell volume - 28 pi/3 lambda^3|
  int newton_iters = 0;
  const MetricModel* metric = nullptr;

  GraphSurface surface() const { return GraphSurface{xi, lambda, u, metric}; }
};

// Solve proj_{(Lambda0 + Lambda1)^perp} H = 0 under the volume normalization
// at fixed (xi, lambda).  Newton iteration: a scalar line-solve pins the
// constant mode to the volume constraint, the l >= 2 block is corrected with
// the spectrally assembled stability operator, and u is re-projected off the
// l = 1 modes after every step.  Throws ContainmentError / DomainError on bad
// (xi, lambda), NewtonDivergenceError when the residual gate is missed after
// max_iters, and SmallnessViolation when the converged graph leaves the ball
// |u| + |Du| + |DDu| < smallness * lambda (unit-sphere spectral derivatives).
LSLeaf solve_graph(const Vec3& xi, double lambda, const MetricModel& model,
                   const SolveOptions& opts = {});

// (G, grad G) at fixed lambda.  The gradient comes from the first-variation
// integral Int [H - 2/lambda] g(a + lambda^{-1} (D_a u) y, nu) dmu and is
// cross-checked against a central difference of G; a disagreement beyond
// cross_tol * (1 + |grad G|) throws GradientMismatchError.
std::pair<double, Vec3> reduced_function(const Vec3& xi, double lambda,
                                         const MetricModel& model,
                                         const SolveOptions& opts = {});

// Trust-region Newton on grad G with a finite-difference Hessian.  Accepts
// when |grad G| < tol_crit and the leaf passes the CMC certificate
// |H - mean| / mean < tol_cmc in the surface L2 sense.  The iterate must stay
// inside |xi| < 1/2; leaving the ball throws NoCriticalPointError.  Requires
// a model of nonzero mass (MassZeroError otherwise).
LSLeaf find_critical_point(double lambda, const MetricModel& model,
                           const Vec3& xi0 = Vec3::Zero(),
                           const SolveOptions& opts = {});

// Galerkin matrices of the stability operator L f = -lap_Sigma f - (|h|^2 +
// Ric(nu, nu)) f on the induced surface: a(j, k) = Int [q^{ab} dY_j dY_k -
// P Y_j Y_k] dmu (weak form, symmetric), m(j, k) = Int Y_j Y_k dmu, and
// mean(j) = Int Y_j dmu for the mean-zero constraint.
struct StabilityMatrices {
  MatX a;
  MatX m;
  VecX mean;
};
StabilityMatrices stability_matrices(const ExtrinsicData& ext);

enum class StabilityVerdict { Stable, Unstable, Marginal };

// Constrained spectrum of L on the discrete mean-zero subspace (dimension
// (lmax+1)^2 - 1) and the translation block lambda^{-4} <f_a, L f_b> with
// f_a = g(lambda e_a + (D_{xi_a} u) y, nu), the discrete shadow of the
// translation kernel.  Verdict: Unstable if the lowest eigenvalue is below
// -stability_tol, Marginal within the tolerance band, Stable above it.
struct StabilityReport {
  double lowest_meanzero_eigenvalue = 0.0;
  std::vector<double> eigenvalues;  // ascending, mean-zero constrained
  Mat3 translation_block = Mat3::Zero();
  StabilityVerdict verdict = StabilityVerdict::Marginal;
  double tol = 0.0;
};
StabilityReport stability_spectrum(const LSLeaf& leaf, const SolveOptions& opts = {});

// Sweep lambda (ascending) through critical leaves; models of zero mass run
// in centered mode xi = 0.  Throws FoliationOrderViolation when the mean
// curvature fails to decrease strictly, or when even the outermost pair of
// leaves fails radial ordering.  h_remainder_order is the fitted decay order
// of |H(lambda) - 2/lambda| (infinity when the remainder sits at the noise
// floor); ordered_from_lambda is the first sweep value from which every
// consecutive pair is radially nested about the origin.
struct FoliationReport {
  std::vector<double> lambdas;
  std::vector<LSLeaf> leaves;
  std::vector<double> mean_curvatures;
  bool h_strictly_decreasing = false;
  double h_remainder_order = 0.0;
  bool radially_ordered = false;
  double ordered_from_lambda = 0.0;
  std::vector<double> min_radial_gaps;  // per consecutive pair
};
FoliationReport foliation_sweep(const MetricModel& model,
                                const std::vector<double>& lambdas,
                                const SolveOptions& opts = {});

// Odd/even split of u under reflection through the leaf center: the
// reflected surface is the graph of u(-y), so the split is the antipodal
// parity decomposition of u.
struct ParityReport {
  double odd_sup = 0.0;
  double even_sup = 0.0;
  double ratio = 0.0;  // odd_sup / even_sup (0 when both vanish)
};
ParityReport parity_diagnostics(const LSLeaf& leaf);

}  // namespace cmcfol
