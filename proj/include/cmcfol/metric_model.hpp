// Distributed under the MIT License.
// See LICENSE.txt for details.

#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "cmcfol/radial_poly.hpp"

namespace cmcfol {

enum class MetricKind {
  Flat,
  SchwarzschildIsotropic,
  TranslatedSchwarzschild,
  PerturbedSchwarzschild,
  CustomPerturbation,
};

// Closed-form tail structures.  The first three are the basic dyads; the last
// two are the curvature-neutral families (identically vanishing linearized
// scalar curvature) that make slowly decaying tails q < 1 usable without
// wrecking the flux integrals.
enum class TensorStructure {
  ScalarTimesIdentity,
  RankOne,
  OffDiagonal,
  RadialRankOne,
  HessianProfile,
};

enum class TermParity { Even, Odd };

enum class ParityPart { Full, Even, Odd };

// Polynomial in the unit direction x/|x|, total degree <= 4.
struct PolyProfile {
  struct Mono {
    double coef;
    int a, b, c;
  };
  std::vector<Mono> monos{{1.0, 0, 0, 0}};

  int degree() const {
    int d = 0;
    for (const auto& m : monos) d = std::max(d, m.a + m.b + m.c);
    return d;
  }
};

struct PerturbationTerm {
  double amplitude = 0.0;
  double decay = 1.0;  // sigma ~ |x|^-decay
  PolyProfile profile;
  TensorStructure structure = TensorStructure::ScalarTimesIdentity;
  Vec3 direction = Vec3(1, 0, 0);  // RankOne only; normalized at build
  int off_i = 0, off_j = 1;        // OffDiagonal only
  TermParity parity = TermParity::Even;
};

struct MetricConfig {
  MetricKind kind = MetricKind::Flat;
  double mass = 0.0;
  Vec3 shift = Vec3::Zero();
  std::optional<double> tau;      // defaulted from the term catalog if absent
  std::optional<double> tau_hat;  // likewise, from the odd part
  std::vector<PerturbationTerm> perturbations;
  std::string name = "metric";
};

// Jet of a symmetric 2-tensor field: value, first and second derivatives.
struct TensorJet {
  Mat3 g = Mat3::Zero();
  std::array<Mat3, 3> dg{Mat3::Zero(), Mat3::Zero(), Mat3::Zero()};
  std::array<std::array<Mat3, 3>, 3> ddg{};  // ddg[k][l] = d_k d_l g, symmetric in (k,l)
};

class MetricModel;

// Read-only view of one parity component of a model's deviation from flat.
// Satisfies the same sigma-jet interface the flux integrals consume.
class ParityView {
 public:
  ParityView(const MetricModel& model, ParityPart part) : model_(&model), part_(part) {}
  TensorJet sigma_jet(const Vec3& x, int order = 2) const;
  ParityPart part() const { return part_; }

 private:
  const MetricModel* model_;
  ParityPart part_;
};

class MetricModel {
 public:
  explicit MetricModel(MetricConfig cfg);

  const MetricConfig& config() const { return cfg_; }
  MetricKind kind() const { return cfg_.kind; }
  double mass_param() const { return mass_; }
  const Vec3& shift() const { return shift_; }
  double tau() const { return tau_; }
  double tau_hat() const { return tau_hat_; }
  bool is_flat() const { return flat_; }

  // g = id + sigma, exact analytic jets.  order in {0,1,2} bounds which
  // derivative slots are filled.  Throws DomainError outside the chart
  // (|x| <= 1/2, and |x - shift| <= 1/2 for shifted kinds) and
  // SingularMetricError where the metric fails to be positive definite.
  TensorJet metric_jet(const Vec3& x, int order = 2) const;
  TensorJet sigma_jet(const Vec3& x, int order = 2, ParityPart part = ParityPart::Full) const;

  // Order-0 fast path for volume quadrature.
  double sqrt_det_g(const Vec3& x) const;

  // div div sigma - lap tr sigma, the linearization of scalar curvature.
  double scalar_curvature_linearized(const Vec3& x) const;

  ParityView even_part() const { return ParityView(*this, ParityPart::Even); }
  ParityView odd_part() const { return ParityView(*this, ParityPart::Odd); }

 private:
  void compile();
  void check_chart(const Vec3& x) const;
  TensorJet sigma_jet_raw(const Vec3& w, int order) const;  // w already shifted

  MetricConfig cfg_;
  double mass_ = 0.0;
  Vec3 shift_ = Vec3::Zero();
  double tau_ = 1.0, tau_hat_ = 1.0;
  bool flat_ = false;
  std::array<RadialPolyJet, 6> comp_;  // xx,xy,xz,yy,yz,zz of sigma(w)
};

std::pair<ParityView, ParityView> split_parity(const MetricModel& model);

// Curvature of the full metric from its jet.
std::array<Mat3, 3> christoffel(const TensorJet& jet);  // [k](i,j) = Gamma^k_ij
Mat3 ricci(const TensorJet& jet);
double scalar_curvature(const TensorJet& jet);

// Numeric decay conformance over log-spaced shells 2 < |x| < 1e4.
struct DecayReport {
  double sup_sigma_scaled = 0.0;    // sup |sigma| |x|^tau
  double sup_dsigma_scaled = 0.0;   // sup |d sigma| |x|^(1+tau)
  double sup_ddsigma_scaled = 0.0;  // sup |dd sigma| |x|^(2+tau)
  double sup_odd_scaled = 0.0;      // sup |sigma_odd| |x|^(1+tau_hat)
  double curvature_decay_order = 0.0;  // fitted from |R_lin| shell maxima
  bool curvature_integrable = true;    // order > 3 (or R_lin at noise level)
};
DecayReport check_decay(const MetricModel& model);

// Built-in catalog used by tests and `verify`.
MetricModel make_flat();
MetricModel make_schwarzschild(double mass);
MetricModel make_translated_schwarzschild(double mass, const Vec3& shift);
// Schwarzschild + curvature-neutral even tail  amp * r^-q (id - q rhat rhat).
MetricModel make_perturbed_radial_tail(double mass, double q, double amp);
// Schwarzschild + even Hessian tail of psi = amp r^(2-q) (z^2/r^2 - 1/3).
MetricModel make_perturbed_hessian_even(double mass, double q, double amp);
// Schwarzschild + even Hessian tail + odd (Regge-Teitelboim) Hessian tail
// of psi = amp_odd r^(1-qhat) (z/r), sigma_odd ~ r^-(1+qhat).
MetricModel make_parity_model(double mass, double q_even, double amp_even, double qhat_odd,
                              double amp_odd);
// Schwarzschild + odd trace term amp * r^-q (z/r) id: decays like the even
// budget only, violating the stricter odd-part requirement.  Negative control.
MetricModel make_non_rt_model(double mass, double q, double amp);
// Flat + pure-trace c/r tail; its mass is c/2 exactly at every radius.
MetricModel make_trace_tail(double c);

}  // namespace cmcfol
