// Distributed under the MIT License.
// See LICENSE.txt for details.

#include "cmcfol/metric_model.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "cmcfol/errors.hpp"
#include "cmcfol/fitting.hpp"

namespace cmcfol {

namespace {

constexpr double chart_inner_radius = 0.5;

int comp_index(int i, int j) {
  if (i > j) std::swap(i, j);
  static constexpr int table[3][3] = {{0, 1, 2}, {1, 3, 4}, {2, 4, 5}};
  return table[i][j];
}

RadialPoly profile_poly(double amplitude, double decay_q, const PolyProfile& profile,
                        double extra_alpha = 0.0) {
  std::vector<RadialTerm> terms;
  terms.reserve(profile.monos.size());
  for (const auto& m : profile.monos) {
    const int deg = m.a + m.b + m.c;
    terms.push_back(
        RadialTerm{amplitude * m.coef, -decay_q - deg + extra_alpha, m.a, m.b, m.c});
  }
  return RadialPoly(std::move(terms));
}

}  // namespace

MetricModel::MetricModel(MetricConfig cfg) : cfg_(std::move(cfg)) { compile(); }

void MetricModel::compile() {
  shift_ = cfg_.shift;
  const bool has_schw_base = cfg_.kind == MetricKind::SchwarzschildIsotropic ||
                             cfg_.kind == MetricKind::TranslatedSchwarzschild ||
                             cfg_.kind == MetricKind::PerturbedSchwarzschild;
  mass_ = has_schw_base ? cfg_.mass : 0.0;
  if (!std::isfinite(cfg_.mass)) throw ConfigError("mass must be finite", "mass");
  if (!cfg_.shift.allFinite()) throw ConfigError("shift must be finite", "shift");
  if (cfg_.kind == MetricKind::Flat || cfg_.kind == MetricKind::CustomPerturbation) {
    if (cfg_.mass != 0.0)
      throw ConfigError("mass must be 0 for this metric kind", "mass");
  }
  if (cfg_.kind == MetricKind::Flat || cfg_.kind == MetricKind::SchwarzschildIsotropic) {
    if (!cfg_.perturbations.empty())
      throw ConfigError("perturbations not allowed for this metric kind", "perturbations");
  }
  if (cfg_.kind != MetricKind::TranslatedSchwarzschild && shift_ != Vec3::Zero())
    throw ConfigError("shift is only supported for TranslatedSchwarzschild", "shift");

  std::array<RadialPoly, 6> comp;
  if (has_schw_base && mass_ != 0.0) {
    const double t = 0.5 * mass_;
    // (1 + m/(2r))^4 - 1, expanded exactly.
    RadialPoly phi({RadialTerm{4 * t, -1, 0, 0, 0}, RadialTerm{6 * t * t, -2, 0, 0, 0},
                    RadialTerm{4 * t * t * t, -3, 0, 0, 0},
                    RadialTerm{t * t * t * t, -4, 0, 0, 0}});
    comp[comp_index(0, 0)] += phi;
    comp[comp_index(1, 1)] += phi;
    comp[comp_index(2, 2)] += phi;
  }

  for (std::size_t k = 0; k < cfg_.perturbations.size(); ++k) {
    const auto& term = cfg_.perturbations[k];
    const std::string field = "perturbations[" + std::to_string(k) + "]";
    if (term.profile.degree() > 4)
      throw ConfigError("angular profile degree exceeds 4", field + ".profile");
    if (!(term.decay > 0.0) || !std::isfinite(term.decay))
      throw ConfigError("decay must be positive and finite", field + ".decay");
    if (!std::isfinite(term.amplitude))
      throw ConfigError("amplitude must be finite", field + ".amplitude");

    std::array<RadialPoly, 6> tc;
    switch (term.structure) {
      case TensorStructure::ScalarTimesIdentity: {
        RadialPoly s = profile_poly(term.amplitude, term.decay, term.profile);
        tc[comp_index(0, 0)] += s;
        tc[comp_index(1, 1)] += s;
        tc[comp_index(2, 2)] += s;
        break;
      }
      case TensorStructure::RankOne: {
        const double n = term.direction.norm();
        if (n == 0.0) throw ConfigError("direction must be nonzero", field + ".direction");
        const Vec3 d = term.direction / n;
        RadialPoly s = profile_poly(term.amplitude, term.decay, term.profile);
        for (int i = 0; i < 3; ++i)
          for (int j = i; j < 3; ++j) tc[comp_index(i, j)] += (d[i] * d[j]) * s;
        break;
      }
      case TensorStructure::OffDiagonal: {
        if (term.off_i == term.off_j || term.off_i < 0 || term.off_i > 2 || term.off_j < 0 ||
            term.off_j > 2)
          throw ConfigError("off-diagonal indices must be distinct in 0..2", field);
        tc[comp_index(term.off_i, term.off_j)] +=
            profile_poly(term.amplitude, term.decay, term.profile);
        break;
      }
      case TensorStructure::RadialRankOne: {
        RadialPoly s = profile_poly(term.amplitude, term.decay, term.profile);
        for (int i = 0; i < 3; ++i)
          for (int j = i; j < 3; ++j) {
            int e[3] = {0, 0, 0};
            e[i] += 1;
            e[j] += 1;
            tc[comp_index(i, j)] += s * RadialPoly::monomial(1.0, -2.0, e[0], e[1], e[2]);
          }
        break;
      }
      case TensorStructure::HessianProfile: {
        // Potential r^(2-q) P(xhat); its Hessian decays like r^-q and has
        // identically vanishing linearized scalar curvature.
        RadialPoly psi = profile_poly(term.amplitude, term.decay, term.profile, 2.0);
        std::array<RadialPoly, 3> dpsi;
        for (int i = 0; i < 3; ++i) dpsi[i] = psi.derivative(i);
        for (int i = 0; i < 3; ++i)
          for (int j = i; j < 3; ++j) tc[comp_index(i, j)] += dpsi[i].derivative(j);
        break;
      }
    }

    const int want = term.parity == TermParity::Even ? 1 : -1;
    for (int c = 0; c < 6; ++c) {
      if (tc[c].empty()) continue;
      if (tc[c].parity() != want)
        throw ConfigError("term parity does not match its declared parity tag",
                          field + ".parity");
      comp[c] += tc[c];
    }
  }

  // Symbolic decay rates of the even and odd pieces.
  double maxdeg_even = -1e300, maxdeg_odd = -1e300;
  bool any = false, any_odd = false;
  for (const auto& c : comp) {
    for (const auto& t : c.terms()) {
      const double deg = t.alpha + t.a + t.b + t.c;
      any = true;
      if ((t.a + t.b + t.c) % 2 == 0)
        maxdeg_even = std::max(maxdeg_even, deg);
      else {
        any_odd = true;
        maxdeg_odd = std::max(maxdeg_odd, deg);
      }
    }
  }
  flat_ = !any && shift_ == Vec3::Zero();
  const double inferred_tau = any ? std::min(1.0, -maxdeg_even) : 1.0;
  const double inferred_tau_hat = any_odd ? std::min(1.0, -maxdeg_odd - 1.0) : 1.0;
  if (cfg_.tau) {
    if (!(*cfg_.tau > 0.5) || !(*cfg_.tau <= 1.0))
      throw ConfigError("tau must lie in (1/2, 1]", "tau");
    if (any && -maxdeg_even < *cfg_.tau - 1e-12)
      throw ConfigError("declared tau exceeds the symbolic decay of the even part", "tau");
    tau_ = *cfg_.tau;
  } else {
    tau_ = inferred_tau;
  }
  if (cfg_.tau_hat) {
    if (!(*cfg_.tau_hat > 0.5) || !(*cfg_.tau_hat <= 1.0))
      throw ConfigError("tau_hat must lie in (1/2, 1]", "tau_hat");
    if (any_odd && -maxdeg_odd - 1.0 < *cfg_.tau_hat - 1e-12)
      throw ConfigError("declared tau_hat exceeds the symbolic decay of the odd part",
                        "tau_hat");
    tau_hat_ = *cfg_.tau_hat;
  } else {
    tau_hat_ = inferred_tau_hat;
  }

  for (int c = 0; c < 6; ++c) comp_[c] = RadialPolyJet::build(comp[c]);
}

void MetricModel::check_chart(const Vec3& x) const {
  if (x.norm() <= chart_inner_radius)
    throw DomainError("metric evaluated inside the chart inner boundary |x| <= 1/2");
  if (shift_ != Vec3::Zero() && (x - shift_).norm() <= chart_inner_radius)
    throw DomainError("metric evaluated inside the shifted chart inner boundary");
}

TensorJet MetricModel::sigma_jet_raw(const Vec3& w, int order) const {
  TensorJet jet;
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) {
      const auto& cj = comp_[comp_index(i, j)];
      const double v = cj.f.eval(w);
      jet.g(i, j) = jet.g(j, i) = v;
      if (order >= 1) {
        for (int k = 0; k < 3; ++k) {
          const double dv = cj.df[k].eval(w);
          jet.dg[k](i, j) = jet.dg[k](j, i) = dv;
        }
      }
      if (order >= 2) {
        int idx = 0;
        for (int k = 0; k < 3; ++k)
          for (int l = k; l < 3; ++l) {
            const double ddv = cj.ddf[idx++].eval(w);
            jet.ddg[k][l](i, j) = jet.ddg[k][l](j, i) = ddv;
            if (k != l) jet.ddg[l][k](i, j) = jet.ddg[l][k](j, i) = ddv;
          }
      }
    }
  return jet;
}

TensorJet MetricModel::sigma_jet(const Vec3& x, int order, ParityPart part) const {
  check_chart(x);
  if (part == ParityPart::Full) return sigma_jet_raw(x - shift_, order);
  check_chart(-x);
  const TensorJet a = sigma_jet_raw(x - shift_, order);
  const TensorJet b = sigma_jet_raw(-x - shift_, order);
  // For h(x) = sigma(-x): dh = -(d sigma)(-x), ddh = +(dd sigma)(-x).
  const double sgn = part == ParityPart::Even ? 1.0 : -1.0;
  TensorJet out;
  out.g = 0.5 * (a.g + sgn * b.g);
  if (order >= 1)
    for (int k = 0; k < 3; ++k) out.dg[k] = 0.5 * (a.dg[k] - sgn * b.dg[k]);
  if (order >= 2)
    for (int k = 0; k < 3; ++k)
      for (int l = 0; l < 3; ++l) out.ddg[k][l] = 0.5 * (a.ddg[k][l] + sgn * b.ddg[k][l]);
  return out;
}

TensorJet MetricModel::metric_jet(const Vec3& x, int order) const {
  check_chart(x);
  if (mass_ < 0.0) {
    const double r = (x - shift_).norm();
    if (1.0 + 0.5 * mass_ / r <= 0.0)
      throw SingularMetricError("conformal factor vanishes at |x - shift| = " +
                                std::to_string(r));
  }
  TensorJet jet = sigma_jet_raw(x - shift_, order);
  jet.g += Mat3::Identity();
  Eigen::LLT<Mat3> llt(jet.g);
  if (llt.info() != Eigen::Success)
    throw SingularMetricError("metric is not positive definite at the requested point");
  return jet;
}

double MetricModel::sqrt_det_g(const Vec3& x) const {
  check_chart(x);
  const Vec3 w = x - shift_;
  if (mass_ < 0.0 && 1.0 + 0.5 * mass_ / w.norm() <= 0.0)
    throw SingularMetricError("conformal factor vanishes inside the integration region");
  Mat3 g = Mat3::Identity();
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) {
      const double v = comp_[comp_index(i, j)].f.eval(w);
      g(i, j) += v;
      if (i != j) g(j, i) += v;
    }
  const double det = g.determinant();
  if (!(det > 0.0)) throw SingularMetricError("metric degenerates inside integration region");
  return std::sqrt(det);
}

double MetricModel::scalar_curvature_linearized(const Vec3& x) const {
  const TensorJet s = sigma_jet(x, 2);
  double divdiv = 0.0, lap_tr = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) divdiv += s.ddg[i][j](i, j);
  for (int k = 0; k < 3; ++k) lap_tr += s.ddg[k][k].trace();
  return divdiv - lap_tr;
}

TensorJet ParityView::sigma_jet(const Vec3& x, int order) const {
  return model_->sigma_jet(x, order, part_);
}

std::pair<ParityView, ParityView> split_parity(const MetricModel& model) {
  return {model.even_part(), model.odd_part()};
}

std::array<Mat3, 3> christoffel(const TensorJet& jet) {
  const Mat3 ginv = jet.g.inverse();
  std::array<Mat3, 3> gamma;
  for (int k = 0; k < 3; ++k) {
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s = 0.0;
        for (int l = 0; l < 3; ++l)
          s += ginv(k, l) * (jet.dg[i](j, l) + jet.dg[j](i, l) - jet.dg[l](i, j));
        gamma[k](i, j) = 0.5 * s;
      }
  }
  return gamma;
}

Mat3 ricci(const TensorJet& jet) {
  const Mat3 ginv = jet.g.inverse();
  const auto gamma = christoffel(jet);

  // d_m g^{kl} = -g^{ka} (d_m g_ab) g^{bl}
  std::array<Mat3, 3> dginv;
  for (int m = 0; m < 3; ++m) dginv[m] = -ginv * jet.dg[m] * ginv;

  // dgamma[m][k](i,j) = d_m Gamma^k_ij
  std::array<std::array<Mat3, 3>, 3> dgamma;
  for (int m = 0; m < 3; ++m)
    for (int k = 0; k < 3; ++k)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          double s = 0.0;
          for (int l = 0; l < 3; ++l) {
            const double D = jet.dg[i](j, l) + jet.dg[j](i, l) - jet.dg[l](i, j);
            const double dD =
                jet.ddg[m][i](j, l) + jet.ddg[m][j](i, l) - jet.ddg[m][l](i, j);
            s += dginv[m](k, l) * D + ginv(k, l) * dD;
          }
          dgamma[m][k](i, j) = 0.5 * s;
        }

  Mat3 ric;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += dgamma[k][k](i, j) - dgamma[i][k](k, j);
      for (int k = 0; k < 3; ++k)
        for (int m = 0; m < 3; ++m)
          s += gamma[k](k, m) * gamma[m](i, j) - gamma[k](i, m) * gamma[m](k, j);
      ric(i, j) = s;
    }
  return ric;
}

double scalar_curvature(const TensorJet& jet) {
  const Mat3 ginv = jet.g.inverse();
  return (ginv * ricci(jet)).trace();
}

DecayReport check_decay(const MetricModel& model) {
  // Fixed direction set: axes, face and body diagonals.
  std::vector<Vec3> dirs;
  for (int s : {-1, 1})
    for (int k = 0; k < 3; ++k) {
      Vec3 d = Vec3::Zero();
      d[k] = s;
      dirs.push_back(d);
    }
  for (int sx : {-1, 1})
    for (int sy : {-1, 1})
      for (int sz : {-1, 1}) dirs.push_back(Vec3(sx, sy, sz).normalized());
  for (int k = 0; k < 3; ++k)
    for (int s1 : {-1, 1})
      for (int s2 : {-1, 1}) {
        Vec3 d = Vec3::Ones();
        d[k] = 0;
        d[(k + 1) % 3] *= s1;
        d[(k + 2) % 3] *= s2;
        dirs.push_back(d.normalized());
      }

  DecayReport rep;
  const int nshell = 25;
  std::vector<double> shell_r, shell_curv;
  for (int s = 0; s < nshell; ++s) {
    const double r = 2.0 * std::pow(1e4 / 2.0, static_cast<double>(s) / (nshell - 1));
    double curv_max = 0.0;
    for (const auto& d : dirs) {
      const Vec3 x = r * d;
      const TensorJet sj = model.sigma_jet(x, 2);
      double ndg = 0.0, nddg = 0.0;
      for (int k = 0; k < 3; ++k) {
        ndg = std::max(ndg, sj.dg[k].cwiseAbs().maxCoeff());
        for (int l = 0; l < 3; ++l)
          nddg = std::max(nddg, sj.ddg[k][l].cwiseAbs().maxCoeff());
      }
      rep.sup_sigma_scaled =
          std::max(rep.sup_sigma_scaled,
                   sj.g.cwiseAbs().maxCoeff() * std::pow(r, model.tau()));
      rep.sup_dsigma_scaled =
          std::max(rep.sup_dsigma_scaled, ndg * std::pow(r, 1.0 + model.tau()));
      rep.sup_ddsigma_scaled =
          std::max(rep.sup_ddsigma_scaled, nddg * std::pow(r, 2.0 + model.tau()));
      const TensorJet so = model.sigma_jet(x, 0, ParityPart::Odd);
      rep.sup_odd_scaled =
          std::max(rep.sup_odd_scaled,
                   so.g.cwiseAbs().maxCoeff() * std::pow(r, 1.0 + model.tau_hat()));
      curv_max = std::max(curv_max, std::abs(model.scalar_curvature_linearized(x)));
    }
    shell_r.push_back(r);
    shell_curv.push_back(curv_max);
  }
  const double curv_scale = shell_curv.front();
  if (curv_scale < 1e-14) {
    rep.curvature_decay_order = std::numeric_limits<double>::infinity();
    rep.curvature_integrable = true;
  } else {
    auto slope = loglog_slope(shell_r, shell_curv, 1e-300);
    rep.curvature_decay_order = slope ? -*slope : 0.0;
    rep.curvature_integrable = rep.curvature_decay_order > 3.0;
  }
  return rep;
}

MetricModel make_flat() {
  MetricConfig cfg;
  cfg.kind = MetricKind::Flat;
  cfg.name = "flat";
  return MetricModel(cfg);
}

MetricModel make_schwarzschild(double mass) {
  MetricConfig cfg;
  cfg.kind = MetricKind::SchwarzschildIsotropic;
  cfg.mass = mass;
  cfg.name = "schwarzschild";
  return MetricModel(cfg);
}

MetricModel make_translated_schwarzschild(double mass, const Vec3& shift) {
  MetricConfig cfg;
  cfg.kind = MetricKind::TranslatedSchwarzschild;
  cfg.mass = mass;
  cfg.shift = shift;
  cfg.name = "translated_schwarzschild";
  return MetricModel(cfg);
}

MetricModel make_perturbed_radial_tail(double mass, double q, double amp) {
  MetricConfig cfg;
  cfg.kind = MetricKind::PerturbedSchwarzschild;
  cfg.mass = mass;
  cfg.tau = q;
  cfg.name = "perturbed_radial_tail";
  PerturbationTerm iso;
  iso.amplitude = amp;
  iso.decay = q;
  iso.structure = TensorStructure::ScalarTimesIdentity;
  PerturbationTerm rad;
  rad.amplitude = -q * amp;
  rad.decay = q;
  rad.structure = TensorStructure::RadialRankOne;
  cfg.perturbations = {iso, rad};
  return MetricModel(cfg);
}

MetricModel make_perturbed_hessian_even(double mass, double q, double amp) {
  MetricConfig cfg;
  cfg.kind = MetricKind::PerturbedSchwarzschild;
  cfg.mass = mass;
  cfg.tau = q;
  cfg.name = "perturbed_hessian_even";
  PerturbationTerm h;
  h.amplitude = amp;
  h.decay = q;
  h.structure = TensorStructure::HessianProfile;
  h.profile.monos = {{1.0, 0, 0, 2}, {-1.0 / 3.0, 0, 0, 0}};
  cfg.perturbations = {h};
  return MetricModel(cfg);
}

MetricModel make_parity_model(double mass, double q_even, double amp_even, double qhat_odd,
                              double amp_odd) {
  MetricConfig cfg;
  cfg.kind = MetricKind::PerturbedSchwarzschild;
  cfg.mass = mass;
  cfg.tau = q_even;
  cfg.tau_hat = qhat_odd;
  cfg.name = "parity_model";
  PerturbationTerm even;
  even.amplitude = amp_even;
  even.decay = q_even;
  even.structure = TensorStructure::HessianProfile;
  even.profile.monos = {{1.0, 0, 0, 2}, {-1.0 / 3.0, 0, 0, 0}};
  PerturbationTerm odd;
  odd.amplitude = amp_odd;
  odd.decay = 1.0 + qhat_odd;
  odd.structure = TensorStructure::HessianProfile;
  odd.profile.monos = {{1.0, 0, 0, 1}};
  odd.parity = TermParity::Odd;
  cfg.perturbations = {even, odd};
  return MetricModel(cfg);
}

MetricModel make_non_rt_model(double mass, double q, double amp) {
  MetricConfig cfg;
  cfg.kind = MetricKind::PerturbedSchwarzschild;
  cfg.mass = mass;
  cfg.name = "non_rt_odd";
  PerturbationTerm odd;
  odd.amplitude = amp;
  odd.decay = q;
  odd.structure = TensorStructure::ScalarTimesIdentity;
  odd.profile.monos = {{1.0, 0, 0, 1}};
  odd.parity = TermParity::Odd;
  cfg.perturbations = {odd};
  return MetricModel(cfg);
}

MetricModel make_trace_tail(double c) {
  MetricConfig cfg;
  cfg.kind = MetricKind::CustomPerturbation;
  cfg.name = "trace_tail";
  PerturbationTerm t;
  t.amplitude = c;
  t.decay = 1.0;
  t.structure = TensorStructure::ScalarTimesIdentity;
  cfg.perturbations = {t};
  return MetricModel(cfg);
}

}  // namespace cmcfol
