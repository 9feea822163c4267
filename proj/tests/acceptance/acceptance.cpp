// Distributed under the MIT License.
// See LICENSE.txt for details.
//
// End-to-end acceptance gates for the foliation toolkit.  Each criterion
// prints exactly one PASS/FAIL line; the exit status is the failure count.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "cmcfol/fitting.hpp"
#include "cmcfol/flux_invariants.hpp"
#include "cmcfol/ls_solver.hpp"
#include "cmcfol/metric_model.hpp"
#include "cmcfol/sphere_spectral.hpp"
#include "cmcfol/surface_geometry.hpp"
#include "oracles.hpp"

using namespace cmcfol;

namespace {

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", x);
  return buf;
}

// The default admissibility floor and uniqueness ball target the asymptotic
// regime lambda >> m; the sub-asymptotic radii the criteria exercise (down to
// lambda = 25 at |m| = 1, constant shift about 4.5 m) need wider knobs.
SolveOptions sub_asymptotic() {
  SolveOptions o;
  o.lambda_min_scale = 10.0;
  o.smallness = 0.25;
  return o;
}

// Coordinate radius of the centered leaf from the volume normalization,
// solver-independent: bisection of the radial shell-volume quadrature.
double centered_radius(double m, double lambda) {
  const double target = 28.0 * M_PI / 3.0 * lambda * lambda * lambda;
  const auto defect = [&](double rho) {
    return oracle::shell_volume(m, rho, 2.0 * lambda) - target;
  };
  double lo = lambda - 8.0 * std::abs(m) - 2.0, hi = lambda + 8.0 * std::abs(m) + 2.0;
  if (!(defect(lo) > 0.0) || !(defect(hi) < 0.0))
    return std::numeric_limits<double>::quiet_NaN();
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (defect(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double mean_h(const ExtrinsicData& ext) { return ext.integrate(ext.H) / ext.area_g; }

struct Acceptance {
  int failures = 0;

  void run(int n, const std::function<std::pair<bool, std::string>()>& criterion) {
    bool pass = false;
    std::string detail;
    try {
      std::tie(pass, detail) = criterion();
    } catch (const std::exception& e) {
      pass = false;
      detail = std::string("exception: ") + e.what();
    }
    std::printf("criterion %2d: %s  %s\n", n, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
  }
};

// Leaves of the m = 1 Schwarzschild family collected across criteria; the
// Christodoulou-Yau gate and the Hawking-mass fit run over all of them.
struct Collected {
  std::vector<double> cy_slacks;
  std::vector<double> fol_lambdas;   // centered foliation ladder
  std::vector<double> fol_hawking;
};

}  // namespace

int main() {
  Acceptance acc;
  Collected coll;
  const SolveOptions sub = sub_asymptotic();
  const MetricModel schw = make_schwarzschild(1.0);

  // 1. Spectral exactness of the discrete sphere Laplacian and the
  //    coercivity bound >= 4 on (Lambda0 + Lambda1)-orthogonal fields.
  acc.run(1, [&]() -> std::pair<bool, std::string> {
    const int lmax = 16;
    const auto tr = shared_transform(lmax);
    const MetricModel flat = make_flat();
    const double rho = 2.0;
    const StabilityMatrices sm =
        stability_matrices(compute_extrinsic(make_round_surface(tr, flat, rho)));
    Eigen::GeneralizedSelfAdjointEigenSolver<MatX> es(sm.a, sm.m);
    std::vector<double> expected;
    for (int l = 0; l <= lmax; ++l)
      for (int m = -l; m <= l; ++m) expected.push_back(l * (l + 1.0));
    std::sort(expected.begin(), expected.end());
    double worst = 0.0;
    for (int k = 0; k < tr->ncoef(); ++k) {
      const double lap = es.eigenvalues()[k] * rho * rho + 2.0;
      const double ref = expected[static_cast<std::size_t>(k)];
      worst = std::max(worst, std::abs(lap - ref) / std::max(1.0, ref));
    }

    std::mt19937 rng(20240817);
    std::normal_distribution<double> dist;
    double min_slack = std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < 200; ++trial) {
      VecX c = VecX::Zero(tr->ncoef());
      for (int k = 4; k < tr->ncoef(); ++k) c[k] = dist(rng);
      const SphereField f = SphereField::from_coeffs(tr, c);
      min_slack =
          std::min(min_slack, flat_stability_quadratic_form(f) - 4.0 * f.l2_norm() * f.l2_norm());
    }
    const bool pass = worst < 1e-10 && min_slack >= -1e-9;
    return {pass, "eigenvalue rel err " + num(worst) + ", min coercivity slack " +
                      num(min_slack) + " over 200 fields"};
  });

  // 2. Flat space: graphs are exact round spheres at machine precision.
  acc.run(2, [&]() -> std::pair<bool, std::string> {
    const MetricModel flat = make_flat();
    double worst_u = 0.0, worst_h = 0.0, worst_g = 0.0;
    for (const double lambda : {20.0, 100.0}) {
      for (const Vec3& xi : {Vec3(0, 0, 0), Vec3(0.3, 0, 0),
                             Vec3(0.5 / std::sqrt(2.0), 0.5 / std::sqrt(2.0), 0)}) {
        const LSLeaf leaf = solve_graph(xi, lambda, flat);
        const ExtrinsicData ext = compute_extrinsic(leaf.surface());
        worst_u = std::max(worst_u, leaf.u.sup_norm() / lambda);
        worst_h = std::max(worst_h, std::abs(mean_h(ext) - 2.0 / lambda));
        worst_g = std::max(worst_g, leaf.G_gradient.norm());
      }
    }
    const bool pass = worst_u < 1e-11 && worst_h < 1e-11 && worst_g < 1e-10;
    return {pass, "sup|u|/lambda " + num(worst_u) + ", |H - 2/lambda| " + num(worst_h) +
                      ", |grad G| " + num(worst_g)};
  });

  // 3. Centered Schwarzschild leaves against the radial volume reduction.
  acc.run(3, [&]() -> std::pair<bool, std::string> {
    double worst_rel = 0.0, worst_res = 0.0;
    for (const double lambda : {25.0, 50.0, 100.0}) {
      const LSLeaf leaf = solve_graph(Vec3::Zero(), lambda, schw, sub);
      const ExtrinsicData ext = compute_extrinsic(leaf.surface());
      const double rho = centered_radius(1.0, lambda);
      const double href = oracle::sphere_H(1.0, rho);
      worst_rel = std::max(worst_rel, std::abs(mean_h(ext) - href) / href);
      worst_res = std::max(worst_res, leaf.residual_H_perp * lambda);
      coll.cy_slacks.push_back(diagnostics(ext).cy_deficit);
    }
    const bool pass = worst_rel < 1e-8 && worst_res < 1e-10;
    return {pass, "H rel err " + num(worst_rel) + ", residual * lambda " + num(worst_res)};
  });

  // 4. Mass recovery through the Richardson ladder and the flux form.
  acc.run(4, [&]() -> std::pair<bool, std::string> {
    double worst = 0.0;
    for (const double m : {1.0, 2.0, -1.0})
      worst = std::max(worst, std::abs(adm_mass_limit(make_schwarzschild(m)) - m));
    const MetricModel tail = make_perturbed_radial_tail(1.0, 0.6, 0.5);
    const double adm = adm_mass_limit(tail);
    std::vector<double> radii = default_flux_radii(), forms;
    for (const double r : radii) forms.push_back(flux_forms(tail, r).first);
    const double form_limit = richardson_extrapolate(radii, forms).value;
    const double gap = std::abs(form_limit - adm);
    const bool pass = worst < 1e-5 && gap < 1e-4;
    return {pass, "max |mass - m| " + num(worst) + ", flux-form vs adm gap " + num(gap) +
                      " on the tau = 0.6 tail"};
  });

  // 5. Reduced-area expansion: quadratic coefficient 4 pi m, improving with
  //    lambda.
  acc.run(5, [&]() -> std::pair<bool, std::string> {
    SolveOptions fast = sub;
    fast.with_gradient = false;
    const auto fit_c2 = [&](double lambda) {
      std::vector<double> s, dg;
      const LSLeaf anchor = solve_graph(Vec3::Zero(), lambda, schw, fast);
      coll.cy_slacks.push_back(diagnostics(anchor.surface()).cy_deficit);
      s.push_back(0.0);
      dg.push_back(0.0);
      for (int k = 1; k <= 5; ++k) {
        const double t = 0.1 * k;
        const LSLeaf leaf = solve_graph(Vec3(t, 0, 0), lambda, schw, fast);
        coll.cy_slacks.push_back(diagnostics(leaf.surface()).cy_deficit);
        s.push_back(t);
        dg.push_back(leaf.G_value - anchor.G_value);
      }
      return fit_even_quartic(s, dg).first;
    };
    const double target = 4.0 * M_PI;
    const double c50 = fit_c2(50.0), c100 = fit_c2(100.0), c200 = fit_c2(200.0);
    const bool window = c100 > 0.9 * target && c100 < 1.1 * target;
    const bool improves = std::abs(c200 - target) < std::abs(c50 - target);
    return {window && improves, "c2/4pi = " + num(c50 / target) + ", " + num(c100 / target) +
                                    ", " + num(c200 / target) + " at lambda 50, 100, 200"};
  });

  // 6. Stability dichotomy in the mass sign; translation block 8 pi m /
  //    lambda^3.
  acc.run(6, [&]() -> std::pair<bool, std::string> {
    const MetricModel neg = make_schwarzschild(-1.0);
    bool signs = true;
    double block_rel = 0.0, low_pos = 0.0, low_neg = 0.0;
    for (const double lambda : {50.0, 100.0}) {
      const LSLeaf lp = solve_graph(Vec3::Zero(), lambda, schw, sub);
      const StabilityReport rp = stability_spectrum(lp, sub);
      coll.cy_slacks.push_back(diagnostics(lp.surface()).cy_deficit);
      const LSLeaf ln = solve_graph(Vec3::Zero(), lambda, neg, sub);
      const StabilityReport rn = stability_spectrum(ln, sub);
      signs = signs && rp.lowest_meanzero_eigenvalue > 0 && rn.lowest_meanzero_eigenvalue < 0;
      low_pos = rp.lowest_meanzero_eigenvalue;
      low_neg = rn.lowest_meanzero_eigenvalue;
      if (lambda == 100.0) {
        const double want = 8.0 * M_PI / (lambda * lambda * lambda);
        const double got = rp.translation_block.trace() / 3.0;
        block_rel = std::abs(got - want) / want;
      }
    }
    const bool pass = signs && block_rel <= 0.25;
    return {pass, "lowest eigenvalues " + num(low_pos) + " (m=1) / " + num(low_neg) +
                      " (m=-1) at lambda 100, translation block rel dev " + num(block_rel)};
  });

  // 7. Foliation sweeps: H-monotone, lambda H -> 2 at order >= 1.3, radially
  //    ordered, on Schwarzschild and a tau = 0.8 tail.
  acc.run(7, [&]() -> std::pair<bool, std::string> {
    const std::vector<double> ladder = {25.0, 50.0, 100.0, 200.0};
    const FoliationReport fs = foliation_sweep(schw, ladder, sub);
    for (std::size_t k = 0; k < fs.leaves.size(); ++k) {
      const SurfaceDiagnostics d = diagnostics(fs.leaves[k].surface());
      coll.cy_slacks.push_back(d.cy_deficit);
      coll.fol_lambdas.push_back(fs.lambdas[k]);
      coll.fol_hawking.push_back(d.hawking_mass);
    }
    const MetricModel tail = make_perturbed_radial_tail(1.0, 0.8, 0.5);
    const FoliationReport ft = foliation_sweep(tail, ladder, sub);
    const auto ok = [](const FoliationReport& r) {
      return r.h_strictly_decreasing && r.h_remainder_order >= 1.3 && r.radially_ordered;
    };
    return {ok(fs) && ok(ft), "remainder orders " + num(fs.h_remainder_order) +
                                  " (Schwarzschild), " + num(ft.h_remainder_order) +
                                  " (tau = 0.8 tail)"};
  });

  // 8. Hamiltonian and CMC centers agree with the translation vector.
  acc.run(8, [&]() -> std::pair<bool, std::string> {
    const Vec3 c(1.0, -0.5, 0.25);
    const MetricModel shifted = make_translated_schwarzschild(1.0, c);
    const FluxReport flux = flux_report(shifted);
    const double ham_err = (flux.com - c).norm();

    std::vector<GraphSurface> leaves;
    Vec3 xi = Vec3::Zero();
    for (const double lambda : {60.0, 100.0, 160.0, 240.0}) {
      const LSLeaf leaf = find_critical_point(lambda, shifted, c / lambda, sub);
      xi = leaf.xi;
      leaves.push_back(leaf.surface());
    }
    const CmcCenterReport center = cmc_center_of_mass(leaves);
    const double cmc_err = (center.c_cmc - c).norm();
    // The exact translated family recovers c at solver precision, so the
    // per-leaf gap can sit at the noise floor instead of decreasing.
    const double max_gap =
        center.gap.empty() ? 1.0 : *std::max_element(center.gap.begin(), center.gap.end());
    const bool shrinking = strictly_decreasing(center.gap) || max_gap < 1e-6;
    const bool pass = ham_err < 1e-3 && cmc_err < 1e-2 && shrinking;
    return {pass, "|C_H - c| " + num(ham_err) + ", |C_CMC - c| " + num(cmc_err) +
                      ", max per-leaf gap " + num(max_gap)};
  });

  // 9. Integration-by-parts identities at quadrature precision on the whole
  //    catalog, with spectral decay in lmax.
  acc.run(9, [&]() -> std::pair<bool, std::string> {
    const Vec3 c(1.0, -0.5, 0.25);
    const std::vector<MetricModel> catalog = {make_flat(),
                                              make_schwarzschild(1.0),
                                              make_translated_schwarzschild(1.0, c),
                                              make_perturbed_radial_tail(1.0, 0.8, 0.5),
                                              make_perturbed_hessian_even(1.0, 0.8, 0.4),
                                              make_parity_model(1.0, 0.8, 0.5, 0.8, 0.5),
                                              make_non_rt_model(1.0, 0.6, 0.5),
                                              make_trace_tail(3.0)};
    const double lambda = 60.0;
    const Vec3 xi(0.2, 0.0, 0.1);
    SolveOptions fast = sub;
    fast.with_gradient = false;
    double worst_sphere = 0.0, worst_surface = 0.0;
    for (const MetricModel& model : catalog) {
      const LSLeaf leaf = solve_graph(xi, lambda, model, fast);
      for (int axis = 0; axis < 3; ++axis) {
        worst_sphere =
            std::max(worst_sphere, ibp_residual_sphere(model, xi, lambda, Vec3::Unit(axis)));
        worst_surface =
            std::max(worst_surface, ibp_residual_surface(leaf.surface(), Vec3::Unit(axis)));
      }
    }
    const MetricModel& rich = catalog[5];
    std::vector<double> res;
    const double floor = 1e-14 * lambda;
    for (const int lmax : {8, 12, 16})
      res.push_back(
          std::max(ibp_residual_sphere(rich, xi, lambda, Vec3(1, 0, 0), lmax), floor));
    const bool decays = res[0] >= res[1] && res[1] >= res[2] &&
                        (res[0] > 10.0 * floor ? res[2] < res[0] : true);
    const bool pass = worst_sphere < 1e-8 * lambda && worst_surface < 1e-8 * lambda && decays;
    return {pass, "worst residuals " + num(worst_sphere) + " (sphere) / " +
                      num(worst_surface) + " (surface), decay " + num(res[0]) + " -> " +
                      num(res[2]) + " over lmax 8 -> 16"};
  });

  // 10. Drift obstruction pins the mass along the offset and vanishes across
  //     it.
  acc.run(10, [&]() -> std::pair<bool, std::string> {
    SolveOptions fast = sub;
    fast.with_gradient = false;
    const Vec3 xi(0.5, 0, 0);
    const LSLeaf leaf = solve_graph(xi, 200.0, schw, fast);
    coll.cy_slacks.push_back(diagnostics(leaf.surface()).cy_deficit);
    const ExtrinsicData ext = compute_extrinsic(leaf.surface());
    const double par = drift_obstruction(ext, schw, Vec3(1, 0, 0));
    const double ratio = par / (16.0 * M_PI * xi.norm());
    const double p1 = std::abs(drift_obstruction(ext, schw, Vec3(0, 1, 0)));
    const double p2 = std::abs(drift_obstruction(ext, schw, Vec3(0, 0, 1)));
    const double perp_budget = 0.15 * 16.0 * M_PI;
    const bool pass =
        ratio > 0.85 && ratio < 1.15 && p1 < perp_budget && p2 < perp_budget;
    return {pass, "parallel ratio to m " + num(ratio) + ", perpendicular obstructions " +
                      num(p1) + ", " + num(p2)};
  });

  // 11. Christodoulou-Yau slack on every solved m = 1 leaf; Hawking mass of
  //     the centered ladder tends to m.
  acc.run(11, [&]() -> std::pair<bool, std::string> {
    if (coll.cy_slacks.empty() || coll.fol_lambdas.size() < 3)
      return {false, "no solved leaves collected"};
    const double min_cy =
        *std::min_element(coll.cy_slacks.begin(), coll.cy_slacks.end());
    std::vector<double> errs;
    for (const double hw : coll.fol_hawking) errs.push_back(std::abs(hw - 1.0));
    // The exact family keeps the Hawking mass at quadrature noise; only a
    // resolvable error trend must be decreasing.
    const std::optional<double> slope = loglog_slope(coll.fol_lambdas, errs, 1e-11);
    const bool hawking_ok = !slope.has_value() || *slope < 0.0;
    const double worst_hw =
        *std::max_element(errs.begin(), errs.end());
    const bool pass = min_cy >= -1e-8 && hawking_ok;
    return {pass, "min CY slack " + num(min_cy) + " over " +
                      std::to_string(coll.cy_slacks.size()) + " leaves, max |m_H - 1| " +
                      num(worst_hw) +
                      (slope ? ", fitted order " + num(-*slope) : ", at noise floor")};
  });

  // 12. Odd/even graph ratio decays along a Regge-Teitelboim sweep.
  acc.run(12, [&]() -> std::pair<bool, std::string> {
    const MetricModel model = make_parity_model(1.0, 0.8, 0.5, 0.8, 0.5);
    std::vector<double> ratios;
    Vec3 xi = Vec3::Zero();
    for (const double lambda : {50.0, 100.0, 200.0}) {
      const LSLeaf leaf = find_critical_point(lambda, model, xi, sub);
      xi = leaf.xi;
      ratios.push_back(parity_diagnostics(leaf).ratio);
    }
    const bool pass = strictly_decreasing(ratios);
    return {pass, "odd/even ratios " + num(ratios[0]) + ", " + num(ratios[1]) + ", " +
                      num(ratios[2]) + " at lambda 50, 100, 200"};
  });

  std::printf("acceptance: %d/12 criteria passed\n", 12 - acc.failures);
  return acc.failures;
}
