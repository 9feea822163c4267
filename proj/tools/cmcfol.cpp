// Distributed under the MIT License.
// See LICENSE.txt for details.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cmcfol/errors.hpp"
#include "cmcfol/fitting.hpp"
#include "cmcfol/flux_invariants.hpp"
#include "cmcfol/format.hpp"
#include "cmcfol/io.hpp"
#include "cmcfol/ls_solver.hpp"
#include "cmcfol/metric_model.hpp"
#include "cmcfol/parallel.hpp"
#include "cmcfol/sphere_spectral.hpp"
#include "cmcfol/surface_geometry.hpp"

namespace {

using namespace cmcfol;

struct GlobalArgs {
  std::string metric_path;
  int lmax = 16;
  std::string out = ".";
  int jobs = 0;
  long seed = 20240817;
  double smallness = 0.05;
  double lambda_min_scale = 20.0;
  double cmc_tol = 1e-4;
};

SolveOptions solve_options(const GlobalArgs& g) {
  SolveOptions o;
  o.lmax = g.lmax;
  o.smallness = g.smallness;
  o.lambda_min_scale = g.lambda_min_scale;
  return o;
}

std::string out_path(const GlobalArgs& g, const std::string& name) {
  return (std::filesystem::path(g.out) / name).string();
}

void ensure_out_dir(const GlobalArgs& g) {
  std::error_code ec;
  std::filesystem::create_directories(g.out, ec);
  if (ec) throw IoError("cannot create output directory '" + g.out + "': " + ec.message());
}

MetricConfig require_metric(const GlobalArgs& g) {
  if (g.metric_path.empty())
    throw ConfigError("this command needs --metric <file.json|file.toml>", "metric");
  return load_metric_config(g.metric_path);
}

JsonValue report_header(const GlobalArgs& g, const std::string& command) {
  JsonValue doc = JsonValue::object();
  doc["schema_version"] = schema_version;
  doc["command"] = command;
  doc["lmax"] = g.lmax;
  doc["seed"] = static_cast<std::int64_t>(g.seed);
  return doc;
}

// Decay conformance runs at load time for every command that takes a model;
// non-integrable curvature is flagged in the report, never fatal.
JsonValue attach_model(JsonValue& doc, const MetricConfig& cfg, const MetricModel& model) {
  doc["metric"] = describe(cfg);
  const DecayReport decay = check_decay(model);
  JsonValue d = JsonValue::object();
  d["tau"] = model.tau();
  d["tau_hat"] = model.tau_hat();
  d["sup_sigma_scaled"] = decay.sup_sigma_scaled;
  d["sup_dsigma_scaled"] = decay.sup_dsigma_scaled;
  d["sup_ddsigma_scaled"] = decay.sup_ddsigma_scaled;
  d["sup_odd_scaled"] = decay.sup_odd_scaled;
  d["curvature_decay_order"] = decay.curvature_decay_order;
  d["curvature_integrable"] = decay.curvature_integrable;
  doc["decay"] = std::move(d);
  if (!decay.curvature_integrable) {
    JsonValue warn = JsonValue::array();
    warn.push("linearized scalar curvature decays too slowly to be integrable; "
              "mass and center integrals may drift with radius");
    doc["warnings"] = std::move(warn);
  }
  return doc;
}

const char* verdict_name(StabilityVerdict v) {
  switch (v) {
    case StabilityVerdict::Stable: return "stable";
    case StabilityVerdict::Unstable: return "unstable";
    default: return "marginal";
  }
}

JsonValue leaf_json(const LSLeaf& leaf, const SolveOptions& opts, bool with_stability) {
  JsonValue j = JsonValue::object();
  j["lambda"] = leaf.lambda;
  j["xi"] = JsonValue::vec(leaf.xi);
  j["lambda_xi"] = JsonValue::vec(leaf.lambda * leaf.xi);
  j["u_sup"] = leaf.u.sup_norm();
  j["residual_h_perp"] = leaf.residual_H_perp;
  j["residual_volume"] = leaf.residual_volume;
  j["newton_iters"] = leaf.newton_iters;
  j["g_value"] = leaf.G_value;
  j["g_gradient"] = JsonValue::vec(leaf.G_gradient);
  const ExtrinsicData ext = compute_extrinsic(leaf.surface());
  const SurfaceDiagnostics diag = diagnostics(ext);
  JsonValue d = JsonValue::object();
  d["area_radius"] = diag.area_radius;
  d["inner_radius"] = diag.inner_radius;
  d["hawking_mass"] = diag.hawking_mass;
  d["cy_deficit"] = diag.cy_deficit;
  d["hcirc_l2"] = diag.hcirc_l2;
  d["mean_h"] = ext.integrate(ext.H) / ext.area_g;
  j["diagnostics"] = std::move(d);
  if (with_stability) {
    const StabilityReport rep = stability_spectrum(leaf, opts);
    JsonValue s = JsonValue::object();
    s["lowest_meanzero_eigenvalue"] = rep.lowest_meanzero_eigenvalue;
    s["verdict"] = verdict_name(rep.verdict);
    s["tolerance"] = rep.tol;
    JsonValue block = JsonValue::array();
    for (int a = 0; a < 3; ++a) {
      JsonValue row = JsonValue::array();
      for (int b = 0; b < 3; ++b) row.push(rep.translation_block(a, b));
      block.push(std::move(row));
    }
    s["translation_block"] = std::move(block);
    j["stability"] = std::move(s);
  }
  return j;
}

// ---- solve-leaf ------------------------------------------------------------

int cmd_solve_leaf(const GlobalArgs& g, double lambda, const Vec3& xi, bool no_stability) {
  const MetricConfig cfg = require_metric(g);
  const MetricModel model(cfg);
  const SolveOptions opts = solve_options(g);
  const LSLeaf leaf = std::abs(model.mass_param()) > 1e-12
                          ? find_critical_point(lambda, model, xi, opts)
                          : solve_graph(xi, lambda, model, opts);
  JsonValue doc = report_header(g, "solve-leaf");
  attach_model(doc, cfg, model);
  doc["leaf"] = leaf_json(leaf, opts, !no_stability);
  write_json_file(out_path(g, "leaf.json"), doc);
  std::printf("leaf lambda=%s xi=(%s, %s, %s) residual=%s -> %s\n",
              format_double(leaf.lambda).c_str(), format_double(leaf.xi[0]).c_str(),
              format_double(leaf.xi[1]).c_str(), format_double(leaf.xi[2]).c_str(),
              format_double(leaf.residual_H_perp).c_str(), out_path(g, "leaf.json").c_str());
  return 0;
}

// ---- foliation ---------------------------------------------------------------

int cmd_foliation(const GlobalArgs& g, const std::vector<double>& lambdas) {
  const MetricConfig cfg = require_metric(g);
  const MetricModel model(cfg);
  const SolveOptions opts = solve_options(g);
  const FoliationReport rep = foliation_sweep(model, lambdas, opts);

  JsonValue doc = report_header(g, "foliation");
  attach_model(doc, cfg, model);
  doc["lambdas"] = JsonValue::seq(rep.lambdas);
  doc["mean_curvatures"] = JsonValue::seq(rep.mean_curvatures);
  doc["h_strictly_decreasing"] = rep.h_strictly_decreasing;
  doc["h_remainder_order"] = rep.h_remainder_order;
  doc["radially_ordered"] = rep.radially_ordered;
  doc["ordered_from_lambda"] = rep.ordered_from_lambda;
  doc["min_radial_gaps"] = JsonValue::seq(rep.min_radial_gaps);
  JsonValue leaves = JsonValue::array();
  for (const LSLeaf& leaf : rep.leaves) leaves.push(leaf_json(leaf, opts, false));
  doc["leaves"] = std::move(leaves);
  write_json_file(out_path(g, "foliation.json"), doc);

  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < rep.lambdas.size(); ++k) {
    const double lam = rep.lambdas[k], h = rep.mean_curvatures[k];
    rows.push_back({lam, h, lam * h, std::abs(h - 2.0 / lam),
                    rep.leaves[k].residual_H_perp,
                    k == 0 ? 0.0 : rep.min_radial_gaps[k - 1]});
  }
  write_csv_file(out_path(g, "foliation.csv"),
                 {"lambda", "mean_h", "lambda_h", "remainder", "residual", "gap_prev"}, rows);
  write_gnuplot_file(out_path(g, "foliation.gp"), "mean curvature along the foliation",
                     "foliation.csv",
                     {{1, 3, "lambda * H"}, {1, 4, "|H - 2/lambda|"}}, true);
  std::printf("foliation over %zu leaves: remainder order %s -> %s\n", rep.lambdas.size(),
              format_double(rep.h_remainder_order).c_str(),
              out_path(g, "foliation.json").c_str());
  return 0;
}

// ---- flux -------------------------------------------------------------------

int cmd_flux(const GlobalArgs& g, std::vector<double> radii) {
  const MetricConfig cfg = require_metric(g);
  const MetricModel model(cfg);
  const FluxReport rep = flux_report(model, std::move(radii), g.lmax, g.jobs);

  JsonValue doc = report_header(g, "flux");
  attach_model(doc, cfg, model);
  doc["mass"] = rep.mass;
  doc["mass_order"] = rep.mass_order;
  doc["mass_converged"] = rep.mass_converged;
  doc["com_defined"] = rep.com_defined;
  doc["com"] = JsonValue::vec(rep.com);
  doc["com_order"] = rep.com_order;
  doc["com_converged"] = rep.com_converged;
  doc["com_flux_order"] = rep.com_flux_order;
  doc["rt_conformant"] = rep.rt_conformant;
  JsonValue rungs = JsonValue::array();
  std::vector<std::vector<double>> rows;
  for (const FluxSample& s : rep.sequence) {
    JsonValue r = JsonValue::object();
    r["radius"] = s.radius;
    r["mass_estimate"] = s.mass_estimate;
    r["mass_flux_form"] = s.mass_flux_form;
    r["com_estimate"] = JsonValue::vec(s.com_estimate);
    r["com_flux_form"] = JsonValue::vec(s.com_flux_form);
    rungs.push(std::move(r));
    rows.push_back({s.radius, s.mass_estimate, s.mass_flux_form, s.com_estimate[0],
                    s.com_estimate[1], s.com_estimate[2], s.com_flux_form.norm()});
  }
  doc["sequence"] = std::move(rungs);
  write_json_file(out_path(g, "flux.json"), doc);
  write_csv_file(out_path(g, "flux.csv"),
                 {"radius", "mass_estimate", "mass_flux_form", "com_x", "com_y", "com_z",
                  "com_flux_norm"},
                 rows);
  write_gnuplot_file(out_path(g, "flux.gp"), "mass and center ladders", "flux.csv",
                     {{1, 2, "mass estimate"}, {1, 7, "|com flux form|"}}, true);
  std::printf("flux: mass %s (order %s) com (%s, %s, %s) -> %s\n",
              format_double(rep.mass).c_str(), format_double(rep.mass_order).c_str(),
              format_double(rep.com[0]).c_str(), format_double(rep.com[1]).c_str(),
              format_double(rep.com[2]).c_str(), out_path(g, "flux.json").c_str());
  return 0;
}

// ---- gfit -------------------------------------------------------------------

struct XiGrid {
  double start = 0.0, stop = 0.5;
  int count = 6;
};

XiGrid parse_xi_grid(const std::string& spec) {
  XiGrid grid;
  double cnt = 0.0;
  if (std::sscanf(spec.c_str(), "%lf:%lf:%lf", &grid.start, &grid.stop, &cnt) != 3)
    throw ConfigError("expected --xi-grid start:stop:count, got '" + spec + "'", "xi-grid");
  grid.count = static_cast<int>(cnt);
  if (grid.count < 3 || grid.count > 64)
    throw ConfigError("xi-grid count must be in 3..64", "xi-grid");
  if (!(grid.start >= 0.0) || !(grid.stop > grid.start) || !(grid.stop < 1.0))
    throw ConfigError("xi-grid needs 0 <= start < stop < 1", "xi-grid");
  return grid;
}

int cmd_gfit(const GlobalArgs& g, double lambda, const std::string& grid_spec,
             const Vec3& direction) {
  const MetricConfig cfg = require_metric(g);
  const MetricModel model(cfg);
  const XiGrid grid = parse_xi_grid(grid_spec);
  if (direction.norm() == 0.0) throw ConfigError("direction must be nonzero", "direction");
  const Vec3 dir = direction.normalized();

  SolveOptions opts = solve_options(g);
  opts.with_gradient = false;
  std::vector<double> s_values(grid.count);
  for (int k = 0; k < grid.count; ++k)
    s_values[k] = grid.start + (grid.stop - grid.start) * k / (grid.count - 1);

  // Independent cold solves per grid point: deterministic under any schedule,
  // and failures are per-job records rather than a dead run.
  std::vector<std::optional<LSLeaf>> leaves(grid.count);
  std::vector<std::string> errors(grid.count);
  parallel_for(
      grid.count,
      [&](int k) {
        try {
          leaves[k] = solve_graph(s_values[k] * dir, lambda, model, opts);
        } catch (const Error& e) {
          errors[k] = std::string(e.kind()) + ": " + e.what();
        }
      },
      g.jobs);

  JsonValue doc = report_header(g, "gfit");
  attach_model(doc, cfg, model);
  doc["lambda"] = lambda;
  doc["direction"] = JsonValue::vec(dir);
  // The fit is anchored at the centered leaf; add it when the grid skips 0.
  if (s_values[0] != 0.0) {
    leaves.insert(leaves.begin(), std::nullopt);
    errors.insert(errors.begin(), std::string());
    s_values.insert(s_values.begin(), 0.0);
    try {
      leaves[0] = solve_graph(Vec3::Zero(), lambda, model, opts);
    } catch (const Error& e) {
      errors[0] = std::string(e.kind()) + ": " + e.what();
    }
  }
  if (!leaves[0]) throw NewtonDivergenceError("centered anchor solve failed: " + errors[0]);
  const double g0 = leaves[0]->G_value;

  std::vector<double> t, dg;
  JsonValue job_errors = JsonValue::array();
  for (std::size_t k = 0; k < leaves.size(); ++k) {
    if (!leaves[k]) {
      JsonValue e = JsonValue::object();
      e["s"] = s_values[k];
      e["error"] = errors[k];
      job_errors.push(std::move(e));
      continue;
    }
    t.push_back(s_values[k]);
    dg.push_back(leaves[k]->G_value - g0);
  }
  if (t.size() < 3) throw NewtonDivergenceError("too few converged grid points to fit");
  const auto [c2, c4] = fit_even_quartic(t, dg);
  const double target = 4.0 * M_PI * model.mass_param();

  doc["grid"] = JsonValue::seq(t);
  std::vector<double> gv;
  for (std::size_t k = 0; k < leaves.size(); ++k)
    if (leaves[k]) gv.push_back(leaves[k]->G_value);
  doc["g_values"] = JsonValue::seq(gv);
  doc["quadratic_coefficient"] = c2;
  doc["quartic_coefficient"] = c4;
  doc["target_4pi_m"] = target;
  doc["ratio_to_target"] = target != 0.0 ? c2 / target : 0.0;
  doc["job_errors"] = std::move(job_errors);
  write_json_file(out_path(g, "gfit.json"), doc);

  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < t.size(); ++k)
    rows.push_back({t[k], dg[k], c2 * t[k] * t[k] + c4 * std::pow(t[k], 4),
                    dg[k] - (c2 * t[k] * t[k] + c4 * std::pow(t[k], 4))});
  write_csv_file(out_path(g, "gfit.csv"), {"s", "delta_g", "fit", "residual"}, rows);
  write_gnuplot_file(out_path(g, "gfit.gp"), "reduced area along a ray", "gfit.csv",
                     {{1, 2, "G(s) - G(0)"}, {1, 3, "quadratic+quartic fit"}});
  std::printf("gfit: quadratic coefficient %s vs 4 pi m = %s -> %s\n",
              format_double(c2).c_str(), format_double(target).c_str(),
              out_path(g, "gfit.json").c_str());
  return 0;
}

// ---- drift ------------------------------------------------------------------

int cmd_drift(const GlobalArgs& g, double lambda, const Vec3& xi) {
  const MetricConfig cfg = require_metric(g);
  const MetricModel model(cfg);
  if (xi.norm() == 0.0)
    throw ConfigError("drift needs an off-center leaf: --xi must be nonzero", "xi");
  const SolveOptions opts = solve_options(g);
  const LSLeaf leaf = solve_graph(xi, lambda, model, opts);
  const ExtrinsicData ext = compute_extrinsic(leaf.surface());

  // The displacement vector carries the offset scale; the obstruction along a
  // approaches 16 pi m g(a, dvec), so dividing by 16 pi |dvec| estimates m.
  const Vec3 dvec = drift_direction(ext);
  const Vec3 xihat = dvec.normalized();
  Vec3 seed = std::abs(xihat[0]) < 0.9 ? Vec3(1, 0, 0) : Vec3(0, 1, 0);
  const Vec3 perp1 = (seed - seed.dot(xihat) * xihat).normalized();
  const Vec3 perp2 = xihat.cross(perp1);

  const double par = drift_obstruction(ext, model, xihat, g.cmc_tol);
  const double p1 = drift_obstruction(ext, model, perp1, g.cmc_tol);
  const double p2 = drift_obstruction(ext, model, perp2, g.cmc_tol);
  const double scale = 16.0 * M_PI * model.mass_param();
  const double denom = 16.0 * M_PI * dvec.norm();

  JsonValue doc = report_header(g, "drift");
  attach_model(doc, cfg, model);
  doc["leaf"] = leaf_json(leaf, opts, false);
  doc["drift_direction"] = JsonValue::vec(dvec);
  doc["obstruction_parallel"] = par;
  doc["obstruction_perp"] = JsonValue::seq({p1, p2});
  doc["scale_16pi_m"] = scale;
  doc["mass_estimate"] = denom > 0.0 ? par / denom : 0.0;
  write_json_file(out_path(g, "drift.json"), doc);
  std::printf("drift: parallel obstruction %s (16 pi m = %s) mass estimate %s -> %s\n",
              format_double(par).c_str(), format_double(scale).c_str(),
              format_double(denom > 0.0 ? par / denom : 0.0).c_str(),
              out_path(g, "drift.json").c_str());
  return 0;
}

// ---- verify -----------------------------------------------------------------

struct CheckResult {
  std::string suite;
  std::string name;
  bool pass = false;
  double value = 0.0;
  double budget = 0.0;
  std::string detail;
};

class VerifyRun {
 public:
  // value within +-budget of target.
  void near(const std::string& suite, const std::string& name, double value, double target,
            double budget) {
    add(suite, name, std::abs(value - target) <= budget, std::abs(value - target), budget,
        "value " + format_double(value) + " target " + format_double(target));
  }
  // value <= budget.
  void below(const std::string& suite, const std::string& name, double value, double budget) {
    add(suite, name, value <= budget, value, budget, "");
  }
  void truth(const std::string& suite, const std::string& name, bool ok,
             const std::string& detail) {
    add(suite, name, ok, ok ? 0.0 : 1.0, 0.0, detail);
  }
  void failure(const std::string& suite, const std::string& name, const std::string& what) {
    add(suite, name, false, 0.0, 0.0, what);
  }

  const std::vector<CheckResult>& results() const { return results_; }
  int failed() const {
    int n = 0;
    for (const auto& r : results_)
      if (!r.pass) ++n;
    return n;
  }

 private:
  void add(const std::string& suite, const std::string& name, bool pass, double value,
           double budget, const std::string& detail) {
    results_.push_back({suite, name, pass, value, budget, detail});
    std::printf("%-4s %-14s %s (value %.3g, budget %.3g)%s%s\n", pass ? "ok" : "FAIL",
                suite.c_str(), name.c_str(), value, budget, detail.empty() ? "" : " - ",
                detail.c_str());
  }

  std::vector<CheckResult> results_;
};

void verify_spectral(VerifyRun& run, const GlobalArgs& g) {
  const std::string suite = "spectral";
  const auto tr = shared_transform(g.lmax);
  // Round sphere in the flat metric: the assembled pencil must reproduce
  // (l(l+1) - 2) / rho^2 through the quadrature, not by construction.
  const MetricModel flat = make_flat();
  const double rho = 2.0;
  const GraphSurface sphere = make_round_surface(tr, flat, rho);
  const StabilityMatrices sm = stability_matrices(compute_extrinsic(sphere));
  Eigen::GeneralizedSelfAdjointEigenSolver<MatX> es(sm.a, sm.m);
  double worst = 0.0;
  const int K = tr->ncoef();
  std::vector<double> expected;
  expected.reserve(K);
  for (int l = 0; l <= g.lmax; ++l)
    for (int m = -l; m <= l; ++m) expected.push_back(l * (l + 1.0));
  std::sort(expected.begin(), expected.end());
  for (int k = 0; k < K; ++k) {
    const double lap = es.eigenvalues()[k] * rho * rho + 2.0;
    const double ref = expected[static_cast<std::size_t>(k)];
    worst = std::max(worst, std::abs(lap - ref) / std::max(1.0, std::abs(ref)));
  }
  run.below(suite, "laplacian eigenvalues (relative)", worst, 1e-10);

  std::mt19937 rng(static_cast<unsigned>(g.seed));
  std::normal_distribution<double> dist;
  double min_slack = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 200; ++trial) {
    VecX c = VecX::Zero(K);
    for (int k = 4; k < K; ++k) c[k] = dist(rng);
    SphereField f = SphereField::from_coeffs(tr, c);
    const double n2 = f.l2_norm() * f.l2_norm();
    min_slack = std::min(min_slack, flat_stability_quadratic_form(f) - 4.0 * n2);
  }
  run.below(suite, "coercivity slack", -min_slack, 1e-9);
}

void verify_solver(VerifyRun& run, const GlobalArgs& g) {
  const std::string suite = "solver";
  const SolveOptions opts = solve_options(g);
  const MetricModel flat = make_flat();
  const LSLeaf fl = solve_graph(Vec3(0.3, 0, 0), 20.0, flat, opts);
  run.below(suite, "flat graph sup norm", fl.u.sup_norm(), 1e-11 * 20.0);
  run.below(suite, "flat gradient", fl.G_gradient.norm(), 1e-10);
  const ExtrinsicData fext = compute_extrinsic(fl.surface());
  run.near(suite, "flat mean curvature", fext.integrate(fext.H) / fext.area_g, 2.0 / 20.0,
           1e-11);

  SolveOptions sub = opts;
  sub.lambda_min_scale = std::min(sub.lambda_min_scale, 10.0);
  sub.smallness = std::max(sub.smallness, 0.25);
  const MetricModel schw = make_schwarzschild(1.0);
  const LSLeaf leaf = solve_graph(Vec3::Zero(), 50.0, schw, sub);
  const ExtrinsicData ext = compute_extrinsic(leaf.surface());
  const double hbar = ext.integrate(ext.H) / ext.area_g;
  run.below(suite, "centered leaf H variation", (ext.H.array() - hbar).abs().maxCoeff(),
            1e-10);
  run.near(suite, "hawking mass pins mass", hawking_mass(ext), 1.0, 1e-9);

  const Vec3 c(1.0, -0.5, 0.25);
  const MetricModel shifted = make_translated_schwarzschild(1.0, c);
  const LSLeaf crit = find_critical_point(60.0, shifted, c / 60.0 * 0.5, sub);
  run.below(suite, "translated center recovery", (60.0 * crit.xi - c).norm(), 1e-6);

  const StabilityReport pos = stability_spectrum(leaf, sub);
  run.truth(suite, "positive mass is stable",
            pos.lowest_meanzero_eigenvalue > 0 && pos.verdict == StabilityVerdict::Stable,
            "lowest " + format_double(pos.lowest_meanzero_eigenvalue));
  const MetricModel neg = make_schwarzschild(-1.0);
  const StabilityReport negrep = stability_spectrum(solve_graph(Vec3::Zero(), 45.0, neg, sub),
                                                    sub);
  run.truth(suite, "negative mass is unstable",
            negrep.lowest_meanzero_eigenvalue < 0 &&
                negrep.verdict == StabilityVerdict::Unstable,
            "lowest " + format_double(negrep.lowest_meanzero_eigenvalue));
}

void verify_invariants(VerifyRun& run, const GlobalArgs& g) {
  const std::string suite = "invariants";
  const std::vector<MetricModel> catalog = {
      make_flat(),
      make_schwarzschild(1.0),
      make_translated_schwarzschild(1.0, Vec3(1.0, -0.5, 0.25)),
      make_perturbed_radial_tail(1.0, 0.8, 0.5),
      make_perturbed_hessian_even(1.0, 0.8, 0.4),
      make_parity_model(1.0, 0.8, 0.5, 0.8, 0.5),
  };
  const double lambda = 60.0;
  const Vec3 xi(0.2, 0.0, 0.1);
  double worst = 0.0;
  for (const MetricModel& model : catalog)
    for (int axis = 0; axis < 3; ++axis)
      worst = std::max(worst, ibp_residual_sphere(model, xi, lambda, Vec3::Unit(axis),
                                                  g.lmax));
  run.below(suite, "sphere ibp residual", worst, 1e-8 * lambda);

  SolveOptions sub = solve_options(g);
  sub.lambda_min_scale = std::min(sub.lambda_min_scale, 10.0);
  sub.smallness = std::max(sub.smallness, 0.25);
  sub.with_gradient = false;
  const MetricModel bumpy = make_perturbed_hessian_even(1.0, 0.8, 0.4);
  const LSLeaf leaf = solve_graph(Vec3(0.3, 0, 0), lambda, bumpy, sub);
  double worst_surface = 0.0;
  for (int axis = 0; axis < 3; ++axis)
    worst_surface =
        std::max(worst_surface, ibp_residual_surface(leaf.surface(), Vec3::Unit(axis)));
  run.below(suite, "surface ibp residual", worst_surface, 1e-8 * lambda);

  const MetricModel schw = make_schwarzschild(1.0);
  double odd_sup = 0.0;
  for (const Vec3& x : {Vec3(3, 1, -2), Vec3(-5, 0.5, 4), Vec3(10, 10, 10)}) {
    const TensorJet odd = schw.sigma_jet(x, 2, ParityPart::Odd);
    odd_sup = std::max(odd_sup, odd.g.cwiseAbs().maxCoeff());
  }
  run.below(suite, "centered model odd part", odd_sup, 1e-15);
}

void verify_flux(VerifyRun& run, const GlobalArgs& g) {
  const std::string suite = "flux";
  run.near(suite, "mass recovery m=1", adm_mass_limit(make_schwarzschild(1.0), {}, g.lmax),
           1.0, 1e-5);
  run.near(suite, "mass recovery m=-1", adm_mass_limit(make_schwarzschild(-1.0), {}, g.lmax),
           -1.0, 1e-5);
  // Pure-trace c/r tail carries mass c/2 exactly at every radius.
  run.near(suite, "trace tail mass", adm_mass(make_trace_tail(3.0), 100.0, g.lmax), 1.5,
           1e-12);

  const Vec3 c(1.0, -0.5, 0.25);
  const MetricModel shifted = make_translated_schwarzschild(1.0, c);
  const FluxReport rep = flux_report(shifted, {}, g.lmax, g.jobs);
  run.below(suite, "translated com recovery", (rep.com - c).norm(), 1e-3);
  double form_gap = 0.0;
  for (const FluxSample& s : rep.sequence)
    form_gap = std::max(form_gap, std::abs(s.mass_estimate - s.mass_flux_form));
  run.below(suite, "mass flux-form equality", form_gap, 1e-10);
}

int cmd_verify(const GlobalArgs& g, const std::string& suite) {
  const std::vector<std::string> known = {"spectral", "solver", "invariants", "flux"};
  if (suite != "all" && std::find(known.begin(), known.end(), suite) == known.end())
    throw ConfigError("unknown suite '" + suite + "' (valid: all, spectral, solver, "
                      "invariants, flux)",
                      "suite");
  VerifyRun run;
  const auto want = [&](const char* s) { return suite == "all" || suite == s; };
  const auto guarded = [&](const char* name, auto&& fn) {
    try {
      fn(run, g);
    } catch (const Error& e) {
      run.failure(name, std::string("suite aborted: ") + e.kind(), e.what());
    }
  };
  if (want("spectral")) guarded("spectral", verify_spectral);
  if (want("solver")) guarded("solver", verify_solver);
  if (want("invariants")) guarded("invariants", verify_invariants);
  if (want("flux")) guarded("flux", verify_flux);

  JsonValue doc = report_header(g, "verify");
  doc["suite"] = suite;
  JsonValue checks = JsonValue::array();
  for (const CheckResult& r : run.results()) {
    JsonValue c = JsonValue::object();
    c["suite"] = r.suite;
    c["name"] = r.name;
    c["pass"] = r.pass;
    c["value"] = r.value;
    c["budget"] = r.budget;
    if (!r.detail.empty()) c["detail"] = r.detail;
    checks.push(std::move(c));
  }
  doc["checks"] = std::move(checks);
  doc["total"] = static_cast<std::int64_t>(run.results().size());
  doc["failed"] = static_cast<std::int64_t>(run.failed());
  write_json_file(out_path(g, "verify.json"), doc);
  std::printf("verify: %d/%zu checks passed -> %s\n",
              static_cast<int>(run.results().size()) - run.failed(), run.results().size(),
              out_path(g, "verify.json").c_str());
  return run.failed() == 0 ? 0 : 1;
}

// ---- error reporting ---------------------------------------------------------

int emit_error(const GlobalArgs& g, const std::string& kind, const std::string& message,
               const std::string& field, int code) {
  JsonValue doc = JsonValue::object();
  doc["schema_version"] = schema_version;
  JsonValue err = JsonValue::object();
  err["kind"] = kind;
  err["message"] = message;
  if (!field.empty()) err["field"] = field;
  err["exit_code"] = code;
  doc["error"] = std::move(err);
  const std::string text = doc.dump();
  std::fputs(text.c_str(), stderr);
  try {
    ensure_out_dir(g);
    write_text_file(out_path(g, "error.json"), text);
  } catch (...) {
    // The structured report already went to stderr; a broken --out must not
    // mask the original failure.
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  GlobalArgs g;
  CLI::App app{"constant-mean-curvature foliation toolkit"};
  app.require_subcommand(1);
  app.add_option("--metric", g.metric_path, "metric config file (.json or .toml)");
  app.add_option("--lmax", g.lmax, "spectral band limit")->check(CLI::Range(4, 64));
  app.add_option("--out", g.out, "output directory");
  app.add_option("--jobs", g.jobs, "worker threads (0 = hardware)");
  app.add_option("--seed", g.seed, "seed for randomized checks");
  app.add_option("--smallness", g.smallness, "uniqueness ball radius in units of lambda");
  app.add_option("--lambda-min-scale", g.lambda_min_scale,
                 "admissibility floor lambda >= scale * (1 + |m|)");
  app.add_option("--cmc-tol", g.cmc_tol, "relative CMC threshold for drift integrals");

  double lambda = 100.0;
  std::vector<double> xi_raw;
  bool no_stability = false;
  std::vector<double> lambdas, radii;
  std::string grid_spec = "0:0.5:6";
  std::vector<double> dir_raw;
  std::string suite = "all";

  CLI::App* leaf = app.add_subcommand("solve-leaf", "solve one leaf and write diagnostics");
  leaf->add_option("--lambda", lambda, "leaf scale")->required();
  leaf->add_option("--xi", xi_raw, "initial (or fixed, for zero mass) center offset")
      ->delimiter(',')
      ->expected(3);
  leaf->add_flag("--no-stability", no_stability, "skip the stability spectrum");

  CLI::App* fol = app.add_subcommand("foliation", "sweep leaves across a lambda ladder");
  fol->add_option("--lambdas", lambdas, "ascending lambda ladder")
      ->delimiter(',')
      ->required();

  CLI::App* flux = app.add_subcommand("flux", "mass and center-of-mass ladders");
  flux->add_option("--radii", radii, "coordinate sphere radii")->delimiter(',');

  CLI::App* gfit = app.add_subcommand("gfit", "fit the reduced-area quadratic along a ray");
  gfit->add_option("--lambda", lambda, "leaf scale")->required();
  gfit->add_option("--xi-grid", grid_spec, "ray samples start:stop:count");
  gfit->add_option("--direction", dir_raw, "ray direction")->delimiter(',')->expected(3);

  CLI::App* drift = app.add_subcommand("drift", "flux obstruction on an off-center leaf");
  drift->add_option("--lambda", lambda, "leaf scale")->required();
  drift->add_option("--xi", xi_raw, "fixed center offset")->delimiter(',')->expected(3);

  CLI::App* verify = app.add_subcommand("verify", "run the invariant suites");
  verify->add_option("--suite", suite, "all, spectral, solver, invariants, or flux");

  // Global flags are accepted on either side of the subcommand.
  for (CLI::App* sub : {leaf, fol, flux, gfit, drift, verify}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return emit_error(g, "ConfigError", e.what(), e.get_name(), 2);
  }

  const Vec3 xi = xi_raw.size() == 3 ? Vec3(xi_raw[0], xi_raw[1], xi_raw[2]) : Vec3::Zero();
  const Vec3 dir =
      dir_raw.size() == 3 ? Vec3(dir_raw[0], dir_raw[1], dir_raw[2]) : Vec3(1, 0, 0);

  try {
    ensure_out_dir(g);
    if (leaf->parsed()) return cmd_solve_leaf(g, lambda, xi, no_stability);
    if (fol->parsed()) return cmd_foliation(g, lambdas);
    if (flux->parsed()) return cmd_flux(g, radii);
    if (gfit->parsed()) return cmd_gfit(g, lambda, grid_spec, dir);
    if (drift->parsed()) return cmd_drift(g, lambda, xi);
    if (verify->parsed()) return cmd_verify(g, suite);
    return emit_error(g, "ConfigError", "no subcommand given", "", 2);
  } catch (const ConfigError& e) {
    return emit_error(g, e.kind(), e.what(), e.field(), 2);
  } catch (const Error& e) {
    return emit_error(g, e.kind(), e.what(), e.field(), 1);
  } catch (const std::exception& e) {
    return emit_error(g, "InternalError", e.what(), "", 1);
  }
}
