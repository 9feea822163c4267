// Distributed under the MIT License.
// See LICENSE.txt for details.

#include "cmcfol/ls_solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "cmcfol/errors.hpp"
#include "cmcfol/fitting.hpp"

namespace cmcfol {

namespace {

double cube(double x) { return x * x * x; }

// Shell volume pinned by the normalization vol(S_2lambda) - vol(Sigma).
double volume_target(double lambda) { return 28.0 * M_PI / 3.0 * cube(lambda); }

void check_admissible(const Vec3& xi, double lambda, const MetricModel& model,
                      const SolveOptions& opts) {
  if (!(xi.norm() <= 1.0 - opts.delta)) {
    std::ostringstream os;
    os << "|xi| = " << xi.norm() << " outside the containment ball of radius "
       << 1.0 - opts.delta;
    throw ContainmentError(os.str());
  }
  const double floor = opts.lambda_min_scale * (1.0 + std::abs(model.mass_param()));
  if (!(lambda >= floor)) {
    std::ostringstream os;
    os << "lambda = " << lambda << " below the admissible floor " << floor;
    throw DomainError(os.str());
  }
}

std::shared_ptr<const SphereTransform> pick_transform(const SolveOptions& opts) {
  if (opts.initial_u && opts.initial_u->transform()) {
    if (opts.initial_u->transform()->lmax() != opts.lmax)
      throw ShapeError("warm-start resolution does not match opts.lmax");
    return opts.initial_u->transform();
  }
  return shared_transform(opts.lmax);
}

// g(y, nu) at the nodes: the normal speed of the unit radial perturbation,
// which converts graph increments into normal increments.
SphereField normal_speed_factor(const ExtrinsicData& ext, const MetricModel& model) {
  const auto& tr = ext.tr;
  VecX c(tr->nnodes());
  for (int n = 0; n < tr->nnodes(); ++n) {
    const Mat3 g = model.metric_jet(ext.position[n], 0).g;
    c[n] = (g * tr->direction(n)).dot(ext.nu[n]);
  }
  return SphereField::from_values(tr, std::move(c));
}

// Blocked Galerkin assembly.  With a speed field the columns act on
// speed * Y_k, the normal speed of the radial perturbation Y_k y.  With a
// test scale s the rows act on s Y_j; s = dOmega/dmu turns the weak pairing
// into the flat-harmonic one, <Y_j, L(speed Y_k)>_Omega, which is the exact
// Jacobian of the strong residual the Newton loop is gated on.
StabilityMatrices assemble_operator(const ExtrinsicData& ext, const SphereField* speed,
                                    const SphereField* test_scale) {
  const auto& tr = *ext.tr;
  const int K = tr.ncoef(), nlat = tr.nlat(), nlon = tr.nlon();
  StabilityMatrices out;
  out.a.setZero(K, K);
  out.m.setZero(K, K);
  out.mean.setZero(K);
  const VecX pot = ext.stability_potential();
  std::optional<SphereTransform::Jet> cjet, sjet;
  if (speed) cjet = tr.synthesize_jet(speed->coeffs());
  if (test_scale) sjet = tr.synthesize_jet(test_scale->coeffs());
  MatX y, yt, yp, ry, rt, rp, ly, lt, lp, tmp;
  VecX w(nlon), w00(nlon), w01(nlon), w11(nlon), wp(nlon);
  const auto decorate = [&](const SphereTransform::Jet& jet, int ilat, MatX& oy, MatX& ot,
                            MatX& op) {
    VecX s(nlon), st(nlon), sp(nlon);
    for (int j = 0; j < nlon; ++j) {
      const int n = tr.node(ilat, j);
      s[j] = jet.f[n];
      st[j] = jet.ft[n];
      sp[j] = jet.fp[n];
    }
    oy = s.asDiagonal() * y;
    ot = s.asDiagonal() * yt + st.asDiagonal() * y;
    op = s.asDiagonal() * yp + sp.asDiagonal() * y;
  };
  for (int i = 0; i < nlat; ++i) {
    tr.basis_block(i, y, yt, yp);
    for (int j = 0; j < nlon; ++j) {
      const int n = tr.node(i, j);
      const double wn = tr.weight(n) * ext.dmu[n];
      const Eigen::Matrix2d& qi = ext.qinv[n];
      w[j] = wn;
      w00[j] = wn * qi(0, 0);
      w01[j] = wn * qi(0, 1);
      w11[j] = wn * qi(1, 1);
      wp[j] = wn * pot[n];
    }
    const MatX* cy = &y;
    const MatX* ct = &yt;
    const MatX* cp = &yp;
    if (speed) {
      decorate(*cjet, i, ry, rt, rp);
      cy = &ry;
      ct = &rt;
      cp = &rp;
    }
    const MatX* ty = &y;
    const MatX* tt = &yt;
    const MatX* tp = &yp;
    if (test_scale) {
      decorate(*sjet, i, ly, lt, lp);
      ty = &ly;
      tt = &lt;
      tp = &lp;
    }
    tmp.noalias() = w00.asDiagonal() * (*ct) + w01.asDiagonal() * (*cp);
    out.a.noalias() += tt->transpose() * tmp;
    tmp.noalias() = w01.asDiagonal() * (*ct) + w11.asDiagonal() * (*cp);
    out.a.noalias() += tp->transpose() * tmp;
    tmp.noalias() = wp.asDiagonal() * (*cy);
    out.a.noalias() -= ty->transpose() * tmp;
    tmp.noalias() = w.asDiagonal() * (*cy);
    out.m.noalias() += ty->transpose() * tmp;
    out.mean.noalias() += ty->transpose() * w;
  }
  return out;
}

struct Jacobian {
  Eigen::PartialPivLU<MatX> lu;  // l >= 2 block of the assembled operator
  bool ready = false;
};

// Secant line-solve pinning the constant mode to the volume constraint.
// The shell volume is strictly decreasing in the constant shift
// (d vol / d shift = -Int <y, nu>_g dmu < 0).
double align_volume(VecX& uc, const std::shared_ptr<const SphereTransform>& tr,
                    const Vec3& xi, double lambda, const MetricModel& model,
                    double gate) {
  const double target = volume_target(lambda);
  const double coef_per_value = std::sqrt(4.0 * M_PI);
  const auto defect = [&]() {
    GraphSurface s{xi, lambda, SphereField::from_coeffs(tr, uc), &model};
    return enclosed_volume_relative(s) - target;
  };
  double d0 = defect();
  double slope = -4.0 * M_PI * lambda * lambda;
  for (int it = 0; it < 40 && std::abs(d0) > gate; ++it) {
    const double step = -d0 / slope;
    uc[0] += step * coef_per_value;
    const double d1 = defect();
    if (step != 0.0 && d1 != d0) slope = (d1 - d0) / step;
    if (!(slope < 0.0)) slope = -4.0 * M_PI * lambda * lambda;
    d0 = d1;
  }
  return std::abs(d0);
}

struct CoreResult {
  SphereField u;
  ExtrinsicData ext;
  double residual_h = 0.0;
  double residual_vol = 0.0;
  int iters = 0;
};

// Newton iteration on the l >= 2 coefficients: the volume line-solve fixes
// the constant mode, the assembled operator supplies the linear correction,
// and the l = 1 coefficients stay identically zero.  Convergence is gated on
// the flat-harmonic residual, and the Jacobian is assembled in the matching
// pairing (test functions scaled by dOmega/dmu), so the fixed point is the
// strong condition proj_{(Lambda0 + Lambda1)^perp} H = 0.
CoreResult core_solve(const std::shared_ptr<const SphereTransform>& tr, const Vec3& xi,
                      double lambda, const MetricModel& model, const SolveOptions& opts,
                      const VecX* warm, Jacobian& jac) {
  const int K = tr->ncoef();
  VecX uc = warm ? *warm : VecX::Zero(K);
  uc.segment(1, 3).setZero();
  const double tol_h = opts.tol_h / lambda;
  const double tol_v = opts.tol_vol * cube(lambda);
  CoreResult res;
  double prev = std::numeric_limits<double>::infinity();
  int rebuilds = 0;
  // The constant mode is pinned far below tol_vol: slack d leaks into the
  // reduced area as (H/lambda) d, and the gradient cross-check differences
  // G across fd_step, so the volume gate must not dominate that quotient.
  const double vol_gate = std::min(0.02 * tol_v, 1e-12 * cube(lambda));
  for (int iter = 1; iter <= opts.max_iters; ++iter) {
    res.residual_vol = align_volume(uc, tr, xi, lambda, model, vol_gate);
    GraphSurface s{xi, lambda, SphereField::from_coeffs(tr, uc), &model};
    res.ext = compute_extrinsic(s);
    const VecX hcoef = tr->analyze(res.ext.H);
    res.residual_h = hcoef.tail(K - 4).norm();
    res.iters = iter;
    if (!std::isfinite(res.residual_h))
      throw NewtonDivergenceError("mean-curvature residual is not finite");
    if (res.residual_h <= tol_h && res.residual_vol <= tol_v) {
      res.u = SphereField::from_coeffs(tr, std::move(uc));
      return res;
    }
    const bool stalled = res.residual_h > 0.5 * prev;
    if (!jac.ready || (stalled && rebuilds < 3)) {
      const SphereField c = normal_speed_factor(res.ext, model);
      const SphereField ts = SphereField::from_values(tr, res.ext.dmu.cwiseInverse());
      const StabilityMatrices as = assemble_operator(res.ext, &c, &ts);
      jac.lu.compute(as.a.bottomRightCorner(K - 4, K - 4));
      jac.ready = true;
      if (stalled) ++rebuilds;
    }
    uc.tail(K - 4) += jac.lu.solve((-hcoef.tail(K - 4)).eval());
    prev = res.residual_h;
  }
  std::ostringstream os;
  os << "mean-curvature residual " << res.residual_h << " above gate " << tol_h
     << " after " << opts.max_iters << " iterations";
  throw NewtonDivergenceError(os.str());
}

// Graph norm |u| + |Du| + |DDu| (unit-sphere covariant derivatives) against
// the uniqueness ball radius smallness * lambda.
void check_smallness(const SphereField& u, double lambda, const SolveOptions& opts) {
  const auto& tr = *u.transform();
  const auto jet = tr.synthesize_jet(u.coeffs());
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  for (int n = 0; n < tr.nnodes(); ++n) {
    const double st = tr.sin_theta(n);
    const double ct = std::cos(tr.theta(tr.lat_of(n)));
    s0 = std::max(s0, std::abs(jet.f[n]));
    const double fp = jet.fp[n] / st;
    s1 = std::max(s1, std::hypot(jet.ft[n], fp));
    const double htt = jet.ftt[n];
    const double htp = (jet.ftp[n] - (ct / st) * jet.fp[n]) / st;
    const double hpp = jet.fpp[n] / (st * st) + (ct / st) * jet.ft[n];
    s2 = std::max(s2, std::sqrt(htt * htt + 2.0 * htp * htp + hpp * hpp));
  }
  const double norm = s0 + s1 + s2;
  if (!(norm < opts.smallness * lambda)) {
    std::ostringstream os;
    os << "graph norm " << norm << " outside the uniqueness ball "
       << opts.smallness * lambda;
    throw SmallnessViolation(os.str());
  }
}

// First variation of G along xi: Int [H - 2/lambda] g(e_a + (D_a u / lambda) y,
// nu) dmu; the 2/lambda subtraction uses volume preservation along xi.
Vec3 first_variation_gradient(const ExtrinsicData& ext, const MetricModel& model,
                              double lambda, const std::array<VecX, 3>& du) {
  const auto& tr = *ext.tr;
  const int nn = tr.nnodes();
  std::vector<Mat3> gs(nn);
  for (int n = 0; n < nn; ++n) gs[n] = model.metric_jet(ext.position[n], 0).g;
  const double h0 = 2.0 / lambda;
  Vec3 grad = Vec3::Zero();
  VecX integrand(nn);
  for (int a = 0; a < 3; ++a) {
    for (int n = 0; n < nn; ++n) {
      const Vec3 v = Vec3::Unit(a) + (du[a][n] / lambda) * tr.direction(n);
      integrand[n] = (ext.H[n] - h0) * (gs[n] * v).dot(ext.nu[n]);
    }
    grad[a] = ext.integrate(integrand);
  }
  return grad;
}

LSLeaf evaluate_leaf(const std::shared_ptr<const SphereTransform>& tr, const Vec3& xi,
                     double lambda, const MetricModel& model, const SolveOptions& opts,
                     const VecX* warm, Jacobian& jac, bool with_gradient) {
  check_admissible(xi, lambda, model, opts);
  CoreResult core = core_solve(tr, xi, lambda, model, opts, warm, jac);
  check_smallness(core.u, lambda, opts);
  LSLeaf leaf;
  leaf.xi = xi;
  leaf.lambda = lambda;
  leaf.u = core.u;
  leaf.G_value = core.ext.area_g / lambda;
  leaf.residual_H_perp = core.residual_h;
  leaf.residual_volume = core.residual_vol;
  leaf.newton_iters = core.iters;
  leaf.metric = &model;
  if (with_gradient) {
    const double h = opts.fd_step;
    const VecX& uc = core.u.coeffs();
    std::array<VecX, 3> du;
    Vec3 grad_fd;
    for (int a = 0; a < 3; ++a) {
      const CoreResult cp =
          core_solve(tr, xi + h * Vec3::Unit(a), lambda, model, opts, &uc, jac);
      const CoreResult cm =
          core_solve(tr, xi - h * Vec3::Unit(a), lambda, model, opts, &uc, jac);
      du[a] = (cp.u.values() - cm.u.values()) / (2.0 * h);
      grad_fd[a] = (cp.ext.area_g - cm.ext.area_g) / (lambda * 2.0 * h);
    }
    leaf.G_gradient = first_variation_gradient(core.ext, model, lambda, du);
    const double err = (leaf.G_gradient - grad_fd).norm();
    if (err > opts.cross_tol * (1.0 + leaf.G_gradient.norm())) {
      std::ostringstream os;
      os << "first-variation gradient and central difference disagree by " << err
         << " with budget " << opts.cross_tol * (1.0 + leaf.G_gradient.norm());
      throw GradientMismatchError(os.str());
    }
  }
  return leaf;
}

}  // namespace

LSLeaf solve_graph(const Vec3& xi, double lambda, const MetricModel& model,
                   const SolveOptions& opts) {
  const auto tr = pick_transform(opts);
  Jacobian jac;
  const VecX* warm = opts.initial_u ? &opts.initial_u->coeffs() : nullptr;
  return evaluate_leaf(tr, xi, lambda, model, opts, warm, jac, opts.with_gradient);
}

std::pair<double, Vec3> reduced_function(const Vec3& xi, double lambda,
                                         const MetricModel& model,
                                         const SolveOptions& opts) {
  const auto tr = pick_transform(opts);
  Jacobian jac;
  const VecX* warm = opts.initial_u ? &opts.initial_u->coeffs() : nullptr;
  const LSLeaf leaf = evaluate_leaf(tr, xi, lambda, model, opts, warm, jac, true);
  return {leaf.G_value, leaf.G_gradient};
}

LSLeaf find_critical_point(double lambda, const MetricModel& model, const Vec3& xi0,
                           const SolveOptions& opts) {
  const double mass = model.mass_param();
  if (std::abs(mass) < 1e-12)
    throw MassZeroError("critical point search needs a model of nonzero mass");
  const auto tr = pick_transform(opts);
  Jacobian jac;
  VecX warm;
  bool have_warm = false;
  if (opts.initial_u) {
    warm = opts.initial_u->coeffs();
    have_warm = true;
  }
  const auto eval = [&](const Vec3& x) {
    LSLeaf leaf =
        evaluate_leaf(tr, x, lambda, model, opts, have_warm ? &warm : nullptr, jac, true);
    warm = leaf.u.coeffs();
    have_warm = true;
    return leaf;
  };
  const auto guard = [](const Vec3& x) {
    if (!(x.norm() < 0.5)) {
      std::ostringstream os;
      os << "iterate left the ball |xi| < 1/2 at |xi| = " << x.norm();
      throw NoCriticalPointError(os.str());
    }
  };
  Vec3 xi = xi0;
  guard(xi);
  LSLeaf leaf = eval(xi);
  Mat3 hess = Mat3::Zero();
  bool have_hess = false;
  double radius = 0.1;
  int stale = 0;
  for (int outer = 0; leaf.G_gradient.norm() >= opts.tol_crit; ++outer) {
    if (outer >= opts.max_iters) {
      std::ostringstream os;
      os << "no critical point within the iteration budget; |grad G| = "
         << leaf.G_gradient.norm();
      throw NoCriticalPointError(os.str());
    }
    if (!have_hess) {
      const double k = opts.fd_step;
      for (int b = 0; b < 3; ++b) {
        const LSLeaf p = evaluate_leaf(tr, xi + k * Vec3::Unit(b), lambda, model, opts,
                                       have_warm ? &warm : nullptr, jac, true);
        const LSLeaf q = evaluate_leaf(tr, xi - k * Vec3::Unit(b), lambda, model, opts,
                                       have_warm ? &warm : nullptr, jac, true);
        hess.col(b) = (p.G_gradient - q.G_gradient) / (2.0 * k);
      }
      hess = (0.5 * (hess + hess.transpose())).eval();
      have_hess = true;
    }
    Vec3 step = -hess.fullPivLu().solve(leaf.G_gradient);
    if (!step.allFinite() || step.norm() == 0.0)
      step = -leaf.G_gradient / (8.0 * M_PI * mass);
    if (step.norm() > radius) step *= radius / step.norm();
    const Vec3 cand = xi + step;
    guard(cand);
    const LSLeaf trial = eval(cand);
    if (trial.G_gradient.norm() < leaf.G_gradient.norm()) {
      xi = cand;
      leaf = trial;
      radius = std::min(0.2, 2.0 * radius);
      stale = 0;
    } else {
      radius *= 0.25;
      if (++stale == 3) have_hess = false;  // refresh the secant model
      if (radius < 1e-13) {
        std::ostringstream os;
        os << "trust region collapsed with |grad G| = " << leaf.G_gradient.norm();
        throw NoCriticalPointError(os.str());
      }
    }
  }
  const ExtrinsicData ext = compute_extrinsic(leaf.surface());
  const double hbar = ext.integrate(ext.H) / ext.area_g;
  const VecX dev = ext.H.array() - hbar;
  const double rel = std::sqrt(ext.integrate(dev.cwiseProduct(dev))) / std::abs(hbar);
  if (!(rel < opts.tol_cmc)) {
    std::ostringstream os;
    os << "CMC certificate failed: relative mean-curvature variation " << rel;
    throw NotCmcError(os.str());
  }
  return leaf;
}

StabilityMatrices stability_matrices(const ExtrinsicData& ext) {
  return assemble_operator(ext, nullptr, nullptr);
}

StabilityReport stability_spectrum(const LSLeaf& leaf, const SolveOptions& opts) {
  if (!leaf.metric || !leaf.u.transform())
    throw ShapeError("stability spectrum needs a solved leaf");
  const auto tr = leaf.u.transform();
  const ExtrinsicData ext = compute_extrinsic(leaf.surface());
  const StabilityMatrices sm = stability_matrices(ext);
  const int K = tr->ncoef();

  // Orthonormal frame of the discrete mean-zero subspace.
  Eigen::HouseholderQR<MatX> qr(MatX(sm.mean));
  const MatX full = qr.householderQ();
  const MatX basis = full.rightCols(K - 1);
  const MatX ar = basis.transpose() * sm.a * basis;
  const MatX mr = basis.transpose() * sm.m * basis;
  Eigen::GeneralizedSelfAdjointEigenSolver<MatX> es(ar, mr);
  if (es.info() != Eigen::Success) throw EigenFailure("stability eigensolve failed");

  StabilityReport rep;
  rep.eigenvalues.assign(es.eigenvalues().data(),
                         es.eigenvalues().data() + es.eigenvalues().size());
  rep.lowest_meanzero_eigenvalue = rep.eigenvalues.front();
  rep.tol = opts.stability_tol;
  if (rep.lowest_meanzero_eigenvalue < -rep.tol)
    rep.verdict = StabilityVerdict::Unstable;
  else if (rep.lowest_meanzero_eigenvalue <= rep.tol)
    rep.verdict = StabilityVerdict::Marginal;
  else
    rep.verdict = StabilityVerdict::Stable;

  // Translation block from the xi-derivative of the solved graph.
  SolveOptions o = opts;
  o.lmax = tr->lmax();
  Jacobian jac;
  const VecX& uc = leaf.u.coeffs();
  const double h = o.fd_step;
  const double lambda = leaf.lambda;
  const int nn = tr->nnodes();
  std::vector<Mat3> gs(nn);
  for (int n = 0; n < nn; ++n) gs[n] = leaf.metric->metric_jet(ext.position[n], 0).g;
  std::array<VecX, 3> fhat;
  for (int a = 0; a < 3; ++a) {
    const CoreResult cp =
        core_solve(tr, leaf.xi + h * Vec3::Unit(a), lambda, *leaf.metric, o, &uc, jac);
    const CoreResult cm =
        core_solve(tr, leaf.xi - h * Vec3::Unit(a), lambda, *leaf.metric, o, &uc, jac);
    const VecX du = (cp.u.values() - cm.u.values()) / (2.0 * h);
    VecX fa(nn);
    for (int n = 0; n < nn; ++n) {
      const Vec3 x = lambda * Vec3::Unit(a) + du[n] * tr->direction(n);
      fa[n] = (gs[n] * x).dot(ext.nu[n]);
    }
    fhat[a] = tr->analyze(fa);
  }
  for (int a = 0; a < 3; ++a)
    for (int b = a; b < 3; ++b) {
      const double v = fhat[a].dot(sm.a * fhat[b]) / (cube(lambda) * lambda);
      rep.translation_block(a, b) = v;
      rep.translation_block(b, a) = v;
    }
  return rep;
}

namespace {

// Radius of the leaf along the ray from the origin in direction d: fixed
// point of t = <d, c> + sqrt(<d, c>^2 + (lambda + u(y))^2 - |c|^2) with
// y the graph direction of the ray point.
double support_radius(const LSLeaf& leaf, const Vec3& d) {
  const Vec3 c = leaf.lambda * leaf.xi;
  const double dc = d.dot(c), c2 = c.squaredNorm();
  double t = leaf.lambda + dc;
  for (int it = 0; it < 50; ++it) {
    const Vec3 w = t * d - c;
    const double uval = evaluate_at(leaf.u, w);
    const double rho = leaf.lambda + uval;
    const double disc = std::max(dc * dc + rho * rho - c2, 0.0);
    const double tn = dc + std::sqrt(disc);
    const bool done = std::abs(tn - t) < 1e-12 * leaf.lambda;
    t = tn;
    if (done) break;
  }
  return t;
}

}  // namespace

FoliationReport foliation_sweep(const MetricModel& model,
                                const std::vector<double>& lambdas,
                                const SolveOptions& opts) {
  if (lambdas.size() < 2) throw ShapeError("foliation sweep needs at least two lambdas");
  for (std::size_t k = 0; k + 1 < lambdas.size(); ++k)
    if (!(lambdas[k + 1] > lambdas[k]))
      throw ShapeError("foliation sweep needs strictly ascending lambdas");

  FoliationReport rep;
  rep.lambdas = lambdas;
  const bool centered = std::abs(model.mass_param()) < 1e-12;
  SolveOptions o = opts;
  SphereField warm;
  Vec3 xi = Vec3::Zero();
  for (const double lam : lambdas) {
    o.initial_u = warm.transform() ? &warm : opts.initial_u;
    LSLeaf leaf = centered ? solve_graph(Vec3::Zero(), lam, model, o)
                           : find_critical_point(lam, model, xi, o);
    xi = leaf.xi;
    warm = leaf.u;
    rep.leaves.push_back(std::move(leaf));
  }

  for (const LSLeaf& leaf : rep.leaves) {
    const ExtrinsicData ext = compute_extrinsic(leaf.surface());
    rep.mean_curvatures.push_back(ext.integrate(ext.H) / ext.area_g);
  }
  for (std::size_t k = 0; k + 1 < rep.mean_curvatures.size(); ++k) {
    if (!(rep.mean_curvatures[k + 1] < rep.mean_curvatures[k])) {
      std::ostringstream os;
      os << "mean curvature fails to decrease between lambda = " << lambdas[k]
         << " and " << lambdas[k + 1] << ": H = " << rep.mean_curvatures[k]
         << " then " << rep.mean_curvatures[k + 1];
      throw FoliationOrderViolation(os.str());
    }
  }
  rep.h_strictly_decreasing = true;

  std::vector<double> remainder(lambdas.size());
  for (std::size_t k = 0; k < lambdas.size(); ++k)
    remainder[k] = std::abs(rep.mean_curvatures[k] - 2.0 / lambdas[k]);
  if (const auto slope = loglog_slope(lambdas, remainder, 1e-13))
    rep.h_remainder_order = -*slope;
  else
    rep.h_remainder_order = std::numeric_limits<double>::infinity();

  // Radial nesting about the origin, probed on the quadrature directions.
  const auto& tr = *rep.leaves.front().u.transform();
  std::vector<VecX> radii(rep.leaves.size(), VecX(tr.nnodes()));
  for (std::size_t k = 0; k < rep.leaves.size(); ++k)
    for (int n = 0; n < tr.nnodes(); ++n)
      radii[k][n] = support_radius(rep.leaves[k], tr.direction(n));
  for (std::size_t k = 0; k + 1 < rep.leaves.size(); ++k)
    rep.min_radial_gaps.push_back((radii[k + 1] - radii[k]).minCoeff());
  if (!(rep.min_radial_gaps.back() > 0.0)) {
    std::ostringstream os;
    os << "outermost leaves overlap radially between lambda = "
       << lambdas[lambdas.size() - 2] << " and " << lambdas.back() << " (gap "
       << rep.min_radial_gaps.back() << ")";
    throw FoliationOrderViolation(os.str());
  }
  std::size_t k0 = rep.min_radial_gaps.size();
  while (k0 > 0 && rep.min_radial_gaps[k0 - 1] > 0.0) --k0;
  rep.radially_ordered = (k0 == 0);
  rep.ordered_from_lambda = lambdas[k0];
  return rep;
}

ParityReport parity_diagnostics(const LSLeaf& leaf) {
  if (!leaf.u.transform()) throw ShapeError("parity diagnostics need a solved leaf");
  const auto& tr = *leaf.u.transform();
  const int nlat = tr.nlat(), nlon = tr.nlon();
  if (nlon % 2 != 0) throw ShapeError("parity split needs an even longitude count");
  const VecX& v = leaf.u.values();
  ParityReport rep;
  for (int i = 0; i < nlat; ++i)
    for (int j = 0; j < nlon; ++j) {
      const double va = v[tr.node(nlat - 1 - i, (j + nlon / 2) % nlon)];
      const double vn = v[tr.node(i, j)];
      rep.odd_sup = std::max(rep.odd_sup, 0.5 * std::abs(vn - va));
      rep.even_sup = std::max(rep.even_sup, 0.5 * std::abs(vn + va));
    }
  rep.ratio = rep.even_sup > 0.0 ? rep.odd_sup / rep.even_sup : 0.0;
  return rep;
}

}  // namespace cmcfol
