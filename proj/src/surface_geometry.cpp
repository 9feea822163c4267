// Distributed under the MIT License.
// See LICENSE.txt for details.

#include "cmcfol/surface_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cmcfol/errors.hpp"

namespace cmcfol {

GraphSurface make_round_surface(std::shared_ptr<const SphereTransform> tr,
                                const MetricModel& metric, double lambda,
                                const Vec3& xi) {
  GraphSurface s;
  s.xi = xi;
  s.lambda = lambda;
  s.u = SphereField::zero(std::move(tr));
  s.metric = &metric;
  return s;
}

namespace {

void validate(const GraphSurface& s) {
  if (!s.metric) throw ShapeError("GraphSurface: metric not set");
  if (!s.u.transform()) throw ShapeError("GraphSurface: graph function not set");
  if (!(s.lambda > 1.0)) throw DomainError("GraphSurface: lambda must exceed 1");
  if (!(s.xi.norm() < 1.0)) throw DomainError("GraphSurface: |xi| must be below 1");
}

}  // namespace

ExtrinsicData compute_extrinsic(const GraphSurface& surface) {
  validate(surface);
  const auto& tr = surface.u.transform();
  const int nn = tr->nnodes();
  const auto jet = tr->synthesize_jet(surface.u.coeffs());
  const Vec3 c = surface.center();
  const MetricModel& model = *surface.metric;

  ExtrinsicData ext;
  ext.tr = tr;
  ext.lambda = surface.lambda;
  ext.xi = surface.xi;
  ext.position.resize(nn);
  ext.e_theta.resize(nn);
  ext.e_phi.resize(nn);
  ext.nu_bar.resize(nn);
  ext.nu.resize(nn);
  ext.q_bar.resize(nn);
  ext.q.resize(nn);
  ext.qinv_bar.resize(nn);
  ext.qinv.resize(nn);
  ext.h_bar.resize(nn);
  ext.h.resize(nn);
  for (VecX* v : {&ext.H_bar, &ext.H, &ext.dmu_bar, &ext.dmu, &ext.norm_h2_bar,
                  &ext.norm_h2, &ext.hcirc2_bar, &ext.hcirc2, &ext.ric_nu})
    v->resize(nn);

  for (int n = 0; n < nn; ++n) {
    const double r = surface.lambda + jet.f[n];
    if (!(r > 0.0))
      throw DegenerateSurfaceError("graph function reaches u <= -lambda");
    const Vec3 y = tr->direction(n);
    const Vec3 yt = tr->d_theta(n), yp = tr->d_phi(n);
    const Vec3 ytt = tr->dd_theta_theta(n), ytp = tr->dd_theta_phi(n),
               ypp = tr->dd_phi_phi(n);

    const Vec3 pos = c + r * y;
    const Vec3 et = jet.ft[n] * y + r * yt;
    const Vec3 ep = jet.fp[n] * y + r * yp;
    const Vec3 ett = jet.ftt[n] * y + 2.0 * jet.ft[n] * yt + r * ytt;
    const Vec3 etp = jet.ftp[n] * y + jet.ft[n] * yp + jet.fp[n] * yt + r * ytp;
    const Vec3 epp = jet.fpp[n] * y + 2.0 * jet.fp[n] * yp + r * ypp;

    const TensorJet gj = model.metric_jet(pos, 2);
    const Mat3& g = gj.g;

    Eigen::Matrix2d qb, qg;
    qb << et.dot(et), et.dot(ep), ep.dot(et), ep.dot(ep);
    qg << et.dot(g * et), et.dot(g * ep), ep.dot(g * et), ep.dot(g * ep);
    const double detb = qb.determinant(), detg = qg.determinant();
    if (detb < 1e-14 || detg < 1e-14)
      throw DegenerateSurfaceError("induced metric degenerate at a node");

    Vec3 ne = et.cross(ep);
    if (ne.dot(y) < 0.0) ne = -ne;  // outward: radial graphs keep r > 0
    const Vec3 nub = ne.normalized();
    const Mat3 ginv = g.inverse();
    const Vec3 gn = ginv * ne;
    const double nn_g = std::sqrt(ne.dot(gn));
    const Vec3 nug = gn / nn_g;

    const auto gamma = christoffel(gj);
    auto second = [&](const Vec3& dd, const Vec3& a, const Vec3& b) {
      Vec3 out = dd;
      for (int k = 0; k < 3; ++k) out[k] += a.dot(gamma[k] * b);
      return out;
    };
    Eigen::Matrix2d hb, hg;
    hb << -nub.dot(ett), -nub.dot(etp), -nub.dot(etp), -nub.dot(epp);
    const Vec3 Dtt = second(ett, et, et), Dtp = second(etp, et, ep),
               Dpp = second(epp, ep, ep);
    hg << -nug.dot(g * Dtt), -nug.dot(g * Dtp), -nug.dot(g * Dtp), -nug.dot(g * Dpp);

    const Eigen::Matrix2d qbi = qb.inverse(), qgi = qg.inverse();
    const double Hb = (qbi * hb).trace();
    const double Hg = (qgi * hg).trace();
    const Eigen::Matrix2d sb = qbi * hb, sg = qgi * hg;  // shape operators
    const double nh2b = (sb * sb).trace();
    const double nh2g = (sg * sg).trace();

    // Solid-angle weights already carry sin(theta); divide it back out.
    const double inv_st = 1.0 / tr->sin_theta(n);

    ext.position[n] = pos;
    ext.e_theta[n] = et;
    ext.e_phi[n] = ep;
    ext.nu_bar[n] = nub;
    ext.nu[n] = nug;
    ext.q_bar[n] = qb;
    ext.q[n] = qg;
    ext.qinv_bar[n] = qbi;
    ext.qinv[n] = qgi;
    ext.h_bar[n] = hb;
    ext.h[n] = hg;
    ext.H_bar[n] = Hb;
    ext.H[n] = Hg;
    ext.dmu_bar[n] = std::sqrt(detb) * inv_st;
    ext.dmu[n] = std::sqrt(detg) * inv_st;
    ext.norm_h2_bar[n] = nh2b;
    ext.norm_h2[n] = nh2g;
    ext.hcirc2_bar[n] = nh2b - 0.5 * Hb * Hb;
    ext.hcirc2[n] = nh2g - 0.5 * Hg * Hg;
    const Mat3 ric = ricci(gj);
    ext.ric_nu[n] = nug.dot(ric * nug);
  }
  ext.area_bar = ext.integrate_bar(VecX::Ones(nn));
  ext.area_g = ext.integrate(VecX::Ones(nn));
  return ext;
}

double ExtrinsicData::integrate(const VecX& f) const {
  double s = 0.0;
  for (int n = 0; n < tr->nnodes(); ++n) s += tr->weight(n) * f[n] * dmu[n];
  return s;
}

double ExtrinsicData::integrate_bar(const VecX& f) const {
  double s = 0.0;
  for (int n = 0; n < tr->nnodes(); ++n) s += tr->weight(n) * f[n] * dmu_bar[n];
  return s;
}

SphereField ExtrinsicData::mean_curvature_field() const {
  return SphereField::from_values(tr, H);
}

VecX ExtrinsicData::stability_potential() const { return norm_h2 + ric_nu; }

double area(const GraphSurface& surface) { return compute_extrinsic(surface).area_g; }

double euclidean_area(const GraphSurface& surface) {
  return compute_extrinsic(surface).area_bar;
}

double enclosed_volume_relative(const GraphSurface& surface) {
  validate(surface);
  const auto& tr = surface.u.transform();
  const Vec3 c = surface.center();
  const double lam = surface.lambda;
  const MetricModel& model = *surface.metric;
  const VecX& uv = surface.u.values();

  static thread_local std::vector<double> gl_x, gl_w;
  if (gl_x.empty()) gauss_legendre(64, gl_x, gl_w);

  double vol = 0.0;
  for (int n = 0; n < tr->nnodes(); ++n) {
    const Vec3 y = tr->direction(n);
    const double r_in = lam + uv[n];
    const double cy = c.dot(y);
    const double disc = cy * cy + 4.0 * lam * lam - c.squaredNorm();
    const double t_out = -cy + std::sqrt(disc);
    if (!(r_in <= t_out))
      throw ContainmentError("surface node outside the reference sphere |x| = 2 lambda");
    const double half = 0.5 * (t_out - r_in), mid = 0.5 * (t_out + r_in);
    double ray = 0.0;
    for (int k = 0; k < 64; ++k) {
      const double t = mid + half * gl_x[k];
      ray += gl_w[k] * model.sqrt_det_g(c + t * y) * t * t;
    }
    vol += tr->weight(n) * half * ray;
  }
  if (!(vol > 0.0)) throw ContainmentError("relative volume not positive");
  return vol;
}

double hawking_mass(const ExtrinsicData& ext) {
  const double a = ext.area_g;
  const double h2 = ext.integrate(ext.H.cwiseProduct(ext.H));
  return std::sqrt(a / (16.0 * M_PI)) * (1.0 - h2 / (16.0 * M_PI));
}

double hawking_mass(const GraphSurface& surface) {
  return hawking_mass(compute_extrinsic(surface));
}

SurfaceDiagnostics diagnostics(const ExtrinsicData& ext) {
  SurfaceDiagnostics d;
  d.area_radius = std::sqrt(ext.area_g / (4.0 * M_PI));
  double rmin = std::numeric_limits<double>::infinity();
  for (const Vec3& p : ext.position) rmin = std::min(rmin, p.norm());
  if (!(rmin > 1.1))
    throw DomainError("surface reaches into |x| <= 1.1 where diagnostics degenerate");
  d.inner_radius = rmin;
  d.hawking_mass = hawking_mass(ext);
  d.cy_deficit = 16.0 * M_PI - ext.integrate(ext.H.cwiseProduct(ext.H));
  d.hcirc_l2 = ext.integrate(ext.hcirc2);
  return d;
}

SurfaceDiagnostics diagnostics(const GraphSurface& surface) {
  return diagnostics(compute_extrinsic(surface));
}

LinearizationResiduals linearization_residuals(const GraphSurface& surface) {
  validate(surface);
  if (surface.u.sup_norm() > 0.0)
    throw DomainError("linearization residuals are defined on round spheres (u = 0)");
  const ExtrinsicData ext = compute_extrinsic(surface);
  const auto& tr = surface.u.transform();
  const MetricModel& model = *surface.metric;
  const double tau = model.tau();

  LinearizationResiduals out;
  out.nu_predicted_order = 2.0 * tau;
  out.measure_predicted_order = 2.0 * tau;
  out.mean_curvature_predicted_order = 1.0 + 2.0 * tau;
  for (int n = 0; n < tr->nnodes(); ++n) {
    const Vec3 pos = ext.position[n];
    const Vec3 nub = ext.nu_bar[n];
    const TensorJet sj = model.sigma_jet(pos, 1);
    const Mat3& s = sj.g;
    const double trs = s.trace();
    const double snn = nub.dot(s * nub);
    double dn_tr = 0.0, dn_snn = 0.0;
    Vec3 div = Vec3::Zero();
    for (int i = 0; i < 3; ++i) {
      dn_tr += nub[i] * sj.dg[i].trace();
      dn_snn += nub[i] * nub.dot(sj.dg[i] * nub);
      for (int j = 0; j < 3; ++j) div[j] += sj.dg[i](i, j);
    }
    const double divn = div.dot(nub);

    const Vec3 snu = s * nub;
    const Vec3 pred_dnu = -0.5 * snn * nub - (snu - snn * nub);
    const double pred_meas = 0.5 * (trs - snn);
    const double pred_dH = (2.0 * snn - trs) / surface.lambda +
                           0.5 * (dn_tr + dn_snn - 2.0 * divn);

    out.nu_residual =
        std::max(out.nu_residual, (ext.nu[n] - nub - pred_dnu).norm());
    out.measure_residual = std::max(
        out.measure_residual, std::abs(ext.dmu[n] / ext.dmu_bar[n] - 1.0 - pred_meas));
    out.mean_curvature_residual =
        std::max(out.mean_curvature_residual,
                 std::abs(ext.H[n] - ext.H_bar[n] - pred_dH));
  }
  return out;
}

}  // namespace cmcfol
