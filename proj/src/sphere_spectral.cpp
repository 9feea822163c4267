// Distributed under the MIT License.
// See LICENSE.txt for details.

#include "cmcfol/sphere_spectral.hpp"

#include <cmath>
#include <cstddef>

#include "cmcfol/errors.hpp"

namespace cmcfol {

void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  if (n < 1) throw ShapeError("gauss_legendre needs n >= 1");
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    // Tricomi-type initial guess, then Newton on the three-term recurrence.
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int l = 0; l < n; ++l) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * l + 1.0) * z * p1 - l * p2) / (l + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    // Guess ordering gives z descending in i, so theta ascends with i.
    x[i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
  }
}

LegendreJet legendre_jet(int lmax, double theta) {
  const int np = (lmax + 1) * (lmax + 2) / 2;
  LegendreJet out;
  out.p.assign(np, 0.0);
  out.dp.assign(np, 0.0);
  out.ddp.assign(np, 0.0);
  const double ct = std::cos(theta), st = std::sin(theta);

  out.p[packed_lm(0, 0)] = std::sqrt(0.5);
  for (int m = 1; m <= lmax; ++m) {
    out.p[packed_lm(m, m)] =
        st * std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * out.p[packed_lm(m - 1, m - 1)];
  }
  for (int m = 0; m < lmax; ++m) {
    out.p[packed_lm(m + 1, m)] = std::sqrt(2.0 * m + 3.0) * ct * out.p[packed_lm(m, m)];
  }
  for (int m = 0; m <= lmax; ++m) {
    for (int l = m + 2; l <= lmax; ++l) {
      const double a =
          std::sqrt((4.0 * l * l - 1.0) / (static_cast<double>(l) * l - m * m));
      const double b = std::sqrt(
          ((l - 1.0) * (l - 1.0) - m * m) / (4.0 * (l - 1.0) * (l - 1.0) - 1.0));
      out.p[packed_lm(l, m)] =
          a * (ct * out.p[packed_lm(l - 1, m)] - b * out.p[packed_lm(l - 2, m)]);
    }
  }

  // d/dtheta via the lowering relation; interior Gauss nodes keep sin(theta)
  // bounded away from zero. Second derivative from the Legendre ODE.
  const double cot = ct / st, inv_s = 1.0 / st;
  for (int l = 0; l <= lmax; ++l) {
    for (int m = 0; m <= l; ++m) {
      const int idx = packed_lm(l, m);
      double low = 0.0;
      if (l > m) {
        const double c = std::sqrt((2.0 * l + 1.0) / (2.0 * l - 1.0) *
                                   (static_cast<double>(l) * l - m * m));
        low = c * out.p[packed_lm(l - 1, m)];
      }
      out.dp[idx] = l * cot * out.p[idx] - inv_s * low;
      out.ddp[idx] = -cot * out.dp[idx] +
                     (static_cast<double>(m) * m * inv_s * inv_s - l * (l + 1.0)) *
                         out.p[idx];
    }
  }
  return out;
}

SphereTransform::SphereTransform(int lmax, int nlat, int nlon) : lmax_(lmax) {
  if (lmax < 1) throw ShapeError("SphereTransform: lmax must be >= 1");
  nlat_ = nlat > 0 ? nlat : (3 * (lmax + 1) + 1) / 2;
  nlon_ = nlon > 0 ? nlon : 2 * nlat_;
  if (nlat_ < lmax + 1) throw ShapeError("SphereTransform: nlat < lmax + 1");
  if (nlon_ < 2 * lmax + 1) throw ShapeError("SphereTransform: nlon < 2 lmax + 1");

  std::vector<double> x;
  gauss_legendre(nlat_, x, wlat_);
  theta_.resize(nlat_);
  ct_.resize(nlat_);
  st_.resize(nlat_);
  legendre_.reserve(nlat_);
  for (int i = 0; i < nlat_; ++i) {
    theta_[i] = std::acos(x[i]);
    ct_[i] = x[i];
    st_[i] = std::sqrt(1.0 - x[i] * x[i]);
    legendre_.push_back(legendre_jet(lmax_, theta_[i]));
  }
  cosm_.assign(lmax_ + 1, std::vector<double>(nlon_));
  sinm_.assign(lmax_ + 1, std::vector<double>(nlon_));
  for (int m = 0; m <= lmax_; ++m) {
    for (int j = 0; j < nlon_; ++j) {
      const double a = 2.0 * M_PI * m * j / nlon_;
      cosm_[m][j] = std::cos(a);
      sinm_[m][j] = std::sin(a);
    }
  }
}

Vec3 SphereTransform::direction(int n) const {
  const int i = lat_of(n), j = lon_of(n);
  const double c = cosm_[1][j], s = sinm_[1][j];
  return Vec3(st_[i] * c, st_[i] * s, ct_[i]);
}
Vec3 SphereTransform::d_theta(int n) const {
  const int i = lat_of(n), j = lon_of(n);
  return Vec3(ct_[i] * cosm_[1][j], ct_[i] * sinm_[1][j], -st_[i]);
}
Vec3 SphereTransform::d_phi(int n) const {
  const int i = lat_of(n), j = lon_of(n);
  return Vec3(-st_[i] * sinm_[1][j], st_[i] * cosm_[1][j], 0.0);
}
Vec3 SphereTransform::dd_theta_theta(int n) const { return -direction(n); }
Vec3 SphereTransform::dd_theta_phi(int n) const {
  const int i = lat_of(n), j = lon_of(n);
  return Vec3(-ct_[i] * sinm_[1][j], ct_[i] * cosm_[1][j], 0.0);
}
Vec3 SphereTransform::dd_phi_phi(int n) const {
  const int i = lat_of(n), j = lon_of(n);
  return Vec3(-st_[i] * cosm_[1][j], -st_[i] * sinm_[1][j], 0.0);
}

namespace {
constexpr double inv_sqrt_2pi = 0.3989422804014326779;  // 1/sqrt(2 pi)
constexpr double inv_sqrt_pi = 0.5641895835477562869;   // 1/sqrt(pi)
}  // namespace

VecX SphereTransform::analyze(const VecX& values) const {
  if (values.size() != nnodes()) throw ShapeError("analyze: value size mismatch");
  VecX coeffs = VecX::Zero(ncoef());
  std::vector<double> fc(lmax_ + 1), fs(lmax_ + 1);
  const double dphi_w = 2.0 * M_PI / nlon_;
  for (int i = 0; i < nlat_; ++i) {
    for (int m = 0; m <= lmax_; ++m) {
      double sc = 0.0, ss = 0.0;
      const double* cm = cosm_[m].data();
      const double* sm = sinm_[m].data();
      const double* f = values.data() + static_cast<std::ptrdiff_t>(i) * nlon_;
      for (int j = 0; j < nlon_; ++j) {
        sc += f[j] * cm[j];
        ss += f[j] * sm[j];
      }
      fc[m] = sc;
      fs[m] = ss;
    }
    const double wi = wlat_[i] * dphi_w;
    const LegendreJet& leg = legendre_[i];
    for (int l = 0; l <= lmax_; ++l) {
      coeffs[basis_index(l, 0)] += wi * leg.p[packed_lm(l, 0)] * inv_sqrt_2pi * fc[0];
      for (int m = 1; m <= l; ++m) {
        const double plm = leg.p[packed_lm(l, m)];
        coeffs[basis_index(l, m)] += wi * plm * inv_sqrt_pi * fc[m];
        coeffs[basis_index(l, -m)] += wi * plm * inv_sqrt_pi * fs[m];
      }
    }
  }
  return coeffs;
}

VecX SphereTransform::synthesize(const VecX& coeffs) const {
  if (coeffs.size() != ncoef()) throw ShapeError("synthesize: coefficient size mismatch");
  VecX values(nnodes());
  std::vector<double> gc(lmax_ + 1), gs(lmax_ + 1);
  for (int i = 0; i < nlat_; ++i) {
    const LegendreJet& leg = legendre_[i];
    for (int m = 0; m <= lmax_; ++m) {
      double sc = 0.0, ss = 0.0;
      for (int l = std::max(m, 0); l <= lmax_; ++l) {
        const double plm = leg.p[packed_lm(l, m)];
        if (m == 0) {
          sc += coeffs[basis_index(l, 0)] * plm * inv_sqrt_2pi;
        } else {
          sc += coeffs[basis_index(l, m)] * plm * inv_sqrt_pi;
          ss += coeffs[basis_index(l, -m)] * plm * inv_sqrt_pi;
        }
      }
      gc[m] = sc;
      gs[m] = ss;
    }
    for (int j = 0; j < nlon_; ++j) {
      double v = gc[0];
      for (int m = 1; m <= lmax_; ++m)
        v += gc[m] * cosm_[m][j] + gs[m] * sinm_[m][j];
      values[node(i, j)] = v;
    }
  }
  return values;
}

SphereTransform::Jet SphereTransform::synthesize_jet(const VecX& coeffs) const {
  if (coeffs.size() != ncoef())
    throw ShapeError("synthesize_jet: coefficient size mismatch");
  Jet out;
  for (VecX* v : {&out.f, &out.ft, &out.fp, &out.ftt, &out.ftp, &out.fpp})
    v->resize(nnodes());
  std::vector<double> gc(lmax_ + 1), gs(lmax_ + 1), hc(lmax_ + 1), hs(lmax_ + 1),
      kc(lmax_ + 1), ks(lmax_ + 1);
  for (int i = 0; i < nlat_; ++i) {
    const LegendreJet& leg = legendre_[i];
    for (int m = 0; m <= lmax_; ++m) {
      double a0 = 0, a1 = 0, b0 = 0, b1 = 0, c0 = 0, c1 = 0;
      for (int l = m; l <= lmax_; ++l) {
        const int idx = packed_lm(l, m);
        const double norm = (m == 0) ? inv_sqrt_2pi : inv_sqrt_pi;
        const double cc = coeffs[basis_index(l, m)] * norm;
        a0 += cc * leg.p[idx];
        b0 += cc * leg.dp[idx];
        c0 += cc * leg.ddp[idx];
        if (m > 0) {
          const double cs = coeffs[basis_index(l, -m)] * norm;
          a1 += cs * leg.p[idx];
          b1 += cs * leg.dp[idx];
          c1 += cs * leg.ddp[idx];
        }
      }
      gc[m] = a0;
      gs[m] = a1;
      hc[m] = b0;
      hs[m] = b1;
      kc[m] = c0;
      ks[m] = c1;
    }
    for (int j = 0; j < nlon_; ++j) {
      double f = gc[0], ft = hc[0], fp = 0, ftt = kc[0], ftp = 0, fpp = 0;
      for (int m = 1; m <= lmax_; ++m) {
        const double cm = cosm_[m][j], sm = sinm_[m][j];
        f += gc[m] * cm + gs[m] * sm;
        ft += hc[m] * cm + hs[m] * sm;
        ftt += kc[m] * cm + ks[m] * sm;
        fp += m * (-gc[m] * sm + gs[m] * cm);
        ftp += m * (-hc[m] * sm + hs[m] * cm);
        fpp += -m * m * (gc[m] * cm + gs[m] * sm);
      }
      const int n = node(i, j);
      out.f[n] = f;
      out.ft[n] = ft;
      out.fp[n] = fp;
      out.ftt[n] = ftt;
      out.ftp[n] = ftp;
      out.fpp[n] = fpp;
    }
  }
  return out;
}

void SphereTransform::basis_block(int ilat, MatX& y, MatX& yt, MatX& yp) const {
  y.resize(nlon_, ncoef());
  yt.resize(nlon_, ncoef());
  yp.resize(nlon_, ncoef());
  const LegendreJet& leg = legendre_[ilat];
  for (int l = 0; l <= lmax_; ++l) {
    for (int m = -l; m <= l; ++m) {
      const int k = basis_index(l, m);
      const int am = std::abs(m);
      const double norm = (m == 0) ? inv_sqrt_2pi : inv_sqrt_pi;
      const double p = leg.p[packed_lm(l, am)] * norm;
      const double dp = leg.dp[packed_lm(l, am)] * norm;
      for (int j = 0; j < nlon_; ++j) {
        double trig, dtrig;
        if (m >= 0) {
          trig = cosm_[am][j];
          dtrig = -am * sinm_[am][j];
        } else {
          trig = sinm_[am][j];
          dtrig = am * cosm_[am][j];
        }
        y(j, k) = p * trig;
        yt(j, k) = dp * trig;
        yp(j, k) = p * dtrig;
      }
    }
  }
}

double SphereTransform::quadrature(const VecX& node_values) const {
  if (node_values.size() != nnodes()) throw ShapeError("quadrature: size mismatch");
  double s = 0.0;
  for (int n = 0; n < nnodes(); ++n) s += weight(n) * node_values[n];
  return s;
}

std::shared_ptr<const SphereTransform> shared_transform(int lmax, int nlat, int nlon) {
  return std::make_shared<const SphereTransform>(lmax, nlat, nlon);
}

SphereField SphereField::from_values(std::shared_ptr<const SphereTransform> tr,
                                     VecX values) {
  SphereField f;
  f.tr_ = std::move(tr);
  if (values.size() != f.tr_->nnodes()) throw ShapeError("from_values: size mismatch");
  f.values_ = std::move(values);
  f.have_values_ = true;
  return f;
}

SphereField SphereField::from_coeffs(std::shared_ptr<const SphereTransform> tr,
                                     VecX coeffs) {
  SphereField f;
  f.tr_ = std::move(tr);
  if (coeffs.size() != f.tr_->ncoef()) throw ShapeError("from_coeffs: size mismatch");
  f.coeffs_ = std::move(coeffs);
  f.have_coeffs_ = true;
  return f;
}

SphereField SphereField::zero(std::shared_ptr<const SphereTransform> tr) {
  const int nc = tr->ncoef();
  return from_coeffs(std::move(tr), VecX::Zero(nc));
}

const VecX& SphereField::values() const {
  if (!have_values_) {
    values_ = tr_->synthesize(coeffs_);
    have_values_ = true;
  }
  return values_;
}

const VecX& SphereField::coeffs() const {
  if (!have_coeffs_) {
    coeffs_ = tr_->analyze(values_);
    have_coeffs_ = true;
  }
  return coeffs_;
}

double SphereField::sup_norm() const { return values().cwiseAbs().maxCoeff(); }

double SphereField::l2_norm() const { return coeffs().norm(); }

std::vector<bool> subspace_mask(int lmax, HarmonicSubspace s) {
  const int nc = (lmax + 1) * (lmax + 1);
  std::vector<bool> mask(nc, false);
  for (int k = 0; k < nc; ++k) {
    const int l = basis_l(k);
    switch (s) {
      case HarmonicSubspace::Lambda0: mask[k] = (l == 0); break;
      case HarmonicSubspace::Lambda1: mask[k] = (l == 1); break;
      case HarmonicSubspace::Lambda01: mask[k] = (l <= 1); break;
      case HarmonicSubspace::PerpLambda01: mask[k] = (l >= 2); break;
    }
  }
  return mask;
}

SphereField project(const SphereField& f, HarmonicSubspace s) {
  const auto& tr = f.transform();
  const auto mask = subspace_mask(tr->lmax(), s);
  VecX c = f.coeffs();
  for (int k = 0; k < c.size(); ++k)
    if (!mask[k]) c[k] = 0.0;
  return SphereField::from_coeffs(tr, std::move(c));
}

SphereField SphereField::projected(HarmonicSubspace s) const { return project(*this, s); }

double evaluate_at(const SphereField& f, double theta, double phi) {
  const auto& tr = *f.transform();
  const int lmax = tr.lmax();
  const LegendreJet leg = legendre_jet(lmax, theta);
  const VecX& c = f.coeffs();
  double v = 0.0;
  for (int m = 0; m <= lmax; ++m) {
    double sc = 0.0, ss = 0.0;
    const double norm = (m == 0) ? inv_sqrt_2pi : inv_sqrt_pi;
    for (int l = m; l <= lmax; ++l) {
      const double plm = leg.p[packed_lm(l, m)] * norm;
      sc += c[basis_index(l, m)] * plm;
      if (m > 0) ss += c[basis_index(l, -m)] * plm;
    }
    v += sc * std::cos(m * phi) + ss * std::sin(m * phi);
  }
  return v;
}

double evaluate_at(const SphereField& f, const Vec3& direction) {
  const Vec3 d = direction.normalized();
  const double theta = std::acos(std::clamp(d.z(), -1.0, 1.0));
  const double phi = std::atan2(d.y(), d.x());
  return evaluate_at(f, theta, phi);
}

SphereField laplacian(const SphereField& f, double radius) {
  const auto& tr = f.transform();
  VecX c = f.coeffs();
  const double r2 = radius * radius;
  for (int k = 0; k < c.size(); ++k) {
    const int l = basis_l(k);
    c[k] *= -static_cast<double>(l) * (l + 1) / r2;
  }
  return SphereField::from_coeffs(tr, std::move(c));
}

double flat_stability_quadratic_form(const SphereField& f) {
  const VecX& c = f.coeffs();
  double q = 0.0;
  for (int k = 0; k < c.size(); ++k) {
    const int l = basis_l(k);
    q += (static_cast<double>(l) * (l + 1) - 2.0) * c[k] * c[k];
  }
  return q;
}

}  // namespace cmcfol
