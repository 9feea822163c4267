// Distributed under the MIT License.
// See LICENSE.txt for details.

#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "cmcfol/radial_poly.hpp"  // Vec3

namespace cmcfol {

using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

// Gauss-Legendre nodes/weights on (-1, 1), x descending (theta ascending).
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w);

// Fully normalized associated Legendre functions (no Condon-Shortley phase),
// Int_0^pi Ptilde_l^m(cos t)^2 sin t dt = 1, packed as l(l+1)/2 + m, with
// first and second theta-derivatives.
struct LegendreJet {
  std::vector<double> p, dp, ddp;
};
LegendreJet legendre_jet(int lmax, double theta);

inline int packed_lm(int l, int m) { return l * (l + 1) / 2 + m; }

// Real orthonormal basis index: k = l^2 + l + m, m in [-l, l].
inline int basis_index(int l, int m) { return l * l + l + m; }
inline int basis_l(int k) { return static_cast<int>(std::sqrt(static_cast<double>(k))); }
inline int basis_m(int k) {
  const int l = basis_l(k);
  return k - l * l - l;
}

enum class HarmonicSubspace { Lambda0, Lambda1, Lambda01, PerpLambda01 };

// Quadrature grid + dense spherical-harmonic transform with derivative jets.
// Grids hold Gauss-Legendre colatitudes x equispaced longitudes; analysis is
// exact for band-limited inputs (nlat >= lmax+1, nlon >= 2 lmax+1; defaults
// oversample by 3/2 to absorb aliasing from smooth nonlinearities).
class SphereTransform {
 public:
  explicit SphereTransform(int lmax, int nlat = -1, int nlon = -1);

  int lmax() const { return lmax_; }
  int nlat() const { return nlat_; }
  int nlon() const { return nlon_; }
  int nnodes() const { return nlat_ * nlon_; }
  int ncoef() const { return (lmax_ + 1) * (lmax_ + 1); }

  double theta(int i) const { return theta_[i]; }
  double sin_theta(int n) const { return st_[lat_of(n)]; }
  double phi(int j) const { return 2.0 * M_PI * j / nlon_; }
  int node(int i, int j) const { return i * nlon_ + j; }
  int lat_of(int n) const { return n / nlon_; }
  int lon_of(int n) const { return n % nlon_; }

  // Solid-angle quadrature weight of node n; weights sum to 4 pi.
  double weight(int n) const { return wlat_[lat_of(n)] * (2.0 * M_PI / nlon_); }

  // Unit direction and its theta/phi derivatives (analytic).
  Vec3 direction(int n) const;
  Vec3 d_theta(int n) const;
  Vec3 d_phi(int n) const;
  Vec3 dd_theta_theta(int n) const;
  Vec3 dd_theta_phi(int n) const;
  Vec3 dd_phi_phi(int n) const;

  VecX analyze(const VecX& values) const;
  VecX synthesize(const VecX& coeffs) const;

  struct Jet {
    VecX f, ft, fp, ftt, ftp, fpp;
  };
  Jet synthesize_jet(const VecX& coeffs) const;

  // Basis value/derivative rows for one latitude: matrices of shape
  // (nlon x ncoef) used by blocked operator assembly.
  void basis_block(int ilat, MatX& y, MatX& yt, MatX& yp) const;

  double quadrature(const VecX& node_values) const;

 private:
  int lmax_, nlat_, nlon_;
  std::vector<double> theta_, ct_, st_, wlat_;
  std::vector<LegendreJet> legendre_;            // per latitude
  std::vector<std::vector<double>> cosm_, sinm_;  // [m][j]
};

std::shared_ptr<const SphereTransform> shared_transform(int lmax, int nlat = -1,
                                                        int nlon = -1);

// A scalar field on S^2 carried in both node-value and coefficient form.
class SphereField {
 public:
  SphereField() = default;
  static SphereField from_values(std::shared_ptr<const SphereTransform> tr, VecX values);
  static SphereField from_coeffs(std::shared_ptr<const SphereTransform> tr, VecX coeffs);
  static SphereField zero(std::shared_ptr<const SphereTransform> tr);

  const std::shared_ptr<const SphereTransform>& transform() const { return tr_; }
  const VecX& values() const;
  const VecX& coeffs() const;

  double sup_norm() const;
  double l2_norm() const;  // sqrt(Int f^2 domega), via Parseval on coefficients

  SphereField projected(HarmonicSubspace s) const;
  double coeff(int l, int m) const { return coeffs()[basis_index(l, m)]; }

 private:
  std::shared_ptr<const SphereTransform> tr_;
  mutable VecX values_, coeffs_;
  mutable bool have_values_ = false, have_coeffs_ = false;
};

// Coefficient mask of a subspace (true = kept).
std::vector<bool> subspace_mask(int lmax, HarmonicSubspace s);
SphereField project(const SphereField& f, HarmonicSubspace s);

// Evaluate the band-limited field at an arbitrary direction (off-grid).
double evaluate_at(const SphereField& f, double theta, double phi);
double evaluate_at(const SphereField& f, const Vec3& direction);

// Laplace-Beltrami of the round sphere of the given radius, spectrally exact:
// coefficients scale by -l(l+1)/radius^2.
SphereField laplacian(const SphereField& f, double radius = 1.0);

// Int f (-lap - 2) f domega on the unit sphere.
double flat_stability_quadratic_form(const SphereField& f);

}  // namespace cmcfol
