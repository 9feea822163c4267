// Distributed under the MIT License.
// See LICENSE.txt for details.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace cmcfol {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Finite sums of  coef * |x|^alpha * x^a y^b z^c.  The family is closed under
// partial differentiation, so exact metric jets follow from symbolic
// differentiation at model build time.  Valid away from x = 0.
struct RadialTerm {
  double coef;
  double alpha;
  int a, b, c;
};

class RadialPoly {
 public:
  RadialPoly() = default;
  explicit RadialPoly(std::vector<RadialTerm> terms) : terms_(std::move(terms)) { normalize(); }

  static RadialPoly monomial(double coef, double alpha, int a, int b, int c) {
    return RadialPoly({RadialTerm{coef, alpha, a, b, c}});
  }
  static RadialPoly constant(double c) { return monomial(c, 0.0, 0, 0, 0); }

  const std::vector<RadialTerm>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  RadialPoly& operator+=(const RadialPoly& other) {
    terms_.insert(terms_.end(), other.terms_.begin(), other.terms_.end());
    normalize();
    return *this;
  }
  friend RadialPoly operator+(RadialPoly a, const RadialPoly& b) { return a += b; }

  friend RadialPoly operator*(double s, RadialPoly p) {
    for (auto& t : p.terms_) t.coef *= s;
    return p;
  }

  friend RadialPoly operator*(const RadialPoly& a, const RadialPoly& b) {
    std::vector<RadialTerm> out;
    out.reserve(a.terms_.size() * b.terms_.size());
    for (const auto& ta : a.terms_)
      for (const auto& tb : b.terms_)
        out.push_back(RadialTerm{ta.coef * tb.coef, ta.alpha + tb.alpha, ta.a + tb.a,
                                 ta.b + tb.b, ta.c + tb.c});
    return RadialPoly(std::move(out));
  }

  // d/dx_k;  d r^alpha = alpha r^(alpha-2) x_k  keeps us inside the family.
  RadialPoly derivative(int k) const {
    std::vector<RadialTerm> out;
    out.reserve(2 * terms_.size());
    for (const auto& t : terms_) {
      if (t.alpha != 0.0) {
        RadialTerm s{t.coef * t.alpha, t.alpha - 2.0, t.a, t.b, t.c};
        (k == 0 ? s.a : k == 1 ? s.b : s.c) += 1;
        out.push_back(s);
      }
      const int e = (k == 0 ? t.a : k == 1 ? t.b : t.c);
      if (e != 0) {
        RadialTerm s{t.coef * e, t.alpha, t.a, t.b, t.c};
        (k == 0 ? s.a : k == 1 ? s.b : s.c) -= 1;
        out.push_back(s);
      }
    }
    return RadialPoly(std::move(out));
  }

  double eval(const Vec3& x) const {
    const double r2 = x.squaredNorm();
    const double r = std::sqrt(r2);
    double acc = 0.0;
    double cur_alpha = 0.0;
    double cur_pow = 1.0;
    bool have = false;
    for (const auto& t : terms_) {
      if (!have || t.alpha != cur_alpha) {
        cur_alpha = t.alpha;
        cur_pow = rpow(r, r2, t.alpha);
        have = true;
      }
      acc += t.coef * cur_pow * ipow(x[0], t.a) * ipow(x[1], t.b) * ipow(x[2], t.c);
    }
    return acc;
  }

  // Largest total growth exponent alpha + a + b + c, i.e. the decay rate at
  // infinity is -max_degree().
  double max_degree() const {
    double d = -1e300;
    for (const auto& t : terms_) d = std::max(d, t.alpha + t.a + t.b + t.c);
    return terms_.empty() ? 0.0 : d;
  }

  // +1 even, -1 odd, 0 mixed under x -> -x.
  int parity() const {
    int p = 2;
    for (const auto& t : terms_) {
      const int tp = ((t.a + t.b + t.c) % 2 == 0) ? 1 : -1;
      if (p == 2) p = tp;
      else if (p != tp) return 0;
    }
    return p == 2 ? 1 : p;
  }

 private:
  static double ipow(double x, int n) {
    double v = 1.0;
    for (int i = 0; i < n; ++i) v *= x;
    return v;
  }
  static double rpow(double r, double r2, double alpha) {
    const double ia = std::nearbyint(alpha);
    if (ia == alpha && std::abs(ia) <= 24.0) {
      int n = static_cast<int>(ia);
      if (n % 2 == 0) {
        double v = 1.0;
        const double base = n > 0 ? r2 : 1.0 / r2;
        for (int i = 0; i < std::abs(n) / 2; ++i) v *= base;
        return v;
      }
      double v = 1.0;
      const double base = n > 0 ? r : 1.0 / r;
      for (int i = 0; i < std::abs(n); ++i) v *= base;
      return v;
    }
    return std::pow(r, alpha);
  }

  void normalize() {
    std::sort(terms_.begin(), terms_.end(), [](const RadialTerm& s, const RadialTerm& t) {
      if (s.alpha != t.alpha) return s.alpha < t.alpha;
      if (s.a != t.a) return s.a < t.a;
      if (s.b != t.b) return s.b < t.b;
      return s.c < t.c;
    });
    std::vector<RadialTerm> merged;
    for (const auto& t : terms_) {
      if (!merged.empty() && merged.back().alpha == t.alpha && merged.back().a == t.a &&
          merged.back().b == t.b && merged.back().c == t.c) {
        merged.back().coef += t.coef;
      } else {
        merged.push_back(t);
      }
    }
    std::erase_if(merged, [](const RadialTerm& t) { return t.coef == 0.0; });
    terms_ = std::move(merged);
  }

  std::vector<RadialTerm> terms_;
};

// Jet of a scalar: value, gradient, Hessian, all symbolic.
struct RadialPolyJet {
  RadialPoly f;
  std::array<RadialPoly, 3> df;
  std::array<RadialPoly, 6> ddf;  // xx,xy,xz,yy,yz,zz

  static RadialPolyJet build(const RadialPoly& p) {
    RadialPolyJet j;
    j.f = p;
    for (int k = 0; k < 3; ++k) j.df[k] = p.derivative(k);
    int idx = 0;
    for (int k = 0; k < 3; ++k)
      for (int l = k; l < 3; ++l) j.ddf[idx++] = j.df[k].derivative(l);
    return j;
  }
};

}  // namespace cmcfol
