// Distributed under the MIT License.
// See LICENSE.txt for details.

#include "cmcfol/fitting.hpp"

#include <cmath>
#include <cstddef>

#include "cmcfol/errors.hpp"

namespace cmcfol {

std::optional<double> loglog_slope(const std::vector<double>& scale,
                                   const std::vector<double>& err, double floor) {
  if (scale.size() != err.size()) throw ShapeError("loglog_slope: size mismatch");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < scale.size(); ++i) {
    if (std::abs(err[i]) > floor && scale[i] > 0.0) {
      lx.push_back(std::log(scale[i]));
      ly.push_back(std::log(std::abs(err[i])));
    }
  }
  const std::size_t n = lx.size();
  if (n < 2) return std::nullopt;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) return std::nullopt;
  return (n * sxy - sx * sy) / denom;
}

std::optional<double> fitted_decay_order(const std::vector<double>& x,
                                         const std::vector<double>& v) {
  if (x.size() != v.size()) throw ShapeError("fitted_decay_order: size mismatch");
  if (x.size() < 3) return std::nullopt;
  // v_{k+1}-v_k ~ c x_k^-p up to the ladder-ratio factor; the slope of
  // log|diff| vs log x gives -p for any fixed ratio.
  std::vector<double> xs, ds;
  for (std::size_t k = 0; k + 1 < x.size(); ++k) {
    xs.push_back(x[k]);
    ds.push_back(v[k + 1] - v[k]);
  }
  auto slope = loglog_slope(xs, ds);
  if (!slope) return std::nullopt;
  return -*slope;
}

ExtrapolationResult richardson_extrapolate(const std::vector<double>& x,
                                           const std::vector<double>& v,
                                           std::optional<double> known_order,
                                           double min_order) {
  if (x.size() != v.size()) throw ShapeError("richardson_extrapolate: size mismatch");
  if (x.empty()) throw ShapeError("richardson_extrapolate: empty ladder");
  ExtrapolationResult res;
  res.raw_last = v.back();
  res.table.push_back(v);
  if (v.size() == 1) {
    res.value = v[0];
    res.order = known_order.value_or(0.0);
    res.error_estimate = std::abs(v[0]);
    return res;
  }

  double p;
  if (known_order) {
    p = *known_order;
  } else {
    auto fit = fitted_decay_order(x, v);
    res.order_fitted = true;
    if (!fit || *fit <= min_order) {
      // No usable decay: report the raw tail and flag it.
      res.converged = false;
      res.value = v.back();
      res.order = fit.value_or(0.0);
      res.error_estimate = std::abs(v.back() - v[v.size() - 2]);
      return res;
    }
    p = *fit;
  }
  res.order = p;

  // Each stage removes one power; orders step by one, which matches both the
  // integer expansions of the exact models and the tau-derived leading order
  // followed by integer-spaced corrections.
  std::vector<double> cur = v;
  std::vector<double> xs = x;
  double stage_order = p;
  while (cur.size() >= 2) {
    std::vector<double> next(cur.size() - 1);
    for (std::size_t i = 0; i + 1 < cur.size(); ++i) {
      const double ratio = std::pow(xs[i + 1] / xs[i], stage_order);
      next[i] = cur[i + 1] + (cur[i + 1] - cur[i]) / (ratio - 1.0);
    }
    res.table.push_back(next);
    xs.erase(xs.begin());
    cur = next;
    stage_order += 1.0;
  }
  res.value = cur[0];
  const auto& prev = res.table[res.table.size() - 2];
  res.error_estimate = std::abs(cur[0] - prev.back());
  return res;
}

std::pair<double, double> fit_even_quartic(const std::vector<double>& t,
                                           const std::vector<double>& y) {
  if (t.size() != y.size()) throw ShapeError("fit_even_quartic: size mismatch");
  double s4 = 0, s6 = 0, s8 = 0, b2 = 0, b4 = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double t2 = t[i] * t[i];
    s4 += t2 * t2;
    s6 += t2 * t2 * t2;
    s8 += t2 * t2 * t2 * t2;
    b2 += y[i] * t2;
    b4 += y[i] * t2 * t2;
  }
  const double det = s4 * s8 - s6 * s6;
  if (det == 0.0) {
    if (s4 == 0.0) throw ShapeError("fit_even_quartic: degenerate sample");
    return {b2 / s4, 0.0};
  }
  return {(b2 * s8 - b4 * s6) / det, (s4 * b4 - s6 * b2) / det};
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 0; i + 1 < v.size(); ++i)
    if (!(v[i + 1] < v[i])) return false;
  return true;
}

bool strictly_increasing(const std::vector<double>& v) {
  for (std::size_t i = 0; i + 1 < v.size(); ++i)
    if (!(v[i + 1] > v[i])) return false;
  return true;
}

}  // namespace cmcfol
